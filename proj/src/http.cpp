#include "paxcast/http.hpp"

#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace paxcast::http {

using nlohmann::json;

int status_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidInput: return 400;
        case ErrorKind::NotFound: return 404;
        case ErrorKind::Unprocessable: return 422;
        case ErrorKind::NotReady: return 409;
        case ErrorKind::Internal: return 500;
    }
    return 500;
}

namespace {

std::string kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidInput: return "invalid_input";
        case ErrorKind::NotFound: return "not_found";
        case ErrorKind::Unprocessable: return "unprocessable";
        case ErrorKind::NotReady: return "not_ready";
        case ErrorKind::Internal: return "internal";
    }
    return "internal";
}

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorKind kind, const std::string& message) {
    send_json(res, status_for(kind), {{"error", {{"kind", kind_name(kind)}, {"message", message}}}});
}

std::string param(const httplib::Request& req, const std::string& name) {
    if (!req.has_param(name)) fail("missing query parameter '" + name + "'");
    return req.get_param_value(name);
}

Timestamp time_param(const httplib::Request& req, const std::string& name) {
    const auto v = param(req, name);
    const auto t = try_parse_time(v);
    if (!t) fail("query parameter '" + name + "' is not an ISO-8601 timestamp: '" + v + "'");
    return *t;
}

int int_param(const httplib::Request& req, const std::string& name, int fallback) {
    if (!req.has_param(name)) return fallback;
    const auto v = req.get_param_value(name);
    try {
        std::size_t pos = 0;
        const int out = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        fail("query parameter '" + name + "' must be an integer");
    }
}

template <class F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            send_json(res, 200, f(req));
        } catch (const Error& e) {
            send_error(res, e.kind(), e.what());
        } catch (const json::exception& e) {
            send_error(res, ErrorKind::InvalidInput, e.what());
        } catch (const std::exception& e) {
            send_error(res, ErrorKind::Internal, e.what());
        }
    };
}

}  // namespace

struct Server::Impl {
    explicit Impl(service::ForecastService& s) : svc(s) {}
    service::ForecastService& svc;
    httplib::Server http;
};

Server::Server(service::ForecastService& svc) : impl_(std::make_unique<Impl>(svc)) {
    auto& s = impl_->svc;
    auto& h = impl_->http;

    h.Get("/stations", guarded([&s](const httplib::Request&) {
              json out = json::array();
              const auto set = s.models();
              for (const auto& st : s.stations()) {
                  out.push_back({{"station", st}, {"trained", set && set->models.contains(st)}});
              }
              return json{{"stations", out}};
          }));
    h.Get("/forecast", guarded([&s](const httplib::Request& req) {
              return s.forecast_json(param(req, "station"), time_param(req, "origin"), time_param(req, "from"),
                                     time_param(req, "to"));
          }));
    h.Get("/components", guarded([&s](const httplib::Request& req) {
              std::optional<Timestamp> origin;
              if (req.has_param("origin")) origin = time_param(req, "origin");
              return s.components_json(param(req, "station"), param(req, "bucket"), time_param(req, "from"),
                                       time_param(req, "to"), origin);
          }));
    h.Get("/heatmap", guarded([&s](const httplib::Request& req) {
              return s.heatmap_json(param(req, "station"), int_param(req, "days", service::ForecastService::kDefaultDays));
          }));
    h.Post("/whatif", guarded([&s](const httplib::Request& req) {
               json body;
               try {
                   body = json::parse(req.body);
               } catch (const json::exception& e) {
                   throw Error(ErrorKind::Unprocessable, std::string("what-if body is not valid JSON: ") + e.what());
               }
               return s.whatif_json(service::parse_whatif(body));
           }));
    h.Get("/diagnostics", guarded([&s](const httplib::Request& req) {
              return s.diagnostics_json(param(req, "station"), param(req, "bucket"));
          }));
    h.Post("/admin/reload", guarded([&s](const httplib::Request&) {
               s.reload_models();
               return json{{"reloaded", true}, {"trained_at", s.models()->manifest.trained_at}};
           }));
    h.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.status == 404 && res.body.empty()) send_error(res, ErrorKind::NotFound, "no such endpoint");
    });
}

Server::~Server() { stop(); }

int Server::bind(const std::string& host, int port) {
    if (port == 0) {
        const int p = impl_->http.bind_to_any_port(host);
        if (p <= 0) throw Error(ErrorKind::Internal, "could not bind " + host);
        return p;
    }
    if (!impl_->http.bind_to_port(host, port)) {
        throw Error(ErrorKind::Internal, "could not bind " + host + ":" + std::to_string(port));
    }
    return port;
}

bool Server::serve() { return impl_->http.listen_after_bind(); }

void Server::stop() {
    if (impl_) impl_->http.stop();
}

void Server::wait_until_ready() const { impl_->http.wait_until_ready(); }

int port_from_env(int fallback) {
    const char* p = std::getenv("PORT");
    if (!p || !*p) return fallback;
    try {
        std::size_t pos = 0;
        const int v = std::stoi(p, &pos);
        if (pos != std::string(p).size() || v < 0 || v > 65535) throw std::invalid_argument(p);
        return v;
    } catch (const std::exception&) {
        fail(std::string("PORT environment variable is not a valid port: '") + p + "'");
    }
}

}  // namespace paxcast::http
