#pragma once

// JSON-over-HTTP front end for ForecastService.
//
//   GET  /stations
//   GET  /forecast?station&origin&from&to
//   GET  /components?station&bucket&from&to[&origin]
//   GET  /heatmap?station[&days]
//   POST /whatif            {station, days?, deltas:[{hour, role, change}]}
//   GET  /diagnostics?station&bucket
//   POST /admin/reload      re-read the model store
//
// Errors: 400 malformed request, 404 unknown station or bucket, 409 models
// not trained, 422 invalid what-if, 500 internal.

#include <memory>
#include <string>

#include "paxcast/error.hpp"
#include "paxcast/service.hpp"

namespace paxcast::http {

int status_for(ErrorKind kind);

class Server {
public:
    explicit Server(service::ForecastService& svc);
    ~Server();

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds `host:port`; port 0 picks a free port. Returns the bound port.
    int bind(const std::string& host, int port);
    /// Serves until stop(); call after bind().
    bool serve();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// `PORT` from the environment when set, else `fallback`.
int port_from_env(int fallback);

}  // namespace paxcast::http
