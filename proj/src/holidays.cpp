#include "paxcast/holidays.hpp"

#include "paxcast/error.hpp"

namespace paxcast::gam {

using namespace std::chrono;

void HolidayWindow::validate() const {
    if (name.empty()) fail("holiday window without a name");
    if (lower_window > 0 || upper_window < 0) fail("holiday window '" + name + "' must satisfy lower <= 0 <= upper");
}

sys_days easter_sunday(int y) {
    // Anonymous Gregorian computus.
    const int a = y % 19, b = y / 100, c = y % 100, d = b / 4, e = b % 4;
    const int f = (b + 8) / 25, g = (b - f + 1) / 3;
    const int h = (19 * a + b - d - g + 15) % 30;
    const int i = c / 4, k = c % 4;
    const int l = (32 + 2 * e + 2 * i - h - k) % 7;
    const int m = (a + 11 * h + 22 * l) / 451;
    const int month = (h + l - 7 * m + 114) / 31;
    const int day = (h + l - 7 * m + 114) % 31 + 1;
    return sys_days{year{y} / static_cast<unsigned>(month) / static_cast<unsigned>(day)};
}

namespace {

sys_days first_weekday(int y, unsigned m, weekday wd) { return sys_days{year{y} / m / wd[1]}; }
sys_days last_weekday(int y, unsigned m, weekday wd) { return sys_days{year{y} / m / wd[last]}; }

sys_days observed(sys_days d) {
    const weekday wd{d};
    if (wd == Saturday) return d + days{2};
    if (wd == Sunday) return d + days{1};
    return d;
}

}  // namespace

std::vector<HolidayWindow> england_wales_holidays(int first_year, int last_year) {
    HolidayWindow christmas{"christmas", {}, -6, 8};
    HolidayWindow easter{"easter", {}, -1, 1};
    HolidayWindow new_year{"new_year", {}, -1, 1};
    HolidayWindow early_may{"early_may", {}, -1, 1};
    HolidayWindow spring{"spring_bank", {}, -1, 1};
    HolidayWindow summer{"summer_bank", {}, -1, 1};
    for (int y = first_year; y <= last_year; ++y) {
        christmas.anchors.push_back(sys_days{year{y} / December / 25});
        const auto es = easter_sunday(y);
        easter.anchors.push_back(es - days{2});
        easter.anchors.push_back(es + days{1});
        new_year.anchors.push_back(observed(sys_days{year{y} / January / 1}));
        early_may.anchors.push_back(first_weekday(y, 5, Monday));
        spring.anchors.push_back(last_weekday(y, 5, Monday));
        summer.anchors.push_back(last_weekday(y, 8, Monday));
    }
    return {christmas, easter, new_year, early_may, spring, summer};
}

}  // namespace paxcast::gam
