#pragma once

#include <chrono>
#include <string>
#include <vector>

namespace paxcast::gam {

/// A named set of anchor dates with a window of day offsets around each.
/// One model column per (window, offset); a date is active for an offset when
/// it lies exactly that many days from any anchor.
struct HolidayWindow {
    std::string name;
    std::vector<std::chrono::sys_days> anchors;
    int lower_window = 0;  // <= 0
    int upper_window = 0;  // >= 0

    void validate() const;
    int width() const { return upper_window - lower_window + 1; }
};

std::chrono::sys_days easter_sunday(int year);

/// Christmas/year-end window plus England & Wales bank holidays for the
/// inclusive year range. Christmas is one window per year anchored on 25 Dec
/// spanning 19 Dec - 2 Jan with a coefficient per calendar day.
std::vector<HolidayWindow> england_wales_holidays(int first_year, int last_year);

}  // namespace paxcast::gam
