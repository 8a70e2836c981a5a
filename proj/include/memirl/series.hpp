#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "memirl/dynamics.hpp"

namespace memirl {

/// Observed time series: row t holds human opinions x(t) and target actions u(t).
struct Series {
    std::vector<long> t;
    std::vector<Vec> x;
    std::vector<Vec> u;

    std::size_t length() const { return x.size(); }
    std::size_t humans() const { return x.empty() ? 0 : static_cast<std::size_t>(x[0].size()); }
    std::size_t targets() const { return u.empty() ? 0 : static_cast<std::size_t>(u[0].size()); }
    /// Throws std::invalid_argument on ragged rows or values outside [-1, 1].
    void validate() const;
};

class SeriesError : public std::runtime_error {
public:
    SeriesError(std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// CSV with header t,x1..xH,u1..uT.
Series parse_series_csv(const std::string& text);
Series load_series_csv(const std::filesystem::path& path);
std::string format_series_csv(const Series& s);
void write_series_csv(const Series& s, const std::filesystem::path& path);

/// Observed rows plus a simulated continuation as one series.
Series to_series(const History& history, const Trajectory& traj, long first_time = 1);

}  // namespace memirl
