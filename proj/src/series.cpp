#include "memirl/series.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace memirl {

namespace {

bool in_range(double v) { return v >= -1.0 && v <= 1.0; }

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        auto b = cell.find_first_not_of(" \t\r");
        auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, std::size_t line) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw SeriesError(line, "not a number: '" + s + "'");
}

}  // namespace

SeriesError::SeriesError(std::size_t line, const std::string& what)
    : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

void Series::validate() const {
    if (x.size() != u.size() || x.size() != t.size()) throw std::invalid_argument("series: column lengths differ");
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (x[k].size() != x[0].size() || u[k].size() != u[0].size()) {
            throw std::invalid_argument("series: ragged rows");
        }
        for (Eigen::Index j = 0; j < x[k].size(); ++j) {
            if (!in_range(x[k][j])) throw std::invalid_argument("series: opinion outside [-1,1] at row " + std::to_string(k + 1));
        }
        for (Eigen::Index j = 0; j < u[k].size(); ++j) {
            // the final row may lack actions (nothing acts on it yet)
            if (std::isnan(u[k][j]) && k + 1 == u.size()) continue;
            if (!in_range(u[k][j])) throw std::invalid_argument("series: action outside [-1,1] at row " + std::to_string(k + 1));
        }
    }
}

Series parse_series_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    std::size_t nx = 0, nu = 0;
    bool header = false;
    Series s;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto cells = split(line);
        if (!header) {
            if (cells.empty() || cells[0] != "t") throw SeriesError(lineno, "header must start with 't'");
            for (std::size_t c = 1; c < cells.size(); ++c) {
                const std::string& name = cells[c];
                const std::string want_x = "x" + std::to_string(nx + 1), want_u = "u" + std::to_string(nu + 1);
                if (nu == 0 && name == want_x) {
                    ++nx;
                } else if (name == want_u) {
                    ++nu;
                } else {
                    throw SeriesError(lineno, "unexpected column '" + name + "'");
                }
            }
            if (nx == 0) throw SeriesError(lineno, "no opinion columns");
            header = true;
            continue;
        }
        if (cells.size() != 1 + nx + nu) throw SeriesError(lineno, "expected " + std::to_string(1 + nx + nu) + " cells");
        double tv = parse_double(cells[0], lineno);
        if (tv != std::floor(tv)) throw SeriesError(lineno, "time must be an integer");
        Vec x(static_cast<Eigen::Index>(nx)), u(static_cast<Eigen::Index>(nu));
        for (std::size_t c = 0; c < nx; ++c) x[static_cast<Eigen::Index>(c)] = parse_double(cells[1 + c], lineno);
        for (std::size_t c = 0; c < nu; ++c) {
            const std::string& cell = cells[1 + nx + c];
            u[static_cast<Eigen::Index>(c)] =
                cell.empty() ? std::numeric_limits<double>::quiet_NaN() : parse_double(cell, lineno);
        }
        if (!s.u.empty() && s.u.back().hasNaN()) throw SeriesError(lineno - 1, "only the final row may omit actions");
        if (!s.t.empty() && static_cast<long>(tv) != s.t.back() + 1) throw SeriesError(lineno, "times must be consecutive");
        s.t.push_back(static_cast<long>(tv));
        s.x.push_back(x);
        s.u.push_back(u);
    }
    if (!header) throw SeriesError(lineno, "missing header");
    try {
        s.validate();
    } catch (const std::invalid_argument& e) {
        throw SeriesError(0, e.what());
    }
    return s;
}

Series load_series_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw SeriesError(0, "cannot open series file " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_series_csv(ss.str());
}

std::string format_series_csv(const Series& s) {
    std::ostringstream out;
    out << 't';
    for (std::size_t j = 0; j < s.humans(); ++j) out << ",x" << j + 1;
    for (std::size_t j = 0; j < s.targets(); ++j) out << ",u" << j + 1;
    out << '\n';
    char buf[40];
    for (std::size_t k = 0; k < s.length(); ++k) {
        out << s.t[k];
        for (Eigen::Index j = 0; j < s.x[k].size(); ++j) {
            std::snprintf(buf, sizeof buf, "%.12g", s.x[k][j]);
            out << ',' << buf;
        }
        for (Eigen::Index j = 0; j < s.u[k].size(); ++j) {
            out << ',';
            if (std::isnan(s.u[k][j])) continue;
            std::snprintf(buf, sizeof buf, "%.12g", s.u[k][j]);
            out << buf;
        }
        out << '\n';
    }
    return out.str();
}

void write_series_csv(const Series& s, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw SeriesError(0, "cannot write series file " + path.string());
    f << format_series_csv(s);
}

Series to_series(const History& history, const Trajectory& traj, long first_time) {
    Series s;
    std::vector<Vec> xs = history.x, us = history.u;
    xs.insert(xs.end(), traj.x.begin(), traj.x.end());
    us.insert(us.end(), traj.u.begin(), traj.u.end());
    const Eigen::Index nu = us.empty() ? 0 : us[0].size();
    for (std::size_t k = 0; k < xs.size(); ++k) {
        s.t.push_back(first_time + static_cast<long>(k));
        s.x.push_back(xs[k]);
        s.u.push_back(k < us.size() ? us[k] : Vec::Constant(nu, std::numeric_limits<double>::quiet_NaN()));
    }
    return s;
}

}  // namespace memirl
