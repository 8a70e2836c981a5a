#include "memirl/dynamics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace memirl {

int window_length(const MemoryKernel& m, MemoryWindow w) {
    return w == MemoryWindow::kInclusive ? m.tau + 1 : m.tau;
}

double memory_weight(const MemoryKernel& m, int age) {
    if (age < 1 || age > m.tau + 1) {
        throw std::out_of_range("memory_weight: age " + std::to_string(age) + " outside 1.." +
                                std::to_string(m.tau + 1));
    }
    return std::log(std::pow(static_cast<double>(age), -m.d) + 1.0);
}

std::vector<double> memory_weights(const MemoryKernel& m, MemoryWindow w) {
    std::vector<double> out(static_cast<std::size_t>(window_length(m, w)));
    for (std::size_t a = 0; a < out.size(); ++a) out[a] = memory_weight(m, static_cast<int>(a) + 1);
    return out;
}

double sensed_self_expectation(std::span<const double> history, std::span<const double> weights) {
    if (history.empty()) throw std::invalid_argument("sensed_self_expectation: empty history");
    const std::size_t len = std::min(history.size(), weights.size());
    double num = 0.0, den = 0.0;
    for (std::size_t a = 0; a < len; ++a) {
        double v = history[history.size() - 1 - a];
        num += weights[a] * v;
        den += weights[a];
    }
    if (!(den > 0)) throw std::invalid_argument("sensed_self_expectation: zero memory mass");
    return num / den;
}

double sensed_self_expectation(std::span<const double> history, const MemoryKernel& m, MemoryWindow w) {
    auto weights = memory_weights(m, w);
    return sensed_self_expectation(history, weights);
}

double InfluenceRow::total() const {
    double s = resistance;
    for (double c : weights) s += c;
    return s;
}

std::optional<double> sensed_surround_expectation(std::span<const Vec> states,
                                                  std::span<const InfluenceRow* const> rows,
                                                  std::span<const double> memory_weights) {
    if (states.size() != rows.size()) {
        throw std::invalid_argument("sensed_surround_expectation: missing cache rows for window");
    }
    const std::size_t len = states.size();
    if (memory_weights.size() < len) throw std::invalid_argument("sensed_surround_expectation: window exceeds memory");
    double num = 0.0, den = 0.0;
    for (std::size_t w = 0; w < len; ++w) {
        const InfluenceRow* row = rows[w];
        if (row == nullptr) throw std::invalid_argument("sensed_surround_expectation: missing cache row");
        const double m = memory_weights[len - 1 - w];  // newest has age 1
        for (std::size_t q = 0; q < row->sources.size(); ++q) {
            num += m * row->weights[q] * states[w][static_cast<Eigen::Index>(row->sources[q])];
            den += m * row->weights[q];
        }
    }
    if (!(den > 0)) return std::nullopt;
    return num / den;
}

void DiffusionParams::validate() const {
    const std::size_t h = graph.num_humans();
    if (bias.size() != h) throw std::invalid_argument("DiffusionParams: need one bias model per human");
    if (memory.size() != h) throw std::invalid_argument("DiffusionParams: need one memory kernel per human");
    for (const auto& m : memory) {
        if (!(m.d > 0)) throw std::invalid_argument("DiffusionParams: memory decay d must be > 0");
        if (m.tau < 1) throw std::invalid_argument("DiffusionParams: memory horizon tau must be >= 1");
    }
    if (!s.empty() && s.size() != h) throw std::invalid_argument("DiffusionParams: s must have one entry per human");
    for (double v : s) {
        if (!(v >= -1.0 && v <= 1.0)) throw std::invalid_argument("DiffusionParams: s entries must lie in [-1,1]");
    }
    if (use_innate && s.empty()) throw std::invalid_argument("DiffusionParams: use_innate needs s");
    if (!innate_anchor.empty() && innate_anchor.size() != h) {
        throw std::invalid_argument("DiffusionParams: innate_anchor must have one entry per human");
    }
    for (double a : innate_anchor) {
        if (!(a >= 0)) throw std::invalid_argument("DiffusionParams: innate_anchor must be >= 0");
    }
    if (surround_override && !(*surround_override >= -1.0 && *surround_override <= 1.0)) {
        throw std::invalid_argument("DiffusionParams: surround override must lie in [-1,1]");
    }
}

int DiffusionParams::max_window() const {
    int w = 1;
    for (const auto& m : memory) w = std::max(w, window_length(m, window));
    return w;
}

namespace {

double anchor_of(const DiffusionParams& p, std::size_t i) {
    if (!p.use_innate) return 0.0;
    return p.innate_anchor.empty() ? 1.0 : p.innate_anchor[i];
}

// Unnormalized weights; `total` is accumulated in the same order the update
// numerator is, which keeps the convex combination inside the opinion range
// exactly under rounding.
struct RawRow {
    const std::vector<std::size_t>* sources;
    std::vector<double> raw;
    double anchor = 0.0;
    double total = 0.0;
};

RawRow raw_row(const DiffusionParams& p, std::size_t i, const Vec& state, double self_expectation,
               double surround_expectation) {
    RawRow r;
    r.sources = &p.graph.in_neighbors(i);
    r.anchor = anchor_of(p, i);
    r.total = r.anchor;
    r.raw.reserve(r.sources->size());
    const auto& model = p.bias[i];
    for (std::size_t j : *r.sources) {
        double xj = state[static_cast<Eigen::Index>(j)];
        double w = model.confirmation(self_expectation, xj) + model.novelty(surround_expectation, xj);
        r.raw.push_back(w);
        r.total += w;
    }
    return r;
}

InfluenceRow normalize(const RawRow& r) {
    InfluenceRow row;
    row.sources = *r.sources;
    if (r.sources->empty()) {
        row.resistance = 1.0;
        return row;
    }
    if (!(r.total > 0) || !std::isfinite(r.total)) {
        throw std::logic_error("influence row has non-positive or non-finite mass");
    }
    row.weights.reserve(r.raw.size());
    for (double w : r.raw) row.weights.push_back(w / r.total);
    row.resistance = r.anchor / r.total;
    return row;
}

Vec full_state(const History& h, std::size_t t) {
    Vec z(h.x[t].size() + h.u[t].size());
    z << h.x[t], h.u[t];
    return z;
}

void check_history(const DiffusionParams& p, const History& h) {
    if (h.x.empty()) throw std::invalid_argument("history needs at least one opinion row");
    if (h.u.size() + 1 != h.x.size()) throw std::invalid_argument("history needs one action row per past transition");
    for (const auto& x : h.x) {
        if (static_cast<std::size_t>(x.size()) != p.graph.num_humans()) {
            throw std::invalid_argument("history opinion row has wrong dimension");
        }
    }
    for (const auto& u : h.u) {
        if (static_cast<std::size_t>(u.size()) != p.graph.num_targets()) {
            throw std::invalid_argument("history action row has wrong dimension");
        }
    }
}

}  // namespace

InfluenceRow influence_row(const DiffusionParams& p, std::size_t i, const Vec& state, double self_expectation,
                           double surround_expectation) {
    if (i >= p.graph.num_humans()) throw std::out_of_range("influence_row: not a human index");
    return normalize(raw_row(p, i, state, self_expectation, surround_expectation));
}

InfluenceRow uniform_row(const DiffusionParams& p, std::size_t i) {
    RawRow r;
    r.sources = &p.graph.in_neighbors(i);
    r.anchor = anchor_of(p, i);
    r.total = r.anchor;
    for (std::size_t q = 0; q < r.sources->size(); ++q) {
        r.raw.push_back(1.0);
        r.total += 1.0;
    }
    return normalize(r);
}

Vec step(const DiffusionParams& p, History& history, StepCache& cache, const Vec& u_now) {
    check_history(p, history);
    const std::size_t nh = p.graph.num_humans();
    if (static_cast<std::size_t>(u_now.size()) != p.graph.num_targets()) {
        throw std::invalid_argument("step: action vector has wrong dimension");
    }
    history.u.push_back(u_now);
    const std::size_t k = history.x.size() - 1;
    while (cache.steps.size() < k) {
        std::vector<InfluenceRow> seed;
        for (std::size_t i = 0; i < nh; ++i) seed.push_back(uniform_row(p, i));
        cache.steps.push_back(std::move(seed));
    }
    if (cache.steps.size() != k) throw std::invalid_argument("step: cache is ahead of history");

    const std::size_t wmax = static_cast<std::size_t>(p.max_window());
    const std::size_t first = k + 1 > wmax ? k + 1 - wmax : 0;
    std::vector<Vec> states;
    for (std::size_t t = first; t <= k; ++t) states.push_back(full_state(history, t));
    const Vec& now = states.back();

    std::vector<InfluenceRow> seed_now;  // stands in for rows at k = 0
    if (k == 0) {
        for (std::size_t i = 0; i < nh; ++i) seed_now.push_back(uniform_row(p, i));
    }

    Vec next(static_cast<Eigen::Index>(nh));
    std::vector<InfluenceRow> rows;
    rows.reserve(nh);
    std::vector<double> own;
    for (std::size_t i = 0; i < nh; ++i) {
        const auto mw = memory_weights(p.memory[i], p.window);
        const std::size_t len = std::min(mw.size(), k + 1);

        own.clear();
        for (std::size_t t = k + 1 - len; t <= k; ++t) own.push_back(history.x[t][static_cast<Eigen::Index>(i)]);
        const double self = sensed_self_expectation(own, mw);

        double surround = self;
        if (p.surround_override) {
            surround = *p.surround_override;
        } else {
            // The row for the current time is not known yet; the previous
            // transition's row stands in for it.
            std::vector<const InfluenceRow*> window_rows;
            for (std::size_t t = k + 1 - len; t <= k; ++t) {
                if (t < k) {
                    window_rows.push_back(&cache.steps[t][i]);
                } else {
                    window_rows.push_back(k > 0 ? &cache.steps[k - 1][i] : &seed_now[i]);
                }
            }
            std::span<const Vec> window_states(states.data() + (states.size() - len), len);
            if (auto v = sensed_surround_expectation(window_states, window_rows, mw)) surround = *v;
        }

        RawRow raw = raw_row(p, i, now, self, surround);
        InfluenceRow row = normalize(raw);
        if (std::abs(row.total() - 1.0) > 1e-12) throw std::logic_error("influence row is not stochastic");

        const double xi = history.x[k][static_cast<Eigen::Index>(i)];
        if (raw.sources->empty()) {
            next[static_cast<Eigen::Index>(i)] = p.s.empty() ? xi : p.s[i];
        } else {
            double num = raw.anchor > 0 ? raw.anchor * p.s[i] : 0.0;
            for (std::size_t q = 0; q < raw.raw.size(); ++q) {
                num += raw.raw[q] * now[static_cast<Eigen::Index>((*raw.sources)[q])];
            }
            next[static_cast<Eigen::Index>(i)] = num / raw.total;
        }
        rows.push_back(std::move(row));
    }
    cache.steps.push_back(std::move(rows));
    history.x.push_back(next);
    return next;
}

Simulation simulate_with_cache(const DiffusionParams& p, History initial, std::span<const Vec> u_sequence) {
    p.validate();
    check_history(p, initial);
    Simulation sim;
    sim.trajectory.start_time = static_cast<long>(initial.x.size()) - 1;
    for (const Vec& u : u_sequence) {
        if (static_cast<std::size_t>(u.size()) != p.graph.num_targets()) {
            throw std::invalid_argument("simulate: action row has wrong dimension");
        }
        sim.trajectory.x.push_back(step(p, initial, sim.cache, u));
        sim.trajectory.u.push_back(u);
    }
    return sim;
}

Trajectory simulate(const DiffusionParams& p, const History& initial, std::span<const Vec> u_sequence) {
    return simulate_with_cache(p, initial, u_sequence).trajectory;
}

}  // namespace memirl
