#include "memirl/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <numeric>
#include <tuple>
#include <random>

#include <unsupported/Eigen/LevenbergMarquardt>
#include <unsupported/Eigen/NumericalDiff>

namespace memirl::fitting {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kInvPhi = 0.6180339887498949;

struct Coordinate {
    std::string name;
    Bounds bounds;
};

struct Problem {
    const Series& series;
    const SocialGraph& graph;
    const FitConfig& cfg;
    std::vector<Coordinate> coords;
    bool teacher = false;

    ModelSpec decode(const std::vector<double>& v) const {
        ModelSpec m = cfg.base;
        std::size_t c = 0;
        if (cfg.fit_alpha) {
            for (double& a : m.alpha) a = v[c++];
        }
        if (cfg.fit_d) m.d = v[c++];
        if (cfg.surround == SurroundMode::kFree) m.xbar = v[c++];
        if (cfg.surround == SurroundMode::kComputed) m.xbar.reset();
        return m;
    }

    std::vector<double> clamp(const std::vector<double>& v) const {
        std::vector<double> out(v.size());
        for (std::size_t c = 0; c < v.size(); ++c) out[c] = std::clamp(v[c], coords[c].bounds.lo, coords[c].bounds.hi);
        return out;
    }

    std::size_t residual_count() const { return (series.length() - 1) * series.humans(); }

    double loss(const std::vector<double>& v) const {
        try {
            double e = predict(decode(v).build(graph), series, teacher).loss;
            return std::isfinite(e) ? e : kInf;
        } catch (const std::logic_error&) {
            return kInf;
        }
    }
};

// Minimizes f on [a, b]; returns the best point seen and its value.
std::pair<double, double> golden_section(const std::function<double(double)>& f, double a, double b, double width) {
    double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
    double fc = f(c), fd = f(d);
    double best = fc <= fd ? c : d, fbest = std::min(fc, fd);
    while (b - a > width) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c);
            if (fc < fbest) best = c, fbest = fc;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d);
            if (fd < fbest) best = d, fbest = fd;
        }
    }
    return {best, fbest};
}

// Residual vector for the least-squares polish. Parameters are clamped into
// their bounds before evaluation.
struct ResidualFunctor : Eigen::DenseFunctor<double> {
    const Problem* prob;

    ResidualFunctor(const Problem& p, int n)
        : Eigen::DenseFunctor<double>(n, static_cast<int>(p.residual_count())), prob(&p) {}

    int operator()(const InputType& x, ValueType& fvec) const {
        std::vector<double> v = prob->clamp(std::vector<double>(x.data(), x.data() + x.size()));
        try {
            Prediction pr = predict(prob->decode(v).build(prob->graph), prob->series, prob->teacher);
            Eigen::Index m = 0;
            for (const Vec& r : pr.residuals) {
                fvec.segment(m, r.size()) = r;
                m += r.size();
            }
            return fvec.allFinite() ? 0 : -1;
        } catch (const std::logic_error&) {
            return -1;
        }
    }
};

// Levenberg-Marquardt on the residuals with a forward-difference Jacobian.
std::pair<std::vector<double>, double> polish(const Problem& prob, const std::vector<double>& x, double f) {
    const int n = static_cast<int>(x.size());
    if (n == 0 || prob.residual_count() < x.size()) return {x, f};
    ResidualFunctor func(prob, n);
    Eigen::NumericalDiff<ResidualFunctor> diff(func, 1e-9);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<ResidualFunctor>> lm(diff);
    lm.setMaxfev(prob.cfg.polish_evaluations);
    lm.setXtol(1e-14);
    lm.setFtol(1e-14);
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(x.data(), n);
    lm.minimize(v);
    std::vector<double> out = prob.clamp(std::vector<double>(v.data(), v.data() + n));
    const double fo = prob.loss(out);
    if (fo < f) return {out, fo};
    return {x, f};
}

struct Descent {
    std::vector<double> x;
    double loss = kInf;
    std::size_t sweeps = 0;
};

Descent coordinate_descent(const Problem& prob, std::vector<double> x) {
    const FitConfig& cfg = prob.cfg;
    const std::size_t n = x.size();
    Descent out;
    double f = prob.loss(x);
    if (!std::isfinite(f)) return out;

    std::vector<double> radius(n);
    for (std::size_t c = 0; c < n; ++c) radius[c] = (prob.coords[c].bounds.hi - prob.coords[c].bounds.lo) / 4;

    std::size_t sweep = 0;
    while (sweep < cfg.max_sweeps && f > 0) {
        ++sweep;
        const double f_prev = f;
        const std::vector<double> x_prev = x;
        for (std::size_t c = 0; c < n; ++c) {
            const Bounds& bd = prob.coords[c].bounds;
            const double span = bd.hi - bd.lo;
            const double a = std::max(bd.lo, x[c] - radius[c]);
            const double b = std::min(bd.hi, x[c] + radius[c]);
            std::vector<double> probe = x;
            auto line = [&](double v) {
                probe[c] = v;
                return prob.loss(probe);
            };
            // Local refinement around the current value.
            auto [v, fv] = golden_section(line, a, b, cfg.line_tolerance * (1.0 + std::abs(x[c])));
            const bool local = fv < f;
            const double moved = local ? std::abs(v - x[c]) : 0.0;
            const bool at_edge = local && ((v - a < 0.01 * (b - a) && a > bd.lo) || (b - v < 0.01 * (b - a) && b < bd.hi));
            radius[c] = at_edge ? std::min(2 * radius[c], span) : std::clamp(4 * moved, 1e-4 * span, span);
            // Coarse scan of the whole range, refined around its best cell.
            if (cfg.scan_points >= 2) {
                const double h = span / static_cast<double>(cfg.scan_points - 1);
                double gbest = bd.lo, fg = kInf;
                for (std::size_t m = 0; m < cfg.scan_points; ++m) {
                    const double g = bd.lo + h * static_cast<double>(m);
                    const double fgm = line(g);
                    if (fgm < fg) gbest = g, fg = fgm;
                }
                if (fg < std::min(f, fv)) {
                    auto [w, fw] = golden_section(line, std::max(bd.lo, gbest - h), std::min(bd.hi, gbest + h),
                                                  cfg.line_tolerance * (1.0 + std::abs(gbest)));
                    if (fw < fg) gbest = w, fg = fw;
                    if (fg < fv) {
                        v = gbest;
                        fv = fg;
                        radius[c] = std::max(h, 1e-4 * span);
                    }
                }
            }
            if (fv < f) {
                x[c] = v;
                f = fv;
            }
        }

        // Extrapolate along the sweep displacement to cut zig-zagging between
        // coupled coordinates.
        std::vector<double> dir(n);
        double tmax = 4.0;
        bool any = false;
        for (std::size_t c = 0; c < n; ++c) {
            dir[c] = x[c] - x_prev[c];
            if (dir[c] == 0) continue;
            any = true;
            const Bounds& bd = prob.coords[c].bounds;
            tmax = std::min(tmax, dir[c] > 0 ? (bd.hi - x[c]) / dir[c] : (bd.lo - x[c]) / dir[c]);
        }
        if (any && tmax > 0) {
            std::vector<double> probe = x;
            auto line = [&](double t) {
                for (std::size_t c = 0; c < n; ++c) probe[c] = x[c] + t * dir[c];
                return prob.loss(probe);
            };
            auto [t, ft] = golden_section(line, 0.0, tmax, cfg.line_tolerance);
            if (ft < f) {
                for (std::size_t c = 0; c < n; ++c) x[c] += t * dir[c];
                f = ft;
            }
        }
        if (!any || f_prev - f <= cfg.tolerance * f_prev) break;
    }
    if (cfg.polish_evaluations > 0) std::tie(x, f) = polish(prob, x, f);
    out.x = std::move(x);
    out.loss = f;
    out.sweeps = sweep;
    return out;
}

std::vector<std::vector<double>> latin_hypercube(const std::vector<Coordinate>& coords, std::size_t n,
                                                 std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<std::vector<double>> pts(n, std::vector<double>(coords.size()));
    std::vector<std::size_t> perm(n);
    for (std::size_t c = 0; c < coords.size(); ++c) {
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        const Bounds& b = coords[c].bounds;
        for (std::size_t r = 0; r < n; ++r) {
            pts[r][c] = b.lo + (static_cast<double>(perm[r]) + U(rng)) / static_cast<double>(n) * (b.hi - b.lo);
        }
    }
    return pts;
}

}  // namespace

DiffusionParams ModelSpec::build(const SocialGraph& g) const {
    const std::size_t h = g.num_humans();
    if (alpha.size() != h) throw std::invalid_argument("model: need one alpha per human");
    if (!(epsilon_floor > 0)) throw std::invalid_argument("model: epsilon_floor must be > 0");
    DiffusionParams p;
    p.graph = g;
    for (std::size_t i = 0; i < h; ++i) {
        if (!(alpha[i] > 0) || !std::isfinite(alpha[i])) throw std::invalid_argument("model: alpha must be > 0");
        p.bias.push_back(bias::tanh_power_model(alpha[i], epsilon_floor));
        p.memory.push_back(MemoryKernel{d, tau});
    }
    p.s = s;
    p.use_innate = use_innate;
    p.surround_override = xbar;
    p.window = window;
    p.validate();
    return p;
}

void FitConfig::validate(std::size_t humans) const {
    if (base.tau < 1) throw std::invalid_argument("fit: tau must be >= 1");
    if (base.alpha.size() != humans) throw std::invalid_argument("fit: base model needs one alpha per human");
    if (!(alpha_bounds.lo > 0) || !(alpha_bounds.hi > alpha_bounds.lo)) {
        throw std::invalid_argument("fit: alpha bounds must satisfy 0 < lo < hi");
    }
    if (!(d_bounds.lo > 0) || !(d_bounds.hi > d_bounds.lo)) {
        throw std::invalid_argument("fit: d bounds must satisfy 0 < lo < hi");
    }
    if (surround == SurroundMode::kFixed && !base.xbar) {
        throw std::invalid_argument("fit: fixed surround mode needs a base xbar");
    }
    if (restarts < 1) throw std::invalid_argument("fit: restarts must be >= 1");
}

Prediction predict(const DiffusionParams& p, const Series& series, bool teacher_forcing) {
    if (series.length() < 2) throw std::invalid_argument("predict: series needs at least two rows");
    if (series.humans() != p.graph.num_humans() || series.targets() != p.graph.num_targets()) {
        throw std::invalid_argument("predict: series columns do not match the graph partition");
    }
    Prediction out;
    History h;
    h.x.push_back(series.x[0]);
    StepCache cache;
    for (std::size_t k = 0; k + 1 < series.length(); ++k) {
        Vec xhat = step(p, h, cache, series.u[k]);
        Vec r = series.x[k + 1] - xhat;
        out.loss += r.squaredNorm();
        out.xhat.push_back(std::move(xhat));
        out.residuals.push_back(std::move(r));
        if (teacher_forcing) h.x.back() = series.x[k + 1];
    }
    return out;
}

FitResult fit(const Series& series, const SocialGraph& g, const FitConfig& cfg) {
    series.validate();
    if (series.humans() != g.num_humans() || series.targets() != g.num_targets()) {
        throw std::invalid_argument("fit: series columns do not match the graph partition");
    }
    cfg.validate(g.num_humans());
    if (series.length() < static_cast<std::size_t>(cfg.base.tau) + 2) {
        throw std::invalid_argument("fit: series has " + std::to_string(series.length()) + " rows, need at least tau + 2 = " +
                                    std::to_string(cfg.base.tau + 2));
    }

    Problem prob{series, g, cfg, {}, cfg.teacher_forcing};
    if (cfg.fit_alpha) {
        for (std::size_t i = 0; i < g.num_humans(); ++i) prob.coords.push_back({"alpha" + std::to_string(i + 1), cfg.alpha_bounds});
    }
    if (cfg.fit_d) prob.coords.push_back({"d", cfg.d_bounds});
    if (cfg.surround == SurroundMode::kFree) prob.coords.push_back({"xbar", {-1.0, 1.0}});

    FitResult res;
    for (const auto& c : prob.coords) res.parameter_names.push_back(c.name);
    auto starts = prob.coords.empty() ? std::vector<std::vector<double>>(1)
                                      : latin_hypercube(prob.coords, cfg.restarts, cfg.seed);
    for (const auto& x0 : starts) {
        double e = prob.loss(x0);
        res.initial_loss.push_back(std::isfinite(e) ? e : std::numeric_limits<double>::quiet_NaN());
    }

    auto finish = [&](const std::vector<double>& x, double loss) {
        res.model = prob.decode(x);
        res.loss = loss;
        Prediction pr = predict(res.model.build(g), series, cfg.teacher_forcing);
        res.residuals = pr.residuals;
        for (const Vec& r : pr.residuals) res.step_loss.push_back(r.squaredNorm());
        return res;
    };

    // Flatness probe around the first start: every coordinate at its bounds
    // and midpoint, plus the remaining starts.
    std::vector<double> probes(res.initial_loss.begin(), res.initial_loss.end());
    for (std::size_t c = 0; c < prob.coords.size(); ++c) {
        const Bounds& b = prob.coords[c].bounds;
        for (double v : {b.lo, 0.5 * (b.lo + b.hi), b.hi}) {
            std::vector<double> x = starts[0];
            x[c] = v;
            probes.push_back(prob.loss(x));
        }
    }
    const bool all_finite = std::all_of(probes.begin(), probes.end(), [](double v) { return std::isfinite(v); });
    if (all_finite) {
        auto [lo, hi] = std::minmax_element(probes.begin(), probes.end());
        // Variation is measured against the larger of the loss and the energy
        // of the fitted opinions, so rounding-level losses count as flat.
        double energy = 0.0;
        for (std::size_t k = 1; k < series.length(); ++k) energy += series.x[k].squaredNorm();
        if (*hi - *lo <= cfg.flat_tolerance * std::max(std::abs(*hi), energy)) {
            res.non_identifiable = true;
            res.restart_loss = res.initial_loss;
            res.sweeps.assign(starts.size(), 0);
            return finish(starts[0], res.initial_loss[0]);
        }
    }

    // Each restart descends the one-step (teacher-forced) loss first, whose
    // zero set matches the recursive loss on noiseless data but which is far
    // less rugged, then refines on the configured loss.
    Problem one_step = prob;
    one_step.teacher = true;
    auto run = [&](const std::vector<double>& x0) {
        if (prob.coords.empty()) return Descent{x0, prob.loss(x0), 0};
        if (prob.teacher || !cfg.warm_start) return coordinate_descent(prob, x0);
        Descent warm = coordinate_descent(one_step, x0);
        Descent out = coordinate_descent(prob, warm.loss < kInf ? warm.x : x0);
        out.sweeps += warm.sweeps;
        return out;
    };
    std::vector<std::future<Descent>> jobs;
    for (const auto& x0 : starts) jobs.push_back(std::async(std::launch::async, run, std::cref(x0)));
    std::vector<Descent> runs;
    for (auto& j : jobs) {
        runs.push_back(j.get());
        res.restart_loss.push_back(std::isfinite(runs.back().loss) ? runs.back().loss
                                                                   : std::numeric_limits<double>::quiet_NaN());
        res.sweeps.push_back(runs.back().sweeps);
    }
    std::size_t best = runs.size();
    for (std::size_t r = 0; r < runs.size(); ++r) {
        if (std::isfinite(runs[r].loss) && (best == runs.size() || runs[r].loss < runs[best].loss)) best = r;
    }
    if (best == runs.size()) throw FitError("fit: every restart diverged");
    res.best_restart = best;
    return finish(runs[best].x, runs[best].loss);
}

}  // namespace memirl::fitting
