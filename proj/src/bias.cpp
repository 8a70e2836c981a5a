#include "memirl/bias.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

namespace memirl::bias {

Kernel tanh_power_confirmation(double alpha, double epsilon_floor) {
    if (!(alpha > 0)) throw std::invalid_argument("tanh_power: alpha must be positive");
    if (!(epsilon_floor > 0)) throw std::invalid_argument("tanh_power: epsilon_floor must be positive");
    return Kernel{"tanh_power_confirmation", [](double x) { return std::tanh(x); },
                  [alpha, epsilon_floor](double z) {
                      return std::pow(std::max(std::abs(z), epsilon_floor), -alpha);
                  }};
}

Kernel tanh_power_novelty(double alpha) {
    if (!(alpha > 0)) throw std::invalid_argument("tanh_power: alpha must be positive");
    return Kernel{"tanh_power_novelty", [](double x) { return std::tanh(x); },
                  [alpha](double z) { return std::pow(std::abs(z), alpha); }};
}

Kernel hk_kernel(double eps_lo, double eps_hi) {
    if (eps_lo < 0 || eps_lo > eps_hi) throw std::invalid_argument("hk: need 0 <= eps_lo <= eps_hi");
    return Kernel{"hk", [](double x) { return x; },
                  [eps_lo, eps_hi](double z) {
                      double d = std::abs(z);
                      return (d >= eps_lo && d <= eps_hi) ? 1.0 : 0.0;
                  }};
}

Kernel continuous_kernel(ScalarMap phi, std::string name) {
    return Kernel{std::move(name), [](double x) { return x; },
                  [phi = std::move(phi)](double z) { return phi(z * z); }};
}

Kernel constant_kernel(double value) {
    return Kernel{"constant", [](double x) { return x; }, [value](double) { return value; }};
}

ScalarMap gaussian_phi(double scale) {
    return [scale](double z) { return std::exp(-z / scale); };
}

BiasModel tanh_power_model(double alpha, double epsilon_floor) {
    return BiasModel{tanh_power_confirmation(alpha, epsilon_floor), tanh_power_novelty(alpha), alpha,
                     epsilon_floor};
}

double confirmation_weight(const BiasModel& m, double x_self, double x_other) {
    return m.confirmation(x_self, x_other);
}

double novelty_weight(const BiasModel& m, double x_surround, double x_other) {
    return m.novelty(x_surround, x_other);
}

std::vector<std::size_t> hk_neighbor_set(double eps_lo, double eps_hi, double x_i,
                                         std::span<const double> others) {
    if (eps_lo > eps_hi) throw std::invalid_argument("hk_neighbor_set: eps_lo > eps_hi");
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < others.size(); ++k) {
        double d = std::abs(x_i - others[k]);
        if (d >= eps_lo && d <= eps_hi) out.push_back(k);
    }
    return out;
}

double continuous_influence(const ScalarMap& phi, double x_i, double x_j) {
    double d = x_i - x_j;
    return phi(d * d);
}

bool Report::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.ok(); });
}

const CheckResult& Report::at(const std::string& name) const {
    for (const auto& c : checks) {
        if (c.name == name) return c;
    }
    throw std::out_of_range("no check named " + name);
}

namespace {

double scale_of(double a, double b) { return std::max({1.0, std::abs(a), std::abs(b)}); }

bool strictly_greater(double a, double b) { return a - b > kStrictMargin * scale_of(a, b); }

bool nearly_equal(double a, double b) { return std::abs(a - b) <= kEqualityTol * scale_of(a, b); }

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{seed & 0xffffffffu, seed >> 32, stream};
    return std::mt19937_64(seq);
}

class Sampler {
public:
    Sampler(const SamplerConfig& cfg, std::uint64_t stream)
        : cfg_(cfg), rng_(make_rng(cfg.seed, stream)) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double sign() { return std::bernoulli_distribution(0.5)(rng_) ? 1.0 : -1.0; }

    /// Repeats `attempt` until it yields a value, bounded by max_retries.
    template <typename T, typename F>
    T draw(const char* what, F&& attempt) {
        for (std::size_t r = 0; r < cfg_.max_retries; ++r) {
            if (std::optional<T> v = attempt()) return *v;
        }
        throw SamplerExhausted(std::string("sampler exhausted constructing ") + what);
    }

private:
    const SamplerConfig& cfg_;
    std::mt19937_64 rng_;
};

void record(CheckResult& r, bool ok, Triple t) {
    if (ok) {
        ++r.pass;
    } else {
        ++r.fail;
        if (r.counterexamples.size() < kMaxCounterexamples) r.counterexamples.push_back(t);
    }
}

}  // namespace

BehaviorReport verify_behaviors(const Kernel& k, BiasKind kind, const SamplerConfig& cfg, std::size_t n) {
    if (n == 0) throw std::invalid_argument("verify_behaviors: n must be >= 1");
    const double gap = cfg.min_gap;
    BehaviorReport rep;

    {  // neutral reference, mirrored opinions: equal weights
        CheckResult r{kNeutralSameDistance, 0, 0, {}};
        Sampler s(cfg, 1);
        for (std::size_t i = 0; i < n; ++i) {
            double xa = s.sign() * s.uniform(gap, 1.0);
            Triple t{0.0, xa, -xa};
            record(r, nearly_equal(k(0.0, t.x_a), k(0.0, t.x_b)), t);
        }
        rep.checks.push_back(std::move(r));
    }

    {  // equal distance, x_a on the reference's side, x_b across (or at) zero
        CheckResult r{kSameDistanceCrossingDomains, 0, 0, {}};
        Sampler s(cfg, 2);
        for (std::size_t i = 0; i < n; ++i) {
            Triple t = s.draw<Triple>(r.name.c_str(), [&]() -> std::optional<Triple> {
                double m = s.uniform(gap, 0.5);
                double lo = std::max(m, gap), hi = 1.0 - m;
                if (hi <= lo) return std::nullopt;
                double d = s.uniform(lo, hi);
                double sg = s.sign();
                return Triple{sg * m, sg * (m + d), sg * (m - d)};
            });
            bool ok = (kind == BiasKind::kConfirmation)
                          ? strictly_greater(k(t.x_ref, t.x_a), k(t.x_ref, t.x_b))
                          : strictly_greater(k(t.x_ref, t.x_b), k(t.x_ref, t.x_a));
            record(r, ok, t);
        }
        rep.checks.push_back(std::move(r));
    }

    {  // equal distance, all three in the reference's domain, x_a more extreme
        CheckResult r{kSameDistanceSameDomain, 0, 0, {}};
        Sampler s(cfg, 3);
        for (std::size_t i = 0; i < n; ++i) {
            Triple t = s.draw<Triple>(r.name.c_str(), [&]() -> std::optional<Triple> {
                double m = s.uniform(gap, 1.0);
                double hi = std::min(m, 1.0 - m);
                if (hi <= gap) return std::nullopt;
                double d = s.uniform(gap, hi);
                double sg = s.sign();
                return Triple{sg * m, sg * (m + d), sg * (m - d)};
            });
            bool ok = (kind == BiasKind::kConfirmation)
                          ? strictly_greater(k(t.x_ref, t.x_a), k(t.x_ref, t.x_b))
                          : strictly_greater(k(t.x_ref, t.x_b), k(t.x_ref, t.x_a));
            record(r, ok, t);
        }
        rep.checks.push_back(std::move(r));
    }

    {  // x_a, x_b in one domain, x_b strictly closer to the reference
        CheckResult r{kSameDomainDifferentDistances, 0, 0, {}};
        Sampler s(cfg, 4);
        for (std::size_t i = 0; i < n; ++i) {
            Triple t = s.draw<Triple>(r.name.c_str(), [&]() -> std::optional<Triple> {
                double sg = s.sign();
                double xa = sg * s.uniform(0.0, 1.0);
                double xb = sg * s.uniform(0.0, 1.0);
                double xr = s.uniform(-1.0, 1.0);
                if (std::abs(xr - xb) > std::abs(xr - xa)) std::swap(xa, xb);
                if (std::abs(xr - xb) < gap || std::abs(xr - xa) - std::abs(xr - xb) < gap) return std::nullopt;
                if (!cfg.literal_straddle && (xa - xr) * (xb - xr) <= 0) return std::nullopt;
                return Triple{xr, xa, xb};
            });
            bool ok = (kind == BiasKind::kConfirmation)
                          ? strictly_greater(k(t.x_ref, t.x_b), k(t.x_ref, t.x_a))
                          : strictly_greater(k(t.x_ref, t.x_a), k(t.x_ref, t.x_b));
            record(r, ok, t);
        }
        rep.checks.push_back(std::move(r));
    }

    {  // existential: some closer opinion across zero outweighs (or, for novelty,
       // underweights) a same-domain opinion
        CheckResult r{kSmallDistanceCrossingDomains, 0, 0, {}};
        Sampler s(cfg, 5);
        const std::size_t grid = std::max<std::size_t>(cfg.grid_points, 1);
        for (std::size_t i = 0; i < n; ++i) {
            Triple t = s.draw<Triple>(r.name.c_str(), [&]() -> std::optional<Triple> {
                double sg = s.sign();
                double xr = sg * s.uniform(gap, 1.0);
                double xa = sg * s.uniform(gap, 1.0);
                // an opposite-sign x_b strictly closer than x_a must exist
                if (std::abs(xa - xr) <= std::abs(xr) + gap) return std::nullopt;
                return Triple{xr, xa, 0.0};
            });
            const double sg = t.x_ref > 0 ? 1.0 : -1.0;
            const double wa = k(t.x_ref, t.x_a);
            const double da = std::abs(t.x_ref - t.x_a);
            bool found = false;
            double best_b = 0.0;
            double best_w = kind == BiasKind::kConfirmation ? -HUGE_VAL : HUGE_VAL;
            for (std::size_t g = 1; g <= grid; ++g) {
                double xb = -sg * static_cast<double>(g) / static_cast<double>(grid);
                if (std::abs(t.x_ref - xb) >= da) break;  // zeta < 1 required
                double wb = k(t.x_ref, xb);
                bool better = kind == BiasKind::kConfirmation ? wb > best_w : wb < best_w;
                if (better) {
                    best_w = wb;
                    best_b = xb;
                }
                if (kind == BiasKind::kConfirmation ? strictly_greater(wb, wa) : strictly_greater(wa, wb)) {
                    found = true;
                    best_b = xb;
                    break;
                }
            }
            t.x_b = best_b;
            record(r, found, t);
        }
        rep.checks.push_back(std::move(r));
    }
    return rep;
}

BehaviorReport verify_confirmation_behaviors(const Kernel& k, const SamplerConfig& cfg, std::size_t n) {
    return verify_behaviors(k, BiasKind::kConfirmation, cfg, n);
}

BehaviorReport verify_novelty_behaviors(const Kernel& k, const SamplerConfig& cfg, std::size_t n) {
    return verify_behaviors(k, BiasKind::kNovelty, cfg, n);
}

ConditionReport verify_conditions(const ScalarMap& f, const ScalarMap& g, BiasKind kind,
                                  const SamplerConfig& cfg, std::size_t n) {
    if (n == 0) throw std::invalid_argument("verify_conditions: n must be >= 1");
    const double gap = cfg.min_gap;
    ConditionReport rep;

    {  // g monotone in |z| over the range of transformed distances
        CheckResult r{kDistanceMonotone, 0, 0, {}};
        Sampler s(cfg, 11);
        double span = std::abs(f(1.0) - f(-1.0));
        if (!(span > 10 * gap)) span = 2.0;
        for (std::size_t i = 0; i < n; ++i) {
            Triple t = s.draw<Triple>(r.name.c_str(), [&]() -> std::optional<Triple> {
                double z1 = s.uniform(gap, span), z2 = s.uniform(gap, span);
                if (std::abs(z1 - z2) < gap) return std::nullopt;
                if (z1 > z2) std::swap(z1, z2);
                // signed arguments: the distance, not the sign, must drive g
                return Triple{0.0, s.sign() * z1, s.sign() * z2};
            });
            double near = g(t.x_a), far = g(t.x_b);
            bool ok = kind == BiasKind::kConfirmation ? strictly_greater(near, far) : strictly_greater(far, near);
            record(r, ok, t);
        }
        rep.checks.push_back(std::move(r));
    }

    {
        CheckResult r{kTransformIncreasing, 0, 0, {}};
        Sampler s(cfg, 12);
        for (std::size_t i = 0; i < n; ++i) {
            Triple t = s.draw<Triple>(r.name.c_str(), [&]() -> std::optional<Triple> {
                double a = s.uniform(-1.0, 1.0), b = s.uniform(-1.0, 1.0);
                if (std::abs(a - b) < gap) return std::nullopt;
                return Triple{0.0, std::min(a, b), std::max(a, b)};
            });
            record(r, strictly_greater(f(t.x_b), f(t.x_a)), t);
        }
        rep.checks.push_back(std::move(r));
    }

    for (int side : {+1, -1}) {
        CheckResult r{side > 0 ? kMidpointAbovePositive : kMidpointBelowNegative, 0, 0, {}};
        Sampler s(cfg, side > 0 ? 13 : 14);
        for (std::size_t i = 0; i < n; ++i) {
            Triple t = s.draw<Triple>(r.name.c_str(), [&]() -> std::optional<Triple> {
                double m = s.uniform(gap, 1.0);
                double hi = 1.0 - m;  // keeps m + d inside [-1, 1]
                if (hi <= gap) return std::nullopt;
                double d = s.uniform(gap, hi);
                double xr = side * m;
                // x_a is the larger of the pair for a positive reference and
                // the smaller one for a negative reference
                return Triple{xr, xr + side * d, xr - side * d};
            });
            double mid = 0.5 * (f(t.x_a) + f(t.x_b));
            bool ok = side > 0 ? strictly_greater(f(t.x_ref), mid) : strictly_greater(mid, f(t.x_ref));
            record(r, ok, t);
        }
        rep.checks.push_back(std::move(r));
    }

    {
        CheckResult r{kZeroMidpoint, 0, 0, {}};
        Sampler s(cfg, 15);
        const double f0 = f(0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double a = s.uniform(-1.0, 1.0);
            record(r, nearly_equal(f0, 0.5 * (f(a) + f(-a))), Triple{0.0, a, -a});
        }
        rep.checks.push_back(std::move(r));
    }
    return rep;
}

ConditionReport verify_confirmation_conditions(const ScalarMap& f, const ScalarMap& g,
                                               const SamplerConfig& cfg, std::size_t n) {
    return verify_conditions(f, g, BiasKind::kConfirmation, cfg, n);
}

ConditionReport verify_novelty_conditions(const ScalarMap& f, const ScalarMap& g,
                                          const SamplerConfig& cfg, std::size_t n) {
    return verify_conditions(f, g, BiasKind::kNovelty, cfg, n);
}

}  // namespace memirl::bias
