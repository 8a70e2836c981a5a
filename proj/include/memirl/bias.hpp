#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace memirl::bias {

using ScalarMap = std::function<double(double)>;

/// Influence kernel of the composite form weight(x_ref, x) = g(f(x_ref) - f(x)).
///
/// f is a transform of opinions, g a nonnegative map of the signed transformed
/// distance. Every kernel in this module (tanh-power, bounded confidence,
/// squared-distance) is expressed this way so the same verifiers apply to all.
struct Kernel {
    std::string name;
    ScalarMap f;
    ScalarMap g;

    double operator()(double x_ref, double x) const { return g(f(x_ref) - f(x)); }
};

/// Confirmation kernel paired with a novelty kernel for one individual.
struct BiasModel {
    Kernel confirmation;
    Kernel novelty;
    double alpha = 1.0;
    double epsilon_floor = 1e-6;
};

inline constexpr double kDefaultEpsilonFloor = 1e-6;

/// |tanh a - tanh b|^{-alpha}, with the distance floored at epsilon_floor.
Kernel tanh_power_confirmation(double alpha, double epsilon_floor = kDefaultEpsilonFloor);
/// |tanh a - tanh b|^{+alpha}; strictly increasing in distance.
Kernel tanh_power_novelty(double alpha);
/// 0/1 bounded-confidence weight: 1 iff eps_lo <= |a - b| <= eps_hi.
Kernel hk_kernel(double eps_lo, double eps_hi);
/// phi(|a - b|^2); symmetric in the distance by construction.
Kernel continuous_kernel(ScalarMap phi, std::string name = "continuous");
Kernel constant_kernel(double value);

/// Gaussian decay phi(z) = exp(-z / scale).
ScalarMap gaussian_phi(double scale = 1.0);

BiasModel tanh_power_model(double alpha, double epsilon_floor = kDefaultEpsilonFloor);

double confirmation_weight(const BiasModel& m, double x_self, double x_other);
double novelty_weight(const BiasModel& m, double x_surround, double x_other);

/// Indices k with eps_lo <= |x_i - others[k]| <= eps_hi.
std::vector<std::size_t> hk_neighbor_set(double eps_lo, double eps_hi, double x_i,
                                         std::span<const double> others);

double continuous_influence(const ScalarMap& phi, double x_i, double x_j);

// ---------------------------------------------------------------------------
// Property verification

enum class BiasKind { kConfirmation, kNovelty };

struct SamplerConfig {
    std::uint64_t seed = 1;
    /// Attempts allowed to construct one hypothesis-satisfying draw.
    std::size_t max_retries = 10000;
    /// Minimum separation between sampled opinions (and from zero where a sign
    /// is required). Keeps draws out of the epsilon-floor plateau.
    double min_gap = 1e-3;
    /// Sample the different-distances behavior literally, allowing x_ref to sit
    /// strictly between the two opinions. Off by default: that reading
    /// contradicts the same-domain behavior for every continuous transform.
    bool literal_straddle = false;
    std::size_t grid_points = 401;
};

struct Triple {
    double x_ref = 0, x_a = 0, x_b = 0;
};

struct CheckResult {
    std::string name;
    std::size_t pass = 0;
    std::size_t fail = 0;
    std::vector<Triple> counterexamples;  // at most kMaxCounterexamples

    bool ok() const { return fail == 0; }
};

inline constexpr std::size_t kMaxCounterexamples = 10;
inline constexpr double kEqualityTol = 1e-9;
inline constexpr double kStrictMargin = 1e-12;

struct Report {
    std::vector<CheckResult> checks;

    bool all_pass() const;
    const CheckResult& at(const std::string& name) const;
};

using BehaviorReport = Report;
using ConditionReport = Report;

class SamplerExhausted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Behavior names, in verification order.
inline constexpr const char* kNeutralSameDistance = "neutral_same_distance";
inline constexpr const char* kSameDistanceCrossingDomains = "same_distance_crossing_domains";
inline constexpr const char* kSameDistanceSameDomain = "same_distance_same_domain";
inline constexpr const char* kSameDomainDifferentDistances = "same_domain_different_distances";
inline constexpr const char* kSmallDistanceCrossingDomains = "small_distance_crossing_domains";

// Condition names.
inline constexpr const char* kDistanceMonotone = "g_strictly_monotone_in_distance";
inline constexpr const char* kTransformIncreasing = "f_strictly_increasing";
inline constexpr const char* kMidpointAbovePositive = "f_above_midpoint_for_positive_ref";
inline constexpr const char* kMidpointBelowNegative = "f_below_midpoint_for_negative_ref";
inline constexpr const char* kZeroMidpoint = "f_zero_is_symmetric_midpoint";

BehaviorReport verify_behaviors(const Kernel& k, BiasKind kind, const SamplerConfig& cfg, std::size_t n);
BehaviorReport verify_confirmation_behaviors(const Kernel& k, const SamplerConfig& cfg, std::size_t n);
BehaviorReport verify_novelty_behaviors(const Kernel& k, const SamplerConfig& cfg, std::size_t n);

ConditionReport verify_conditions(const ScalarMap& f, const ScalarMap& g, BiasKind kind,
                                  const SamplerConfig& cfg, std::size_t n);
/// g strictly decreasing in distance plus the shared f conditions.
ConditionReport verify_confirmation_conditions(const ScalarMap& f, const ScalarMap& g,
                                               const SamplerConfig& cfg, std::size_t n);
/// g strictly increasing in distance plus the shared f conditions.
ConditionReport verify_novelty_conditions(const ScalarMap& f, const ScalarMap& g,
                                          const SamplerConfig& cfg, std::size_t n);

}  // namespace memirl::bias
