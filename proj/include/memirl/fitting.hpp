#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "memirl/dynamics.hpp"
#include "memirl/series.hpp"

namespace memirl::fitting {

/// Scalar description of a tanh-power diffusion model over a graph. Decay,
/// horizon and the surround override are tied across humans.
struct ModelSpec {
    std::vector<double> alpha;        // confirmation/novelty exponent per human
    double d = 6.01;
    int tau = 2;
    std::optional<double> xbar = -1.0;  // nullopt: computed surround expectation
    std::vector<double> s;
    bool use_innate = false;
    double epsilon_floor = bias::kDefaultEpsilonFloor;
    MemoryWindow window = MemoryWindow::kInclusive;

    /// Throws std::invalid_argument when sizes or values are inconsistent with g.
    DiffusionParams build(const SocialGraph& g) const;
};

struct Bounds {
    double lo = 0.0;
    double hi = 0.0;
};

enum class SurroundMode {
    kFixed,     // xbar held at the base value
    kFree,      // xbar fitted within [-1, 1]
    kComputed,  // no override; the memory-weighted neighbor mean is used
};

struct FitConfig {
    ModelSpec base;  // fixed parts and values of parameters that are not fitted
    bool fit_alpha = true;
    bool fit_d = true;
    SurroundMode surround = SurroundMode::kFixed;
    Bounds alpha_bounds{0.01, 5.0};
    Bounds d_bounds{0.01, 20.0};
    std::size_t restarts = 8;
    std::size_t max_sweeps = 100;
    std::size_t scan_points = 12;   // coarse grid per coordinate line search; 0 disables
    double tolerance = 1e-8;        // relative loss change ending the sweeps
    double line_tolerance = 1e-9;   // golden-section bracket width
    int polish_evaluations = 2000;  // least-squares polish budget per restart; 0 disables
    double flat_tolerance = 1e-10;  // relative loss variation flagged as flat
    bool teacher_forcing = false;
    /// Descend the teacher-forced loss before the recursive one in each restart.
    bool warm_start = true;
    std::uint64_t seed = 1;

    void validate(std::size_t humans) const;
};

struct FitResult {
    ModelSpec model;
    double loss = 0.0;
    std::vector<Vec> residuals;         // x(k) - xhat(k), k = 2..K
    std::vector<double> step_loss;      // squared norms of residuals
    bool non_identifiable = false;
    std::size_t best_restart = 0;
    std::vector<double> initial_loss;   // per restart; NaN when diverged
    std::vector<double> restart_loss;
    std::vector<std::size_t> sweeps;
    std::vector<std::string> parameter_names;
};

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Prediction {
    std::vector<Vec> xhat;  // k = 2..K
    std::vector<Vec> residuals;
    double loss = 0.0;
};

/// Rolls the model forward from xhat(1) = x(1) under the observed actions
/// (recursive), or from the observed history at every step (teacher forcing).
Prediction predict(const DiffusionParams& p, const Series& series, bool teacher_forcing = false);

FitResult fit(const Series& series, const SocialGraph& g, const FitConfig& cfg);

}  // namespace memirl::fitting
