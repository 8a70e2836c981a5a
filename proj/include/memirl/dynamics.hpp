#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "memirl/bias.hpp"
#include "memirl/graph.hpp"

namespace memirl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Decaying memory activation m(age) = log(age^{-d} + 1).
struct MemoryKernel {
    double d = 1.0;
    int tau = 1;
};

/// Which past points an individual remembers at time k.
enum class MemoryWindow {
    kInclusive,    // t = k - tau .. k, ages 1 .. tau + 1
    kHorizonOnly,  // t = k - tau + 1 .. k, ages 1 .. tau
};

int window_length(const MemoryKernel& m, MemoryWindow w);

/// Throws std::out_of_range unless 1 <= age <= tau + 1.
double memory_weight(const MemoryKernel& m, int age);

/// Memory weights for ages 1..window_length, newest first.
std::vector<double> memory_weights(const MemoryKernel& m, MemoryWindow w);

/// Memory-weighted mean of the newest entries of `history` (ordered oldest to
/// newest). `weights[a - 1]` is the weight of age a; the window truncates to
/// whichever of history and weights is shorter.
double sensed_self_expectation(std::span<const double> history, std::span<const double> weights);
double sensed_self_expectation(std::span<const double> history, const MemoryKernel& m,
                               MemoryWindow w = MemoryWindow::kInclusive);

/// Normalized influence weights of one human for one transition.
struct InfluenceRow {
    std::vector<std::size_t> sources;  // in-neighbors, ascending
    std::vector<double> weights;       // c_ij, aligned with sources
    double resistance = 0.0;           // weight kept on the subconscious bias

    double total() const;
};

/// Influence rows used at each transition t -> t+1, one row per human.
/// Rows are written once and never recomputed.
struct StepCache {
    std::vector<std::vector<InfluenceRow>> steps;
};

/// Memory- and influence-weighted mean of neighbor opinions over a window.
/// `states[w]` is the full state (humans then targets) at the w-th window time,
/// oldest first, and `rows[w]` the influence row of individual i at that time.
/// Returns nullopt when every row weight is zero.
std::optional<double> sensed_surround_expectation(std::span<const Vec> states,
                                                  std::span<const InfluenceRow* const> rows,
                                                  std::span<const double> memory_weights);

struct DiffusionParams {
    SocialGraph graph;
    std::vector<bias::BiasModel> bias;   // one per human
    std::vector<MemoryKernel> memory;    // one per human
    std::vector<double> s;               // subconscious bias per human; may be empty
    bool use_innate = false;
    std::vector<double> innate_anchor;   // per human, defaults to 1 when empty
    /// Tied constant replacing the computed surrounding expectation.
    std::optional<double> surround_override;
    MemoryWindow window = MemoryWindow::kInclusive;

    void validate() const;
    int max_window() const;
};

/// Observed past: human opinions at times t0..k and target actions at t0..k-1.
struct History {
    std::vector<Vec> x;
    std::vector<Vec> u;
};

/// 𝔩 transitions starting at `start_time`:
///   x[m] = humans at start_time + m + 1,  u[m] = actions at start_time + m.
struct Trajectory {
    long start_time = 0;
    std::vector<Vec> x;
    std::vector<Vec> u;

    std::size_t length() const { return x.size(); }
};

/// Builds one human's row from the current full state and its sensed
/// expectations. Confirmation and novelty weights share a joint denominator.
InfluenceRow influence_row(const DiffusionParams& p, std::size_t i, const Vec& state,
                           double self_expectation, double surround_expectation);

/// Advances the history one step under actions `u_now`; appends the rows used
/// to `cache` and returns the next human opinions.
Vec step(const DiffusionParams& p, History& history, StepCache& cache, const Vec& u_now);

struct Simulation {
    Trajectory trajectory;
    StepCache cache;
};

/// Seeds cache rows for transitions already inside `initial` (uniform weights)
/// and rolls forward under `u_sequence`.
Simulation simulate_with_cache(const DiffusionParams& p, History initial, std::span<const Vec> u_sequence);
Trajectory simulate(const DiffusionParams& p, const History& initial, std::span<const Vec> u_sequence);

/// Uniform row over in-neighbors (resistance 1 when isolated).
InfluenceRow uniform_row(const DiffusionParams& p, std::size_t i);

}  // namespace memirl
