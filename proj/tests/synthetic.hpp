#pragma once

// Ground-truth generator for cost recovery: targets pick their window actions
// by projected gradient ascent on a known joint cost through the diffusion model.

#include <algorithm>
#include <random>
#include <string>

#include "memirl/fitting.hpp"
#include "memirl/irl.hpp"

namespace synthetic {

using memirl::Mat;
using memirl::Vec;

struct Instance {
    memirl::DiffusionParams params;
    memirl::irl::Episode episode;
    memirl::irl::CostSpec truth;
    std::vector<std::size_t> dominant;  // per target
};

struct GeneratorConfig {
    std::size_t window = 3;
    std::size_t past = 3;
    double dominant_weight = 0.7;
    std::size_t ascent_steps = 2000;
    double ascent_rate = 0.2;
    bool random_dominant = false;  // otherwise basis 0 dominates for every target
};

inline memirl::DiffusionParams fixture_params(const std::string& data_dir) {
    memirl::DiffusionParams p;
    p.graph = memirl::load_graph(data_dir + "/twitter9.graph");
    const double alpha[] = {1.8, 2.2, 1.4, 2.2, 0.2, 1.0, 2.2};
    for (std::size_t i = 0; i < p.graph.num_humans(); ++i) {
        p.bias.push_back(memirl::bias::tanh_power_model(alpha[i % 7]));
        p.memory.push_back(memirl::MemoryKernel{6.01, 2});
    }
    p.surround_override = -1.0;
    return p;
}

inline Instance generate(const memirl::DiffusionParams& p, std::uint64_t seed, const GeneratorConfig& cfg = {}) {
    using namespace memirl;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0), U01(0.0, 1.0);
    const auto H = static_cast<Eigen::Index>(p.graph.num_humans());
    const auto T = static_cast<Eigen::Index>(p.graph.num_targets());
    const auto basis = irl::default_basis();
    const auto P = static_cast<Eigen::Index>(basis.size());

    Instance inst;
    inst.params = p;
    auto rv = [&](Eigen::Index n) {
        Vec v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = U(rng);
        return v;
    };
    for (std::size_t t = 0; t < cfg.past; ++t) inst.episode.history.x.push_back(rv(H));
    for (std::size_t t = 0; t + 1 < cfg.past; ++t) inst.episode.history.u.push_back(rv(T));

    inst.truth.basis = basis;
    inst.truth.theta = Mat::Zero(T, P);
    for (Eigen::Index i = 0; i < T; ++i) {
        std::size_t dom = cfg.random_dominant ? static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(P)) : 0;
        inst.dominant.push_back(dom);
        Vec rest(P);
        for (Eigen::Index q = 0; q < P; ++q) rest[q] = U01(rng);
        rest[static_cast<Eigen::Index>(dom)] = 0.0;
        rest *= (1.0 - cfg.dominant_weight) / rest.sum();
        for (Eigen::Index q = 0; q < P; ++q) {
            double sign = U(rng) < 0 ? -1.0 : 1.0;
            inst.truth.theta(i, q) = q == static_cast<Eigen::Index>(dom) ? cfg.dominant_weight : sign * rest[q];
        }
    }
    // importance with a clear gap between the two targets
    double big = 0.65 + 0.2 * U01(rng);
    inst.truth.importance = Vec::Constant(T, (1.0 - big) / static_cast<double>(T - 1));
    inst.truth.importance[static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(T))] = big;

    std::vector<Vec> u;
    for (std::size_t t = 0; t < cfg.window; ++t) u.push_back(rv(T));
    for (std::size_t it = 0; it < cfg.ascent_steps; ++it) {
        irl::Episode e{inst.episode.history, simulate(p, inst.episode.history, u)};
        auto parts = irl::gradient_and_hessian(inst.truth, p, e);
        for (std::size_t t = 0; t < cfg.window; ++t) {
            for (Eigen::Index q = 0; q < T; ++q) {
                double& v = u[t][q];
                v = std::clamp(v + cfg.ascent_rate * parts.h[static_cast<Eigen::Index>(t) * T + q], -1.0, 1.0);
            }
        }
    }
    inst.episode.window = simulate(p, inst.episode.history, u);
    return inst;
}

/// Noiseless series of `rows` rows simulated from a random x(1) under random
/// actions. The final row carries no action.
inline memirl::Series roundtrip_series(const memirl::DiffusionParams& p, std::uint64_t seed, std::size_t rows = 18) {
    using namespace memirl;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    auto rv = [&](std::size_t n) {
        Vec v(static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = U(rng);
        return v;
    };
    History h;
    h.x.push_back(rv(p.graph.num_humans()));
    std::vector<Vec> u;
    for (std::size_t k = 0; k + 1 < rows; ++k) u.push_back(rv(p.graph.num_targets()));
    return to_series(h, simulate(p, h, u));
}

inline memirl::fitting::ModelSpec roundtrip_truth(std::size_t humans) {
    memirl::fitting::ModelSpec m;
    m.alpha.assign(humans, 1.0);
    m.d = 6.01;
    m.tau = 2;
    m.xbar = -1.0;
    return m;
}

}  // namespace synthetic
