// Acceptance suite: one PASS/FAIL/SKIP line per criterion. Exit status is
// nonzero when any required criterion fails. Pass criterion numbers as
// arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "memirl/bias.hpp"
#include "memirl/dynamics.hpp"
#include "memirl/fitting.hpp"
#include "memirl/irl.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace memirl;

namespace {

const std::string kDataDir = MEMIRL_DATA_DIR;

enum class Status { kPass, kFail, kSkip };

struct Outcome {
    Status status;
    std::string detail;
};

Vec rand_vec(std::mt19937_64& rng, Eigen::Index n, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> U(lo, hi);
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = U(rng);
    return v;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// ---------------------------------------------------------------------------
// 1. bias axioms for the tanh-power kernels

Outcome bias_axioms() {
    const std::size_t n = 10000;
    bias::SamplerConfig cfg;
    cfg.seed = 2024;
    std::vector<std::string> failed;
    std::size_t checks = 0;
    for (double alpha : {0.2, 1.0, 1.4, 1.8, 2.2}) {
        auto conf = bias::tanh_power_confirmation(alpha);
        auto nov = bias::tanh_power_novelty(alpha);
        const std::pair<std::string, bias::Report> reports[] = {
            {"conf", bias::verify_confirmation_behaviors(conf, cfg, n)},
            {"conf", bias::verify_confirmation_conditions(conf.f, conf.g, cfg, n)},
            {"nov", bias::verify_novelty_behaviors(nov, cfg, n)},
            {"nov", bias::verify_novelty_conditions(nov.f, nov.g, cfg, n)},
        };
        for (const auto& [group, rep] : reports) {
            for (const auto& c : rep.checks) {
                ++checks;
                if (!c.ok()) {
                    failed.push_back(group + "/" + c.name + "@" + fmt("%.1f", alpha) + " " + std::to_string(c.fail) + "/" +
                                     std::to_string(c.pass + c.fail));
                }
            }
        }
    }
    std::string detail = std::to_string(checks - failed.size()) + "/" + std::to_string(checks) + " checks pass";
    if (!failed.empty()) {
        detail += "; failing:";
        for (const auto& f : failed) detail += " " + f;
    }
    return {failed.empty() ? Status::kPass : Status::kFail, detail};
}

// ---------------------------------------------------------------------------
// 2. baseline kernels treat opposite opinions symmetrically

Outcome baseline_failures() {
    bool ok = true;
    std::ostringstream d;
    auto hk = bias::hk_kernel(0.4, 0.4);
    const double sym_a = hk(0.2, 0.45), sym_b = hk(0.2, -0.05);
    const double far_a = hk(0.2, 0.7), far_b = hk(0.2, -0.3);
    ok = ok && sym_a == sym_b && far_a == 0.0 && far_b == 0.0;
    const std::vector<double> far{0.7, -0.3};
    ok = ok && bias::hk_neighbor_set(0.4, 0.4, 0.2, far).empty();
    d << "hk (0.45,-0.05) weights " << sym_a << "," << sym_b << "; (0.7,-0.3) weights " << far_a << "," << far_b;

    // The same pairs under a window [0, 0.4]: both near opinions kept, both far dropped.
    auto window = bias::hk_kernel(0.0, 0.4);
    ok = ok && window(0.2, 0.45) == 1.0 && window(0.2, -0.05) == 1.0 && window(0.2, 0.7) == 0.0 && window(0.2, -0.3) == 0.0;

    auto phi = bias::gaussian_phi();
    const double ca = bias::continuous_influence(phi, 0.1, -0.3), cb = bias::continuous_influence(phi, 0.1, 0.5);
    const double da = (0.1 - -0.3) * (0.1 - -0.3), db = (0.1 - 0.5) * (0.1 - 0.5);
    ok = ok && std::abs(ca - cb) <= 1e-12 && std::abs(da - 0.16) <= 1e-12 && std::abs(db - 0.16) <= 1e-12;
    d << "; continuous |diff| " << fmt("%.1e", std::abs(ca - cb)) << ", squared distances " << da << "," << db;
    return {ok ? Status::kPass : Status::kFail, d.str()};
}

// ---------------------------------------------------------------------------
// 3. bounded, row-stochastic dynamics on random models

DiffusionParams random_model(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> nh(2, 8), nt(1, 3), taus(1, 3);
    std::uniform_real_distribution<double> U01(0.0, 1.0);
    const int h = nh(rng), t = nt(rng), n = h + t;
    std::ostringstream g;
    g << "n=" << n << " targets=";
    for (int k = h + 1; k <= n; ++k) g << k << (k < n ? "," : "\n");
    for (int i = 1; i <= h; ++i) {
        for (int j = 1; j <= n; ++j) {
            if (j != i && U01(rng) < 0.4) g << i << ' ' << j << '\n';
        }
    }
    DiffusionParams p;
    p.graph = parse_graph(g.str());
    const double d = 0.5 + 9.5 * U01(rng);
    const int tau = taus(rng);
    for (int i = 0; i < h; ++i) {
        p.bias.push_back(bias::tanh_power_model(0.1 + 2.9 * U01(rng)));
        p.memory.push_back(MemoryKernel{d, tau});
    }
    p.window = U01(rng) < 0.5 ? MemoryWindow::kInclusive : MemoryWindow::kHorizonOnly;
    if (U01(rng) < 0.5) p.surround_override = 2 * U01(rng) - 1;
    if (U01(rng) < 0.5) {
        p.use_innate = true;
        for (int i = 0; i < h; ++i) {
            p.s.push_back(2 * U01(rng) - 1);
            p.innate_anchor.push_back(2 * U01(rng));
        }
    }
    return p;
}

Vec edgy_vec(std::mt19937_64& rng, Eigen::Index n) {
    std::uniform_real_distribution<double> U01(0.0, 1.0);
    Vec v = rand_vec(rng, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double r = U01(rng);
        if (r < 0.1) v[i] = 1.0;
        else if (r < 0.2) v[i] = -1.0;
        else if (r < 0.25) v[i] = 0.0;
    }
    return v;
}

Outcome dynamics_bounds() {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> past(1, 4), steps(1, 10);
    double worst_row = 0.0;
    std::size_t out_of_range = 0, rows = 0;
    for (int sim = 0; sim < 10000; ++sim) {
        DiffusionParams p = random_model(rng);
        const auto H = static_cast<Eigen::Index>(p.graph.num_humans());
        const auto T = static_cast<Eigen::Index>(p.graph.num_targets());
        History h;
        const int k0 = past(rng);
        for (int t = 0; t < k0; ++t) h.x.push_back(edgy_vec(rng, H));
        for (int t = 0; t + 1 < k0; ++t) h.u.push_back(edgy_vec(rng, T));
        std::vector<Vec> u;
        const int ns = steps(rng);
        for (int t = 0; t < ns; ++t) u.push_back(edgy_vec(rng, T));
        Simulation s = simulate_with_cache(p, h, u);
        for (const Vec& x : s.trajectory.x) {
            if (!x.allFinite() || x.minCoeff() < -1.0 || x.maxCoeff() > 1.0) ++out_of_range;
        }
        for (const auto& step_rows : s.cache.steps) {
            for (const auto& row : step_rows) {
                worst_row = std::max(worst_row, std::abs(row.total() - 1.0));
                ++rows;
            }
        }
    }
    const bool ok = out_of_range == 0 && worst_row <= 1e-12;
    return {ok ? Status::kPass : Status::kFail, "10000 simulations, " + std::to_string(out_of_range) +
                                                    " states out of range, " + std::to_string(rows) +
                                                    " rows, max |rho + sum c - 1| = " + fmt("%.1e", worst_row)};
}

// ---------------------------------------------------------------------------
// 4. closed-form likelihood term against quadrature

double log_integral(double w) {
    // log of the integral of exp(w u) over [-1, 1], shifted by |w| for range
    const double a = std::abs(w);
    double v = oracle::simpson([a](double u) { return std::exp(a * (u - 1.0)); }, -1.0, 1.0, 1e-15, 50);
    return a + std::log(v);
}

Outcome likelihood_identity() {
    std::mt19937_64 rng(4242);
    std::uniform_int_distribution<int> dims(1, 6);
    std::uniform_real_distribution<double> U01(0.0, 1.0);
    double worst = 0.0, worst_limit = 0.0;
    std::size_t limit_cases = 0;
    for (int draw = 0; draw < 1000; ++draw) {
        const int n = dims(rng);
        Mat A = Mat::NullaryExpr(n, n, [&]() { return 2 * U01(rng) - 1; });
        Mat H = A * A.transpose() * (5 * U01(rng));
        Vec u = rand_vec(rng, n);
        Vec h = rand_vec(rng, n, -5.0, 5.0);
        const bool limit = draw % 5 == 0;
        if (limit) {
            // varpi = h - H u below 1e-6 in every coordinate
            h = H * u + rand_vec(rng, n, -9e-7, 9e-7);
            for (int k = 0; k < n; k += 2) h[k] = (H * u)[k];
        }
        const Vec varpi = h - H * u;
        double oracle_value = -0.5 * u.dot(H * u) + u.dot(h);
        for (Eigen::Index k = 0; k < varpi.size(); ++k) oracle_value -= log_integral(varpi[k]);
        worst = std::max(worst, std::abs(irl::log_likelihood(h, H, u) - oracle_value));
        if (limit) {
            for (Eigen::Index k = 0; k < varpi.size(); ++k) {
                worst_limit = std::max(worst_limit, std::abs(irl::log_partition_term(varpi[k]) - std::log(0.5)));
                ++limit_cases;
            }
        }
    }
    const bool ok = worst <= 1e-8 && worst_limit <= 1e-12;
    return {ok ? Status::kPass : Status::kFail, "1000 draws, max abs error " + fmt("%.1e", worst) + "; " +
                                                    std::to_string(limit_cases) + " limit terms within " +
                                                    fmt("%.1e", worst_limit) + " of log(1/2)"};
}

// ---------------------------------------------------------------------------
// 5. derivative oracles

irl::CostSpec random_spec(std::mt19937_64& rng, std::size_t T, const std::vector<irl::Basis>& basis) {
    irl::CostSpec spec;
    spec.basis = basis;
    spec.theta = Mat(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(basis.size()));
    for (Eigen::Index i = 0; i < spec.theta.rows(); ++i) {
        spec.theta.row(i) = rand_vec(rng, spec.theta.cols()).transpose();
        spec.theta.row(i) /= spec.theta.row(i).cwiseAbs().sum();
    }
    spec.importance = rand_vec(rng, static_cast<Eigen::Index>(T), 0.05, 1.0);
    spec.importance /= spec.importance.sum();
    return spec;
}

irl::Episode model_episode(const DiffusionParams& p, std::mt19937_64& rng, std::size_t past, std::size_t l) {
    const auto H = static_cast<Eigen::Index>(p.graph.num_humans());
    const auto T = static_cast<Eigen::Index>(p.graph.num_targets());
    irl::Episode e;
    for (std::size_t t = 0; t < past; ++t) e.history.x.push_back(rand_vec(rng, H));
    for (std::size_t t = 0; t + 1 < past; ++t) e.history.u.push_back(rand_vec(rng, T));
    std::vector<Vec> u;
    for (std::size_t t = 0; t < l; ++t) u.push_back(rand_vec(rng, T));
    e.window = simulate(p, e.history, u);
    return e;
}

double rel_err(const Mat& a, const Mat& b) {
    return (a - b).cwiseAbs().maxCoeff() / std::max(1e-12, b.cwiseAbs().maxCoeff());
}

Outcome derivative_oracles() {
    std::mt19937_64 rng(555);
    const DiffusionParams p = synthetic::fixture_params(kDataDir);
    double worst_h = 0.0, worst_H = 0.0, worst_basis = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        auto e = model_episode(p, rng, 3, 3);
        auto spec = random_spec(rng, 2, irl::default_basis());
        auto parts = irl::gradient_and_hessian(spec, p, e);
        const irl::StackedSample s0 = irl::stack(e.window);
        const Vec u0 = s0.u;
        auto r_model = [&](const Vec& u) {
            irl::StackedSample s = s0;
            s.u = u;
            return irl::joint_cost(spec, irl::stack(simulate(p, e.history, irl::unstack(s).u)));
        };
        auto r_lin = [&](const Vec& u) {
            irl::StackedSample s = s0;
            s.u = u;
            s.x = s0.x + parts.jac * (u - u0);
            return irl::joint_cost(spec, s);
        };
        Vec hfd(u0.size());
        for (Eigen::Index k = 0; k < u0.size(); ++k) {
            Vec up = u0, um = u0;
            up[k] += 1e-5;
            um[k] -= 1e-5;
            hfd[k] = (r_model(up) - r_model(um)) / 2e-5;
        }
        worst_h = std::max(worst_h, rel_err(parts.h, hfd));
        const double hs = 1e-3;
        Mat Hfd(u0.size(), u0.size());
        for (Eigen::Index a = 0; a < u0.size(); ++a) {
            for (Eigen::Index b = 0; b < u0.size(); ++b) {
                Vec pp = u0, pm = u0, mp = u0, mm = u0;
                pp[a] += hs, pp[b] += hs;
                pm[a] += hs, pm[b] -= hs;
                mp[a] -= hs, mp[b] += hs;
                mm[a] -= hs, mm[b] -= hs;
                Hfd(a, b) = (r_lin(pp) - r_lin(pm) - r_lin(mp) + r_lin(mm)) / (4 * hs * hs);
            }
        }
        worst_H = std::max(worst_H, rel_err(parts.H, Hfd));

        std::vector<irl::Basis> all = irl::default_basis();
        all.push_back(irl::Basis::parse("stubborn:2"));
        const double hb = 1e-5;
        for (const auto& b : all) {
            for (std::size_t owner = 0; owner < 2; ++owner) {
                auto P = irl::basis_partials(b, s0, owner);
                for (Eigen::Index k = 0; k < s0.x.size(); ++k) {
                    auto sp = s0, sm = s0;
                    sp.x[k] += hb;
                    sm.x[k] -= hb;
                    const double fd = (irl::basis_cost(b, sp, owner) - irl::basis_cost(b, sm, owner)) / (2 * hb);
                    worst_basis = std::max(worst_basis, std::abs(fd - P.gx[k]) / std::max(1.0, std::abs(P.gx[k])));
                }
                for (Eigen::Index k = 0; k < s0.u.size(); ++k) {
                    auto sp = s0, sm = s0;
                    sp.u[k] += hb;
                    sm.u[k] -= hb;
                    const double fd = (irl::basis_cost(b, sp, owner) - irl::basis_cost(b, sm, owner)) / (2 * hb);
                    worst_basis = std::max(worst_basis, std::abs(fd - P.gu[k]) / std::max(1.0, std::abs(P.gu[k])));
                }
            }
        }
    }
    const bool ok = worst_h <= 1e-4 && worst_H <= 1e-3 && worst_basis <= 1e-6;
    return {ok ? Status::kPass : Status::kFail, "20 episodes; h rel " + fmt("%.1e", worst_h) + ", H rel " +
                                                    fmt("%.1e", worst_H) + ", basis partials " +
                                                    fmt("%.1e", worst_basis)};
}

// ---------------------------------------------------------------------------
// 6. learned parameters satisfy their constraints

Outcome learn_constraints() {
    std::mt19937_64 rng(606);
    const DiffusionParams p = synthetic::fixture_params(kDataDir);
    double worst_theta = 0.0, worst_simplex = 0.0;
    std::size_t runs = 0;
    std::vector<std::vector<irl::Basis>> bases{irl::default_basis(),
                                               {irl::Basis::parse("steer_pos"), irl::Basis::parse("stubborn_self")},
                                               {irl::Basis::parse("steer_neutral"), irl::Basis::parse("stubborn:1"),
                                                irl::Basis::parse("stubborn:2")}};
    for (int trial = 0; trial < 30; ++trial) {
        auto e = model_episode(p, rng, 3, 2 + static_cast<std::size_t>(trial % 3));
        irl::LearnConfig cfg;
        cfg.restarts = 8;
        cfg.seed = static_cast<std::uint64_t>(trial);
        auto r = irl::learn(e, p, bases[static_cast<std::size_t>(trial) % bases.size()], cfg);
        for (Eigen::Index i = 0; i < r.theta.rows(); ++i) {
            worst_theta = std::max(worst_theta, std::abs(r.theta.row(i).cwiseAbs().sum() - 1.0));
        }
        worst_simplex = std::max(worst_simplex, std::abs(r.importance.sum() - 1.0));
        worst_simplex = std::max(worst_simplex, std::max(0.0, -r.importance.minCoeff()));
        ++runs;
    }
    const bool ok = worst_theta <= 1e-6 && worst_simplex <= 1e-8;
    return {ok ? Status::kPass : Status::kFail, std::to_string(runs) + " learn runs; max | ||theta_i||_1 - 1 | " +
                                                    fmt("%.1e", worst_theta) + ", simplex violation " +
                                                    fmt("%.1e", worst_simplex)};
}

// ---------------------------------------------------------------------------
// 7. recovery of a known cost from locally optimal actions

Outcome synthetic_recovery() {
    const DiffusionParams p = synthetic::fixture_params(kDataDir);
    int dominant_ok = 0, order_ok = 0;
    for (int s = 0; s < 20; ++s) {
        auto inst = synthetic::generate(p, 1000 + static_cast<std::uint64_t>(s));
        irl::LearnConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(s);
        auto r = irl::learn(inst.episode, p, irl::default_basis(), cfg);
        bool all = true;
        for (Eigen::Index i = 0; i < r.theta.rows(); ++i) {
            Eigen::Index q = 0;
            r.theta.row(i).cwiseAbs().maxCoeff(&q);
            all = all && static_cast<std::size_t>(q) == inst.dominant[static_cast<std::size_t>(i)];
        }
        dominant_ok += all;
        order_ok += (r.importance[0] > r.importance[1]) == (inst.truth.importance[0] > inst.truth.importance[1]);
    }
    const bool ok = dominant_ok >= 18 && order_ok >= 16;
    return {ok ? Status::kPass : Status::kFail, "dominant basis " + std::to_string(dominant_ok) +
                                                    "/20 (need 18), importance order " + std::to_string(order_ok) +
                                                    "/20 (need 16)"};
}

// ---------------------------------------------------------------------------
// 8. fit round trip

Outcome fit_roundtrip() {
    SocialGraph g = load_graph(kDataDir + "/twitter9.graph");
    const auto truth = synthetic::roundtrip_truth(g.num_humans());
    const DiffusionParams p = truth.build(g);
    double worst_alpha = 0.0, worst_d = 0.0, worst_loss = 0.0;
    const int instances = 5;
    for (int s = 0; s < instances; ++s) {
        Series series = synthetic::roundtrip_series(p, 100 + static_cast<std::uint64_t>(s));
        fitting::FitConfig cfg;
        cfg.base = truth;
        cfg.seed = static_cast<std::uint64_t>(s) + 1;
        auto r = fitting::fit(series, g, cfg);
        for (double a : r.model.alpha) worst_alpha = std::max(worst_alpha, std::abs(a - 1.0));
        worst_d = std::max(worst_d, std::abs(r.model.d - 6.01));
        worst_loss = std::max(worst_loss, r.loss);
    }
    const bool ok = worst_alpha <= 0.05 && worst_d <= 0.5 && worst_loss < 1e-10;
    return {ok ? Status::kPass : Status::kFail, std::to_string(instances) + " series of 18 rows; max |alpha - 1| " +
                                                    fmt("%.1e", worst_alpha) + ", |d - 6.01| " + fmt("%.1e", worst_d) +
                                                    ", loss " + fmt("%.1e", worst_loss)};
}

// ---------------------------------------------------------------------------
// 9. reproduction on the encoded dataset (optional)

Outcome dataset_reproduction() {
    return {Status::kSkip, "optional; no encoded dataset fixture is available"};
}

struct Criterion {
    int id;
    const char* title;
    bool optional;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {1, "bias axiom suite", false, bias_axioms},
        {2, "baseline failure reproduction", false, baseline_failures},
        {3, "dynamics boundedness and stochasticity", false, dynamics_bounds},
        {4, "likelihood integral identity", false, likelihood_identity},
        {5, "derivative oracles", false, derivative_oracles},
        {6, "constraint satisfaction", false, learn_constraints},
        {7, "synthetic recovery", false, synthetic_recovery},
        {8, "fit round trip", false, fit_roundtrip},
        {9, "dataset reproduction", true, dataset_reproduction},
    };
    std::set<int> only;
    for (int a = 1; a < argc; ++a) only.insert(std::atoi(argv[a]));

    int failures = 0;
    for (const auto& c : all) {
        if (!only.empty() && !only.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {Status::kFail, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const char* tag = o.status == Status::kPass ? "PASS" : o.status == Status::kFail ? "FAIL" : "SKIP";
        std::printf("[%s] criterion %d %s: %s (%.1f s)\n", tag, c.id, c.title, o.detail.c_str(), secs);
        std::fflush(stdout);
        if (o.status == Status::kFail && !c.optional) ++failures;
    }
    std::printf("%d required criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
