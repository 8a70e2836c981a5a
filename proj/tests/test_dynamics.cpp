#include <doctest.h>

#include <cmath>
#include <random>

#include "memirl/dynamics.hpp"
#include "oracles.hpp"

using namespace memirl;

namespace {

SocialGraph fixture() { return load_graph(std::string(MEMIRL_DATA_DIR) + "/twitter9.graph"); }

DiffusionParams paper_params(const SocialGraph& g) {
    DiffusionParams p;
    p.graph = g;
    const double alpha[] = {1.8, 2.2, 1.4, 2.2, 0.2, 1.0, 2.2};
    for (std::size_t i = 0; i < g.num_humans(); ++i) {
        p.bias.push_back(bias::tanh_power_model(alpha[i % 7]));
        p.memory.push_back(MemoryKernel{6.01, 2});
    }
    return p;
}

oracle::Model to_oracle(const DiffusionParams& p) {
    oracle::Model m;
    m.humans = static_cast<int>(p.graph.num_humans());
    m.targets = static_cast<int>(p.graph.num_targets());
    for (std::size_t i = 0; i < p.graph.num_humans(); ++i) {
        std::vector<int> in;
        for (auto j : p.graph.in_neighbors(i)) in.push_back(static_cast<int>(j));
        m.in.push_back(in);
        m.alpha.push_back(p.bias[i].alpha);
    }
    m.d = p.memory[0].d;
    m.tau = p.memory[0].tau;
    m.inclusive = p.window == MemoryWindow::kInclusive;
    m.s = p.s;
    m.innate = p.use_innate;
    m.anchor = p.innate_anchor;
    if (p.surround_override) {
        m.has_override = true;
        m.override_value = *p.surround_override;
    }
    return m;
}

oracle::Rows rows_of(const std::vector<Vec>& v) {
    oracle::Rows out;
    for (const auto& x : v) out.emplace_back(x.data(), x.data() + x.size());
    return out;
}

Vec random_vec(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Vec v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = U(rng);
    return v;
}

}  // namespace

TEST_CASE("memory weights") {
    MemoryKernel m{6.01, 2};
    CHECK(memory_weight(m, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(memory_weight(MemoryKernel{0.3, 2}, 1) == doctest::Approx(0.693147).epsilon(1e-6));
    CHECK(memory_weight(m, 2) == doctest::Approx(std::log(std::pow(2.0, -6.01) + 1)).epsilon(1e-15));
    CHECK(memory_weight(m, 2) == doctest::Approx(0.0153979115880144).epsilon(1e-13));
    CHECK(memory_weight(MemoryKernel{200.0, 2}, 2) < 1e-60);
    CHECK_THROWS_AS(memory_weight(m, 0), std::out_of_range);
    CHECK_THROWS_AS(memory_weight(m, 4), std::out_of_range);
    for (double d : {0.01, 0.5, 1.0, 6.01, 19.0}) {
        MemoryKernel k{d, 5};
        for (int a = 1; a < 6; ++a) CHECK(memory_weight(k, a) > memory_weight(k, a + 1));
    }
    CHECK(memory_weights(m, MemoryWindow::kInclusive).size() == 3);
    CHECK(memory_weights(m, MemoryWindow::kHorizonOnly).size() == 2);
}

TEST_CASE("sensed self expectation") {
    std::vector<double> constant{0.3, 0.3, 0.3};
    CHECK(sensed_self_expectation(constant, MemoryKernel{2.0, 2}) == doctest::Approx(0.3));
    std::vector<double> h{0.0, 1.0};
    double w1 = std::log(2.0), w2 = std::log(std::pow(2.0, -6.01) + 1);
    CHECK(sensed_self_expectation(h, MemoryKernel{6.01, 1}) == doctest::Approx(w1 / (w1 + w2)).epsilon(1e-14));
    CHECK(sensed_self_expectation(h, MemoryKernel{6.01, 1}) == doctest::Approx(0.9782682686555128).epsilon(1e-13));
    std::vector<double> flat{1.0, 1.0};
    CHECK(sensed_self_expectation(h, flat) == doctest::Approx(0.5));
    // bootstrap: a single remembered point
    std::vector<double> one{-0.4};
    CHECK(sensed_self_expectation(one, MemoryKernel{1.0, 3}) == doctest::Approx(-0.4));
    CHECK_THROWS_AS(sensed_self_expectation(std::vector<double>{}, flat), std::invalid_argument);
}

TEST_CASE("sensed surround expectation") {
    std::vector<double> mw{0.7, 0.2, 0.1};
    InfluenceRow two{{0, 1}, {0.5, 0.5}, 0.0};
    std::vector<Vec> states(3, Vec::Zero(2));
    for (auto& s : states) s << 1.0, -1.0;
    std::vector<const InfluenceRow*> rows(3, &two);
    CHECK(*sensed_surround_expectation(states, rows, mw) == doctest::Approx(0.0));

    std::vector<Vec> constant(3, Vec::Constant(2, 0.35));
    CHECK(*sensed_surround_expectation(constant, rows, mw) == doctest::Approx(0.35));

    InfluenceRow single{{1}, {0.4}, 0.6};
    std::vector<Vec> seq{Vec(2), Vec(2), Vec(2)};
    seq[0] << 0.0, 0.2;
    seq[1] << 0.0, -0.6;
    seq[2] << 0.0, 0.9;
    std::vector<const InfluenceRow*> srows(3, &single);
    std::vector<double> neighbor{0.2, -0.6, 0.9};
    CHECK(*sensed_surround_expectation(seq, srows, mw) == doctest::Approx(sensed_self_expectation(neighbor, mw)));

    InfluenceRow empty{{}, {}, 1.0};
    std::vector<const InfluenceRow*> erows(3, &empty);
    CHECK_FALSE(sensed_surround_expectation(seq, erows, mw).has_value());
    std::vector<const InfluenceRow*> short_rows(2, &two);
    CHECK_THROWS_AS(sensed_surround_expectation(seq, short_rows, mw), std::invalid_argument);
    std::vector<const InfluenceRow*> null_rows{&two, nullptr, &two};
    CHECK_THROWS_AS(sensed_surround_expectation(seq, null_rows, mw), std::invalid_argument);
}

TEST_CASE("influence rows") {
    auto p = paper_params(fixture());
    Vec z = Vec::Constant(9, 0.25);
    auto row = influence_row(p, 0, z, 0.1, -1.0);
    CHECK(row.resistance == 0.0);
    CHECK(row.total() == doctest::Approx(1.0).epsilon(1e-15));
    for (double c : row.weights) CHECK(c == doctest::Approx(row.weights[0]));

    Vec mixed(9);
    mixed << 0.3, -0.2, 0.8, -0.9, 0.1, 0.0, 0.5, -1.0, 1.0;
    for (std::size_t i = 0; i < 7; ++i) {
        auto r = influence_row(p, i, mixed, mixed[i], -1.0);
        CHECK(std::abs(r.total() - 1.0) <= 1e-12);
        for (double c : r.weights) CHECK(c > 0.0);
    }

    auto iso = parse_graph("n=2 targets=2\n");
    DiffusionParams q;
    q.graph = iso;
    q.bias = {bias::tanh_power_model(1.0)};
    q.memory = {MemoryKernel{1.0, 1}};
    q.s = {0.42};
    q.use_innate = true;
    auto ir = influence_row(q, 0, Vec::Zero(2), 0.0, 0.0);
    CHECK(ir.sources.empty());
    CHECK(ir.resistance == 1.0);
    History h{{Vec::Constant(1, -0.3)}, {}};
    StepCache cache;
    CHECK(step(q, h, cache, Vec::Constant(1, 0.9))[0] == 0.42);
    q.use_innate = false;
    q.s.clear();
    History h2{{Vec::Constant(1, -0.3)}, {}};
    StepCache cache2;
    CHECK(step(q, h2, cache2, Vec::Constant(1, 0.9))[0] == -0.3);
}

TEST_CASE("consensus is a fixed point") {
    auto p = paper_params(fixture());
    History h{{Vec::Constant(7, 0.6), Vec::Constant(7, 0.6)}, {Vec::Constant(2, 0.6)}};
    std::vector<Vec> u(5, Vec::Constant(2, 0.6));
    auto traj = simulate(p, h, u);
    REQUIRE(traj.length() == 5);
    for (const auto& x : traj.x) CHECK((x.array() - 0.6).abs().maxCoeff() < 1e-15);

    p.use_innate = true;
    p.s.assign(7, 0.6);
    auto t2 = simulate(p, h, u);
    for (const auto& x : t2.x) CHECK((x.array() - 0.6).abs().maxCoeff() < 1e-15);
}

TEST_CASE("empty action sequence gives an empty trajectory") {
    auto p = paper_params(fixture());
    History h{{Vec::Constant(7, 0.1)}, {}};
    auto traj = simulate(p, h, std::vector<Vec>{});
    CHECK(traj.length() == 0);
    CHECK(traj.start_time == 0);
}

TEST_CASE("step matches a straight-line oracle") {
    std::mt19937_64 rng(2024);
    auto g = fixture();
    for (int trial = 0; trial < 40; ++trial) {
        auto p = paper_params(g);
        std::uniform_real_distribution<double> A(0.1, 3.0), D(0.5, 10.0);
        for (auto& b : p.bias) b = bias::tanh_power_model(A(rng));
        double d = D(rng);
        int tau = 1 + trial % 3;
        for (auto& m : p.memory) m = MemoryKernel{d, tau};
        p.window = trial % 2 ? MemoryWindow::kHorizonOnly : MemoryWindow::kInclusive;
        if (trial % 4 == 1) p.surround_override = -1.0;
        if (trial % 5 == 2) {
            p.use_innate = true;
            for (int i = 0; i < 7; ++i) {
                p.s.push_back(random_vec(rng, 1)[0]);
                p.innate_anchor.push_back(std::abs(random_vec(rng, 1)[0]) * 3);
            }
        }
        History h;
        std::size_t past = 1 + static_cast<std::size_t>(trial % 3);
        for (std::size_t t = 0; t < past; ++t) h.x.push_back(random_vec(rng, 7));
        for (std::size_t t = 0; t + 1 < past; ++t) h.u.push_back(random_vec(rng, 2));
        std::vector<Vec> u;
        for (int t = 0; t < 18; ++t) u.push_back(random_vec(rng, 2));

        auto sim = simulate_with_cache(p, h, u);
        auto expect = oracle::simulate(to_oracle(p), rows_of(h.x), rows_of(h.u), rows_of(u));
        REQUIRE(expect.size() == sim.trajectory.length());
        double err = 0;
        for (std::size_t t = 0; t < expect.size(); ++t) {
            for (int i = 0; i < 7; ++i) err = std::max(err, std::abs(expect[t][i] - sim.trajectory.x[t][i]));
        }
        CHECK(err <= 1e-12);
        CHECK(sim.cache.steps.size() == past - 1 + 18);
    }
}

TEST_CASE("simulate is bounded, stochastic and deterministic") {
    std::mt19937_64 rng(99);
    auto p = paper_params(fixture());
    History h{{random_vec(rng, 7)}, {}};
    std::vector<Vec> u;
    for (int t = 0; t < 18; ++t) u.push_back(random_vec(rng, 2));
    auto a = simulate_with_cache(p, h, u);
    auto b = simulate_with_cache(p, h, u);
    for (std::size_t t = 0; t < 18; ++t) {
        CHECK(a.trajectory.x[t] == b.trajectory.x[t]);
        CHECK(a.trajectory.x[t].cwiseAbs().maxCoeff() <= 1.0);
    }
    for (const auto& rows : a.cache.steps) {
        for (const auto& r : rows) CHECK(std::abs(r.total() - 1.0) <= 1e-12);
    }
}

TEST_CASE("dimension and parameter validation") {
    auto p = paper_params(fixture());
    History h{{Vec::Zero(7)}, {}};
    std::vector<Vec> bad{Vec::Zero(3)};
    CHECK_THROWS_AS(simulate(p, h, bad), std::invalid_argument);
    History wrong{{Vec::Zero(6)}, {}};
    CHECK_THROWS_AS(simulate(p, wrong, std::vector<Vec>{}), std::invalid_argument);
    History none;
    CHECK_THROWS_AS(simulate(p, none, std::vector<Vec>{}), std::invalid_argument);
    auto q = p;
    q.s.assign(7, 1.5);
    CHECK_THROWS_AS(q.validate(), std::invalid_argument);
    q = p;
    q.memory[0].d = 0.0;
    CHECK_THROWS_AS(q.validate(), std::invalid_argument);
    q = p;
    q.bias.pop_back();
    CHECK_THROWS_AS(q.validate(), std::invalid_argument);
}
