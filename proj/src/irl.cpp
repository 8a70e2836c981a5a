#include "memirl/irl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <stdexcept>

namespace memirl::irl {

StackedSample stack(const Trajectory& traj) {
    if (traj.length() == 0) throw std::invalid_argument("stack: empty trajectory");
    if (traj.u.size() != traj.x.size()) throw std::invalid_argument("stack: x and u row counts differ");
    StackedSample s;
    s.length = traj.length();
    s.humans = static_cast<std::size_t>(traj.x[0].size());
    s.targets = static_cast<std::size_t>(traj.u[0].size());
    s.x.resize(static_cast<Eigen::Index>(s.length * s.humans));
    s.u.resize(static_cast<Eigen::Index>(s.length * s.targets));
    for (std::size_t t = 0; t < s.length; ++t) {
        if (static_cast<std::size_t>(traj.x[t].size()) != s.humans ||
            static_cast<std::size_t>(traj.u[t].size()) != s.targets) {
            throw std::invalid_argument("stack: ragged trajectory rows");
        }
        s.x.segment(static_cast<Eigen::Index>(t * s.humans), static_cast<Eigen::Index>(s.humans)) = traj.x[t];
        s.u.segment(static_cast<Eigen::Index>(t * s.targets), static_cast<Eigen::Index>(s.targets)) = traj.u[t];
    }
    return s;
}

Trajectory unstack(const StackedSample& s, long start_time) {
    Trajectory t;
    t.start_time = start_time;
    for (std::size_t k = 0; k < s.length; ++k) {
        t.x.push_back(s.x.segment(static_cast<Eigen::Index>(k * s.humans), static_cast<Eigen::Index>(s.humans)));
        t.u.push_back(s.u.segment(static_cast<Eigen::Index>(k * s.targets), static_cast<Eigen::Index>(s.targets)));
    }
    return t;
}

std::string Basis::id() const {
    switch (kind) {
        case BasisKind::kSteerPositive: return "steer_pos";
        case BasisKind::kSteerNegative: return "steer_neg";
        case BasisKind::kSteerNeutral: return "steer_neutral";
        case BasisKind::kStubbornSelf: return "stubborn_self";
        case BasisKind::kStubbornTarget: return "stubborn:" + std::to_string(target + 1);
    }
    return "?";
}

Basis Basis::parse(const std::string& id) {
    if (id == "steer_pos") return {BasisKind::kSteerPositive, 0};
    if (id == "steer_neg") return {BasisKind::kSteerNegative, 0};
    if (id == "steer_neutral") return {BasisKind::kSteerNeutral, 0};
    if (id == "stubborn_self") return {BasisKind::kStubbornSelf, 0};
    if (id.rfind("stubborn:", 0) == 0) {
        std::string num = id.substr(9);
        std::size_t pos = 0;
        long k = 0;
        try {
            k = std::stol(num, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos == num.size() && !num.empty() && k >= 1) return {BasisKind::kStubbornTarget, static_cast<std::size_t>(k - 1)};
    }
    throw std::invalid_argument("unknown basis id '" + id + "'");
}

std::vector<Basis> default_basis() {
    return {{BasisKind::kSteerPositive, 0},
            {BasisKind::kSteerNegative, 0},
            {BasisKind::kSteerNeutral, 0},
            {BasisKind::kStubbornSelf, 0}};
}

namespace {

std::size_t stubborn_target(const Basis& b, const StackedSample& s, std::size_t owner) {
    std::size_t q = b.kind == BasisKind::kStubbornSelf ? owner : b.target;
    if (q >= s.targets) throw std::invalid_argument("basis " + b.id() + " names a target outside the graph");
    return q;
}

bool is_stubborn(const Basis& b) {
    return b.kind == BasisKind::kStubbornSelf || b.kind == BasisKind::kStubbornTarget;
}

double steer_offset(BasisKind k) {
    switch (k) {
        case BasisKind::kSteerPositive: return 1.0;   // (1 - x)^2 = (x - 1)^2
        case BasisKind::kSteerNegative: return -1.0;  // (1 + x)^2
        default: return 0.0;
    }
}

}  // namespace

double basis_cost(const Basis& b, const StackedSample& s, std::size_t owner) {
    if (owner >= s.targets) throw std::invalid_argument("basis_cost: owner is not a target");
    if (is_stubborn(b)) {
        std::size_t q = stubborn_target(b, s, owner);
        double c = 0.0;
        for (std::size_t t = 1; t < s.length; ++t) {
            double dlt = s.u_at(t, q) - s.u_at(t - 1, q);
            c += dlt * dlt;
        }
        return c;
    }
    const double o = steer_offset(b.kind);
    return (s.x.array() - o).square().sum();
}

void CostSpec::validate(double tol) const {
    if (basis.empty()) throw std::invalid_argument("cost spec needs at least one basis");
    if (static_cast<std::size_t>(theta.cols()) != basis.size() || theta.rows() != importance.size()) {
        throw std::invalid_argument("cost spec dimensions disagree");
    }
    for (Eigen::Index i = 0; i < theta.rows(); ++i) {
        double l1 = theta.row(i).cwiseAbs().sum();
        if (std::abs(l1 - 1.0) > tol) throw std::invalid_argument("theta row must have unit L1 norm");
    }
    if ((importance.array() < -tol).any() || std::abs(importance.sum() - 1.0) > tol) {
        throw std::invalid_argument("importance must lie on the simplex");
    }
}

double target_cost(const CostSpec& spec, const StackedSample& s, std::size_t i) {
    double r = 0.0;
    for (std::size_t q = 0; q < spec.p(); ++q) {
        r += spec.theta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q)) * basis_cost(spec.basis[q], s, i);
    }
    return r;
}

double joint_cost(const CostSpec& spec, const StackedSample& s) {
    spec.validate();
    if (static_cast<std::size_t>(spec.importance.size()) != s.targets) {
        throw std::invalid_argument("joint_cost: importance size differs from target count");
    }
    double r = 0.0;
    for (std::size_t i = 0; i < s.targets; ++i) r += spec.importance[static_cast<Eigen::Index>(i)] * target_cost(spec, s, i);
    return r;
}

Partials Partials::zero(std::size_t nx, std::size_t nu) {
    auto x = static_cast<Eigen::Index>(nx), u = static_cast<Eigen::Index>(nu);
    return Partials{Vec::Zero(x), Vec::Zero(u), Mat::Zero(x, x), Mat::Zero(u, u), Mat::Zero(x, u)};
}

Partials& Partials::add(double w, const Partials& o) {
    gx += w * o.gx;
    gu += w * o.gu;
    hxx += w * o.hxx;
    huu += w * o.huu;
    hxu += w * o.hxu;
    return *this;
}

Partials basis_partials(const Basis& b, const StackedSample& s, std::size_t owner) {
    if (owner >= s.targets) throw std::invalid_argument("basis_partials: owner is not a target");
    Partials P = Partials::zero(static_cast<std::size_t>(s.x.size()), static_cast<std::size_t>(s.u.size()));
    if (is_stubborn(b)) {
        std::size_t q = stubborn_target(b, s, owner);
        for (std::size_t t = 1; t < s.length; ++t) {
            auto a = static_cast<Eigen::Index>(t * s.targets + q);
            auto p = static_cast<Eigen::Index>((t - 1) * s.targets + q);
            double dlt = s.u[a] - s.u[p];
            P.gu[a] += 2 * dlt;
            P.gu[p] -= 2 * dlt;
            P.huu(a, a) += 2;
            P.huu(p, p) += 2;
            P.huu(a, p) -= 2;
            P.huu(p, a) -= 2;
        }
        return P;
    }
    P.gx = 2.0 * (s.x.array() - steer_offset(b.kind)).matrix();
    P.hxx.diagonal().setConstant(2.0);
    return P;
}

Partials cost_partials(const CostSpec& spec, const StackedSample& s, std::size_t i) {
    Partials P = Partials::zero(static_cast<std::size_t>(s.x.size()), static_cast<std::size_t>(s.u.size()));
    for (std::size_t q = 0; q < spec.p(); ++q) {
        P.add(spec.theta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q)), basis_partials(spec.basis[q], s, i));
    }
    return P;
}

Mat jacobian_x_u(const DiffusionParams& p, const History& history, std::span<const Vec> u, double step) {
    if (u.empty()) throw std::invalid_argument("jacobian_x_u: empty action window");
    const auto nh = static_cast<Eigen::Index>(p.graph.num_humans());
    const auto nt = static_cast<Eigen::Index>(p.graph.num_targets());
    const auto l = static_cast<Eigen::Index>(u.size());
    Mat J = Mat::Zero(l * nh, l * nt);
    std::vector<Vec> plus(u.begin(), u.end()), minus(u.begin(), u.end());
    for (Eigen::Index t = 0; t < l; ++t) {
        for (Eigen::Index q = 0; q < nt; ++q) {
            plus[static_cast<std::size_t>(t)][q] += step;
            minus[static_cast<std::size_t>(t)][q] -= step;
            auto xp = simulate(p, history, plus).x;
            auto xm = simulate(p, history, minus).x;
            plus[static_cast<std::size_t>(t)][q] = u[static_cast<std::size_t>(t)][q];
            minus[static_cast<std::size_t>(t)][q] = u[static_cast<std::size_t>(t)][q];
            // rows before t do not see u(t) and come out bitwise equal
            for (Eigen::Index r = t; r < l; ++r) {
                J.block(r * nh, t * nt + q, nh, 1) =
                    (xp[static_cast<std::size_t>(r)] - xm[static_cast<std::size_t>(r)]) / (2 * step);
            }
        }
    }
    return J;
}

namespace {

void check_jacobian(const StackedSample& s, const Mat& jac) {
    if (jac.rows() != s.x.size() || jac.cols() != s.u.size()) {
        throw std::invalid_argument("Jacobian dimensions do not match the stacked sample");
    }
}

// Hessian of one cost under a constant Jacobian, symmetrized.
Mat assemble_hessian(const Partials& P, const Mat& J) {
    Mat H = P.huu + J.transpose() * P.hxx * J + J.transpose() * P.hxu + P.hxu.transpose() * J;
    return 0.5 * (H + H.transpose());
}

}  // namespace

LikelihoodParts gradient_and_hessian(const CostSpec& spec, const StackedSample& s, const Mat& jac) {
    spec.validate();
    check_jacobian(s, jac);
    if (static_cast<std::size_t>(spec.importance.size()) != s.targets) {
        throw std::invalid_argument("gradient_and_hessian: importance size differs from target count");
    }
    LikelihoodParts out;
    out.h = Vec::Zero(s.u.size());
    out.H = Mat::Zero(s.u.size(), s.u.size());
    for (std::size_t i = 0; i < s.targets; ++i) {
        const double a = spec.importance[static_cast<Eigen::Index>(i)];
        Partials P = cost_partials(spec, s, i);
        out.h += a * (P.gu + jac.transpose() * P.gx);
        out.H += a * assemble_hessian(P, jac);
    }
    out.H = 0.5 * (out.H + out.H.transpose());
    out.varpi = out.h - out.H * s.u;
    out.jac = jac;
    return out;
}

LikelihoodParts gradient_and_hessian(const CostSpec& spec, const DiffusionParams& p, const Episode& e) {
    StackedSample s = stack(e.window);
    return gradient_and_hessian(spec, s, jacobian_x_u(p, e.history, e.window.u));
}

double log_partition_term(double w) {
    const double a = std::abs(w);
    if (a < 1e-6) return std::log(0.5) - w * w / 6.0;
    return std::log(a) - (a + std::log1p(-std::exp(-2.0 * a)));
}

double log_partition_slope(double w) {
    const double a = std::abs(w);
    if (a < 1e-4) return -w / 3.0 + w * w * w / 45.0;
    // 1/w - coth(w), with coth written to avoid overflow
    const double e = std::exp(-2.0 * a);
    const double coth = (1.0 + e) / (1.0 - e);
    return (w > 0 ? 1.0 : -1.0) * (1.0 / a - coth);
}

double log_likelihood(const Vec& h, const Mat& H, const Vec& u) {
    if (h.size() != u.size() || H.rows() != u.size() || H.cols() != u.size()) {
        throw std::invalid_argument("log_likelihood: dimension mismatch");
    }
    Vec varpi = h - H * u;
    double L = -0.5 * u.dot(H * u) + u.dot(h);
    for (Eigen::Index i = 0; i < varpi.size(); ++i) L += log_partition_term(varpi[i]);
    if (!std::isfinite(L)) throw std::runtime_error("log_likelihood: non-finite value");
    return L;
}

double log_likelihood(const CostSpec& spec, const DiffusionParams& p, const Episode& e) {
    auto parts = gradient_and_hessian(spec, p, e);
    return log_likelihood(parts.h, parts.H, stack(e.window).u);
}

LikelihoodModel LikelihoodModel::build(const std::vector<Basis>& basis, const StackedSample& s, const Mat& jac) {
    if (basis.empty()) throw std::invalid_argument("likelihood model needs at least one basis");
    check_jacobian(s, jac);
    LikelihoodModel m;
    m.basis = basis;
    m.targets = s.targets;
    const auto nw = static_cast<Eigen::Index>(s.targets * basis.size());
    m.lin = Vec::Zero(nw);
    m.V = Mat::Zero(s.u.size(), nw);
    for (std::size_t i = 0; i < s.targets; ++i) {
        for (std::size_t q = 0; q < basis.size(); ++q) {
            Partials P = basis_partials(basis[q], s, i);
            Vec h = P.gu + jac.transpose() * P.gx;
            Mat H = assemble_hessian(P, jac);
            auto col = static_cast<Eigen::Index>(i * basis.size() + q);
            m.lin[col] = s.u.dot(h) - 0.5 * s.u.dot(H * s.u);
            m.V.col(col) = h - H * s.u;
        }
    }
    return m;
}

double LikelihoodModel::value_w(const Vec& w) const {
    Vec varpi = V * w;
    double L = lin.dot(w);
    for (Eigen::Index i = 0; i < varpi.size(); ++i) L += log_partition_term(varpi[i]);
    return L;
}

Vec LikelihoodModel::gradient_w(const Vec& w) const {
    Vec varpi = V * w;
    Vec slope(varpi.size());
    for (Eigen::Index i = 0; i < varpi.size(); ++i) slope[i] = log_partition_slope(varpi[i]);
    return lin + V.transpose() * slope;
}

namespace {

Vec to_w(const Vec& a, const Mat& theta) {
    Vec w(theta.size());
    for (Eigen::Index i = 0; i < theta.rows(); ++i) {
        for (Eigen::Index q = 0; q < theta.cols(); ++q) w[i * theta.cols() + q] = a[i] * theta(i, q);
    }
    return w;
}

}  // namespace

double LikelihoodModel::value(const Vec& importance, const Mat& theta) const {
    return value_w(to_w(importance, theta));
}

Vec project_simplex(const Vec& v) {
    const Eigen::Index n = v.size();
    if (n == 0) throw std::invalid_argument("project_simplex: empty vector");
    std::vector<double> sorted(v.data(), v.data() + n);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cum = 0.0, shift = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        cum += sorted[static_cast<std::size_t>(k)];
        double cand = (cum - 1.0) / static_cast<double>(k + 1);
        if (sorted[static_cast<std::size_t>(k)] - cand > 0) shift = cand;
    }
    Vec out = (v.array() - shift).max(0.0).matrix();
    // renormalize away rounding so the sum is 1 to machine precision
    double s = out.sum();
    if (s > 0) out /= s;
    return out;
}

namespace {

struct Point {
    Vec a;
    Mat theta;
};

// Tangent ascent direction of theta row on the L1 sphere. Zero coordinates
// stay frozen unless moving into them beats the current exchange rate.
Vec sphere_direction(const Eigen::Ref<const Vec>& theta, const Vec& g, double freeze) {
    const Eigen::Index p = theta.size();
    Vec sigma = Vec::Zero(p);
    double sum = 0.0;
    int active = 0;
    for (Eigen::Index q = 0; q < p; ++q) {
        if (std::abs(theta[q]) > freeze) {
            sigma[q] = theta[q] > 0 ? 1.0 : -1.0;
            sum += sigma[q] * g[q];
            ++active;
        }
    }
    const double lambda = active ? sum / active : 0.0;
    for (Eigen::Index q = 0; q < p; ++q) {
        if (sigma[q] == 0.0 && std::abs(g[q]) > lambda + 1e-12) {
            sigma[q] = g[q] > 0 ? 1.0 : -1.0;
            sum += sigma[q] * g[q];
            ++active;
        }
    }
    const double mu = active ? sum / active : 0.0;
    Vec d = Vec::Zero(p);
    for (Eigen::Index q = 0; q < p; ++q) {
        if (sigma[q] != 0.0) d[q] = g[q] - mu * sigma[q];
    }
    return d;
}

// Moves theta row along d and maps it back onto the L1 sphere. Coordinates
// that cross zero are clamped there.
Vec retract(const Vec& theta, const Vec& d, double eta, double freeze) {
    Vec t = theta + eta * d;
    for (Eigen::Index q = 0; q < t.size(); ++q) {
        if (std::abs(theta[q]) > freeze && t[q] * theta[q] < 0) t[q] = 0.0;
        if (std::abs(t[q]) <= freeze) t[q] = 0.0;
    }
    double l1 = t.cwiseAbs().sum();
    if (!(l1 > 0)) return theta;
    return t / l1;
}

struct Run {
    Point best;
    double L = 0;
    double L0 = 0;
    std::size_t iterations = 0;
    bool capped = false;
};

Run ascend(const LikelihoodModel& m, Point x, const LearnConfig& cfg) {
    const auto T = static_cast<Eigen::Index>(m.targets);
    const auto p = static_cast<Eigen::Index>(m.basis.size());
    Run run;
    double L = m.value(x.a, x.theta);
    run.L0 = L;
    double eta = 1.0;
    std::size_t it = 0;
    for (; it < cfg.max_iterations; ++it) {
        Vec gw = m.gradient_w(to_w(x.a, x.theta));
        Vec ga(T);
        Mat dtheta = Mat::Zero(T, p);
        for (Eigen::Index i = 0; i < T; ++i) {
            Vec gi = gw.segment(i * p, p);
            ga[i] = x.theta.row(i).dot(gi);
            dtheta.row(i) = sphere_direction(x.theta.row(i).transpose(), x.a[i] * gi, cfg.freeze_threshold);
        }
        bool accepted = false;
        Point y;
        double Ly = L;
        eta = std::min(eta * 2.0, 1e6);
        for (int bt = 0; bt < 80; ++bt, eta *= 0.5) {
            y.a = project_simplex(x.a + eta * ga);
            y.theta.resize(T, p);
            for (Eigen::Index i = 0; i < T; ++i) {
                y.theta.row(i) = retract(x.theta.row(i).transpose(), dtheta.row(i).transpose(), eta,
                                         cfg.freeze_threshold);
            }
            Ly = m.value(y.a, y.theta);
            if (std::isfinite(Ly) && Ly > L) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        double step = std::sqrt((y.a - x.a).squaredNorm() + (y.theta - x.theta).squaredNorm());
        double scale = std::max(1.0, std::sqrt(x.a.squaredNorm() + x.theta.squaredNorm()));
        double change = (Ly - L) / std::max(1.0, std::abs(L));
        x = std::move(y);
        L = Ly;
        if (change < cfg.tolerance || step / scale < cfg.tolerance) {
            ++it;
            break;
        }
    }
    run.iterations = it;
    run.capped = it >= cfg.max_iterations;
    run.best = std::move(x);
    run.L = L;
    return run;
}

Point initial_point(std::size_t restart, Eigen::Index T, Eigen::Index p, std::mt19937_64& rng) {
    Point x;
    if (restart < 2) {
        x.a = Vec::Constant(T, 1.0 / static_cast<double>(T));
        x.theta = Mat::Constant(T, p, (restart == 0 ? 1.0 : -1.0) / static_cast<double>(p));
        return x;
    }
    std::exponential_distribution<double> ex(1.0);
    std::normal_distribution<double> nd(0.0, 1.0);
    x.a.resize(T);
    for (Eigen::Index i = 0; i < T; ++i) x.a[i] = ex(rng);
    x.a /= x.a.sum();
    x.theta.resize(T, p);
    for (Eigen::Index i = 0; i < T; ++i) {
        for (Eigen::Index q = 0; q < p; ++q) x.theta(i, q) = nd(rng);
        x.theta.row(i) /= x.theta.row(i).cwiseAbs().sum();
    }
    return x;
}

}  // namespace

LearnResult learn(const LikelihoodModel& model, const LearnConfig& cfg) {
    if (model.targets == 0) throw std::invalid_argument("learn: no targets");
    if (cfg.restarts == 0) throw std::invalid_argument("learn: need at least one restart");
    const auto T = static_cast<Eigen::Index>(model.targets);
    const auto p = static_cast<Eigen::Index>(model.basis.size());
    std::seed_seq seq{cfg.seed & 0xffffffffu, cfg.seed >> 32, std::uint64_t{0x1ea2}};
    std::mt19937_64 rng(seq);

    LearnResult res;
    res.basis = model.basis;
    res.restarts = cfg.restarts;
    bool have = false;
    bool best_capped = false;
    for (std::size_t r = 0; r < cfg.restarts; ++r) {
        Run run = ascend(model, initial_point(r, T, p, rng), cfg);
        res.restart_loglik.push_back(run.L);
        res.initial_loglik.push_back(run.L0);
        res.iterations.push_back(run.iterations);
        if (!have || run.L > res.loglik) {
            have = true;
            res.loglik = run.L;
            res.importance = run.best.a;
            res.theta = run.best.theta;
            res.best_restart = r;
            best_capped = run.capped;
        }
    }
    res.warning = best_capped;
    return res;
}

LearnResult learn(const Episode& e, const DiffusionParams& p, const std::vector<Basis>& basis,
                  const LearnConfig& cfg) {
    if (e.window.length() < 2) throw std::invalid_argument("learn: window length must be at least 2");
    StackedSample s = stack(e.window);
    Mat jac = jacobian_x_u(p, e.history, e.window.u);
    auto model = LikelihoodModel::build(basis, s, jac);
    auto res = learn(model, cfg);
    res.formulas = render_formulas(basis, res.theta, p.graph.num_humans() + 1);
    return res;
}

std::vector<std::string> render_formulas(const std::vector<Basis>& basis, const Mat& theta,
                                         std::size_t first_target_node) {
    std::vector<std::string> out;
    for (Eigen::Index i = 0; i < theta.rows(); ++i) {
        const std::size_t node = first_target_node + static_cast<std::size_t>(i);
        std::string f = "r_" + std::to_string(node) + "(x,u) =";
        bool any = false;
        for (std::size_t q = 0; q < basis.size(); ++q) {
            double c = theta(i, static_cast<Eigen::Index>(q));
            if (std::abs(c) < 5e-5) continue;
            std::string term;
            switch (basis[q].kind) {
                case BasisKind::kSteerPositive: term = "sum_t sum_j (1 - x_j(t))^2"; break;
                case BasisKind::kSteerNegative: term = "sum_t sum_j (1 + x_j(t))^2"; break;
                case BasisKind::kSteerNeutral: term = "sum_t sum_j x_j(t)^2"; break;
                case BasisKind::kStubbornSelf:
                case BasisKind::kStubbornTarget: {
                    std::size_t k = basis[q].kind == BasisKind::kStubbornSelf ? node : first_target_node + basis[q].target;
                    std::string u = "u_" + std::to_string(k);
                    term = "sum_t (" + u + "(t) - " + u + "(t-1))^2";
                    break;
                }
            }
            char num[32];
            std::snprintf(num, sizeof num, "%.4f", std::abs(c));
            f += (any ? (c < 0 ? " - " : " + ") : (c < 0 ? " -" : " ")) + std::string(num) + " " + term;
            any = true;
        }
        if (!any) f += " 0";
        out.push_back(f);
    }
    return out;
}

}  // namespace memirl::irl
