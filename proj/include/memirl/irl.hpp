#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "memirl/dynamics.hpp"

namespace memirl::irl {

/// Time-major stacking of a trajectory window:
///   x = [x~(k+1); ...; x~(k+l)],  u = [u(k); ...; u(k+l-1)].
struct StackedSample {
    Vec x;
    Vec u;
    std::size_t humans = 0;
    std::size_t targets = 0;
    std::size_t length = 0;

    double x_at(std::size_t t, std::size_t j) const { return x[static_cast<Eigen::Index>(t * humans + j)]; }
    double u_at(std::size_t t, std::size_t q) const { return u[static_cast<Eigen::Index>(t * targets + q)]; }
};

StackedSample stack(const Trajectory& traj);
Trajectory unstack(const StackedSample& s, long start_time = 0);

enum class BasisKind {
    kSteerPositive,   // sum (1 - x_j(t))^2
    kSteerNegative,   // sum (1 + x_j(t))^2
    kSteerNeutral,    // sum x_j(t)^2
    kStubbornSelf,    // sum (u_i(t) - u_i(t-1))^2 of the owning target
    kStubbornTarget,  // same, for a fixed target
};

struct Basis {
    BasisKind kind = BasisKind::kSteerPositive;
    std::size_t target = 0;  // 0-based target ordinal, kStubbornTarget only

    /// steer_pos | steer_neg | steer_neutral | stubborn_self | stubborn:<k> (k 1-based ordinal)
    std::string id() const;
    static Basis parse(const std::string& id);
    bool operator==(const Basis&) const = default;
};

/// steer_pos, steer_neg, steer_neutral, stubborn_self.
std::vector<Basis> default_basis();

/// Value of one basis for the cost of target `owner` (0-based ordinal).
double basis_cost(const Basis& b, const StackedSample& s, std::size_t owner);

struct CostSpec {
    std::vector<Basis> basis;
    Mat theta;       // targets x p
    Vec importance;  // targets

    std::size_t p() const { return basis.size(); }
    /// Throws std::invalid_argument unless each theta row has unit L1 norm and
    /// importance lies on the simplex, both within `tol`.
    void validate(double tol = 1e-6) const;
};

double target_cost(const CostSpec& spec, const StackedSample& s, std::size_t i);
/// r(u) = sum_i a_i r_i(x, u).
double joint_cost(const CostSpec& spec, const StackedSample& s);

/// First and second partials of a scalar cost in the stacked (x, u).
struct Partials {
    Vec gx, gu;
    Mat hxx, huu;
    Mat hxu;  // d^2 r / dx du, (l|H|) x (l|T|)

    static Partials zero(std::size_t nx, std::size_t nu);
    Partials& add(double w, const Partials& o);
};

Partials basis_partials(const Basis& b, const StackedSample& s, std::size_t owner);
/// Partials of r_i for target i.
Partials cost_partials(const CostSpec& spec, const StackedSample& s, std::size_t i);

/// Observed past (up to x~(k) and u(k-1)) plus the learning window.
struct Episode {
    History history;
    Trajectory window;
};

inline constexpr double kJacobianStep = 1e-5;

/// d x / d u through the diffusion model by central differences. Row block t
/// is x~(k+1+t); column block t' is u(k+t'). Blocks with t' > t are exactly 0.
Mat jacobian_x_u(const DiffusionParams& p, const History& history, std::span<const Vec> u,
                 double step = kJacobianStep);

struct LikelihoodParts {
    Vec h;
    Mat H;      // symmetrized
    Vec varpi;  // h - H u
    Mat jac;
};

/// h and H for a fixed Jacobian (the Jacobian is held constant in u).
LikelihoodParts gradient_and_hessian(const CostSpec& spec, const StackedSample& s, const Mat& jac);
LikelihoodParts gradient_and_hessian(const CostSpec& spec, const DiffusionParams& p, const Episode& e);

/// log(w / (e^w - e^-w)) evaluated in log space; series below |w| < 1e-6.
double log_partition_term(double w);
/// d/dw of log_partition_term.
double log_partition_slope(double w);

/// -1/2 u'Hu + u'h + sum_i log(varpi_i / (e^varpi_i - e^-varpi_i)).
double log_likelihood(const Vec& h, const Mat& H, const Vec& u);
double log_likelihood(const CostSpec& spec, const DiffusionParams& p, const Episode& e);

/// The likelihood as a function of w_iq = a_i theta_iq (index i * p + q):
///   L(w) = lin . w + sum_m log_partition_term((V w)_m).
struct LikelihoodModel {
    std::vector<Basis> basis;
    std::size_t targets = 0;
    Vec lin;
    Mat V;

    static LikelihoodModel build(const std::vector<Basis>& basis, const StackedSample& s, const Mat& jac);
    double value(const Vec& importance, const Mat& theta) const;
    /// Gradient in w.
    Vec gradient_w(const Vec& w) const;
    double value_w(const Vec& w) const;
};

struct LearnConfig {
    std::size_t restarts = 32;
    std::size_t max_iterations = 5000;
    double tolerance = 1e-9;
    double freeze_threshold = 1e-10;
    std::uint64_t seed = 1;
};

struct LearnResult {
    std::vector<Basis> basis;
    Vec importance;
    Mat theta;
    double loglik = 0.0;
    std::size_t restarts = 0;
    std::size_t best_restart = 0;
    std::vector<double> restart_loglik;
    std::vector<double> initial_loglik;
    std::vector<std::size_t> iterations;
    bool warning = false;  // best restart stopped on the iteration cap
    std::vector<std::string> formulas;
};

/// Euclidean projection onto the probability simplex.
Vec project_simplex(const Vec& v);

LearnResult learn(const LikelihoodModel& model, const LearnConfig& cfg);
LearnResult learn(const Episode& e, const DiffusionParams& p, const std::vector<Basis>& basis,
                  const LearnConfig& cfg);

/// Human-readable cost formulas; targets are named by their 1-based node
/// index, which is `first_target_node + ordinal`.
std::vector<std::string> render_formulas(const std::vector<Basis>& basis, const Mat& theta,
                                         std::size_t first_target_node);

}  // namespace memirl::irl
