#include "memirl/model_io.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>

namespace memirl::io {

namespace {

const json& field(const json& j, const char* key) {
    if (!j.contains(key)) throw std::invalid_argument(std::string("model: missing field '") + key + "'");
    return j.at(key);
}

double number(const json& j, const char* key) {
    const json& v = field(j, key);
    if (!v.is_number()) throw std::invalid_argument(std::string("model: '") + key + "' must be a number");
    return v.get<double>();
}

std::vector<double> numbers(const json& v, const char* key) {
    if (!v.is_array()) throw std::invalid_argument(std::string("model: '") + key + "' must be an array");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw std::invalid_argument(std::string("model: '") + key + "' must hold numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

json vec_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

}  // namespace

json model_to_json(const fitting::ModelSpec& m) {
    json j;
    j["kernel"] = "tanh_power";
    j["alpha"] = m.alpha;
    j["d"] = m.d;
    j["tau"] = m.tau;
    j["xbar"] = m.xbar ? json(*m.xbar) : json(nullptr);
    j["use_innate"] = m.use_innate;
    j["s"] = m.s;
    j["epsilon_floor"] = m.epsilon_floor;
    j["memory_window"] = m.window == MemoryWindow::kInclusive ? "inclusive" : "horizon_only";
    return j;
}

fitting::ModelSpec model_from_json(const json& in) {
    if (!in.is_object()) throw std::invalid_argument("model: expected a JSON object");
    const json& j = in.contains("model") ? in.at("model") : in;
    if (!j.is_object()) throw std::invalid_argument("model: expected a JSON object");
    fitting::ModelSpec m;
    if (j.contains("kernel") && j.at("kernel") != "tanh_power") {
        throw std::invalid_argument("model: only the tanh_power kernel can drive the dynamics");
    }
    m.alpha = numbers(field(j, "alpha"), "alpha");
    m.d = number(j, "d");
    const json& tau = field(j, "tau");
    if (!tau.is_number_integer()) throw std::invalid_argument("model: 'tau' must be an integer");
    m.tau = tau.get<int>();
    const json& xbar = field(j, "xbar");
    if (xbar.is_null()) {
        m.xbar.reset();
    } else if (xbar.is_number()) {
        m.xbar = xbar.get<double>();
    } else {
        throw std::invalid_argument("model: 'xbar' must be a number or null");
    }
    if (j.contains("use_innate")) {
        if (!j.at("use_innate").is_boolean()) throw std::invalid_argument("model: 'use_innate' must be a boolean");
        m.use_innate = j.at("use_innate").get<bool>();
    }
    if (j.contains("s")) m.s = numbers(j.at("s"), "s");
    if (j.contains("epsilon_floor")) m.epsilon_floor = number(j, "epsilon_floor");
    if (j.contains("memory_window")) {
        const json& w = j.at("memory_window");
        if (w == "inclusive") {
            m.window = MemoryWindow::kInclusive;
        } else if (w == "horizon_only") {
            m.window = MemoryWindow::kHorizonOnly;
        } else {
            throw std::invalid_argument("model: 'memory_window' must be inclusive or horizon_only");
        }
    }
    return m;
}

json fit_report(const fitting::FitResult& r, const Series& series) {
    auto finite_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json j;
    j["model"] = model_to_json(r.model);
    j["loss"] = r.loss;
    j["non_identifiable"] = r.non_identifiable;
    j["parameters"] = r.parameter_names;
    j["best_restart"] = r.best_restart;
    j["restart_loss"] = json::array();
    j["initial_loss"] = json::array();
    for (double v : r.restart_loss) j["restart_loss"].push_back(finite_or_null(v));
    for (double v : r.initial_loss) j["initial_loss"].push_back(finite_or_null(v));
    j["sweeps"] = r.sweeps;
    json res = json::array();
    for (std::size_t k = 0; k < r.residuals.size(); ++k) {
        res.push_back({{"t", series.t[k + 1]}, {"loss", r.step_loss[k]}, {"residual", vec_json(r.residuals[k])}});
    }
    j["residuals"] = res;
    return j;
}

json learn_report(const irl::LearnResult& r, std::size_t window, long first_time) {
    json j;
    j["window"] = window;
    j["window_start"] = first_time;
    json basis = json::array();
    for (const auto& b : r.basis) basis.push_back(b.id());
    j["basis"] = basis;
    j["importance"] = vec_json(r.importance);
    json theta = json::array();
    for (Eigen::Index i = 0; i < r.theta.rows(); ++i) theta.push_back(vec_json(r.theta.row(i).transpose()));
    j["theta"] = theta;
    j["loglik"] = r.loglik;
    j["restarts"] = r.restarts;
    j["best_restart"] = r.best_restart;
    j["restart_loglik"] = r.restart_loglik;
    j["iterations"] = r.iterations;
    j["warning"] = r.warning;
    j["formulas"] = r.formulas;
    return j;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace memirl::io
