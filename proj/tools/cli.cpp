#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "memirl/bias.hpp"
#include "memirl/fitting.hpp"
#include "memirl/graph.hpp"
#include "memirl/irl.hpp"
#include "memirl/model_io.hpp"
#include "memirl/series.hpp"

namespace memirl::cli {

namespace {

namespace fs = std::filesystem;
using io::json;

constexpr const char* kVersion = "0.1.0";

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class Kind { kString, kInt, kDouble, kBool, kDoubleList, kStringList };

struct Field {
    std::string key;  // JSON key; the flag is the key with '-' for '_'
    Kind kind;
    std::string help;
    json fallback = nullptr;  // null: no default
    int arity = 1;            // list length, -1 for any
};

std::string flag_of(const std::string& key) {
    std::string f = key;
    std::replace(f.begin(), f.end(), '_', '-');
    return "--" + f;
}

json convert(const Field& f, const std::vector<std::string>& raw) {
    auto to_double = [&](const std::string& s) {
        try {
            std::size_t pos = 0;
            double v = std::stod(s, &pos);
            if (pos == s.size()) return v;
        } catch (const std::exception&) {
        }
        throw ConfigError(flag_of(f.key) + ": not a number: '" + s + "'");
    };
    switch (f.kind) {
        case Kind::kString: return raw.at(0);
        case Kind::kInt: {
            double v = to_double(raw.at(0));
            if (v != std::floor(v)) throw ConfigError(flag_of(f.key) + ": expected an integer");
            return static_cast<long long>(v);
        }
        case Kind::kDouble: return to_double(raw.at(0));
        case Kind::kBool: return true;
        case Kind::kDoubleList: {
            json a = json::array();
            for (const auto& s : raw) a.push_back(to_double(s));
            return a;
        }
        case Kind::kStringList: return raw;
    }
    return nullptr;
}

void check_type(const Field& f, const json& v) {
    bool ok = false;
    switch (f.kind) {
        case Kind::kString: ok = v.is_string(); break;
        case Kind::kInt: ok = v.is_number_integer(); break;
        case Kind::kDouble: ok = v.is_number(); break;
        case Kind::kBool: ok = v.is_boolean(); break;
        case Kind::kDoubleList:
            ok = v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); });
            break;
        case Kind::kStringList:
            ok = v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_string(); });
            break;
    }
    if (!ok) throw ConfigError("config key '" + f.key + "' has the wrong type");
    if (f.arity > 0 && v.is_array() && v.size() != static_cast<std::size_t>(f.arity)) {
        throw ConfigError("config key '" + f.key + "' needs " + std::to_string(f.arity) + " values");
    }
}

struct Context {
    std::ostream& out;
    std::ostream& err;
};

using Handler = std::function<int(const json&, Context&)>;

struct Command {
    std::string name;
    std::string help;
    std::vector<Field> fields;
    Handler run;
};

// Effective configuration: config file, then flags on top, then defaults.
json merge_config(const Command& cmd, const std::map<std::string, std::vector<std::string>>& raw,
                  const std::map<std::string, bool>& flags, const std::string& config_path) {
    json merged = json::object();
    if (!config_path.empty()) {
        std::ifstream f(config_path);
        if (!f) throw ConfigError("config file not found: " + config_path);
        json file;
        try {
            file = json::parse(f);
        } catch (const json::parse_error& e) {
            throw ConfigError("config file " + config_path + ": " + e.what());
        }
        if (!file.is_object()) throw ConfigError("config file must hold a JSON object");
        for (auto it = file.begin(); it != file.end(); ++it) {
            auto field = std::find_if(cmd.fields.begin(), cmd.fields.end(),
                                      [&](const Field& fd) { return fd.key == it.key(); });
            if (field == cmd.fields.end()) throw ConfigError("unknown config key '" + it.key() + "' for " + cmd.name);
            check_type(*field, it.value());
            merged[it.key()] = it.value();
        }
    }
    for (const Field& f : cmd.fields) {
        if (f.kind == Kind::kBool) {
            if (flags.at(f.key)) merged[f.key] = true;
        } else if (!raw.at(f.key).empty()) {
            merged[f.key] = convert(f, raw.at(f.key));
        }
        if (!merged.contains(f.key) && !f.fallback.is_null()) merged[f.key] = f.fallback;
    }
    return merged;
}

// ---------------------------------------------------------------------------
// Helpers shared by the commands

std::string need_string(const json& c, const char* key) {
    if (!c.contains(key)) throw ConfigError(std::string("missing required option ") + flag_of(key));
    return c.at(key).get<std::string>();
}

std::string need_path(const json& c, const char* key) {
    std::string p = need_string(c, key);
    if (!fs::exists(p)) throw ConfigError(flag_of(key) + " file not found: " + p);
    return p;
}

json read_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open " + path);
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
}

fs::path out_dir(const json& c) {
    fs::path dir = c.at("out").get<std::string>();
    fs::create_directories(dir);
    return dir;
}

void write_manifest(const fs::path& dir, const std::string& command, const json& config,
                    const std::vector<std::string>& outputs) {
    json canonical = config;
    canonical.erase("out");
    json m;
    m["command"] = command;
    m["version"] = kVersion;
    m["config"] = canonical;
    m["config_hash"] = io::fnv1a_hex(canonical.dump());
    m["seed"] = config.value("seed", 0);
    m["outputs"] = outputs;
    write_text(dir / "manifest.json", m.dump(2) + "\n");
}

std::uint64_t seed_of(const json& c) {
    long long s = c.at("seed").get<long long>();
    if (s < 0) throw ConfigError("--seed must be non-negative");
    return static_cast<std::uint64_t>(s);
}

fitting::ModelSpec load_model(const json& c, const SocialGraph& g) {
    fitting::ModelSpec m = io::model_from_json(read_json(need_path(c, "model")));
    m.build(g);
    return m;
}

std::vector<Vec> parse_actions_csv(const std::string& path, std::size_t targets) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open " + path);
    std::string line;
    std::size_t lineno = 0;
    bool header = false, has_t = false;
    std::vector<Vec> rows;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) {
            cell.erase(std::remove_if(cell.begin(), cell.end(), [](char ch) { return std::isspace(static_cast<unsigned char>(ch)); }),
                       cell.end());
            cells.push_back(cell);
        }
        if (!header) {
            has_t = !cells.empty() && cells[0] == "t";
            std::size_t off = has_t ? 1 : 0;
            if (cells.size() != targets + off) {
                throw SeriesError(lineno, "actions header needs " + std::to_string(targets) + " columns u1..u" + std::to_string(targets));
            }
            for (std::size_t q = 0; q < targets; ++q) {
                if (cells[off + q] != "u" + std::to_string(q + 1)) throw SeriesError(lineno, "unexpected column '" + cells[off + q] + "'");
            }
            header = true;
            continue;
        }
        std::size_t off = has_t ? 1 : 0;
        if (cells.size() != targets + off) throw SeriesError(lineno, "wrong number of cells");
        Vec u(static_cast<Eigen::Index>(targets));
        for (std::size_t q = 0; q < targets; ++q) {
            try {
                std::size_t pos = 0;
                u[static_cast<Eigen::Index>(q)] = std::stod(cells[off + q], &pos);
                if (pos != cells[off + q].size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw SeriesError(lineno, "not a number: '" + cells[off + q] + "'");
            }
            if (std::abs(u[static_cast<Eigen::Index>(q)]) > 1.0) throw SeriesError(lineno, "action outside [-1,1]");
        }
        rows.push_back(u);
    }
    if (!header) throw SeriesError(lineno, "missing header");
    return rows;
}

void check_partition(const Series& s, const SocialGraph& g) {
    if (s.humans() != g.num_humans() || s.targets() != g.num_targets()) {
        throw ConfigError("series has " + std::to_string(s.humans()) + " opinion and " + std::to_string(s.targets()) +
                          " action columns; graph has " + std::to_string(g.num_humans()) + " humans and " +
                          std::to_string(g.num_targets()) + " targets");
    }
}

// ---------------------------------------------------------------------------
// simulate

int cmd_simulate(const json& c, Context& ctx) {
    SocialGraph g = load_graph(need_path(c, "graph"));
    fitting::ModelSpec spec = load_model(c, g);
    DiffusionParams p = spec.build(g);
    std::mt19937_64 rng(seed_of(c));
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    auto random_vec = [&](std::size_t n) {
        Vec v(static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = U(rng);
        return v;
    };

    History h;
    long first_time = 1;
    std::optional<Vec> last_action;
    if (c.contains("initial")) {
        Series init = load_series_csv(need_path(c, "initial"));
        check_partition(init, g);
        first_time = init.t.front();
        h.x = init.x;
        h.u.assign(init.u.begin(), init.u.end() - 1);
        if (!init.u.back().hasNaN()) {
            last_action = init.u.back();
        } else if (!h.u.empty()) {
            last_action = h.u.back();
        }
    } else if (c.at("random_initial").get<bool>()) {
        h.x.push_back(random_vec(g.num_humans()));
    } else {
        throw ConfigError("simulate needs --initial or --random-initial");
    }

    std::vector<Vec> actions;
    const std::string mode = c.at("action_mode").get<std::string>();
    if (c.contains("actions")) {
        actions = parse_actions_csv(need_path(c, "actions"), g.num_targets());
        if (c.contains("steps") && static_cast<std::size_t>(c.at("steps").get<long long>()) != actions.size()) {
            throw ConfigError("--steps disagrees with the number of rows in --actions");
        }
    } else {
        if (!c.contains("steps")) throw ConfigError("simulate needs --steps or --actions");
        long long steps = c.at("steps").get<long long>();
        if (steps < 1) throw ConfigError("--steps must be >= 1");
        if (mode == "hold") {
            if (!last_action) throw ConfigError("--action-mode hold needs an initial series with actions");
            actions.assign(static_cast<std::size_t>(steps), *last_action);
        } else if (mode == "random") {
            for (long long k = 0; k < steps; ++k) actions.push_back(random_vec(g.num_targets()));
        } else {
            throw ConfigError("--action-mode must be hold or random");
        }
    }

    Simulation sim = simulate_with_cache(p, h, actions);
    Series series = to_series(h, sim.trajectory, first_time);
    double lo = 1.0, hi = -1.0, row_error = 0.0;
    for (const Vec& x : series.x) lo = std::min(lo, x.minCoeff()), hi = std::max(hi, x.maxCoeff());
    for (const auto& step_rows : sim.cache.steps) {
        for (const auto& row : step_rows) row_error = std::max(row_error, std::abs(row.total() - 1.0));
    }
    const Vec& final_state = series.x.back();

    fs::path dir = out_dir(c);
    write_series_csv(series, dir / "trajectory.csv");
    json summary;
    summary["steps"] = actions.size();
    summary["rows"] = series.length();
    summary["min_opinion"] = lo;
    summary["max_opinion"] = hi;
    summary["bounded"] = lo >= -1.0 && hi <= 1.0;
    summary["max_row_sum_error"] = row_error;
    summary["final_time"] = series.t.back();
    summary["final_state"] = std::vector<double>(final_state.data(), final_state.data() + final_state.size());
    write_text(dir / "summary.json", summary.dump(2) + "\n");
    write_manifest(dir, "simulate", c, {"trajectory.csv", "summary.json"});

    ctx.out << "simulated " << actions.size() << " steps; opinions in [" << lo << ", " << hi << "]\n"
            << "wrote " << (dir / "trajectory.csv").string() << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------
// verify-bias

json report_json(const std::string& group, const bias::Report& r) {
    json a = json::array();
    for (const auto& chk : r.checks) {
        json ce = json::array();
        for (const auto& t : chk.counterexamples) ce.push_back({{"x_ref", t.x_ref}, {"x_a", t.x_a}, {"x_b", t.x_b}});
        a.push_back({{"group", group}, {"name", chk.name}, {"pass", chk.pass}, {"fail", chk.fail}, {"ok", chk.ok()},
                     {"counterexamples", ce}});
    }
    return a;
}

int cmd_verify_bias(const json& c, Context& ctx) {
    const std::string name = c.at("kernel").get<std::string>();
    const long long samples = c.at("samples").get<long long>();
    if (samples < 1) throw ConfigError("--samples must be >= 1");
    const auto n = static_cast<std::size_t>(samples);
    bias::SamplerConfig sc;
    sc.seed = seed_of(c);
    sc.min_gap = c.at("min_gap").get<double>();

    std::vector<std::pair<std::string, bias::Report>> groups;
    if (name == "tanh_power") {
        const double alpha = c.at("alpha").get<double>();
        if (!(alpha > 0)) throw ConfigError("--alpha must be > 0");
        auto conf = bias::tanh_power_confirmation(alpha);
        auto nov = bias::tanh_power_novelty(alpha);
        groups.emplace_back("confirmation_behaviors", bias::verify_confirmation_behaviors(conf, sc, n));
        groups.emplace_back("confirmation_conditions", bias::verify_confirmation_conditions(conf.f, conf.g, sc, n));
        groups.emplace_back("novelty_behaviors", bias::verify_novelty_behaviors(nov, sc, n));
        groups.emplace_back("novelty_conditions", bias::verify_novelty_conditions(nov.f, nov.g, sc, n));
    } else if (name == "hk" || name == "continuous") {
        bias::Kernel k;
        if (name == "hk") {
            auto eps = c.at("eps").get<std::vector<double>>();
            if (!(eps[0] >= 0 && eps[0] <= eps[1])) throw ConfigError("--eps needs 0 <= lo <= hi");
            k = bias::hk_kernel(eps[0], eps[1]);
        } else {
            const double scale = c.at("scale").get<double>();
            if (!(scale > 0)) throw ConfigError("--scale must be > 0");
            k = bias::continuous_kernel(bias::gaussian_phi(scale));
        }
        groups.emplace_back("confirmation_behaviors", bias::verify_confirmation_behaviors(k, sc, n));
        groups.emplace_back("confirmation_conditions", bias::verify_confirmation_conditions(k.f, k.g, sc, n));
    } else {
        throw ConfigError("unknown kernel '" + name + "' (tanh_power, hk, continuous)");
    }

    bool all = true;
    json checks = json::array();
    for (const auto& [group, rep] : groups) {
        for (const auto& chk : rep.checks) {
            all = all && chk.ok();
            ctx.out << (chk.ok() ? "PASS " : "FAIL ") << group << "/" << chk.name << "  " << chk.pass << "/"
                    << chk.pass + chk.fail << "\n";
            for (const auto& t : chk.counterexamples) {
                ctx.out << "     counterexample x_ref=" << t.x_ref << " x_a=" << t.x_a << " x_b=" << t.x_b << "\n";
            }
        }
        for (auto& e : report_json(group, rep)) checks.push_back(e);
    }
    ctx.out << (all ? "all checks passed" : "some checks failed") << "\n";

    fs::path dir = out_dir(c);
    json report{{"kernel", name}, {"samples", n}, {"all_pass", all}, {"checks", checks}};
    write_text(dir / "bias_report.json", report.dump(2) + "\n");
    write_manifest(dir, "verify-bias", c, {"bias_report.json"});
    return all ? kOk : kVerificationFailed;
}

// ---------------------------------------------------------------------------
// fit

int cmd_fit(const json& c, Context& ctx) {
    SocialGraph g = load_graph(need_path(c, "graph"));
    Series s = load_series_csv(need_path(c, "series"));
    check_partition(s, g);

    fitting::FitConfig cfg;
    cfg.base.alpha.assign(g.num_humans(), c.at("alpha_init").get<double>());
    cfg.base.d = c.at("d").get<double>();
    cfg.base.tau = static_cast<int>(c.at("tau").get<long long>());
    cfg.base.epsilon_floor = c.at("epsilon_floor").get<double>();
    const std::string xbar = c.at("xbar").get<std::string>();
    if (xbar == "free") {
        cfg.surround = fitting::SurroundMode::kFree;
        cfg.base.xbar = 0.0;
    } else if (xbar == "computed") {
        cfg.surround = fitting::SurroundMode::kComputed;
        cfg.base.xbar.reset();
    } else {
        cfg.surround = fitting::SurroundMode::kFixed;
        try {
            std::size_t pos = 0;
            cfg.base.xbar = std::stod(xbar, &pos);
            if (pos != xbar.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ConfigError("--xbar must be a number in [-1,1], free or computed");
        }
    }
    cfg.fit_alpha = !c.at("fix_alpha").get<bool>();
    cfg.fit_d = !c.at("fix_d").get<bool>();
    cfg.alpha_bounds.hi = c.at("alpha_max").get<double>();
    cfg.d_bounds.hi = c.at("d_max").get<double>();
    const long long restarts = c.at("restarts").get<long long>();
    if (restarts < 1) throw ConfigError("--restarts must be >= 1");
    cfg.restarts = static_cast<std::size_t>(restarts);
    cfg.teacher_forcing = c.at("teacher_forcing").get<bool>();
    cfg.seed = seed_of(c);

    fitting::FitResult r = fitting::fit(s, g, cfg);
    fs::path dir = out_dir(c);
    write_text(dir / "fit_report.json", io::fit_report(r, s).dump(2) + "\n");
    write_text(dir / "model.json", io::model_to_json(r.model).dump(2) + "\n");
    write_manifest(dir, "fit", c, {"fit_report.json", "model.json"});

    ctx.out << "loss " << r.loss << (r.non_identifiable ? " (flat loss surface: parameters not identifiable)" : "")
            << "\n";
    for (std::size_t i = 0; i < r.model.alpha.size(); ++i) ctx.out << "alpha" << i + 1 << " = " << r.model.alpha[i] << "\n";
    ctx.out << "d = " << r.model.d << "\n";
    if (r.model.xbar) ctx.out << "xbar = " << *r.model.xbar << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------
// learn

int cmd_learn(const json& c, Context& ctx) {
    const long long window = c.at("window").get<long long>();
    if (window < 2) throw ConfigError("--window must be >= 2 (the stubbornness basis needs two consecutive actions)");
    SocialGraph g = load_graph(need_path(c, "graph"));
    fitting::ModelSpec spec = load_model(c, g);
    Series s = load_series_csv(need_path(c, "series"));
    check_partition(s, g);
    const auto l = static_cast<std::size_t>(window);
    if (s.length() < l + 1) {
        throw ConfigError("series has " + std::to_string(s.length()) + " rows; window " + std::to_string(l) +
                          " needs at least " + std::to_string(l + 1));
    }

    // The window is the last l transitions: x rows k+1..K-1, u rows k..K-2.
    const std::size_t k = s.length() - 1 - l;
    irl::Episode e;
    for (std::size_t t = 0; t <= k; ++t) e.history.x.push_back(s.x[t]);
    for (std::size_t t = 0; t < k; ++t) e.history.u.push_back(s.u[t]);
    e.window.start_time = s.t[k];
    for (std::size_t t = k; t + 1 < s.length(); ++t) {
        e.window.u.push_back(s.u[t]);
        e.window.x.push_back(s.x[t + 1]);
    }

    std::vector<irl::Basis> basis;
    for (const auto& id : c.at("basis").get<std::vector<std::string>>()) basis.push_back(irl::Basis::parse(id));
    if (basis.empty()) throw ConfigError("--basis needs at least one entry");
    irl::LearnConfig lc;
    const long long restarts = c.at("restarts").get<long long>();
    const long long iters = c.at("max_iterations").get<long long>();
    if (restarts < 1 || iters < 1) throw ConfigError("--restarts and --max-iterations must be >= 1");
    lc.restarts = static_cast<std::size_t>(restarts);
    lc.max_iterations = static_cast<std::size_t>(iters);
    lc.seed = seed_of(c);

    irl::LearnResult r = irl::learn(e, spec.build(g), basis, lc);
    fs::path dir = out_dir(c);
    write_text(dir / "learn_report.json", io::learn_report(r, l, s.t[k]).dump(2) + "\n");
    write_manifest(dir, "learn", c, {"learn_report.json"});

    ctx.out << "window " << l << " starting at t = " << s.t[k] << ", log-likelihood " << r.loglik << "\n";
    for (Eigen::Index i = 0; i < r.importance.size(); ++i) {
        ctx.out << "a_" << g.num_humans() + 1 + static_cast<std::size_t>(i) << " = " << r.importance[i] << "\n";
    }
    for (const auto& f : r.formulas) ctx.out << f << "\n";
    if (r.warning) ctx.err << "warning: best restart stopped on the iteration cap\n";
    return kOk;
}

// ---------------------------------------------------------------------------
// export

int cmd_export(const json& c, Context& ctx) {
    Series s = load_series_csv(need_path(c, "series"));
    fs::path dir = out_dir(c);
    write_series_csv(s, dir / "opinions.csv");
    // Opinions exactly at 0 are neutral and count in neither domain.
    std::ostringstream counts;
    counts << "t,supporting,opposing,neutral\n";
    for (std::size_t k = 0; k < s.length(); ++k) {
        std::size_t pos = 0, neg = 0;
        for (Eigen::Index j = 0; j < s.x[k].size(); ++j) {
            pos += s.x[k][j] > 0;
            neg += s.x[k][j] < 0;
        }
        counts << s.t[k] << ',' << pos << ',' << neg << ',' << s.humans() - pos - neg << '\n';
    }
    write_text(dir / "domain_counts.csv", counts.str());
    write_manifest(dir, "export", c, {"opinions.csv", "domain_counts.csv"});
    ctx.out << "wrote " << (dir / "opinions.csv").string() << " and " << (dir / "domain_counts.csv").string() << "\n";
    return kOk;
}

std::vector<Command> commands() {
    std::vector<std::string> basis_ids;
    for (const auto& b : irl::default_basis()) basis_ids.push_back(b.id());
    const Field seed{"seed", Kind::kInt, "seed for all randomness", 1};
    const Field out{"out", Kind::kString, "output directory", "out"};
    return {
        {"simulate",
         "Roll the diffusion model forward and write the trajectory",
         {{"graph", Kind::kString, "graph edge-list file"},
          {"model", Kind::kString, "model JSON (or a fit report)"},
          {"initial", Kind::kString, "series CSV with the observed history"},
          {"random_initial", Kind::kBool, "draw x(1) uniformly instead of reading --initial", false},
          {"actions", Kind::kString, "CSV of future actions, header u1..uT"},
          {"steps", Kind::kInt, "number of transitions when --actions is not given"},
          {"action_mode", Kind::kString, "hold | random: future actions without --actions", "hold"},
          seed,
          out},
         cmd_simulate},
        {"verify-bias",
         "Check a bias kernel against the confirmation and novelty behaviors",
         {{"kernel", Kind::kString, "tanh_power | hk | continuous", "tanh_power"},
          {"alpha", Kind::kDouble, "tanh-power exponent", 1.8},
          {"eps", Kind::kDoubleList, "bounded-confidence interval lo hi", json::array({0.4, 0.4}), 2},
          {"scale", Kind::kDouble, "squared-distance decay scale of the continuous kernel", 1.0},
          {"samples", Kind::kInt, "samples per check", 10000},
          {"min_gap", Kind::kDouble, "minimum separation of sampled opinions", 1e-3},
          seed,
          out},
         cmd_verify_bias},
        {"fit",
         "Fit exponents, decay and surround expectation to an observed series",
         {{"graph", Kind::kString, "graph edge-list file"},
          {"series", Kind::kString, "observed series CSV"},
          {"tau", Kind::kInt, "memory horizon", 2},
          {"d", Kind::kDouble, "decay (held when --fix-d)", 6.01},
          {"alpha_init", Kind::kDouble, "exponent for every human (held when --fix-alpha)", 1.0},
          {"xbar", Kind::kString, "surround expectation: a value, free or computed", "-1"},
          {"fix_alpha", Kind::kBool, "do not fit the exponents", false},
          {"fix_d", Kind::kBool, "do not fit the decay", false},
          {"alpha_max", Kind::kDouble, "upper bound of the exponents", 5.0},
          {"d_max", Kind::kDouble, "upper bound of the decay", 20.0},
          {"epsilon_floor", Kind::kDouble, "distance floor of the confirmation kernel", bias::kDefaultEpsilonFloor},
          {"restarts", Kind::kInt, "Latin-hypercube restarts", 8},
          {"teacher_forcing", Kind::kBool, "score one-step predictions from observed history", false},
          seed,
          out},
         cmd_fit},
        {"learn",
         "Learn target cost functions from the last window of a series",
         {{"graph", Kind::kString, "graph edge-list file"},
          {"model", Kind::kString, "model JSON (or a fit report)"},
          {"series", Kind::kString, "observed series CSV"},
          {"window", Kind::kInt, "window length (>= 2)", 3},
          {"basis", Kind::kStringList, "basis ids", basis_ids, -1},
          {"restarts", Kind::kInt, "optimizer restarts", 32},
          {"max_iterations", Kind::kInt, "iterations per restart", 5000},
          seed,
          out},
         cmd_learn},
        {"export",
         "Write plot-ready opinion series and domain counts",
         {{"series", Kind::kString, "series CSV"}, out},
         cmd_export},
    };
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    const auto cmds = commands();
    CLI::App app{"Memory-aware opinion dynamics and inverse cost learning", "memirl"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    std::map<std::string, std::map<std::string, std::vector<std::string>>> raw;
    std::map<std::string, std::map<std::string, bool>> flags;
    std::map<std::string, std::string> config_paths;
    std::map<std::string, CLI::App*> subs;
    for (const Command& cmd : cmds) {
        CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
        subs[cmd.name] = sub;
        sub->add_option("--config", config_paths[cmd.name], "JSON config; flags override its keys");
        for (const Field& f : cmd.fields) {
            std::string help = f.help;
            if (!f.fallback.is_null()) help += " [default: " + f.fallback.dump() + "]";
            if (f.kind == Kind::kBool) {
                sub->add_flag(flag_of(f.key), flags[cmd.name][f.key], help);
            } else {
                auto* opt = sub->add_option(flag_of(f.key), raw[cmd.name][f.key], help);
                if (f.kind == Kind::kDoubleList || f.kind == Kind::kStringList) {
                    if (f.arity > 0) {
                        opt->expected(f.arity);
                    } else {
                        opt->expected(1, -1);
                    }
                } else {
                    opt->expected(1);
                }
            }
        }
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kValidationError;
    }

    Context ctx{out, err};
    for (const Command& cmd : cmds) {
        if (!subs[cmd.name]->parsed()) continue;
        try {
            json config = merge_config(cmd, raw[cmd.name], flags[cmd.name], config_paths[cmd.name]);
            return cmd.run(config, ctx);
        } catch (const fitting::FitError& e) {
            err << "error: " << e.what() << "\n";
            return kRuntimeError;
        } catch (const bias::SamplerExhausted& e) {
            err << "error: " << e.what() << "\n";
            return kRuntimeError;
        } catch (const GraphError& e) {
            err << "error: " << e.what() << "\n";
            return kValidationError;
        } catch (const SeriesError& e) {
            err << "error: " << e.what() << "\n";
            return kValidationError;
        } catch (const std::invalid_argument& e) {
            err << "error: " << e.what() << "\n";
            return kValidationError;
        } catch (const json::exception& e) {
            err << "error: " << e.what() << "\n";
            return kValidationError;
        } catch (const std::exception& e) {
            err << "error: " << e.what() << "\n";
            return kRuntimeError;
        }
    }
    return kValidationError;
}

}  // namespace memirl::cli
