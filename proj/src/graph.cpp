#include "memirl/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace memirl {

namespace {

std::string strip_comment(const std::string& line) {
    auto pos = line.find('#');
    std::string s = pos == std::string::npos ? line : line.substr(0, pos);
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

long long parse_int(const std::string& tok, std::size_t line) {
    long long v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size()) {
        throw GraphError(GraphError::Kind::kParse, line, "expected integer, got '" + tok + "'");
    }
    return v;
}

std::vector<long long> parse_list(const std::string& s, std::size_t line) {
    std::vector<long long> out;
    if (s.empty()) return out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(parse_int(tok, line));
    return out;
}

std::size_t checked_index(long long v, std::size_t n, std::size_t line) {
    if (v < 1 || static_cast<std::size_t>(v) > n) {
        throw GraphError(GraphError::Kind::kIndexRange, line,
                         "node " + std::to_string(v) + " outside 1.." + std::to_string(n));
    }
    return static_cast<std::size_t>(v - 1);
}

}  // namespace

GraphError::GraphError(Kind kind, std::size_t line, const std::string& what)
    : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
      kind_(kind),
      line_(line) {}

SocialGraph::SocialGraph(std::size_t n, std::vector<std::size_t> targets,
                         std::set<std::pair<std::size_t, std::size_t>> edges)
    : n_(n), num_targets_(targets.size()), edges_(std::move(edges)), in_(n) {
    if (n == 0) throw GraphError(GraphError::Kind::kParse, 0, "graph needs at least one node");
    std::sort(targets.begin(), targets.end());
    if (std::adjacent_find(targets.begin(), targets.end()) != targets.end()) {
        throw GraphError(GraphError::Kind::kPartition, 0, "duplicate target index");
    }
    for (std::size_t k = 0; k < targets.size(); ++k) {
        if (targets[k] != n - targets.size() + k) {
            throw GraphError(GraphError::Kind::kPartition, 0,
                             "targets must be the highest-numbered nodes");
        }
    }
    for (auto [i, j] : edges_) {
        if (i >= n || j >= n) throw GraphError(GraphError::Kind::kIndexRange, 0, "edge index out of range");
        in_[i].push_back(j);
    }
    // std::set iteration already yields ascending j per i.
}

const std::vector<std::size_t>& SocialGraph::in_neighbors(std::size_t i) const {
    if (i >= n_) throw std::out_of_range("in_neighbors: index " + std::to_string(i) + " out of range");
    return in_[i];
}

SocialGraph parse_graph(const std::string& text) {
    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    bool have_header = false;
    std::size_t n = 0;
    std::vector<std::size_t> targets;
    std::set<std::pair<std::size_t, std::size_t>> edges;

    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = strip_comment(raw);
        if (line.empty()) continue;
        std::istringstream ls(line);
        if (!have_header) {
            std::string tok;
            bool have_n = false, have_targets = false, have_humans = false;
            std::vector<long long> t_raw, h_raw;
            while (ls >> tok) {
                auto eq = tok.find('=');
                if (eq == std::string::npos) {
                    throw GraphError(GraphError::Kind::kParse, lineno, "malformed header token '" + tok + "'");
                }
                std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
                if (key == "n") {
                    auto v = parse_int(val, lineno);
                    if (v < 1) throw GraphError(GraphError::Kind::kParse, lineno, "n must be positive");
                    n = static_cast<std::size_t>(v);
                    have_n = true;
                } else if (key == "targets") {
                    t_raw = parse_list(val, lineno);
                    have_targets = true;
                } else if (key == "humans") {
                    h_raw = parse_list(val, lineno);
                    have_humans = true;
                } else {
                    throw GraphError(GraphError::Kind::kParse, lineno, "unknown header key '" + key + "'");
                }
            }
            if (!have_n || !have_targets) {
                throw GraphError(GraphError::Kind::kParse, lineno, "header must define n= and targets=");
            }
            std::set<std::size_t> tset;
            for (auto v : t_raw) {
                if (!tset.insert(checked_index(v, n, lineno)).second) {
                    throw GraphError(GraphError::Kind::kPartition, lineno, "target listed twice");
                }
            }
            if (have_humans) {
                std::set<std::size_t> hset;
                for (auto v : h_raw) {
                    auto idx = checked_index(v, n, lineno);
                    if (tset.count(idx)) {
                        throw GraphError(GraphError::Kind::kPartition, lineno,
                                         "node " + std::to_string(v) + " is both human and target");
                    }
                    hset.insert(idx);
                }
                if (hset.size() + tset.size() != n) {
                    throw GraphError(GraphError::Kind::kPartition, lineno, "humans and targets do not cover all nodes");
                }
            }
            targets.assign(tset.begin(), tset.end());
            for (std::size_t k = 0; k < targets.size(); ++k) {
                if (targets[k] != n - targets.size() + k) {
                    throw GraphError(GraphError::Kind::kPartition, lineno,
                                     "targets must be the highest-numbered nodes");
                }
            }
            have_header = true;
            continue;
        }
        std::string a, b, extra;
        if (!(ls >> a >> b) || (ls >> extra)) {
            throw GraphError(GraphError::Kind::kParse, lineno, "expected 'i j' edge line");
        }
        auto i = checked_index(parse_int(a, lineno), n, lineno);
        auto j = checked_index(parse_int(b, lineno), n, lineno);
        edges.emplace(i, j);
    }
    if (!have_header) throw GraphError(GraphError::Kind::kParse, lineno, "missing header line");
    return SocialGraph(n, std::move(targets), std::move(edges));
}

SocialGraph load_graph(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw GraphError(GraphError::Kind::kIo, 0, "cannot open graph file " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_graph(ss.str());
}

std::string format_graph(const SocialGraph& g) {
    std::ostringstream out;
    out << "n=" << g.size() << " targets=";
    for (std::size_t k = g.num_humans(); k < g.size(); ++k) {
        if (k != g.num_humans()) out << ',';
        out << k + 1;
    }
    out << '\n';
    for (auto [i, j] : g.edges()) out << i + 1 << ' ' << j + 1 << '\n';
    return out.str();
}

void write_graph(const SocialGraph& g, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw GraphError(GraphError::Kind::kIo, 0, "cannot write graph file " + path.string());
    f << format_graph(g);
}

}  // namespace memirl
