#pragma once

#include <cstddef>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace memirl {

/// Directed influence network with a humans-first / targets-last partition.
///
/// Individuals are 0-based internally. An edge (i, j) means "j influences i",
/// i.e. x_j enters the update of x_i. Humans occupy [0, num_humans()) and
/// targets occupy [num_humans(), size()), so stacked opinion and action vectors
/// need no permutation.
class SocialGraph {
public:
    SocialGraph() = default;

    /// Throws GraphError(kPartition) if target indices are not the trailing block.
    SocialGraph(std::size_t n, std::vector<std::size_t> targets,
                std::set<std::pair<std::size_t, std::size_t>> edges);

    std::size_t size() const { return n_; }
    std::size_t num_humans() const { return n_ - num_targets_; }
    std::size_t num_targets() const { return num_targets_; }
    bool is_target(std::size_t i) const { return i >= num_humans() && i < n_; }

    const std::set<std::pair<std::size_t, std::size_t>>& edges() const { return edges_; }

    /// Sorted ascending list of j with (i, j) in the edge set.
    const std::vector<std::size_t>& in_neighbors(std::size_t i) const;

private:
    std::size_t n_ = 0;
    std::size_t num_targets_ = 0;
    std::set<std::pair<std::size_t, std::size_t>> edges_;
    std::vector<std::vector<std::size_t>> in_;
};

class GraphError : public std::runtime_error {
public:
    enum class Kind { kParse, kPartition, kIndexRange, kIo };

    GraphError(Kind kind, std::size_t line, const std::string& what);

    Kind kind() const { return kind_; }
    /// 1-based line in the source file, 0 when not tied to a line.
    std::size_t line() const { return line_; }

private:
    Kind kind_;
    std::size_t line_;
};

// Edge-list text format (indices 1-based on disk):
//   n=<int> targets=<comma list> [humans=<comma list>]
//   i j        # j influences i
SocialGraph parse_graph(const std::string& text);
SocialGraph load_graph(const std::filesystem::path& path);
/// Canonical form: header, then edges in lexicographic order, one per line.
std::string format_graph(const SocialGraph& g);
void write_graph(const SocialGraph& g, const std::filesystem::path& path);

}  // namespace memirl
