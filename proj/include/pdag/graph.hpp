#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "pdag/model.hpp"

namespace pdag {

struct Edge {
    std::size_t parent;
    std::size_t child;
    double weight = 1.0;

    bool operator==(const Edge&) const = default;
};

/// Directed graph on a fixed node set with out-neighbour sets stored as bit rows.
/// Mutations keep the graph acyclic: add_edge refuses edges that would close a cycle.
class DirectedGraph {
public:
    explicit DirectedGraph(std::size_t node_count = 0);

    std::size_t node_count() const noexcept { return node_count_; }
    std::size_t edge_count() const noexcept { return edge_count_; }

    bool has_edge(std::size_t u, std::size_t v) const;
    /// True iff `to` is reachable from `from` along directed edges (from == to counts).
    bool reaches(std::size_t from, std::size_t to) const;
    /// True iff adding u -> v would create a directed cycle, i.e. v already reaches u.
    /// Throws InputError for u == v or out-of-range nodes.
    bool creates_cycle(std::size_t u, std::size_t v) const;

    /// Idempotent. Throws InvariantError if the edge would close a cycle.
    void add_edge(std::size_t u, std::size_t v);
    /// Idempotent.
    void remove_edge(std::size_t u, std::size_t v);

    std::vector<std::size_t> out_neighbors(std::size_t u) const;

private:
    void check_node(std::size_t u) const;
    std::uint64_t* row(std::size_t u) { return bits_.data() + u * words_; }
    const std::uint64_t* row(std::size_t u) const { return bits_.data() + u * words_; }

    std::size_t node_count_;
    std::size_t words_;
    std::size_t edge_count_ = 0;
    std::vector<std::uint64_t> bits_;
    mutable std::vector<std::uint64_t> visited_;
    mutable std::vector<std::size_t> stack_;
};

/// Directed edges implied by B (B_ij != 0, i != j gives j -> i with weight B_ij),
/// sorted by (parent, child).
std::vector<Edge> edges_of(const CholeskyFactor& b);

/// Kahn's algorithm, smallest available index first. Empty optional when cyclic.
std::optional<std::vector<std::size_t>> topological_order(std::size_t node_count,
                                                          const std::vector<Edge>& edges);

bool is_acyclic(std::size_t node_count, const std::vector<Edge>& edges);

/// A directed cycle v0 -> v1 -> ... -> v0 (first node not repeated), if any exists.
std::optional<std::vector<std::size_t>> find_cycle(std::size_t node_count,
                                                   const std::vector<Edge>& edges);

}  // namespace pdag
