#include "pdag/graph.hpp"

#include <algorithm>
#include <bit>
#include <queue>

namespace pdag {

DirectedGraph::DirectedGraph(std::size_t node_count)
    : node_count_(node_count),
      words_((node_count + 63) / 64),
      bits_(node_count * ((node_count + 63) / 64), 0),
      visited_((node_count + 63) / 64, 0) {
    stack_.reserve(node_count);
}

void DirectedGraph::check_node(std::size_t u) const {
    if (u >= node_count_)
        throw InputError("node " + std::to_string(u) + " out of range (graph has " +
                         std::to_string(node_count_) + " nodes)");
}

bool DirectedGraph::has_edge(std::size_t u, std::size_t v) const {
    check_node(u);
    check_node(v);
    return (row(u)[v / 64] >> (v % 64)) & 1u;
}

bool DirectedGraph::reaches(std::size_t from, std::size_t to) const {
    check_node(from);
    check_node(to);
    if (from == to) return true;
    std::fill(visited_.begin(), visited_.end(), 0);
    stack_.clear();
    visited_[from / 64] |= std::uint64_t{1} << (from % 64);
    stack_.push_back(from);
    while (!stack_.empty()) {
        const std::size_t u = stack_.back();
        stack_.pop_back();
        const std::uint64_t* out = row(u);
        for (std::size_t w = 0; w < words_; ++w) {
            std::uint64_t fresh = out[w] & ~visited_[w];
            if (!fresh) continue;
            visited_[w] |= fresh;
            while (fresh) {
                const std::size_t v = w * 64 + static_cast<std::size_t>(std::countr_zero(fresh));
                if (v == to) return true;
                stack_.push_back(v);
                fresh &= fresh - 1;
            }
        }
    }
    return false;
}

bool DirectedGraph::creates_cycle(std::size_t u, std::size_t v) const {
    check_node(u);
    check_node(v);
    if (u == v) throw InputError("self-loop query on node " + std::to_string(u));
    return reaches(v, u);
}

void DirectedGraph::add_edge(std::size_t u, std::size_t v) {
    if (has_edge(u, v)) return;
    if (creates_cycle(u, v))
        throw InvariantError("adding edge " + std::to_string(u) + " -> " + std::to_string(v) +
                             " creates a cycle");
    row(u)[v / 64] |= std::uint64_t{1} << (v % 64);
    ++edge_count_;
}

void DirectedGraph::remove_edge(std::size_t u, std::size_t v) {
    if (!has_edge(u, v)) return;
    row(u)[v / 64] &= ~(std::uint64_t{1} << (v % 64));
    --edge_count_;
}

std::vector<std::size_t> DirectedGraph::out_neighbors(std::size_t u) const {
    check_node(u);
    std::vector<std::size_t> out;
    for (std::size_t w = 0; w < words_; ++w) {
        std::uint64_t bits = row(u)[w];
        while (bits) {
            out.push_back(w * 64 + static_cast<std::size_t>(std::countr_zero(bits)));
            bits &= bits - 1;
        }
    }
    return out;
}

std::vector<Edge> edges_of(const CholeskyFactor& b) {
    std::vector<Edge> edges;
    const std::size_t p = b.size();
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j)
            if (i != j && b(i, j) != 0.0) edges.push_back({j, i, b(i, j)});
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& c) {
        return a.parent != c.parent ? a.parent < c.parent : a.child < c.child;
    });
    return edges;
}

std::optional<std::vector<std::size_t>> topological_order(std::size_t node_count,
                                                          const std::vector<Edge>& edges) {
    std::vector<std::vector<std::size_t>> children(node_count);
    std::vector<std::size_t> indegree(node_count, 0);
    for (const auto& e : edges) {
        if (e.parent >= node_count || e.child >= node_count)
            throw InputError("edge endpoint out of range");
        children[e.parent].push_back(e.child);
        ++indegree[e.child];
    }
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t v = 0; v < node_count; ++v)
        if (indegree[v] == 0) ready.push(v);
    std::vector<std::size_t> order;
    order.reserve(node_count);
    while (!ready.empty()) {
        const std::size_t u = ready.top();
        ready.pop();
        order.push_back(u);
        for (std::size_t v : children[u])
            if (--indegree[v] == 0) ready.push(v);
    }
    if (order.size() != node_count) return std::nullopt;
    return order;
}

bool is_acyclic(std::size_t node_count, const std::vector<Edge>& edges) {
    return topological_order(node_count, edges).has_value();
}

std::optional<std::vector<std::size_t>> find_cycle(std::size_t node_count,
                                                   const std::vector<Edge>& edges) {
    std::vector<std::vector<std::size_t>> children(node_count);
    for (const auto& e : edges) {
        if (e.parent >= node_count || e.child >= node_count)
            throw InputError("edge endpoint out of range");
        children[e.parent].push_back(e.child);
    }
    // 0 = unseen, 1 = on the current path, 2 = finished
    std::vector<int> state(node_count, 0);
    std::vector<std::size_t> parent(node_count, node_count);
    for (std::size_t root = 0; root < node_count; ++root) {
        if (state[root]) continue;
        std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
        state[root] = 1;
        while (!stack.empty()) {
            auto& [u, next] = stack.back();
            if (next == children[u].size()) {
                state[u] = 2;
                stack.pop_back();
                continue;
            }
            const std::size_t v = children[u][next++];
            if (state[v] == 1) {
                std::vector<std::size_t> cycle{v};
                for (std::size_t w = u; w != v; w = parent[w]) cycle.push_back(w);
                std::reverse(cycle.begin() + 1, cycle.end());
                return cycle;
            }
            if (state[v] == 0) {
                state[v] = 1;
                parent[v] = u;
                stack.emplace_back(v, 0);
            }
        }
    }
    return std::nullopt;
}

}  // namespace pdag
