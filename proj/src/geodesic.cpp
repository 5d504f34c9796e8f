#include "peig/mesh.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <queue>

namespace peig {

std::vector<double> boundary_graph_distance(const Mesh& m)
{
    const auto nv = m.num_vertices();
    const auto edges = m.edges();

    // Adjacency in CSR form.
    std::vector<std::size_t> offsets(nv + 1, 0);
    for (const auto& e : edges) {
        ++offsets[e[0] + 1];
        ++offsets[e[1] + 1];
    }
    for (std::size_t i = 0; i < nv; ++i) {
        offsets[i + 1] += offsets[i];
    }
    std::vector<std::uint32_t> adj(offsets.back());
    std::vector<double> len(offsets.back());
    {
        auto fill = offsets;
        for (const auto& e : edges) {
            const double l = (m.vertex(e[0]) - m.vertex(e[1])).norm();
            adj[fill[e[0]]] = e[1];
            len[fill[e[0]]++] = l;
            adj[fill[e[1]]] = e[0];
            len[fill[e[1]]++] = l;
        }
    }

    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(nv, inf);
    using Entry = std::pair<double, std::uint32_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    for (auto b : m.boundary_nodes()) {
        dist[b] = 0.0;
        heap.emplace(0.0, b);
    }
    while (!heap.empty()) {
        const auto [d, v] = heap.top();
        heap.pop();
        if (d > dist[v]) {
            continue;
        }
        for (auto k = offsets[v]; k < offsets[v + 1]; ++k) {
            const double nd = d + len[k];
            if (nd < dist[adj[k]]) {
                dist[adj[k]] = nd;
                heap.emplace(nd, adj[k]);
            }
        }
    }
    for (std::size_t i = 0; i < nv; ++i) {
        if (dist[i] == inf) {
            throw MeshError("vertex " + std::to_string(i) + " cannot reach the boundary");
        }
    }
    return dist;
}

double approx_max_boundary_distance(const Mesh& m)
{
    const auto d = boundary_graph_distance(m);
    return *std::max_element(d.begin(), d.end());
}

} // namespace peig
