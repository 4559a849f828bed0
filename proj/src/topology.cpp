#include "dfl/topology.hpp"

#include <algorithm>
#include <stdexcept>

namespace dfl {

const std::vector<int>& Topology::neighbors(int node) const {
    if (node < 0 || node >= static_cast<int>(adjacency.size())) {
        throw std::out_of_range("topology: node id out of range");
    }
    return adjacency[node];
}

int Topology::degree(int node) const {
    return static_cast<int>(neighbors(node).size());
}

Topology build_ring_regular(int n, int degree) {
    if (n < 3) throw std::invalid_argument("ring topology: need at least 3 nodes");
    if (degree % 2 != 0) throw std::invalid_argument("ring topology: degree must be even");
    if (degree < 2 || degree >= n) throw std::invalid_argument("ring topology: need 2 <= degree < n");

    Topology topo;
    topo.num_nodes = n;
    topo.adjacency.resize(n);
    const int half = degree / 2;
    for (int i = 0; i < n; ++i) {
        auto& adj = topo.adjacency[i];
        for (int k = 1; k <= half; ++k) {
            adj.push_back((i + k) % n);
            adj.push_back(((i - k) % n + n) % n);
        }
        std::sort(adj.begin(), adj.end());
        adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    }
    return topo;
}

Topology build_star(int n) {
    if (n < 1) throw std::invalid_argument("star topology: need at least 1 worker");
    Topology topo;
    topo.num_nodes = n + 1;
    topo.adjacency.resize(n + 1);
    for (int i = 0; i < n; ++i) {
        topo.adjacency[i] = {n};
        topo.adjacency[n].push_back(i);
    }
    return topo;
}

int count_malicious_neighbors(const Topology& topo, int node, const std::vector<int>& malicious_ids) {
    int count = 0;
    for (int nb : topo.neighbors(node)) {
        if (std::find(malicious_ids.begin(), malicious_ids.end(), nb) != malicious_ids.end()) ++count;
    }
    return count;
}

}  // namespace dfl
