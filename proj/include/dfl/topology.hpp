#pragma once

#include <vector>

namespace dfl {

// Adjacency lists are kept sorted ascending so iteration order is fixed.
struct Topology {
    int num_nodes = 0;
    std::vector<std::vector<int>> adjacency;

    const std::vector<int>& neighbors(int node) const;
    int degree(int node) const;
};

// Ring lattice: node i links to i+-1 ... i+-degree/2 (mod n).
// degree must be even and 2 <= degree < n.
Topology build_ring_regular(int n, int degree);

// Star over n workers 0..n-1 plus a server with id n.
Topology build_star(int n);

// How many of node's neighbors appear in the (sorted or unsorted) id list.
int count_malicious_neighbors(const Topology& topo, int node, const std::vector<int>& malicious_ids);

}  // namespace dfl
