#pragma once

#include <utility>
#include <vector>

#include "ggode/datagen.hpp"
#include "ggode/tensor.hpp"

namespace ggode {

// All unordered pairs (i, j), i < j, with ||p_i - p_j||_2 <= R (closed
// ball), sorted lexicographically. `points` is N x D row-major. The
// backend (uniform cell grid vs k-d tree) is chosen by density; both
// produce the identical pair set.
std::vector<std::pair<int, int>> radius_neighbors(const std::vector<double>& points, int n, int dims,
                                                  double radius);

// Forced backends, used by the equivalence tests.
std::vector<std::pair<int, int>> radius_neighbors_kdtree(const std::vector<double>& points, int n,
                                                         int dims, double radius);
std::vector<std::pair<int, int>> radius_neighbors_cellgrid(const std::vector<double>& points, int n,
                                                           int dims, double radius);

// Observation graph over a K-step window: one node per (agent, step),
// spatial edges inside each time slice within the connectivity radius,
// and directed temporal edges between consecutive observations of the
// same agent. Node features are [position, velocity, acceleration].
struct TemporalGraph {
    int n_agents = 0;
    int n_steps = 0;
    int feat_dim = 0;
    int env_id = 0;
    std::vector<double> features;                    // (n_agents*n_steps) x feat_dim
    std::vector<std::pair<int, int>> spatial_edges;  // node ids, i < j, same slice
    std::vector<std::pair<int, int>> temporal_edges; // (agent@t-1) -> (agent@t)

    int node_id(int t, int i) const { return t * n_agents + i; }
    int node_count() const { return n_agents * n_steps; }
};

TemporalGraph build_temporal_graph(const TrajectoryRecord& rec, int t0, int window, double radius);

// Sinusoidal encoding: even entries sin(dt / 10000^(2i/d)), odd entries
// cos of the same argument. d must be even.
std::vector<double> temporal_encoding(double dt, int d);

// Per-node in-neighbor lists for message passing: spatial partners in
// both directions plus the temporal predecessor. `kind` is 0 for
// spatial (dt = 0) and 1 for temporal (dt = -1 step).
struct Adjacency {
    std::vector<std::vector<std::pair<int, int>>> in;  // (neighbor node, kind)
};
Adjacency build_adjacency(const TemporalGraph& g);

}  // namespace ggode
