#include "ggode/temporal_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace ggode {

namespace {

double dist2(const double* a, const double* b, int dims) {
    double s = 0.0;
    for (int d = 0; d < dims; ++d) {
        const double dd = a[d] - b[d];
        s += dd * dd;
    }
    return s;
}

// Recursive median-split k-d tree over point indices.
struct KdTree {
    const std::vector<double>& pts;
    int dims;
    struct Node {
        int point = -1;
        int axis = 0;
        int left = -1, right = -1;
    };
    std::vector<Node> nodes;
    int root = -1;

    KdTree(const std::vector<double>& p, int n, int d) : pts(p), dims(d) {
        std::vector<int> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        nodes.reserve(n);
        root = build(idx, 0, n, 0);
    }

    int build(std::vector<int>& idx, int lo, int hi, int depth) {
        if (lo >= hi) return -1;
        const int axis = depth % dims;
        const int mid = (lo + hi) / 2;
        std::nth_element(idx.begin() + lo, idx.begin() + mid, idx.begin() + hi,
                         [&](int a, int b) {
                             const double pa = pts[static_cast<std::size_t>(a) * dims + axis];
                             const double pb = pts[static_cast<std::size_t>(b) * dims + axis];
                             return pa != pb ? pa < pb : a < b;
                         });
        Node n;
        n.point = idx[mid];
        n.axis = axis;
        const int id = static_cast<int>(nodes.size());
        nodes.push_back(n);
        nodes[id].left = build(idx, lo, mid, depth + 1);
        nodes[id].right = build(idx, mid + 1, hi, depth + 1);
        return id;
    }

    void query(int node, const double* q, double r, double r2, int self,
               std::vector<int>& out) const {
        if (node < 0) return;
        const Node& n = nodes[node];
        const double* p = pts.data() + static_cast<std::size_t>(n.point) * dims;
        if (n.point > self && dist2(q, p, dims) <= r2) out.push_back(n.point);
        const double delta = q[n.axis] - p[n.axis];
        if (delta <= r) query(n.left, q, r, r2, self, out);
        if (delta >= -r) query(n.right, q, r, r2, self, out);
    }
};

}  // namespace

std::vector<std::pair<int, int>> radius_neighbors_kdtree(const std::vector<double>& points, int n,
                                                         int dims, double radius) {
    std::vector<std::pair<int, int>> pairs;
    if (n < 2) return pairs;
    KdTree tree(points, n, dims);
    std::vector<int> hits;
    const double r2 = radius * radius;
    for (int i = 0; i < n; ++i) {
        hits.clear();
        tree.query(tree.root, points.data() + static_cast<std::size_t>(i) * dims, radius, r2, i, hits);
        for (int j : hits) pairs.emplace_back(i, j);
    }
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

std::vector<std::pair<int, int>> radius_neighbors_cellgrid(const std::vector<double>& points, int n,
                                                           int dims, double radius) {
    std::vector<std::pair<int, int>> pairs;
    if (n < 2) return pairs;
    if (radius <= 0.0) {
        // Degenerate cell width; fall back to exact-coincidence scan.
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (dist2(points.data() + static_cast<std::size_t>(i) * dims,
                          points.data() + static_cast<std::size_t>(j) * dims, dims) <= radius * radius)
                    pairs.emplace_back(i, j);
        return pairs;
    }
    std::map<std::vector<int>, std::vector<int>> cells;
    std::vector<int> key(dims);
    for (int i = 0; i < n; ++i) {
        for (int d = 0; d < dims; ++d)
            key[d] = static_cast<int>(std::floor(points[static_cast<std::size_t>(i) * dims + d] / radius));
        cells[key].push_back(i);
    }
    const double r2 = radius * radius;
    std::vector<int> probe(dims);
    for (const auto& [ck, members] : cells) {
        // Enumerate the 3^dims neighborhood of this cell.
        std::vector<int> offs(dims, -1);
        while (true) {
            for (int d = 0; d < dims; ++d) probe[d] = ck[d] + offs[d];
            auto it = cells.find(probe);
            if (it != cells.end()) {
                for (int i : members)
                    for (int j : it->second)
                        if (j > i &&
                            dist2(points.data() + static_cast<std::size_t>(i) * dims,
                                  points.data() + static_cast<std::size_t>(j) * dims, dims) <= r2)
                            pairs.emplace_back(i, j);
            }
            int d = 0;
            while (d < dims && offs[d] == 1) offs[d++] = -1;
            if (d == dims) break;
            ++offs[d];
        }
    }
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

std::vector<std::pair<int, int>> radius_neighbors(const std::vector<double>& points, int n, int dims,
                                                  double radius) {
    if (static_cast<std::size_t>(n) * dims != points.size())
        throw std::invalid_argument("radius_neighbors: point buffer size mismatch");
    if (radius < 0.0) throw std::invalid_argument("radius_neighbors: negative radius");
    for (double v : points)
        if (!std::isfinite(v)) throw std::invalid_argument("radius_neighbors: non-finite coordinate");
    if (n < 2) return {};
    if (radius == 0.0) return radius_neighbors_cellgrid(points, n, dims, radius);

    // Dense, box-bounded clouds favor the grid; otherwise the k-d tree.
    double span = 0.0;
    for (int d = 0; d < dims; ++d) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (int i = 0; i < n; ++i) {
            const double v = points[static_cast<std::size_t>(i) * dims + d];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        span = std::max(span, hi - lo);
    }
    const double cells_per_dim = span / radius;
    if (std::pow(cells_per_dim, dims) <= 8.0 * n + 64.0)
        return radius_neighbors_cellgrid(points, n, dims, radius);
    return radius_neighbors_kdtree(points, n, dims, radius);
}

TemporalGraph build_temporal_graph(const TrajectoryRecord& rec, int t0, int window, double radius) {
    if (window < 2) throw std::invalid_argument("build_temporal_graph: window must be >= 2");
    if (t0 < 0 || t0 + window > rec.T) throw std::invalid_argument("build_temporal_graph: window out of range");
    const int N = rec.N, D = rec.D, K = window;
    TemporalGraph g;
    g.n_agents = N;
    g.n_steps = K;
    g.feat_dim = 3 * D;
    g.env_id = rec.env_id;
    g.features.resize(static_cast<std::size_t>(N) * K * g.feat_dim);
    for (int k = 0; k < K; ++k) {
        const int t = t0 + k;
        for (int i = 0; i < N; ++i) {
            double* row = g.features.data() +
                          static_cast<std::size_t>(g.node_id(k, i)) * g.feat_dim;
            for (int d = 0; d < D; ++d) {
                row[d] = rec.pos(t, i, d);
                row[D + d] = rec.vel(t, i, d);
                row[2 * D + d] = rec.acc(t, i, d);
            }
        }
    }
    if (radius > 0.0) {
        std::vector<double> slice(static_cast<std::size_t>(N) * D);
        for (int k = 0; k < K; ++k) {
            const int t = t0 + k;
            for (int i = 0; i < N; ++i)
                for (int d = 0; d < D; ++d) slice[static_cast<std::size_t>(i) * D + d] = rec.pos(t, i, d);
            for (auto [i, j] : radius_neighbors(slice, N, D, radius))
                g.spatial_edges.emplace_back(g.node_id(k, i), g.node_id(k, j));
        }
    }
    for (int k = 1; k < K; ++k)
        for (int i = 0; i < N; ++i)
            g.temporal_edges.emplace_back(g.node_id(k - 1, i), g.node_id(k, i));
    return g;
}

std::vector<double> temporal_encoding(double dt, int d) {
    if (d < 2 || d % 2 != 0) throw std::invalid_argument("temporal_encoding: d must be even and >= 2");
    std::vector<double> te(d);
    for (int i = 0; i < d / 2; ++i) {
        const double freq = std::pow(10000.0, -2.0 * i / d);
        te[2 * i] = std::sin(dt * freq);
        te[2 * i + 1] = std::cos(dt * freq);
    }
    return te;
}

Adjacency build_adjacency(const TemporalGraph& g) {
    Adjacency adj;
    adj.in.resize(g.node_count());
    for (auto [a, b] : g.spatial_edges) {
        adj.in[b].emplace_back(a, 0);
        adj.in[a].emplace_back(b, 0);
    }
    for (auto [a, b] : g.temporal_edges) adj.in[b].emplace_back(a, 1);
    return adj;
}

}  // namespace ggode
