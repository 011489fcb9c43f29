#include "rmd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "rmd/common.hpp"

namespace rmd {

namespace {

void check_two_blocks(const partition& part) {
    part.validate();
    if (part.k != 2) throw data_error("operation requires a two-block partition");
    const auto sizes = part.cluster_sizes();
    if (sizes[0] == 0 || sizes[1] == 0) throw data_error("partition block is empty");
}

Eigen::VectorXd cluster_volumes(const sparse_graph& graph, const partition& part) {
    Eigen::VectorXd vol = Eigen::VectorXd::Zero(part.k);
    const Eigen::VectorXd deg = graph.degrees();
    for (int i = 0; i < graph.n; ++i) vol[part.assignment[i]] += deg[i];
    return vol;
}

}  // namespace

double cut_value(const sparse_graph& graph, const partition& part) {
    check_two_blocks(part);
    if (part.n() != graph.n) throw data_error("partition/graph size mismatch");
    double cut = 0.0;
    for (const auto& e : graph.edges) {
        if (part.assignment[e.u] != part.assignment[e.v]) cut += e.w;
    }
    return cut;
}

double objective_value(const sparse_graph& graph, const partition& part, cut_objective objective) {
    part.validate();
    if (part.n() != graph.n) throw data_error("partition/graph size mismatch");
    const auto sizes = part.cluster_sizes();
    for (int c = 0; c < part.k; ++c) {
        if (sizes[c] == 0) throw data_error("cluster " + std::to_string(c) + " is empty");
    }

    std::vector<double> boundary(part.k, 0.0);
    for (const auto& e : graph.edges) {
        if (part.assignment[e.u] != part.assignment[e.v]) {
            boundary[part.assignment[e.u]] += e.w;
            boundary[part.assignment[e.v]] += e.w;
        }
    }

    double total = 0.0;
    if (objective == cut_objective::rcut) {
        for (int c = 0; c < part.k; ++c) {
            total += boundary[c] * static_cast<double>(graph.n) / sizes[c];
        }
    } else {
        const Eigen::VectorXd vol = cluster_volumes(graph, part);
        const double vol_total = vol.sum();
        for (int c = 0; c < part.k; ++c) {
            if (!(vol[c] > 0.0)) {
                throw data_error("cluster " + std::to_string(c) + " has zero volume");
            }
            total += boundary[c] * vol_total / vol[c];
        }
    }
    return total;
}

cut_diagnostics_result cut_diagnostics(const sparse_graph& graph, const partition& candidate,
                                       const partition& balanced, size_mode mode) {
    check_two_blocks(candidate);
    check_two_blocks(balanced);
    if (candidate.n() != graph.n || balanced.n() != graph.n) {
        throw data_error("partition/graph size mismatch");
    }

    double size_a, size_b, bal_a, bal_b, granularity;
    if (mode == size_mode::cardinality) {
        const auto cs = candidate.cluster_sizes();
        const auto bs = balanced.cluster_sizes();
        size_a = cs[0];
        size_b = cs[1];
        bal_a = bs[0];
        bal_b = bs[1];
        granularity = 1.0;
    } else {
        const Eigen::VectorXd cv = cluster_volumes(graph, candidate);
        const Eigen::VectorXd bv = cluster_volumes(graph, balanced);
        size_a = cv[0];
        size_b = cv[1];
        bal_a = bv[0];
        bal_b = bv[1];
        const Eigen::VectorXd deg = graph.degrees();
        granularity = deg.maxCoeff();
    }
    if (std::abs(bal_a - bal_b) > granularity + 1e-12) {
        throw data_error("comparison partition is not balanced under the requested size mode");
    }

    const double balanced_cut = cut_value(graph, balanced);
    if (!(balanced_cut > 0.0)) throw data_error("balanced cut value is zero");

    cut_diagnostics_result out;
    out.mode = mode;
    out.q = cut_value(graph, candidate) / balanced_cut;
    out.y = std::min(size_a, size_b) / (size_a + size_b);
    return out;
}

bool sc_fails_predicate(double q, double y) {
    if (q < 0.0) throw data_error("cut-ratio q must be nonnegative");
    if (y < 0.0 || y > 0.5) throw data_error("unbalancedness y must lie in [0, 0.5]");
    return q > 4.0 * y * (1.0 - y);
}

double clustering_error(const partition& predicted, const std::vector<int>& truth) {
    predicted.validate();
    const int n = predicted.n();
    if (static_cast<int>(truth.size()) != n) throw data_error("prediction/truth size mismatch");

    std::vector<int> classes(truth);
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    const int k = static_cast<int>(classes.size());
    if (k != predicted.k) {
        throw data_error("clustering_error needs as many true classes as clusters (got " +
                         std::to_string(k) + " classes, " + std::to_string(predicted.k) +
                         " clusters)");
    }
    if (k > 8) throw data_error("clustering_error supports at most 8 clusters");

    // contingency[c][t] = points in cluster c with true class index t
    std::vector<std::vector<int>> contingency(k, std::vector<int>(k, 0));
    for (int i = 0; i < n; ++i) {
        const int t = static_cast<int>(
            std::lower_bound(classes.begin(), classes.end(), truth[i]) - classes.begin());
        ++contingency[predicted.assignment[i]][t];
    }

    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    int best_matched = 0;
    do {
        int matched = 0;
        for (int c = 0; c < k; ++c) matched += contingency[c][perm[c]];
        best_matched = std::max(best_matched, matched);
    } while (std::next_permutation(perm.begin(), perm.end()));

    return 1.0 - static_cast<double>(best_matched) / n;
}

std::vector<cut_sweep_row> cut_position_sweep(const data_set& data, const sparse_graph& graph,
                                              int axis) {
    data.validate();
    if (data.n() != graph.n) throw data_error("data/graph size mismatch");
    if (axis < 0 || axis >= data.d()) throw data_error("axis out of range");
    const int n = graph.n;

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double xa = data.points(a, axis), xb = data.points(b, axis);
        return xa != xb ? xa < xb : a < b;
    });

    const Eigen::VectorXd deg = graph.degrees();
    const double vol_total = deg.sum();

    std::vector<std::uint8_t> in_left(n, 0);
    double cut = 0.0;
    double vol_left = 0.0;
    std::vector<cut_sweep_row> rows;
    rows.reserve(n - 1);

    for (int i = 0; i < n - 1; ++i) {
        const int u = order[i];
        // moving u from the right block to the left block
        for (int j = graph.adj_offsets[u]; j < graph.adj_offsets[u + 1]; ++j) {
            const int v = graph.adj_neighbors[j];
            cut += in_left[v] ? -graph.adj_weights[j] : graph.adj_weights[j];
        }
        in_left[u] = 1;
        vol_left += deg[u];

        const double x_here = data.points(u, axis);
        const double x_next = data.points(order[i + 1], axis);
        if (x_next <= x_here) continue;  // tied coordinates: no boundary between them

        cut_sweep_row row;
        row.position = 0.5 * (x_here + x_next);
        row.cut = cut;
        const int left = i + 1;
        const int right = n - left;
        row.rcut = cut * (static_cast<double>(n) / left + static_cast<double>(n) / right);
        const double vol_right = vol_total - vol_left;
        row.ncut = (vol_left > 0.0 && vol_right > 0.0)
                       ? cut * (vol_total / vol_left + vol_total / vol_right)
                       : std::numeric_limits<double>::infinity();
        rows.push_back(row);
    }
    return rows;
}

double min_objective_position(const std::vector<cut_sweep_row>& sweep, cut_objective objective) {
    if (sweep.empty()) throw data_error("empty cut sweep");
    const cut_sweep_row* best = &sweep.front();
    for (const auto& row : sweep) {
        const double v = objective == cut_objective::rcut ? row.rcut : row.ncut;
        const double b = objective == cut_objective::rcut ? best->rcut : best->ncut;
        if (v < b) best = &row;
    }
    return best->position;
}

double best_threshold_position(const data_set& data, const partition& part, int axis) {
    check_two_blocks(part);
    if (part.n() != data.n()) throw data_error("partition/data size mismatch");
    const int n = data.n();

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double xa = data.points(a, axis), xb = data.points(b, axis);
        return xa != xb ? xa < xb : a < b;
    });

    const int total_ones = static_cast<int>(
        std::count(part.assignment.begin(), part.assignment.end(), 1));

    // For a threshold after sorted position i: predicting (left=0, right=1)
    // disagrees with ones in the prefix and zeros in the suffix; the swapped
    // labeling is the complement. Clean separations tie over every threshold
    // inside the gap, so the middle of the tied range is reported.
    int prefix_ones = 0;
    int best_err = n + 1;
    std::vector<double> tied;
    for (int i = 0; i < n - 1; ++i) {
        prefix_ones += part.assignment[order[i]];
        const double x_here = data.points(order[i], axis);
        const double x_next = data.points(order[i + 1], axis);
        if (x_next <= x_here) continue;
        const int left = i + 1;
        const int err_a = prefix_ones + (n - left - (total_ones - prefix_ones));
        const int err_b = n - err_a;
        const int err = std::min(err_a, err_b);
        if (err < best_err) {
            best_err = err;
            tied.clear();
        }
        if (err == best_err) tied.push_back(0.5 * (x_here + x_next));
    }
    if (tied.empty()) return data.points(order[0], axis) - 1.0;
    return tied[tied.size() / 2];
}

void save_cut_sweep_csv(const std::vector<cut_sweep_row>& sweep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write file: " + path);
    out << "position,cut,rcut,ncut\n";
    char buf[40];
    for (const auto& row : sweep) {
        std::snprintf(buf, sizeof(buf), "%.17g", row.position);
        out << buf;
        std::snprintf(buf, sizeof(buf), "%.17g", row.cut);
        out << ',' << buf;
        std::snprintf(buf, sizeof(buf), "%.17g", row.rcut);
        out << ',' << buf;
        std::snprintf(buf, sizeof(buf), "%.17g", row.ncut);
        out << ',' << buf << '\n';
    }
}

}  // namespace rmd
