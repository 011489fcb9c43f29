#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "rmd/dataset.hpp"

namespace rmd {

/// Per-query sorted nearest-neighbor distances and reference indices
/// (Euclidean metric, ties broken by smaller reference index).
struct neighbor_index {
    Eigen::MatrixXd distances;  // n_query x k, nondecreasing per row
    Eigen::MatrixXi indices;    // n_query x k
    bool self_excluded = false;

    int query_count() const { return static_cast<int>(distances.rows()); }
    int k() const { return static_cast<int>(distances.cols()); }
};

/// Exact k nearest neighbors of each query among the reference rows.
/// When exclude_self is set, queries and references must be the same matrix
/// (by row correspondence) and each query skips its own index.
neighbor_index knn_distances(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& references,
                             int max_k, bool exclude_self, int workers = 0);

/// Self-neighborhood convenience: queries == references, self excluded.
neighbor_index knn_self(const Eigen::MatrixXd& points, int max_k, int workers = 0);

/// Nearest-neighbor distance statistic used as a density surrogate.
/// Unweighted: mean of the (l+1)-th to 2l-th neighbor distances.
/// Weighted: mean over the window i in [l - floor((l-1)/2), l + floor(l/2)]
/// of (l/i)^(1/dim) times the i-th neighbor distance.
double g_statistic(const Eigen::VectorXd& sorted_distances, int l, bool weighted, int dim);

/// Normalized density ranks in (0, 1]; high rank means high density.
struct rank_estimate {
    Eigen::VectorXd ranks;          // n, mean over rounds
    Eigen::MatrixXd g_values;       // n x rounds
    Eigen::MatrixXi half_of_round;  // n x rounds, 0/1: which half ranked the point
    int l = 0;
    int rounds = 0;
    bool weighted = false;
};

/// Rank every sample by the G statistic with variance reduction over
/// `rounds` random half-splits: each round the sample is split in two, every
/// point's G is computed against the opposite half, and each half is ranked
/// among itself (smaller G, i.e. denser, ranks higher; compared pairs share
/// a reference set). The final rank is the mean of the per-round ranks.
/// Requires n >= 4l.
rank_estimate compute_ranks(const data_set& data, int l, int rounds, std::uint64_t seed,
                            bool weighted = false, int workers = 0);

/// CSV export: point index, rank, mean G over rounds.
void save_ranks_csv(const rank_estimate& est, const std::string& path);

}  // namespace rmd
