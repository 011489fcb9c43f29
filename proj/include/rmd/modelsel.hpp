#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "rmd/dataset.hpp"
#include "rmd/graphs.hpp"
#include "rmd/rank.hpp"
#include "rmd/spectral.hpp"

namespace rmd {

/// One point of the (lambda, k, sigma) family sweep.
struct candidate_partition {
    partition part;
    double lambda = 1.0;
    int k = 0;
    double sigma = 0.0;
    double cut0 = 0.0;
    double min_cluster_fraction = 0.0;
    bool feasible = false;
    std::string error;  // non-empty if the build or the learner failed

    bool ok() const { return error.empty(); }
};

/// Sum over clusters of the cut between the cluster and its complement,
/// evaluated on the fixed reference graph (each crossing edge counts twice).
double cut0_evaluate(const partition& part, const sparse_graph& reference);

/// Fraction of nodes in the smallest cluster.
double min_cluster_fraction(const partition& part);

/// Build the RMD graph and run spectral clustering for every grid point;
/// failures are recorded per candidate rather than aborting the sweep.
std::vector<candidate_partition> sweep(const data_set& data, const rank_estimate& ranks,
                                       const family_grid& grid, int K, cut_objective learner,
                                       const sparse_graph& reference, double delta,
                                       std::uint64_t seed, int workers = 0);

struct model_selection_report {
    std::vector<candidate_partition> candidates;
    graph_build_params reference;
    double delta = 0.0;
    std::optional<int> winner;

    nlohmann::json to_json(bool include_assignments = false) const;
};

/// Pick the feasible candidate with minimum cut0; ties broken by larger
/// min cluster fraction, then lexicographic (lambda, k, sigma).
model_selection_report select(std::vector<candidate_partition> candidates,
                              const sparse_graph& reference, double delta);

struct delta_sweep_point {
    double delta = 0.0;
    std::optional<int> winner;
    double cut0 = 0.0;
    double lambda = 0.0;
    int k = 0;
    double sigma = 0.0;
    std::string digest;
};

struct delta_sweep_curve {
    std::vector<delta_sweep_point> points;

    nlohmann::json to_json() const;
};

/// Winner per delta over a descending delta grid.
delta_sweep_curve delta_sweep(const std::vector<candidate_partition>& candidates,
                              const sparse_graph& reference, const std::vector<double>& delta_grid);

/// Maximal runs (>= 2 grid points) with identical winner partition and cut0
/// relative variation below rel_tol; small clusters show up as such flats.
struct flat_spot {
    double delta_high = 0.0;
    double delta_low = 0.0;
    std::string digest;
    int first_point = 0;  // index into curve.points
    int last_point = 0;
};

std::vector<flat_spot> flat_spots(const delta_sweep_curve& curve, double rel_tol = 0.01);

/// Stable content hash of an assignment (FNV-1a over cluster ids).
std::string partition_digest(const partition& part);

void save_delta_curve_csv(const delta_sweep_curve& curve, const std::string& path);

}  // namespace rmd
