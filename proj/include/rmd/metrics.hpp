#pragma once

#include <string>
#include <vector>

#include "rmd/dataset.hpp"
#include "rmd/graphs.hpp"
#include "rmd/spectral.hpp"

namespace rmd {

/// Sum of weights of edges crossing a two-block partition.
double cut_value(const sparse_graph& graph, const partition& part);

/// K-way RCut / NCut: sum over clusters of Cut(C_i, complement) times
/// |V|/|C_i| (rcut) or vol(V)/vol(C_i) (ncut). Matches the binary form at K=2.
double objective_value(const sparse_graph& graph, const partition& part, cut_objective objective);

enum class size_mode { cardinality, volume };

/// Cut-ratio q and unbalancedness y of a candidate two-way cut relative to a
/// balanced one: q = Cut(candidate)/Cut(balanced), y = min block share.
struct cut_diagnostics_result {
    double q = 0.0;
    double y = 0.0;
    size_mode mode = size_mode::cardinality;
};

cut_diagnostics_result cut_diagnostics(const sparse_graph& graph, const partition& candidate,
                                       const partition& balanced, size_mode mode);

/// True iff minimizing RCut/NCut prefers the balanced cut: q > 4y(1-y).
bool sc_fails_predicate(double q, double y);

/// Minimum misclassification fraction over all bijections between predicted
/// cluster ids and true class ids (brute force, K <= 8).
double clustering_error(const partition& predicted, const std::vector<int>& truth);

/// Axis-aligned cut sweep: for every boundary between consecutive sorted
/// coordinates, the Cut / RCut / NCut of the partition {x_axis <= position}.
struct cut_sweep_row {
    double position;
    double cut;
    double rcut;
    double ncut;
};

std::vector<cut_sweep_row> cut_position_sweep(const data_set& data, const sparse_graph& graph,
                                              int axis);

/// Position of the sweep's minimum for one of the objectives.
double min_objective_position(const std::vector<cut_sweep_row>& sweep, cut_objective objective);

/// Threshold along an axis that best separates a two-block partition
/// (minimum disagreement with the {coordinate <= t} rule).
double best_threshold_position(const data_set& data, const partition& part, int axis);

void save_cut_sweep_csv(const std::vector<cut_sweep_row>& sweep, const std::string& path);

}  // namespace rmd
