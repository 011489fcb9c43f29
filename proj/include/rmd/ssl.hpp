#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rmd/dataset.hpp"
#include "rmd/graphs.hpp"
#include "rmd/spectral.hpp"

namespace rmd {

/// Per-node class scores; labeled rows are one-hot, unlabeled rows are the
/// harmonic extension of the labeled values over the graph.
struct soft_labels {
    Eigen::MatrixXd scores;  // n x K
    std::vector<std::uint8_t> labeled_mask;
    int num_classes = 0;
};

/// Gaussian-random-field solve: with the unnormalized Laplacian L, unlabeled
/// scores satisfy L_uu F_u = -L_ul F_l, i.e. each unlabeled node's score is
/// the weighted average of its neighbors'. Requires at least one labeled node
/// per class and a labeled node reachable from every unlabeled node.
soft_labels grf_solve(const sparse_graph& graph, const Eigen::MatrixXd& labels_onehot,
                      const std::vector<std::uint8_t>& mask);

/// Per-node argmax over class columns, ties broken by lower class id.
partition predict(const soft_labels& soft);

/// Pick `count` labeled nodes uniformly at random with at least one per class.
std::vector<std::uint8_t> choose_labeled_mask(const data_set& data, int count, std::uint64_t seed);

/// One-hot matrix for the masked nodes of a labeled data set (zero rows elsewhere).
Eigen::MatrixXd one_hot_labels(const data_set& data, const std::vector<std::uint8_t>& mask,
                               int num_classes);

void save_soft_labels_csv(const soft_labels& soft, const std::string& path);

}  // namespace rmd
