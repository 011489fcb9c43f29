#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "json.hpp"

#include "rmd/graphs.hpp"

namespace rmd {

enum class laplacian_kind { unnormalized, normalized_sym };
enum class cut_objective { rcut, ncut };

std::string to_string(cut_objective obj);
cut_objective objective_from_string(const std::string& s);

/// Graph Laplacian: L = D - W (unnormalized) or I - D^{-1/2} W D^{-1/2}.
/// The normalized kind rejects graphs with isolated nodes.
Eigen::SparseMatrix<double> laplacian(const sparse_graph& graph, laplacian_kind kind);

/// Component id per node (ids ordered by smallest contained node index).
std::vector<int> connected_components(const sparse_graph& graph);

/// Assignment of each node to one of K clusters.
struct partition {
    std::vector<int> assignment;
    int k = 0;
    nlohmann::json provenance = nlohmann::json::object();

    int n() const { return static_cast<int>(assignment.size()); }
    std::vector<int> cluster_sizes() const;
    void validate() const;
};

struct eig_result {
    Eigen::VectorXd values;   // ascending
    Eigen::MatrixXd vectors;  // n x k, orthonormal
};

/// K smallest eigenpairs of a symmetric PSD sparse matrix. Dense solve for
/// n <= 500; otherwise shift-invert Lanczos with full reorthogonalization.
/// known_null optionally supplies an exact orthonormal null-space basis
/// (e.g. component indicators) which is deflated and returned first.
eig_result smallest_eigenpairs(const Eigen::SparseMatrix<double>& matrix, int k,
                               std::uint64_t seed, double tol = 1e-8, int max_iter = 5000,
                               const Eigen::MatrixXd* known_null = nullptr);

struct kmeans_result {
    std::vector<int> assignment;
    Eigen::MatrixXd centroids;
    double wcss = 0.0;
};

/// Lloyd's algorithm with greedy farthest-point initialization and
/// multiple restarts; fully deterministic for a fixed seed.
kmeans_result kmeans(const Eigen::MatrixXd& rows, int k, std::uint64_t seed, int restarts = 10,
                     int max_iter = 300, double rel_tol = 1e-6);

/// K-way spectral clustering: rcut uses the unnormalized Laplacian, ncut the
/// symmetric-normalized one with row-normalized embedding; K-means on the
/// spectral embedding. Graphs with >= K connected components are partitioned
/// by components directly.
partition spectral_cluster(const sparse_graph& graph, int K, cut_objective objective,
                           std::uint64_t seed);

void save_partition_csv(const partition& part, const std::string& path);
partition load_partition_csv(const std::string& path);

}  // namespace rmd
