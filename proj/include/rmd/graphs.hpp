#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

#include "rmd/dataset.hpp"
#include "rmd/rank.hpp"

namespace rmd {

enum class weighting_mode { binary, rbf, adaptive_rbf };

std::string to_string(weighting_mode mode);
weighting_mode weighting_from_string(const std::string& s);

/// Parameters a graph was built with, kept for provenance and selection.
struct graph_build_params {
    std::string kind;  // "knn", "rmd", "epsilon", "full_rbf", "full_arbf"
    int k = 0;
    double epsilon = 0.0;
    double sigma = 0.0;
    double lambda = 1.0;
    weighting_mode weighting = weighting_mode::binary;

    nlohmann::json to_json() const;
    static graph_build_params from_json(const nlohmann::json& j);
};

/// Undirected weighted graph over sample indices. Edges are stored once with
/// u < v, sorted, without self-loops or duplicates; all weights positive.
struct sparse_graph {
    struct edge {
        int u;
        int v;
        double w;
    };

    int n = 0;
    std::vector<edge> edges;
    graph_build_params build_params;

    // CSR adjacency, filled by finalize().
    std::vector<int> adj_offsets;
    std::vector<int> adj_neighbors;
    std::vector<double> adj_weights;

    /// Canonicalize (u < v), sort, merge duplicates and build the adjacency.
    void finalize();
    void validate() const;

    /// Weighted degree per node.
    Eigen::VectorXd degrees() const;
    double total_weight() const;
};

/// Target degree from a density rank: round(k * (lambda + 2(1-lambda)*rank)).
/// Monotone nondecreasing in rank; the caller clamps to [1, n-1].
int degree_schedule(double rank, int k, double lambda);

/// Union-symmetrized k-NN graph.
sparse_graph build_knn(const data_set& data, int k, weighting_mode mode, double sigma = 0.0,
                       int workers = 0);

/// Rank-modulated-degree graph: node x selects its deg(x) nearest neighbors
/// with deg(x) from degree_schedule, then the edge set is symmetrized by
/// union. lambda = 1 reproduces build_knn exactly.
sparse_graph build_rmd(const data_set& data, const rank_estimate& ranks, int k, double lambda,
                       weighting_mode mode, double sigma = 0.0, int workers = 0);

/// epsilon-graph: connects pairs at distance <= epsilon.
sparse_graph build_epsilon(const data_set& data, double epsilon, weighting_mode mode,
                           double sigma = 0.0);

/// Fully connected graph with w = exp(-d^2 / (2 sigma^2)).
sparse_graph build_full_rbf(const data_set& data, double sigma);

/// Fully connected graph with adaptive weights w = exp(-d^2 / (2 sigma_u sigma_v)),
/// where sigma_u is the k-NN distance of node u.
sparse_graph build_full_arbf(const data_set& data, int k, int workers = 0);

/// Average over all points of the distance to the k-th nearest neighbor.
double mean_knn_distance(const data_set& data, int k, int workers = 0);

/// Edge-list CSV (u,v,w) with a JSON build_params header line; lossless round-trip.
void save_graph_csv(const sparse_graph& graph, const std::string& path);
sparse_graph load_graph_csv(const std::string& path);

/// Family sweep grid over (lambda, k, sigma multiplier).
struct family_grid {
    std::vector<double> lambdas = {0.2, 0.4, 0.6, 0.8, 1.0};
    std::vector<int> ks = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
    // sigma = multiplier * mean k-NN distance for the candidate's k
    std::vector<double> sigma_multipliers = {0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
    weighting_mode weighting = weighting_mode::rbf;

    void validate() const;
};

}  // namespace rmd
