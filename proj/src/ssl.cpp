#include "rmd/ssl.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <fstream>
#include <numeric>
#include <set>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include "rmd/common.hpp"

namespace rmd {

soft_labels grf_solve(const sparse_graph& graph, const Eigen::MatrixXd& labels_onehot,
                      const std::vector<std::uint8_t>& mask) {
    graph.validate();
    const int n = graph.n;
    const int num_classes = static_cast<int>(labels_onehot.cols());
    if (static_cast<int>(mask.size()) != n || labels_onehot.rows() != n) {
        throw data_error("grf_solve: label/mask size mismatch with graph");
    }
    if (num_classes < 1) throw data_error("grf_solve: need at least one class column");

    Eigen::VectorXd class_mass = Eigen::VectorXd::Zero(num_classes);
    for (int i = 0; i < n; ++i) {
        if (mask[i]) class_mass += labels_onehot.row(i).transpose();
    }
    for (int c = 0; c < num_classes; ++c) {
        if (class_mass[c] <= 0.0) {
            throw data_error("grf_solve: class " + std::to_string(c) + " has no labeled node");
        }
    }

    // Every unlabeled node must reach a labeled one.
    std::vector<std::uint8_t> reached(mask.begin(), mask.end());
    std::deque<int> queue;
    for (int i = 0; i < n; ++i) {
        if (mask[i]) queue.push_back(i);
    }
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        for (int j = graph.adj_offsets[u]; j < graph.adj_offsets[u + 1]; ++j) {
            const int v = graph.adj_neighbors[j];
            if (!reached[v]) {
                reached[v] = 1;
                queue.push_back(v);
            }
        }
    }
    std::vector<int> orphaned;
    for (int i = 0; i < n; ++i) {
        if (!reached[i]) orphaned.push_back(i);
    }
    if (!orphaned.empty()) {
        std::string msg = "grf_solve: unlabeled component with no labeled node, nodes {";
        for (std::size_t i = 0; i < orphaned.size() && i < 10; ++i) {
            msg += (i ? "," : "") + std::to_string(orphaned[i]);
        }
        if (orphaned.size() > 10) msg += ",...";
        throw data_error(msg + "}");
    }

    std::vector<int> unlabeled;
    std::vector<int> u_index(n, -1);
    for (int i = 0; i < n; ++i) {
        if (!mask[i]) {
            u_index[i] = static_cast<int>(unlabeled.size());
            unlabeled.push_back(i);
        }
    }
    const int nu = static_cast<int>(unlabeled.size());

    soft_labels out;
    out.scores = labels_onehot;
    out.labeled_mask = mask;
    out.num_classes = num_classes;
    if (nu == 0) return out;

    // L_uu and the boundary load -L_ul F_l assembled from the edge list.
    std::vector<Eigen::Triplet<double>> triplets;
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(nu);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nu, num_classes);
    for (const auto& e : graph.edges) {
        const bool lu = mask[e.u], lv = mask[e.v];
        if (!lu) diag[u_index[e.u]] += e.w;
        if (!lv) diag[u_index[e.v]] += e.w;
        if (!lu && !lv) {
            triplets.emplace_back(u_index[e.u], u_index[e.v], -e.w);
            triplets.emplace_back(u_index[e.v], u_index[e.u], -e.w);
        } else if (!lu && lv) {
            rhs.row(u_index[e.u]) += e.w * labels_onehot.row(e.v);
        } else if (lu && !lv) {
            rhs.row(u_index[e.v]) += e.w * labels_onehot.row(e.u);
        }
    }
    for (int i = 0; i < nu; ++i) triplets.emplace_back(i, i, diag[i]);
    Eigen::SparseMatrix<double> l_uu(nu, nu);
    l_uu.setFromTriplets(triplets.begin(), triplets.end());

    Eigen::MatrixXd f_u(nu, num_classes);
    if (nu <= 2000) {
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
        solver.compute(l_uu);
        if (solver.info() != Eigen::Success) {
            throw numeric_error("grf_solve: sparse factorization failed");
        }
        f_u = solver.solve(rhs);
    } else {
        Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
        cg.setTolerance(1e-10);
        cg.compute(l_uu);
        f_u = cg.solve(rhs);
        if (cg.info() != Eigen::Success) {
            throw numeric_error("grf_solve: conjugate gradient did not converge");
        }
    }
    for (int i = 0; i < nu; ++i) out.scores.row(unlabeled[i]) = f_u.row(i);
    return out;
}

partition predict(const soft_labels& soft) {
    const int n = static_cast<int>(soft.scores.rows());
    partition part;
    part.k = soft.num_classes;
    part.assignment.resize(n);
    for (int i = 0; i < n; ++i) {
        int best = 0;
        for (int c = 1; c < soft.num_classes; ++c) {
            if (soft.scores(i, c) > soft.scores(i, best)) best = c;
        }
        part.assignment[i] = best;
    }
    part.provenance = {{"method", "grf_predict"}};
    return part;
}

std::vector<std::uint8_t> choose_labeled_mask(const data_set& data, int count, std::uint64_t seed) {
    data.validate();
    if (!data.labels) throw data_error("choose_labeled_mask requires labels");
    const int n = data.n();
    const auto& labels = *data.labels;
    std::set<int> distinct(labels.begin(), labels.end());
    const int num_classes = static_cast<int>(distinct.size());
    if (count < num_classes || count > n) {
        throw data_error("labeled count must cover every class and fit the data set");
    }

    rng_stream rng(derive_seed(seed, "labeled-mask"));
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::vector<int> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        for (int i = 0; i < count; ++i) {
            const std::size_t j = i + rng.next_below(static_cast<std::uint64_t>(n - i));
            std::swap(idx[i], idx[j]);
        }
        std::set<int> covered;
        for (int i = 0; i < count; ++i) covered.insert(labels[idx[i]]);
        if (static_cast<int>(covered.size()) == num_classes) {
            std::vector<std::uint8_t> mask(n, 0);
            for (int i = 0; i < count; ++i) mask[idx[i]] = 1;
            return mask;
        }
    }
    throw data_error("could not draw a labeled set covering every class");
}

Eigen::MatrixXd one_hot_labels(const data_set& data, const std::vector<std::uint8_t>& mask,
                               int num_classes) {
    if (!data.labels) throw data_error("one_hot_labels requires labels");
    const int n = data.n();
    if (static_cast<int>(mask.size()) != n) throw data_error("mask size mismatch");
    Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n, num_classes);
    for (int i = 0; i < n; ++i) {
        if (!mask[i]) continue;
        const int c = (*data.labels)[i];
        if (c < 0 || c >= num_classes) throw data_error("label id out of range");
        onehot(i, c) = 1.0;
    }
    return onehot;
}

void save_soft_labels_csv(const soft_labels& soft, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write file: " + path);
    out << "node";
    for (int c = 0; c < soft.num_classes; ++c) out << ",score" << c;
    out << ",labeled,argmax\n";
    const partition pred = predict(soft);
    char buf[40];
    for (int i = 0; i < soft.scores.rows(); ++i) {
        out << i;
        for (int c = 0; c < soft.num_classes; ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", soft.scores(i, c));
            out << ',' << buf;
        }
        out << ',' << static_cast<int>(soft.labeled_mask[i]) << ',' << pred.assignment[i] << '\n';
    }
}

}  // namespace rmd
