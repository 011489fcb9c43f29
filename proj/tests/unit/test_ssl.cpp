#include "doctest.h"

#include <cmath>

#include "rmd/common.hpp"
#include "rmd/dataset.hpp"
#include "rmd/graphs.hpp"
#include "rmd/ssl.hpp"

using namespace rmd;

namespace {

sparse_graph make_graph(int n, std::initializer_list<sparse_graph::edge> edges) {
    sparse_graph g;
    g.n = n;
    g.edges = edges;
    g.finalize();
    return g;
}

}  // namespace

TEST_CASE("harmonic midpoint on a path") {
    const sparse_graph g = make_graph(3, {{0, 1, 1.0}, {1, 2, 1.0}});
    Eigen::MatrixXd labels = Eigen::MatrixXd::Zero(3, 2);
    labels(0, 0) = 1.0;  // a: class 0
    labels(2, 1) = 1.0;  // c: class 1
    const soft_labels soft = grf_solve(g, labels, {1, 0, 1});
    CHECK(soft.scores(1, 0) == doctest::Approx(0.5));
    CHECK(soft.scores(1, 1) == doctest::Approx(0.5));
}

TEST_CASE("fully labeled input passes through") {
    const sparse_graph g = make_graph(2, {{0, 1, 2.0}});
    Eigen::MatrixXd labels(2, 2);
    labels << 1, 0, 0, 1;
    const soft_labels soft = grf_solve(g, labels, {1, 1});
    CHECK(soft.scores == labels);
}

TEST_CASE("star center averages its labeled leaves") {
    const sparse_graph g = make_graph(4, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}});
    Eigen::MatrixXd labels = Eigen::MatrixXd::Zero(4, 2);
    labels(1, 0) = 1.0;
    labels(2, 1) = 1.0;
    labels(3, 1) = 1.0;
    const soft_labels soft = grf_solve(g, labels, {0, 1, 1, 1});
    CHECK(soft.scores(0, 0) == doctest::Approx(1.0 / 3.0));
    CHECK(soft.scores(0, 1) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("unlabeled component with no labeled node is reported") {
    const sparse_graph g = make_graph(4, {{0, 1, 1.0}, {2, 3, 1.0}});
    Eigen::MatrixXd labels = Eigen::MatrixXd::Zero(4, 1);
    labels(0, 0) = 1.0;
    CHECK_THROWS_WITH_AS(grf_solve(g, labels, {1, 0, 0, 0}), doctest::Contains("2"), data_error);
}

TEST_CASE("every class needs a labeled node") {
    const sparse_graph g = make_graph(2, {{0, 1, 1.0}});
    Eigen::MatrixXd labels = Eigen::MatrixXd::Zero(2, 2);
    labels(0, 0) = 1.0;
    CHECK_THROWS_AS(grf_solve(g, labels, {1, 0}), data_error);
}

TEST_CASE("harmonicity and the maximum principle hold on a real graph") {
    const data_set data = gen_two_moons_gaussian(400, {0.45, 0.45, 0.10}, 0.1, 3);
    const sparse_graph g = build_knn(data, 10, weighting_mode::rbf, mean_knn_distance(data, 10));
    const auto mask = choose_labeled_mask(data, 20, 5);
    const Eigen::MatrixXd onehot = one_hot_labels(data, mask, 3);
    const soft_labels soft = grf_solve(g, onehot, mask);

    for (int u = 0; u < g.n; ++u) {
        if (mask[u]) continue;
        Eigen::VectorXd avg = Eigen::VectorXd::Zero(3);
        double total = 0.0;
        for (int j = g.adj_offsets[u]; j < g.adj_offsets[u + 1]; ++j) {
            avg += g.adj_weights[j] * soft.scores.row(g.adj_neighbors[j]).transpose();
            total += g.adj_weights[j];
        }
        avg /= total;
        CHECK((soft.scores.row(u).transpose() - avg).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(soft.scores.row(u).minCoeff() >= -1e-10);
        CHECK(soft.scores.row(u).maxCoeff() <= 1.0 + 1e-10);
    }
}

TEST_CASE("edge weight scaling leaves the harmonic solution unchanged") {
    const data_set data = gen_two_moons_gaussian(200, {0.45, 0.45, 0.10}, 0.1, 7);
    sparse_graph g = build_knn(data, 8, weighting_mode::binary);
    const auto mask = choose_labeled_mask(data, 12, 9);
    const Eigen::MatrixXd onehot = one_hot_labels(data, mask, 3);
    const soft_labels base = grf_solve(g, onehot, mask);

    sparse_graph scaled = g;
    for (auto& e : scaled.edges) e.w *= 7.5;
    scaled.finalize();
    const soft_labels after = grf_solve(scaled, onehot, mask);
    CHECK((base.scores - after.scores).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("prediction takes the argmax with low-id tie break") {
    soft_labels soft;
    soft.scores.resize(3, 2);
    soft.scores << 0.9, 0.1, 0.5, 0.5, 0.2, 0.8;
    soft.labeled_mask = {0, 0, 0};
    soft.num_classes = 2;
    const partition pred = predict(soft);
    CHECK(pred.assignment == std::vector<int>{0, 0, 1});
}

TEST_CASE("labeled nodes keep their own labels after prediction") {
    const sparse_graph g = make_graph(3, {{0, 1, 1.0}, {1, 2, 1.0}});
    Eigen::MatrixXd labels = Eigen::MatrixXd::Zero(3, 2);
    labels(0, 0) = 1.0;
    labels(2, 1) = 1.0;
    const soft_labels soft = grf_solve(g, labels, {1, 0, 1});
    const partition pred = predict(soft);
    CHECK(pred.assignment[0] == 0);
    CHECK(pred.assignment[2] == 1);
}

TEST_CASE("labeled mask covers every class") {
    const data_set data = gen_two_moons_gaussian(300, {0.45, 0.45, 0.10}, 0.1, 13);
    const auto mask = choose_labeled_mask(data, 20, 31);
    std::array<int, 3> covered{0, 0, 0};
    int total = 0;
    for (int i = 0; i < data.n(); ++i) {
        if (mask[i]) {
            ++covered[(*data.labels)[i]];
            ++total;
        }
    }
    CHECK(total == 20);
    CHECK(covered[0] > 0);
    CHECK(covered[1] > 0);
    CHECK(covered[2] > 0);
}
