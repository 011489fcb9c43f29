#include "doctest.h"

#include <cmath>

#include "rmd/common.hpp"
#include "rmd/dataset.hpp"
#include "rmd/graphs.hpp"
#include "rmd/metrics.hpp"

using namespace rmd;

namespace {

sparse_graph make_graph(int n, std::initializer_list<sparse_graph::edge> edges) {
    sparse_graph g;
    g.n = n;
    g.edges = edges;
    g.finalize();
    return g;
}

partition make_partition(std::vector<int> assignment, int k) {
    partition p;
    p.assignment = std::move(assignment);
    p.k = k;
    return p;
}

// 4-node path a-b-c-d with unit weights
sparse_graph path4() {
    return make_graph(4, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}});
}

}  // namespace

TEST_CASE("cut value counts crossing weight") {
    const sparse_graph path3 = make_graph(3, {{0, 1, 1.0}, {1, 2, 1.0}});
    CHECK(cut_value(path3, make_partition({0, 1, 1}, 2)) == doctest::Approx(1.0));

    const sparse_graph two_comps = make_graph(4, {{0, 1, 1.0}, {2, 3, 1.0}});
    CHECK(cut_value(two_comps, make_partition({0, 0, 1, 1}, 2)) == doctest::Approx(0.0));

    sparse_graph k4;
    k4.n = 4;
    for (int u = 0; u < 4; ++u) {
        for (int v = u + 1; v < 4; ++v) k4.edges.push_back({u, v, 1.0});
    }
    k4.finalize();
    CHECK(cut_value(k4, make_partition({0, 1, 1, 1}, 2)) == doctest::Approx(3.0));

    CHECK_THROWS_AS(cut_value(path3, make_partition({0, 0, 0}, 2)), data_error);
}

TEST_CASE("objective values match the hand computation on the 4-path") {
    const sparse_graph g = path4();
    const partition split = make_partition({0, 0, 1, 1}, 2);
    CHECK(objective_value(g, split, cut_objective::rcut) == doctest::Approx(4.0));
    CHECK(objective_value(g, split, cut_objective::ncut) == doctest::Approx(4.0));

    const sparse_graph comps = make_graph(4, {{0, 1, 1.0}, {2, 3, 1.0}});
    CHECK(objective_value(comps, make_partition({0, 0, 1, 1}, 2), cut_objective::rcut) ==
          doctest::Approx(0.0));
}

TEST_CASE("objectives scale with edge weights, diagnostics do not") {
    const data_set data = gen_gaussian_mixture(two_gaussian_spec(), 120, 3);
    sparse_graph g = build_knn(data, 6, weighting_mode::rbf, 1.3);
    partition cand = make_partition(std::vector<int>(120, 0), 2);
    for (int i = 0; i < 40; ++i) cand.assignment[i] = 1;
    partition bal = make_partition(std::vector<int>(120, 0), 2);
    for (int i = 0; i < 60; ++i) bal.assignment[i] = 1;

    const double cut_before = cut_value(g, cand);
    const double rcut_before = objective_value(g, cand, cut_objective::rcut);
    const auto diag_before = cut_diagnostics(g, cand, bal, size_mode::cardinality);

    sparse_graph scaled = g;
    for (auto& e : scaled.edges) e.w *= 3.0;
    scaled.finalize();
    CHECK(cut_value(scaled, cand) == doctest::Approx(3.0 * cut_before));
    CHECK(objective_value(scaled, cand, cut_objective::rcut) == doctest::Approx(3.0 * rcut_before));
    const auto diag_after = cut_diagnostics(scaled, cand, bal, size_mode::cardinality);
    CHECK(diag_after.q == doctest::Approx(diag_before.q));
    CHECK(diag_after.y == doctest::Approx(diag_before.y));
}

TEST_CASE("cut diagnostics report q and the min block share") {
    const sparse_graph g = path4();
    const partition bal = make_partition({0, 0, 1, 1}, 2);
    const auto self_diag = cut_diagnostics(g, bal, bal, size_mode::cardinality);
    CHECK(self_diag.q == doctest::Approx(1.0));
    CHECK(self_diag.y == doctest::Approx(0.5));

    const partition skew = make_partition({0, 1, 1, 1}, 2);
    const auto diag = cut_diagnostics(g, skew, bal, size_mode::cardinality);
    CHECK(diag.y == doctest::Approx(0.25));

    // balanced partition must actually be balanced
    CHECK_THROWS_AS(cut_diagnostics(g, bal, skew, size_mode::cardinality), data_error);
}

TEST_CASE("failure predicate evaluates q > 4y(1-y)") {
    CHECK(!sc_fails_predicate(1.0, 0.5));
    CHECK(sc_fails_predicate(0.6, 0.15));   // 4*0.15*0.85 = 0.51 < 0.6
    CHECK(!sc_fails_predicate(0.2, 0.3));   // 0.84 > 0.2
    CHECK_THROWS_AS(sc_fails_predicate(0.5, 0.7), data_error);
}

TEST_CASE("predicate agrees with the direct objective comparison") {
    // line graph with one designated unbalanced cut and one balanced cut
    const int n = 40;
    for (double q : {0.3, 0.9}) {
        for (double y : {0.1, 0.45}) {
            sparse_graph g;
            g.n = n;
            const int cut_at = static_cast<int>(y * n);  // candidate boundary
            for (int i = 0; i + 1 < n; ++i) {
                double w = 10.0;
                if (i == cut_at - 1) w = q;
                if (i == n / 2 - 1) w = 1.0;
                g.edges.push_back({i, i + 1, w});
            }
            g.finalize();
            partition cand = make_partition(std::vector<int>(n, 1), 2);
            for (int i = 0; i < cut_at; ++i) cand.assignment[i] = 0;
            partition bal = make_partition(std::vector<int>(n, 1), 2);
            for (int i = 0; i < n / 2; ++i) bal.assignment[i] = 0;

            const bool fails = sc_fails_predicate(q, y);
            const double rcut_cand = objective_value(g, cand, cut_objective::rcut);
            const double rcut_bal = objective_value(g, bal, cut_objective::rcut);
            CHECK(fails == (rcut_bal < rcut_cand));
        }
    }
}

TEST_CASE("clustering error is permutation invariant") {
    const partition pred = make_partition({0, 0, 1, 1, 2, 2}, 3);
    CHECK(clustering_error(pred, {5, 5, 9, 9, 7, 7}) == doctest::Approx(0.0));
    CHECK(clustering_error(pred, {5, 5, 9, 9, 7, 5}) == doctest::Approx(1.0 / 6.0));

    const partition two = make_partition({0, 0, 1, 1}, 2);
    CHECK(clustering_error(two, {1, 1, 0, 0}) == doctest::Approx(0.0));  // complement map

    CHECK_THROWS_AS(clustering_error(two, {0, 1, 2, 2}), data_error);  // class count mismatch
}

TEST_CASE("cut position sweep on a unit path") {
    data_set data;
    data.points.resize(4, 1);
    data.points << 0, 1, 2, 3;
    const sparse_graph g = path4();
    const auto sweep = cut_position_sweep(data, g, 0);
    REQUIRE(sweep.size() == 3);
    CHECK(sweep[0].position == doctest::Approx(0.5));
    CHECK(sweep[0].cut == doctest::Approx(1.0));
    CHECK(sweep[0].rcut == doctest::Approx(1.0 * (4.0 / 1 + 4.0 / 3)));
    CHECK(sweep[1].rcut == doctest::Approx(4.0));
    CHECK(min_objective_position(sweep, cut_objective::rcut) == doctest::Approx(1.5));
    // volumes: degrees 1,2,2,1; split {a|bcd}: vol 1 vs 5, total 6
    CHECK(sweep[0].ncut == doctest::Approx(1.0 * (6.0 / 1 + 6.0 / 5)));
}

TEST_CASE("best threshold recovers the separating position") {
    data_set data;
    data.points.resize(6, 2);
    data.points << 0, 9, 1, 8, 2, 7, 5, 1, 6, 2, 7, 3;
    const partition part = make_partition({0, 0, 0, 1, 1, 1}, 2);
    CHECK(best_threshold_position(data, part, 0) == doctest::Approx(3.5));
    // swapped cluster ids give the same boundary
    const partition swapped = make_partition({1, 1, 1, 0, 0, 0}, 2);
    CHECK(best_threshold_position(data, swapped, 0) == doctest::Approx(3.5));
}
