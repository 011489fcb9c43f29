#include "rmd/rank.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <vector>

#include "rmd/common.hpp"

namespace rmd {

neighbor_index knn_distances(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& references,
                             int max_k, bool exclude_self, int workers) {
    const int nq = static_cast<int>(queries.rows());
    const int nr = static_cast<int>(references.rows());
    if (queries.cols() != references.cols()) {
        throw data_error("query/reference dimension mismatch");
    }
    const int available = exclude_self ? nr - 1 : nr;
    if (max_k < 1 || max_k > available) {
        throw data_error("max_k = " + std::to_string(max_k) + " out of range, " +
                         std::to_string(available) + " references available");
    }
    if (exclude_self && nq != nr) {
        throw data_error("self exclusion requires queries == references");
    }

    neighbor_index out;
    out.distances.resize(nq, max_k);
    out.indices.resize(nq, max_k);
    out.self_excluded = exclude_self;

    parallel_for(0, static_cast<std::size_t>(nq), [&](std::size_t qi) {
        const int q = static_cast<int>(qi);
        std::vector<std::pair<double, int>> cand;
        cand.reserve(nr);
        for (int r = 0; r < nr; ++r) {
            if (exclude_self && r == q) continue;
            const double d2 = (references.row(r) - queries.row(q)).squaredNorm();
            cand.emplace_back(d2, r);
        }
        std::partial_sort(cand.begin(), cand.begin() + max_k, cand.end());
        for (int j = 0; j < max_k; ++j) {
            out.distances(q, j) = std::sqrt(cand[j].first);
            out.indices(q, j) = cand[j].second;
        }
    }, workers);
    return out;
}

neighbor_index knn_self(const Eigen::MatrixXd& points, int max_k, int workers) {
    return knn_distances(points, points, max_k, true, workers);
}

double g_statistic(const Eigen::VectorXd& sorted_distances, int l, bool weighted, int dim) {
    if (l < 1) throw data_error("neighborhood size l must be positive");
    const int m = static_cast<int>(sorted_distances.size());
    if (m < 2 * l) {
        throw data_error("g_statistic needs at least 2l = " + std::to_string(2 * l) +
                         " reference distances, got " + std::to_string(m));
    }
    double sum = 0.0;
    if (!weighted) {
        for (int i = l + 1; i <= 2 * l; ++i) sum += sorted_distances[i - 1];
    } else {
        if (dim < 1) throw data_error("weighted g_statistic needs the ambient dimension");
        const int lo = l - (l - 1) / 2;
        const int hi = l + l / 2;
        for (int i = lo; i <= hi; ++i) {
            sum += std::pow(static_cast<double>(l) / i, 1.0 / dim) * sorted_distances[i - 1];
        }
    }
    return sum / l;
}

rank_estimate compute_ranks(const data_set& data, int l, int rounds, std::uint64_t seed,
                            bool weighted, int workers) {
    data.validate();
    const int n = data.n();
    if (l < 1) throw data_error("neighborhood size l must be positive");
    if (rounds < 1) throw data_error("resampling rounds must be positive");
    if (n < 4 * l) {
        throw data_error("rank computation needs n >= 4l (n = " + std::to_string(n) +
                         ", l = " + std::to_string(l) + ")");
    }

    rank_estimate est;
    est.l = l;
    est.rounds = rounds;
    est.weighted = weighted;
    est.g_values.resize(n, rounds);
    est.half_of_round.resize(n, rounds);
    est.ranks = Eigen::VectorXd::Zero(n);

    const int max_k = 2 * l;
    std::vector<int> perm(n);

    for (int b = 0; b < rounds; ++b) {
        std::iota(perm.begin(), perm.end(), 0);
        rng_stream rng(derive_seed(seed, "rank-round", static_cast<std::uint64_t>(b)));
        for (int i = n - 1; i > 0; --i) {
            const int j = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i) + 1));
            std::swap(perm[i], perm[j]);
        }
        const int half = n / 2;

        Eigen::MatrixXd first(half, data.d()), second(n - half, data.d());
        for (int i = 0; i < half; ++i) first.row(i) = data.points.row(perm[i]);
        for (int i = half; i < n; ++i) second.row(i - half) = data.points.row(perm[i]);

        // Each half is ranked against the other (role swap), so every point
        // gets a G value every round.
        const neighbor_index nn_first = knn_distances(first, second, max_k, false, workers);
        const neighbor_index nn_second = knn_distances(second, first, max_k, false, workers);

        Eigen::VectorXd g(n);
        for (int i = 0; i < half; ++i) {
            g[perm[i]] = g_statistic(nn_first.distances.row(i).transpose(), l, weighted, data.d());
        }
        for (int i = half; i < n; ++i) {
            g[perm[i]] =
                g_statistic(nn_second.distances.row(i - half).transpose(), l, weighted, data.d());
        }
        est.g_values.col(b) = g;
        for (int i = 0; i < n; ++i) est.half_of_round(perm[i], b) = i < half ? 0 : 1;

        // Rank each half among itself: R(x) = |{i : G(x) <= G(x_i)}| / m with
        // ties counting both ways. Every compared pair shares the same
        // reference half, so reference-set fluctuations largely cancel.
        auto rank_block = [&](int begin, int end) {
            const int m = end - begin;
            std::vector<double> sorted_g(m);
            for (int i = begin; i < end; ++i) sorted_g[i - begin] = g[perm[i]];
            std::sort(sorted_g.begin(), sorted_g.end());
            for (int i = begin; i < end; ++i) {
                const auto below = std::lower_bound(sorted_g.begin(), sorted_g.end(), g[perm[i]]) -
                                   sorted_g.begin();
                est.ranks[perm[i]] += static_cast<double>(m - below) / m;
            }
        };
        rank_block(0, half);
        rank_block(half, n);
    }
    est.ranks /= static_cast<double>(rounds);
    return est;
}

void save_ranks_csv(const rank_estimate& est, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write file: " + path);
    out << "index,rank,mean_g\n";
    const Eigen::VectorXd mean_g = est.g_values.rowwise().mean();
    char buf[40];
    for (int i = 0; i < est.ranks.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", est.ranks[i]);
        out << i << ',' << buf;
        std::snprintf(buf, sizeof(buf), "%.17g", mean_g[i]);
        out << ',' << buf << '\n';
    }
}

}  // namespace rmd
