#include "rmd/modelsel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "rmd/common.hpp"

namespace rmd {

double cut0_evaluate(const partition& part, const sparse_graph& reference) {
    part.validate();
    if (part.n() != reference.n) {
        throw data_error("partition has " + std::to_string(part.n()) + " nodes, reference graph " +
                         std::to_string(reference.n));
    }
    double crossing = 0.0;
    for (const auto& e : reference.edges) {
        if (part.assignment[e.u] != part.assignment[e.v]) crossing += e.w;
    }
    // Each crossing edge appears in the boundary of exactly two clusters.
    return 2.0 * crossing;
}

double min_cluster_fraction(const partition& part) {
    const auto sizes = part.cluster_sizes();
    const int smallest = *std::min_element(sizes.begin(), sizes.end());
    return static_cast<double>(smallest) / part.n();
}

std::vector<candidate_partition> sweep(const data_set& data, const rank_estimate& ranks,
                                       const family_grid& grid, int K, cut_objective learner,
                                       const sparse_graph& reference, double delta,
                                       std::uint64_t seed, int workers) {
    grid.validate();
    data.validate();
    if (reference.n != data.n()) throw data_error("reference graph size mismatch");

    const bool needs_sigma = grid.weighting == weighting_mode::rbf;
    const std::vector<double> sigma_multipliers =
        needs_sigma ? grid.sigma_multipliers : std::vector<double>{0.0};

    // mean k-NN distance per distinct valid k, shared across candidates;
    // out-of-range k is reported on the candidate, not here
    std::map<int, double> dk;
    if (needs_sigma) {
        for (int k : grid.ks) {
            if (!dk.count(k) && k >= 1 && k <= data.n() - 1) {
                dk[k] = mean_knn_distance(data, k, workers);
            }
        }
    }

    struct grid_point {
        double lambda;
        int k;
        double multiplier;
    };
    std::vector<grid_point> points;
    for (double lambda : grid.lambdas) {
        for (int k : grid.ks) {
            for (double mult : sigma_multipliers) points.push_back({lambda, k, mult});
        }
    }

    std::vector<candidate_partition> candidates(points.size());
    parallel_for(0, points.size(), [&](std::size_t i) {
        const auto& gp = points[i];
        candidate_partition& cand = candidates[i];
        cand.lambda = gp.lambda;
        cand.k = gp.k;
        try {
            if (needs_sigma) {
                const auto it = dk.find(gp.k);
                if (it == dk.end()) {
                    throw data_error("k out of range for n = " + std::to_string(data.n()));
                }
                cand.sigma = gp.multiplier * it->second;
            }
            const sparse_graph g = build_rmd(data, ranks, gp.k, gp.lambda, grid.weighting,
                                             cand.sigma, 1);
            cand.part = spectral_cluster(g, K, learner,
                                         derive_seed(seed, "sweep-candidate", i));
            cand.cut0 = cut0_evaluate(cand.part, reference);
            cand.min_cluster_fraction = min_cluster_fraction(cand.part);
            cand.feasible = cand.min_cluster_fraction >= delta;
        } catch (const std::exception& e) {
            cand.error = e.what();
            cand.feasible = false;
        }
    }, workers);
    return candidates;
}

namespace {

bool candidate_preferred(const candidate_partition& a, const candidate_partition& b) {
    if (a.cut0 != b.cut0) return a.cut0 < b.cut0;
    if (a.min_cluster_fraction != b.min_cluster_fraction) {
        return a.min_cluster_fraction > b.min_cluster_fraction;
    }
    if (a.lambda != b.lambda) return a.lambda < b.lambda;
    if (a.k != b.k) return a.k < b.k;
    return a.sigma < b.sigma;
}

nlohmann::json candidate_to_json(const candidate_partition& cand, bool include_assignment) {
    nlohmann::json j;
    j["lambda"] = cand.lambda;
    j["k"] = cand.k;
    j["sigma"] = cand.sigma;
    if (cand.ok()) {
        j["cut0"] = cand.cut0;
        j["min_cluster_fraction"] = cand.min_cluster_fraction;
        j["feasible"] = cand.feasible;
        j["digest"] = partition_digest(cand.part);
        if (include_assignment) j["assignment"] = cand.part.assignment;
    } else {
        j["error"] = cand.error;
        j["feasible"] = false;
    }
    return j;
}

}  // namespace

model_selection_report select(std::vector<candidate_partition> candidates,
                              const sparse_graph& reference, double delta) {
    if (candidates.empty()) throw config_error("select: no candidates");
    int k_max = 2;
    for (auto& cand : candidates) {
        if (cand.ok()) {
            cand.feasible = cand.min_cluster_fraction >= delta;
            k_max = std::max(k_max, cand.part.k);
        } else {
            cand.feasible = false;
        }
    }
    if (!(delta > 0.0 && delta < 1.0 / k_max)) {
        throw config_error("delta must lie in (0, 1/K)");
    }

    model_selection_report report;
    report.reference = reference.build_params;
    report.delta = delta;
    int winner = -1;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!candidates[i].feasible) continue;
        if (winner < 0 || candidate_preferred(candidates[i], candidates[winner])) {
            winner = static_cast<int>(i);
        }
    }
    if (winner >= 0) report.winner = winner;
    report.candidates = std::move(candidates);
    return report;
}

nlohmann::json model_selection_report::to_json(bool include_assignments) const {
    nlohmann::json j;
    j["reference"] = reference.to_json();
    j["delta"] = delta;
    auto arr = nlohmann::json::array();
    for (const auto& cand : candidates) arr.push_back(candidate_to_json(cand, include_assignments));
    j["candidates"] = std::move(arr);
    if (winner) {
        j["winner"] = *winner;
    } else {
        j["winner"] = nullptr;
    }
    return j;
}

delta_sweep_curve delta_sweep(const std::vector<candidate_partition>& candidates,
                              const sparse_graph& reference,
                              const std::vector<double>& delta_grid) {
    if (delta_grid.empty()) throw config_error("delta grid is empty");
    for (std::size_t i = 1; i < delta_grid.size(); ++i) {
        if (delta_grid[i] >= delta_grid[i - 1]) {
            throw config_error("delta grid must be strictly descending");
        }
    }
    delta_sweep_curve curve;
    curve.points.reserve(delta_grid.size());
    for (double delta : delta_grid) {
        const model_selection_report report = select(candidates, reference, delta);
        delta_sweep_point point;
        point.delta = delta;
        if (report.winner) {
            const auto& cand = report.candidates[*report.winner];
            point.winner = *report.winner;
            point.cut0 = cand.cut0;
            point.lambda = cand.lambda;
            point.k = cand.k;
            point.sigma = cand.sigma;
            point.digest = partition_digest(cand.part);
        }
        curve.points.push_back(std::move(point));
    }
    return curve;
}

nlohmann::json delta_sweep_curve::to_json() const {
    auto arr = nlohmann::json::array();
    for (const auto& p : points) {
        nlohmann::json j;
        j["delta"] = p.delta;
        if (p.winner) {
            j["winner"] = *p.winner;
            j["cut0"] = p.cut0;
            j["lambda"] = p.lambda;
            j["k"] = p.k;
            j["sigma"] = p.sigma;
            j["digest"] = p.digest;
        } else {
            j["winner"] = nullptr;
        }
        arr.push_back(std::move(j));
    }
    return {{"points", arr}};
}

std::vector<flat_spot> flat_spots(const delta_sweep_curve& curve, double rel_tol) {
    if (curve.points.size() < 2) throw config_error("flat_spots needs a curve with >= 2 points");
    std::vector<flat_spot> spots;
    std::size_t run_start = 0;
    auto flush = [&](std::size_t run_end) {
        // only runs covering at least two grid points count as flat
        if (run_end > run_start && curve.points[run_start].winner) {
            flat_spot spot;
            spot.delta_high = curve.points[run_start].delta;
            spot.delta_low = curve.points[run_end].delta;
            spot.digest = curve.points[run_start].digest;
            spot.first_point = static_cast<int>(run_start);
            spot.last_point = static_cast<int>(run_end);
            spots.push_back(spot);
        }
    };
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& prev = curve.points[i - 1];
        const auto& here = curve.points[i];
        bool contiguous = prev.winner && here.winner && prev.digest == here.digest;
        if (contiguous) {
            const double denom = std::max(std::abs(prev.cut0), std::abs(here.cut0));
            if (denom > 0.0 && std::abs(here.cut0 - prev.cut0) / denom >= rel_tol) {
                contiguous = false;
            }
        }
        if (!contiguous) {
            flush(i - 1);
            run_start = i;
        }
    }
    flush(curve.points.size() - 1);
    return spots;
}

std::string partition_digest(const partition& part) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    auto mix = [&h](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xFF;
            h *= 0x100000001B3ULL;
        }
    };
    mix(static_cast<std::uint64_t>(part.k));
    for (int a : part.assignment) mix(static_cast<std::uint64_t>(a));
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void save_delta_curve_csv(const delta_sweep_curve& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write file: " + path);
    out << "delta,cut0,lambda,k,sigma,digest\n";
    char buf[40];
    for (const auto& p : curve.points) {
        std::snprintf(buf, sizeof(buf), "%.17g", p.delta);
        out << buf << ',';
        if (p.winner) {
            std::snprintf(buf, sizeof(buf), "%.17g", p.cut0);
            out << buf << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", p.lambda);
            out << buf << ',' << p.k << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", p.sigma);
            out << buf << ',' << p.digest << '\n';
        } else {
            out << ",,,,\n";
        }
    }
}

}  // namespace rmd
