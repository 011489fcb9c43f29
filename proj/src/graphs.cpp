#include "rmd/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rmd/common.hpp"

namespace rmd {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double rbf_weight(double dist, double sigma) {
    return std::exp(-dist * dist / (2.0 * sigma * sigma));
}

// Collect directed neighbor selections into a canonical undirected edge list.
// Weight depends only on the pair, so union duplicates are plain duplicates.
sparse_graph from_directed_selection(int n, const std::vector<std::vector<std::pair<int, double>>>& sel,
                                     const graph_build_params& params) {
    sparse_graph g;
    g.n = n;
    g.build_params = params;
    std::size_t total = 0;
    for (const auto& row : sel) total += row.size();
    g.edges.reserve(total);
    for (int u = 0; u < n; ++u) {
        for (const auto& [v, w] : sel[u]) {
            if (v == u) continue;
            g.edges.push_back({std::min(u, v), std::max(u, v), w});
        }
    }
    g.finalize();
    return g;
}

}  // namespace

std::string to_string(weighting_mode mode) {
    switch (mode) {
        case weighting_mode::binary: return "binary";
        case weighting_mode::rbf: return "rbf";
        case weighting_mode::adaptive_rbf: return "adaptive_rbf";
    }
    return "binary";
}

weighting_mode weighting_from_string(const std::string& s) {
    if (s == "binary") return weighting_mode::binary;
    if (s == "rbf") return weighting_mode::rbf;
    if (s == "adaptive_rbf") return weighting_mode::adaptive_rbf;
    throw config_error("unknown weighting mode: " + s);
}

nlohmann::json graph_build_params::to_json() const {
    return {{"kind", kind},     {"k", k},           {"epsilon", epsilon},
            {"sigma", sigma},   {"lambda", lambda}, {"weighting", rmd::to_string(weighting)}};
}

graph_build_params graph_build_params::from_json(const nlohmann::json& j) {
    graph_build_params p;
    p.kind = j.value("kind", std::string{});
    p.k = j.value("k", 0);
    p.epsilon = j.value("epsilon", 0.0);
    p.sigma = j.value("sigma", 0.0);
    p.lambda = j.value("lambda", 1.0);
    p.weighting = weighting_from_string(j.value("weighting", std::string{"binary"}));
    return p;
}

void sparse_graph::finalize() {
    for (auto& e : edges) {
        if (e.u > e.v) std::swap(e.u, e.v);
    }
    std::sort(edges.begin(), edges.end(), [](const edge& a, const edge& b) {
        return a.u != b.u ? a.u < b.u : a.v < b.v;
    });
    std::vector<edge> merged;
    merged.reserve(edges.size());
    for (const auto& e : edges) {
        if (!merged.empty() && merged.back().u == e.u && merged.back().v == e.v) continue;
        merged.push_back(e);
    }
    edges = std::move(merged);
    validate();

    adj_offsets.assign(n + 1, 0);
    for (const auto& e : edges) {
        ++adj_offsets[e.u + 1];
        ++adj_offsets[e.v + 1];
    }
    for (int i = 0; i < n; ++i) adj_offsets[i + 1] += adj_offsets[i];
    adj_neighbors.assign(edges.size() * 2, 0);
    adj_weights.assign(edges.size() * 2, 0.0);
    std::vector<int> cursor(adj_offsets.begin(), adj_offsets.end() - 1);
    for (const auto& e : edges) {
        adj_neighbors[cursor[e.u]] = e.v;
        adj_weights[cursor[e.u]++] = e.w;
        adj_neighbors[cursor[e.v]] = e.u;
        adj_weights[cursor[e.v]++] = e.w;
    }
}

void sparse_graph::validate() const {
    if (n < 1) throw data_error("graph must have at least one node");
    const edge* prev = nullptr;
    for (const auto& e : edges) {
        if (e.u < 0 || e.v >= n || e.u >= e.v) {
            throw data_error("invalid edge (" + std::to_string(e.u) + "," + std::to_string(e.v) + ")");
        }
        if (!(e.w > 0.0)) throw data_error("edge weights must be positive");
        if (prev && prev->u == e.u && prev->v == e.v) throw data_error("duplicate edge");
        prev = &e;
    }
}

Eigen::VectorXd sparse_graph::degrees() const {
    Eigen::VectorXd deg = Eigen::VectorXd::Zero(n);
    for (const auto& e : edges) {
        deg[e.u] += e.w;
        deg[e.v] += e.w;
    }
    return deg;
}

double sparse_graph::total_weight() const {
    double total = 0.0;
    for (const auto& e : edges) total += e.w;
    return total;
}

int degree_schedule(double rank, int k, double lambda) {
    if (rank < 0.0 || rank > 1.0) throw data_error("rank must lie in [0, 1]");
    if (k < 1) throw data_error("k must be positive");
    if (lambda <= 0.0 || lambda > 1.0) throw data_error("lambda must lie in (0, 1]");
    return static_cast<int>(std::lround(k * (lambda + 2.0 * (1.0 - lambda) * rank)));
}

sparse_graph build_knn(const data_set& data, int k, weighting_mode mode, double sigma, int workers) {
    data.validate();
    const int n = data.n();
    if (k < 1 || k > n - 1) throw data_error("k out of range for n = " + std::to_string(n));
    if (mode == weighting_mode::rbf && sigma <= 0.0) throw data_error("rbf weighting needs sigma > 0");
    if (mode == weighting_mode::adaptive_rbf) {
        throw data_error("adaptive rbf weights apply to the full graph builder only");
    }

    const neighbor_index nn = knn_self(data.points, k, workers);
    std::vector<std::vector<std::pair<int, double>>> sel(n);
    for (int u = 0; u < n; ++u) {
        sel[u].reserve(k);
        for (int j = 0; j < k; ++j) {
            const double w =
                mode == weighting_mode::binary ? 1.0 : rbf_weight(nn.distances(u, j), sigma);
            if (w > 0.0) sel[u].emplace_back(nn.indices(u, j), w);
        }
    }
    graph_build_params params;
    params.kind = "knn";
    params.k = k;
    params.sigma = sigma;
    params.weighting = mode;
    return from_directed_selection(n, sel, params);
}

sparse_graph build_rmd(const data_set& data, const rank_estimate& ranks, int k, double lambda,
                       weighting_mode mode, double sigma, int workers) {
    data.validate();
    const int n = data.n();
    if (static_cast<int>(ranks.ranks.size()) != n) throw data_error("rank/point count mismatch");
    if (k < 1 || k > n - 1) throw data_error("k out of range for n = " + std::to_string(n));
    if (lambda <= 0.0 || lambda > 1.0) throw data_error("lambda must lie in (0, 1]");
    if (mode == weighting_mode::rbf && sigma <= 0.0) throw data_error("rbf weighting needs sigma > 0");
    if (mode == weighting_mode::adaptive_rbf) {
        throw data_error("adaptive rbf weights apply to the full graph builder only");
    }

    std::vector<int> deg(n);
    int max_deg = 1;
    for (int i = 0; i < n; ++i) {
        deg[i] = std::clamp(degree_schedule(ranks.ranks[i], k, lambda), 1, n - 1);
        max_deg = std::max(max_deg, deg[i]);
    }

    const neighbor_index nn = knn_self(data.points, max_deg, workers);
    std::vector<std::vector<std::pair<int, double>>> sel(n);
    for (int u = 0; u < n; ++u) {
        sel[u].reserve(deg[u]);
        for (int j = 0; j < deg[u]; ++j) {
            const double w =
                mode == weighting_mode::binary ? 1.0 : rbf_weight(nn.distances(u, j), sigma);
            if (w > 0.0) sel[u].emplace_back(nn.indices(u, j), w);
        }
    }
    graph_build_params params;
    params.kind = "rmd";
    params.k = k;
    params.lambda = lambda;
    params.sigma = sigma;
    params.weighting = mode;
    return from_directed_selection(n, sel, params);
}

sparse_graph build_epsilon(const data_set& data, double epsilon, weighting_mode mode, double sigma) {
    data.validate();
    const int n = data.n();
    if (!(epsilon > 0.0)) throw data_error("epsilon must be positive");
    if (mode == weighting_mode::rbf && sigma <= 0.0) throw data_error("rbf weighting needs sigma > 0");
    if (mode == weighting_mode::adaptive_rbf) {
        throw data_error("adaptive rbf weights apply to the full graph builder only");
    }

    sparse_graph g;
    g.n = n;
    for (int u = 0; u < n; ++u) {
        for (int v = u + 1; v < n; ++v) {
            const double dist = (data.points.row(u) - data.points.row(v)).norm();
            if (dist <= epsilon) {
                const double w = mode == weighting_mode::binary ? 1.0 : rbf_weight(dist, sigma);
                if (w > 0.0) g.edges.push_back({u, v, w});
            }
        }
    }
    g.build_params.kind = "epsilon";
    g.build_params.epsilon = epsilon;
    g.build_params.sigma = sigma;
    g.build_params.weighting = mode;
    g.finalize();
    return g;
}

sparse_graph build_full_rbf(const data_set& data, double sigma) {
    data.validate();
    const int n = data.n();
    if (!(sigma > 0.0)) throw data_error("sigma must be positive");
    sparse_graph g;
    g.n = n;
    g.edges.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int u = 0; u < n; ++u) {
        for (int v = u + 1; v < n; ++v) {
            const double dist = (data.points.row(u) - data.points.row(v)).norm();
            const double w = rbf_weight(dist, sigma);
            if (w > 0.0) g.edges.push_back({u, v, w});
        }
    }
    g.build_params.kind = "full_rbf";
    g.build_params.sigma = sigma;
    g.build_params.weighting = weighting_mode::rbf;
    g.finalize();
    return g;
}

sparse_graph build_full_arbf(const data_set& data, int k, int workers) {
    data.validate();
    const int n = data.n();
    if (k < 1 || k > n - 1) throw data_error("k out of range for n = " + std::to_string(n));
    const neighbor_index nn = knn_self(data.points, k, workers);
    Eigen::VectorXd node_sigma(n);
    for (int u = 0; u < n; ++u) node_sigma[u] = nn.distances(u, k - 1);

    sparse_graph g;
    g.n = n;
    g.edges.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int u = 0; u < n; ++u) {
        for (int v = u + 1; v < n; ++v) {
            const double d2 = (data.points.row(u) - data.points.row(v)).squaredNorm();
            const double denom = 2.0 * node_sigma[u] * node_sigma[v];
            if (!(denom > 0.0)) {
                throw data_error("duplicate points give zero adaptive sigma at node " +
                                 std::to_string(node_sigma[u] == 0.0 ? u : v));
            }
            const double w = std::exp(-d2 / denom);
            if (w > 0.0) g.edges.push_back({u, v, w});
        }
    }
    g.build_params.kind = "full_arbf";
    g.build_params.k = k;
    g.build_params.weighting = weighting_mode::adaptive_rbf;
    g.finalize();
    return g;
}

double mean_knn_distance(const data_set& data, int k, int workers) {
    data.validate();
    const int n = data.n();
    if (k < 1 || k > n - 1) throw data_error("k out of range for n = " + std::to_string(n));
    const neighbor_index nn = knn_self(data.points, k, workers);
    double total = 0.0;
    for (int u = 0; u < n; ++u) total += nn.distances(u, k - 1);
    return total / n;
}

void save_graph_csv(const sparse_graph& graph, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write file: " + path);
    nlohmann::json header = graph.build_params.to_json();
    header["n"] = graph.n;
    out << "# " << header.dump() << '\n';
    out << "u,v,w\n";
    for (const auto& e : graph.edges) {
        out << e.u << ',' << e.v << ',' << format_double(e.w) << '\n';
    }
}

sparse_graph load_graph_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open file: " + path);
    std::string line;
    sparse_graph g;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line == "u,v,w") continue;
        if (line.front() == '#') {
            const auto j = nlohmann::json::parse(line.substr(1));
            g.build_params = graph_build_params::from_json(j);
            g.n = j.value("n", 0);
            have_header = true;
            continue;
        }
        std::istringstream ss(line);
        std::string a, b, c;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c)) {
            throw data_error("malformed edge row: " + line);
        }
        g.edges.push_back({std::stoi(a), std::stoi(b), std::stod(c)});
    }
    if (!have_header) throw data_error("graph file missing JSON header: " + path);
    g.finalize();
    return g;
}

void family_grid::validate() const {
    if (lambdas.empty() || ks.empty()) throw config_error("family grid must be non-empty");
    for (double l : lambdas) {
        if (l <= 0.0 || l > 1.0) throw config_error("grid lambda values must lie in (0, 1]");
    }
    for (int k : ks) {
        if (k < 1) throw config_error("grid k values must be >= 1");
    }
    if (weighting == weighting_mode::rbf && sigma_multipliers.empty()) {
        throw config_error("rbf weighting needs sigma multipliers");
    }
}

}  // namespace rmd
