// rmd: rank-modulated-degree graph construction, spectral clustering,
// graph-based semi-supervised learning, min-cut model selection and
// asymptotic-limit verification, driven by JSON configs.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "rmd/common.hpp"
#include "rmd/dataset.hpp"
#include "rmd/graphs.hpp"
#include "rmd/limits.hpp"
#include "rmd/metrics.hpp"
#include "rmd/modelsel.hpp"
#include "rmd/rank.hpp"
#include "rmd/spectral.hpp"
#include "rmd/ssl.hpp"

namespace {

constexpr const char* kToolVersion = "0.1.0";

using nlohmann::json;
using namespace rmd;

struct cli_options {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed_override;
    int workers = 0;
    bool verbose = false;
};

std::string g_stage = "config";
std::chrono::steady_clock::time_point g_started;

void set_stage(const std::string& stage) {
    g_stage = stage;
}

json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw config_error("config parse failure in " + path + ": " + e.what());
    }
    // a manifest embeds the fully resolved config; re-running from it
    // reproduces the original run
    if (j.contains("config") && j.contains("command")) return j.at("config");
    return j;
}

void require_keys(const json& j, const std::vector<std::string>& keys, const std::string& where) {
    for (const auto& key : keys) {
        if (!j.contains(key)) throw config_error(where + ": missing required key '" + key + "'");
    }
}

// ---------------------------------------------------------------------------
// data sources

mixture_spec mixture_from_json(const json& j) {
    if (j.contains("preset")) {
        const std::string name = j.at("preset").get<std::string>();
        if (name == "two_gaussian") return two_gaussian_spec();
        if (name == "three_gaussian") return three_gaussian_spec();
        throw config_error("unknown mixture preset: " + name);
    }
    require_keys(j, {"components"}, "mixture spec");
    mixture_spec spec;
    for (const auto& cj : j.at("components")) {
        require_keys(cj, {"weight", "mean", "covariance"}, "mixture component");
        mixture_component c;
        c.weight = cj.at("weight").get<double>();
        const auto mean = cj.at("mean").get<std::vector<double>>();
        c.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), mean.size());
        const auto& cov = cj.at("covariance");
        const int d = static_cast<int>(mean.size());
        c.covariance.resize(d, d);
        if (cov.is_array() && !cov.empty() && cov.front().is_array()) {
            for (int r = 0; r < d; ++r) {
                for (int cc = 0; cc < d; ++cc) c.covariance(r, cc) = cov.at(r).at(cc).get<double>();
            }
        } else {
            c.covariance.setZero();
            for (int r = 0; r < d; ++r) c.covariance(r, r) = cov.at(r).get<double>();
        }
        spec.components.push_back(std::move(c));
    }
    spec.validate();
    return spec;
}

data_set generate_data(json& gen, std::uint64_t seed) {
    require_keys(gen, {"type"}, "generator");
    const std::string type = gen.at("type").get<std::string>();
    if (!gen.contains("n")) throw config_error("generator: missing sample count 'n'");
    const int n = gen.at("n").get<int>();
    if (type == "gaussian_mixture") {
        return gen_gaussian_mixture(mixture_from_json(gen), n, seed);
    }
    if (type == "two_moons_gaussian") {
        std::array<double, 3> props = {0.45, 0.45, 0.10};
        if (gen.contains("proportions")) {
            const auto p = gen.at("proportions").get<std::vector<double>>();
            if (p.size() != 3) throw config_error("two_moons_gaussian needs 3 proportions");
            std::copy(p.begin(), p.end(), props.begin());
        }
        const double noise = gen.value("noise", 0.1);
        gen["proportions"] = std::vector<double>(props.begin(), props.end());
        gen["noise"] = noise;
        return gen_two_moons_gaussian(n, props, noise, seed);
    }
    throw config_error("unknown generator type: " + type);
}

data_set load_data(json& config, std::uint64_t seed) {
    set_stage("data");
    if (!config.contains("data")) throw config_error("missing 'data' section");
    json& data_cfg = config["data"];
    if (data_cfg.contains("generator")) {
        return generate_data(data_cfg["generator"], derive_seed(seed, "gen-data"));
    }
    if (data_cfg.contains("dataset_json")) {
        std::ifstream in(data_cfg.at("dataset_json").get<std::string>());
        if (!in) throw data_error("cannot open dataset json");
        json j;
        in >> j;
        return dataset_from_json(j);
    }
    if (data_cfg.contains("path")) {
        std::optional<std::string> label_column;
        if (data_cfg.contains("label_column")) {
            label_column = data_cfg.at("label_column").get<std::string>();
        }
        return load_csv(data_cfg.at("path").get<std::string>(), label_column);
    }
    throw config_error("'data' needs one of: path, dataset_json, generator");
}

// ---------------------------------------------------------------------------
// graph and grid specs

weighting_mode weighting_from_config(json& j, const std::string& fallback) {
    const std::string mode = j.value("weighting", fallback);
    j["weighting"] = mode;
    return weighting_from_string(mode);
}

double resolve_sigma(json& spec, const data_set& data, int graph_k, int workers) {
    if (spec.contains("sigma")) return spec.at("sigma").get<double>();
    const double mult = spec.value("sigma_multiplier", 1.0);
    const int base_k = spec.value("sigma_k", graph_k > 0 ? graph_k : 30);
    const double sigma = mult * mean_knn_distance(data, base_k, workers);
    spec["sigma"] = sigma;  // resolved value lands in the manifest
    return sigma;
}

sparse_graph build_graph_from_spec(json& spec, const data_set& data,
                                   const rank_estimate* ranks, int workers) {
    set_stage("graph");
    require_keys(spec, {"kind"}, "graph spec");
    const std::string kind = spec.at("kind").get<std::string>();
    if (kind == "knn") {
        const int k = spec.value("k", 30);
        spec["k"] = k;
        const weighting_mode mode = weighting_from_config(spec, "binary");
        const double sigma =
            mode == weighting_mode::rbf ? resolve_sigma(spec, data, k, workers) : 0.0;
        return build_knn(data, k, mode, sigma, workers);
    }
    if (kind == "rmd") {
        if (!ranks) throw config_error("rmd graph needs computed ranks");
        const int k = spec.value("k", 30);
        const double lambda = spec.value("lambda", 1.0);
        spec["k"] = k;
        spec["lambda"] = lambda;
        const weighting_mode mode = weighting_from_config(spec, "binary");
        const double sigma =
            mode == weighting_mode::rbf ? resolve_sigma(spec, data, k, workers) : 0.0;
        return build_rmd(data, *ranks, k, lambda, mode, sigma, workers);
    }
    if (kind == "epsilon") {
        double eps;
        if (spec.contains("epsilon")) {
            eps = spec.at("epsilon").get<double>();
        } else {
            const double mult = spec.value("epsilon_multiplier", 1.0);
            const int base_k = spec.value("epsilon_k", 30);
            eps = mult * mean_knn_distance(data, base_k, workers);
            spec["epsilon"] = eps;
        }
        const weighting_mode mode = weighting_from_config(spec, "binary");
        const double sigma =
            mode == weighting_mode::rbf ? resolve_sigma(spec, data, 30, workers) : 0.0;
        return build_epsilon(data, eps, mode, sigma);
    }
    if (kind == "full_rbf") {
        const double sigma = resolve_sigma(spec, data, spec.value("sigma_k", 30), workers);
        return build_full_rbf(data, sigma);
    }
    if (kind == "full_arbf") {
        const int k = spec.value("k", 30);
        spec["k"] = k;
        return build_full_arbf(data, k, workers);
    }
    throw config_error("unknown graph kind: " + kind);
}

struct rank_params {
    int l = 30;
    int rounds = 5;
    bool weighted = false;
};

rank_params rank_params_from_config(json& config) {
    json& r = config.contains("rank") ? config["rank"] : (config["rank"] = json::object());
    rank_params p;
    p.l = r.value("l", 30);
    p.rounds = r.value("rounds", 5);
    p.weighted = r.value("weighted", false);
    r["l"] = p.l;
    r["rounds"] = p.rounds;
    r["weighted"] = p.weighted;
    return p;
}

rank_estimate compute_ranks_from_config(json& config, const data_set& data, std::uint64_t seed,
                                        int workers) {
    set_stage("rank");
    const rank_params p = rank_params_from_config(config);
    return compute_ranks(data, p.l, p.rounds, derive_seed(seed, "rank"), p.weighted, workers);
}

family_grid grid_from_config(json& config) {
    json& g = config.contains("grid") ? config["grid"] : (config["grid"] = json::object());
    family_grid grid;  // defaults: lambda {0.2..1}, k {10..100}, sigma 2^j
    if (g.contains("lambda")) grid.lambdas = g.at("lambda").get<std::vector<double>>();
    if (g.contains("k")) grid.ks = g.at("k").get<std::vector<int>>();
    if (g.contains("sigma_multipliers")) {
        grid.sigma_multipliers = g.at("sigma_multipliers").get<std::vector<double>>();
    }
    grid.weighting = weighting_from_string(g.value("weighting", std::string{"rbf"}));
    g["lambda"] = grid.lambdas;
    g["k"] = grid.ks;
    g["sigma_multipliers"] = grid.sigma_multipliers;
    g["weighting"] = to_string(grid.weighting);
    grid.validate();
    return grid;
}

sparse_graph reference_from_config(json& config, const data_set& data, int workers) {
    json& r = config.contains("reference") ? config["reference"] : (config["reference"] = json::object());
    const int k0 = r.value("k0", 30);
    const std::string mode_str = r.value("weighting", std::string{"rbf"});
    r["k0"] = k0;
    r["weighting"] = mode_str;
    const weighting_mode mode = weighting_from_string(mode_str);
    double sigma = 0.0;
    if (mode == weighting_mode::rbf) {
        if (r.contains("sigma")) {
            sigma = r.at("sigma").get<double>();
        } else {
            sigma = r.value("sigma_multiplier", 1.0) * mean_knn_distance(data, k0, workers);
            r["sigma"] = sigma;
        }
    }
    return build_knn(data, k0, mode, sigma, workers);
}

analytic_density density_from_config(json& config) {
    if (!config.contains("density")) throw config_error("missing 'density' section");
    json& d = config["density"];
    if (d.contains("preset")) {
        const std::string name = d.at("preset").get<std::string>();
        mixture_spec spec;
        if (name == "std_normal_1d") {
            mixture_component c;
            c.weight = 1.0;
            c.mean = Eigen::VectorXd::Zero(1);
            c.covariance = Eigen::MatrixXd::Identity(1, 1);
            spec.components = {c};
        } else if (name == "two_gaussian_1d") {
            // x1 marginal of the two-Gaussian plane mixture
            mixture_component a, b;
            a.weight = 0.85;
            a.mean = Eigen::VectorXd::Constant(1, 4.5);
            a.covariance = Eigen::MatrixXd::Constant(1, 1, 2.0);
            b.weight = 0.15;
            b.mean = Eigen::VectorXd::Zero(1);
            b.covariance = Eigen::MatrixXd::Identity(1, 1);
            spec.components = {a, b};
        } else if (name == "three_gaussian_1d") {
            mixture_component a, b, c;
            a.weight = 2.0 / 11.0;
            a.mean = Eigen::VectorXd::Constant(1, -0.7);
            a.covariance = Eigen::MatrixXd::Identity(1, 1);
            b.weight = 8.0 / 11.0;
            b.mean = Eigen::VectorXd::Constant(1, 4.5);
            b.covariance = Eigen::MatrixXd::Constant(1, 1, 2.0);
            c.weight = 1.0 / 11.0;
            c.mean = Eigen::VectorXd::Constant(1, 9.7);
            c.covariance = Eigen::MatrixXd::Constant(1, 1, 0.7);
            spec.components = {a, b, c};
        } else if (name == "two_gaussian_2d") {
            return analytic_density(two_gaussian_spec());
        } else if (name == "three_gaussian_2d") {
            return analytic_density(three_gaussian_spec());
        } else {
            throw config_error("unknown density preset: " + name);
        }
        return analytic_density(spec);
    }
    return analytic_density(mixture_from_json(d));
}

// ---------------------------------------------------------------------------
// artifacts + manifest

struct artifact_writer {
    std::filesystem::path dir;
    std::vector<std::string> names;

    std::string path(const std::string& name) {
        names.push_back(name);
        return (dir / name).string();
    }
};

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write file: " + path);
    out << j.dump(2) << '\n';
}

void write_manifest(const cli_options& opts, const std::string& command, const json& config,
                    artifact_writer& artifacts) {
    const double wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - g_started).count();
    json manifest;
    manifest["schema_version"] = 1;
    manifest["command"] = command;
    manifest["tool_version"] = kToolVersion;
    json embedded = config;
    embedded.erase("out_dir");  // runtime location, not experiment identity
    manifest["config"] = embedded;
    manifest["artifacts"] = artifacts.names;
    manifest["wall_time_sec"] = wall_seconds;
    write_json_file((artifacts.dir / "manifest.json").string(), manifest);
    if (opts.verbose) {
        std::cerr << "wrote " << artifacts.names.size() << " artifact(s) + manifest to "
                  << artifacts.dir << "\n";
    }
}

std::uint64_t resolve_seed(json& config, const cli_options& opts) {
    std::uint64_t seed = config.value("seed", std::uint64_t{0});
    if (opts.seed_override) seed = *opts.seed_override;
    config["seed"] = seed;
    return seed;
}

int resolve_workers(json& config, const cli_options& opts) {
    int workers = config.value("workers", 0);
    if (opts.workers > 0) workers = opts.workers;
    config["workers"] = workers;
    return workers;
}

// ---------------------------------------------------------------------------
// command handlers

void run_gen_data(json config, const cli_options& opts, artifact_writer& artifacts) {
    const std::uint64_t seed = resolve_seed(config, opts);
    set_stage("data");
    if (!config.contains("generator")) throw config_error("gen-data needs a 'generator' section");
    const data_set data = generate_data(config["generator"], derive_seed(seed, "gen-data"));
    set_stage("output");
    save_csv(data, artifacts.path("dataset.csv"));
    write_json_file(artifacts.path("dataset.json"), dataset_to_json(data));
    write_manifest(opts, "gen-data", config, artifacts);
}

void run_rank(json config, const cli_options& opts, artifact_writer& artifacts) {
    const std::uint64_t seed = resolve_seed(config, opts);
    const int workers = resolve_workers(config, opts);
    const data_set data = load_data(config, seed);
    const rank_estimate est = compute_ranks_from_config(config, data, seed, workers);
    set_stage("output");
    save_ranks_csv(est, artifacts.path("ranks.csv"));
    write_manifest(opts, "rank", config, artifacts);
}

void run_build_graph(json config, const cli_options& opts, artifact_writer& artifacts) {
    const std::uint64_t seed = resolve_seed(config, opts);
    const int workers = resolve_workers(config, opts);
    const data_set data = load_data(config, seed);
    if (!config.contains("graph")) throw config_error("build-graph needs a 'graph' section");
    std::optional<rank_estimate> ranks;
    if (config.at("graph").value("kind", std::string{}) == "rmd") {
        ranks = compute_ranks_from_config(config, data, seed, workers);
    }
    const sparse_graph g =
        build_graph_from_spec(config["graph"], data, ranks ? &*ranks : nullptr, workers);
    set_stage("output");
    save_graph_csv(g, artifacts.path("graph.csv"));
    write_manifest(opts, "build-graph", config, artifacts);
}

void run_cluster(json config, const cli_options& opts, artifact_writer& artifacts) {
    const std::uint64_t seed = resolve_seed(config, opts);
    const int workers = resolve_workers(config, opts);
    const data_set data = load_data(config, seed);
    if (!config.contains("graph")) throw config_error("cluster needs a 'graph' section");
    const int K = config.value("K", 2);
    config["K"] = K;
    const std::string objective = config.value("objective", std::string{"ncut"});
    config["objective"] = objective;

    std::optional<rank_estimate> ranks;
    if (config.at("graph").value("kind", std::string{}) == "rmd") {
        ranks = compute_ranks_from_config(config, data, seed, workers);
    }
    const sparse_graph g =
        build_graph_from_spec(config["graph"], data, ranks ? &*ranks : nullptr, workers);
    set_stage("cluster");
    const partition part =
        spectral_cluster(g, K, objective_from_string(objective), derive_seed(seed, "cluster"));
    set_stage("output");
    save_partition_csv(part, artifacts.path("partition.csv"));
    write_manifest(opts, "cluster", config, artifacts);
}

// model-selection sweep shared by select / sweep-delta / ssl
struct sweep_outcome {
    std::vector<candidate_partition> candidates;
    sparse_graph reference;
    rank_estimate ranks;
};

sweep_outcome run_family_sweep(json& config, const data_set& data, std::uint64_t seed,
                               int workers) {
    rank_estimate ranks = compute_ranks_from_config(config, data, seed, workers);
    set_stage("select");
    const family_grid grid = grid_from_config(config);
    const int K = config.value("K", 2);
    config["K"] = K;
    const std::string objective = config.value("objective", std::string{"ncut"});
    config["objective"] = objective;
    const double delta = config.value("delta", 0.05);
    config["delta"] = delta;

    sweep_outcome out{{}, reference_from_config(config, data, workers), std::move(ranks)};
    out.candidates = sweep(data, out.ranks, grid, K, objective_from_string(objective),
                           out.reference, delta, derive_seed(seed, "sweep"), workers);
    return out;
}

void run_select(json config, const cli_options& opts, artifact_writer& artifacts) {
    const std::uint64_t seed = resolve_seed(config, opts);
    const int workers = resolve_workers(config, opts);
    const data_set data = load_data(config, seed);
    sweep_outcome sw = run_family_sweep(config, data, seed, workers);
    const model_selection_report report =
        select(std::move(sw.candidates), sw.reference, config.at("delta").get<double>());
    set_stage("output");
    write_json_file(artifacts.path("report.json"), report.to_json());
    if (report.winner) {
        save_partition_csv(report.candidates[*report.winner].part,
                           artifacts.path("partition.csv"));
    }
    write_manifest(opts, "select", config, artifacts);
}

void run_sweep_delta(json config, const cli_options& opts, artifact_writer& artifacts) {
    const std::uint64_t seed = resolve_seed(config, opts);
    const int workers = resolve_workers(config, opts);
    const data_set data = load_data(config, seed);
    sweep_outcome sw = run_family_sweep(config, data, seed, workers);

    std::vector<double> delta_grid = {0.30, 0.25, 0.20, 0.15, 0.10, 0.05};
    if (config.contains("delta_grid")) {
        delta_grid = config.at("delta_grid").get<std::vector<double>>();
    }
    config["delta_grid"] = delta_grid;
    const double rel_tol = config.value("flat_rel_tol", 0.01);
    config["flat_rel_tol"] = rel_tol;

    const delta_sweep_curve curve = delta_sweep(sw.candidates, sw.reference, delta_grid);
    const auto spots = flat_spots(curve, rel_tol);

    set_stage("output");
    json curve_json = curve.to_json();
    json spots_json = json::array();
    for (const auto& s : spots) {
        spots_json.push_back({{"delta_high", s.delta_high},
                              {"delta_low", s.delta_low},
                              {"digest", s.digest}});
    }
    curve_json["flat_spots"] = std::move(spots_json);
    write_json_file(artifacts.path("delta_curve.json"), curve_json);
    save_delta_curve_csv(curve, artifacts.path("delta_curve.csv"));
    write_manifest(opts, "sweep-delta", config, artifacts);
}

void run_ssl(json config, const cli_options& opts, artifact_writer& artifacts) {
    const std::uint64_t seed = resolve_seed(config, opts);
    const int workers = resolve_workers(config, opts);
    const data_set data = load_data(config, seed);
    if (!data.labels) throw data_error("ssl needs labeled data");
    int num_classes = 0;
    for (int id : *data.labels) num_classes = std::max(num_classes, id + 1);

    // labeled mask: from the data set if present, otherwise drawn here
    std::vector<std::uint8_t> mask;
    if (data.labeled_mask) {
        mask = *data.labeled_mask;
    } else {
        const int count = config.value("labeled_count", 20);
        config["labeled_count"] = count;
        mask = choose_labeled_mask(data, count, derive_seed(seed, "labeled-mask"));
    }
    const Eigen::MatrixXd onehot = one_hot_labels(data, mask, num_classes);

    sparse_graph g;
    if (config.contains("grid")) {
        // model selection over the graph family, then GRF on the winner's graph
        config["K"] = config.value("K", num_classes);
        sweep_outcome sw = run_family_sweep(config, data, seed, workers);
        const model_selection_report report =
            select(std::move(sw.candidates), sw.reference, config.at("delta").get<double>());
        write_json_file(artifacts.path("report.json"), report.to_json());
        if (!report.winner) throw data_error("model selection found no feasible partition");
        const auto& cand = report.candidates[*report.winner];
        const family_grid grid = grid_from_config(config);
        g = build_rmd(data, sw.ranks, cand.k, cand.lambda, grid.weighting, cand.sigma, workers);
    } else if (config.contains("graph")) {
        std::optional<rank_estimate> ranks;
        if (config.at("graph").value("kind", std::string{}) == "rmd") {
            ranks = compute_ranks_from_config(config, data, seed, workers);
        }
        g = build_graph_from_spec(config["graph"], data, ranks ? &*ranks : nullptr, workers);
    } else {
        throw config_error("ssl needs either a 'graph' or a 'grid' section");
    }

    set_stage("ssl");
    const soft_labels soft = grf_solve(g, onehot, mask);
    const partition pred = predict(soft);
    set_stage("output");
    save_soft_labels_csv(soft, artifacts.path("soft_labels.csv"));
    save_partition_csv(pred, artifacts.path("predictions.csv"));

    // error rate on the unlabeled points against the known labels
    int wrong = 0, total = 0;
    for (int i = 0; i < data.n(); ++i) {
        if (mask[i]) continue;
        ++total;
        if (pred.assignment[i] != (*data.labels)[i]) ++wrong;
    }
    json summary;
    summary["unlabeled_count"] = total;
    summary["error_rate"] = total > 0 ? static_cast<double>(wrong) / total : 0.0;
    write_json_file(artifacts.path("ssl_summary.json"), summary);
    write_manifest(opts, "ssl", config, artifacts);
}

void run_cut_sweep(json config, const cli_options& opts, artifact_writer& artifacts) {
    const std::uint64_t seed = resolve_seed(config, opts);
    const int workers = resolve_workers(config, opts);
    const data_set data = load_data(config, seed);
    if (!config.contains("graphs")) throw config_error("cut-sweep needs a 'graphs' array");
    const int axis = config.value("axis", 0);
    config["axis"] = axis;

    bool any_rmd = false;
    for (const auto& spec : config.at("graphs")) {
        if (spec.value("kind", std::string{}) == "rmd") any_rmd = true;
    }
    std::optional<rank_estimate> ranks;
    if (any_rmd) ranks = compute_ranks_from_config(config, data, seed, workers);

    int index = 0;
    for (auto& spec : config.at("graphs")) {
        const std::string name =
            spec.value("name", spec.value("kind", std::string{"graph"}) + std::to_string(index));
        spec["name"] = name;
        const sparse_graph g =
            build_graph_from_spec(spec, data, ranks ? &*ranks : nullptr, workers);
        const auto sweep_rows = cut_position_sweep(data, g, axis);
        save_cut_sweep_csv(sweep_rows, artifacts.path("cutsweep_" + name + ".csv"));
        ++index;
    }
    write_manifest(opts, "cut-sweep", config, artifacts);
}

void run_verify_limits(json config, const cli_options& opts, artifact_writer& artifacts) {
    const std::uint64_t seed = resolve_seed(config, opts);
    const int workers = resolve_workers(config, opts);
    set_stage("limits");
    require_keys(config, {"theorem"}, "verify-limits");
    const std::string theorem = config.at("theorem").get<std::string>();
    const analytic_density density = density_from_config(config);

    convergence_report report;
    if (theorem == "thm1") {
        std::vector<int> sizes = {500, 1000, 2000, 4000};
        if (config.contains("sizes")) sizes = config.at("sizes").get<std::vector<int>>();
        config["sizes"] = sizes;
        const growth_rule l_rule = config.contains("l_rule")
                                       ? growth_rule::from_json(config.at("l_rule"))
                                       : growth_rule{"sqrt", 0};
        config["l_rule"] = l_rule.to_json();
        const int rounds = config.value("rounds", 5);
        config["rounds"] = rounds;
        report = verify_rank_convergence(density, sizes, l_rule, rounds,
                                         derive_seed(seed, "thm1"));
    } else if (theorem == "thm2") {
        std::vector<int> sizes = {1000, 2000, 4000, 8000};
        if (config.contains("sizes")) sizes = config.at("sizes").get<std::vector<int>>();
        config["sizes"] = sizes;
        const growth_rule k_rule = config.contains("k_rule")
                                       ? growth_rule::from_json(config.at("k_rule"))
                                       : (density.dim() == 1 ? growth_rule{"pow", 0.7}
                                                             : growth_rule{"log2", 0});
        config["k_rule"] = k_rule.to_json();
        const double lambda = config.value("lambda", 0.4);
        config["lambda"] = lambda;
        const std::string objective = config.value("objective", std::string{"rcut"});
        config["objective"] = objective;
        const int replicates = config.value("replicates", 1);
        config["replicates"] = replicates;

        hyperplane plane;
        if (!config.contains("plane")) throw config_error("thm2 needs a 'plane' section");
        json& pj = config["plane"];
        plane.axis = pj.value("axis", 0);
        pj["axis"] = plane.axis;
        if (pj.contains("offset")) {
            plane.offset = pj.at("offset").get<double>();
        } else if (pj.contains("at_valley_between")) {
            const auto range = pj.at("at_valley_between").get<std::vector<double>>();
            if (range.size() != 2) throw config_error("at_valley_between needs [lo, hi]");
            plane.offset = density_valley_1d(density, range[0], range[1]);
            pj["offset"] = plane.offset;
        } else {
            throw config_error("plane needs 'offset' or 'at_valley_between'");
        }
        report = verify_cut_limit(density, plane, lambda, sizes, k_rule,
                                  derive_seed(seed, "thm2"),
                                  objective_from_string(objective), workers, replicates);
    } else {
        throw config_error("unknown theorem: " + theorem + " (expected thm1 or thm2)");
    }

    set_stage("output");
    write_json_file(artifacts.path("limits_report.json"), report.to_json());
    save_convergence_csv(report, artifacts.path("limits_report.csv"));
    write_manifest(opts, "verify-limits", config, artifacts);
}

const char* kConfigHelp = R"(Config keys by command (JSON file passed via --config):
  common        seed (int), workers (int), out_dir (string)
  data section  {"path": csv [, "label_column": name]} | {"dataset_json": path}
                | {"generator": {"type": "gaussian_mixture"|"two_moons_gaussian",
                   "n": int, "components"|"preset"|"proportions"/"noise": ...}}
  gen-data      generator
  rank          data, rank {l, rounds, weighted}
  build-graph   data, graph {kind: knn|rmd|epsilon|full_rbf|full_arbf, k, lambda,
                weighting: binary|rbf, sigma|sigma_multiplier, epsilon|epsilon_multiplier},
                rank (for rmd)
  cluster       data, graph, K, objective (rcut|ncut), rank (for rmd)
  ssl           data (labeled), labeled_count, graph | (grid + reference + delta + K),
                objective, rank
  select        data, rank, grid {lambda[], k[], sigma_multipliers[], weighting},
                reference {k0, weighting, sigma|sigma_multiplier}, delta, K, objective
  sweep-delta   select keys + delta_grid[] (descending) + flat_rel_tol
  cut-sweep     data, graphs [graph spec with optional name], axis, rank (for rmd)
  verify-limits theorem (thm1|thm2), density {preset|components}, sizes[],
                l_rule/k_rule {kind: sqrt|pow|log2|fixed, value}, rounds,
                lambda, plane {axis, offset|at_valley_between}, objective
A manifest.json written by any run can be passed back via --config to reproduce it.
Environment: RMD_OUT_DIR sets the default output directory.)";

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rank-modulated-degree graphs: construction, spectral clustering, "
                 "semi-supervised learning, min-cut model selection and limit checks"};
    app.footer(kConfigHelp);
    app.require_subcommand(1);

    cli_options opts;
    const char* env_out = std::getenv("RMD_OUT_DIR");
    if (env_out) opts.out_dir = env_out;

    std::string command;
    const std::vector<std::string> commands = {"gen-data", "rank",        "build-graph",
                                               "cluster",  "ssl",         "select",
                                               "sweep-delta", "cut-sweep", "verify-limits"};
    for (const auto& name : commands) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", opts.config_path, "JSON config file")->required();
        sub->add_option("--out", opts.out_dir, "output directory (overrides config/env)");
        std::uint64_t seed_holder = 0;
        sub->add_option("--seed", seed_holder, "override the config seed")
            ->each([&opts](const std::string& v) { opts.seed_override = std::stoull(v); });
        sub->add_option("--workers", opts.workers, "worker thread count (0 = hardware)");
        sub->add_flag("--verbose", opts.verbose, "progress notes on stderr");
        sub->callback([&command, name] { command = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    g_started = std::chrono::steady_clock::now();
    try {
        json config = load_config_file(opts.config_path);

        std::string out_dir = ".";
        if (config.contains("out_dir")) out_dir = config.at("out_dir").get<std::string>();
        if (!opts.out_dir.empty()) out_dir = opts.out_dir;
        config["out_dir"] = out_dir;
        std::filesystem::create_directories(out_dir);
        artifact_writer artifacts{out_dir, {}};

        if (command == "gen-data") run_gen_data(config, opts, artifacts);
        else if (command == "rank") run_rank(config, opts, artifacts);
        else if (command == "build-graph") run_build_graph(config, opts, artifacts);
        else if (command == "cluster") run_cluster(config, opts, artifacts);
        else if (command == "ssl") run_ssl(config, opts, artifacts);
        else if (command == "select") run_select(config, opts, artifacts);
        else if (command == "sweep-delta") run_sweep_delta(config, opts, artifacts);
        else if (command == "cut-sweep") run_cut_sweep(config, opts, artifacts);
        else if (command == "verify-limits") run_verify_limits(config, opts, artifacts);

        if (opts.verbose) {
            const double secs = std::chrono::duration<double>(
                                    std::chrono::steady_clock::now() - g_started)
                                    .count();
            std::cerr << command << " finished in " << secs << "s\n";
        }
    } catch (const config_error& e) {
        std::cerr << "error [" << g_stage << "]: " << e.what() << "\n";
        return 1;
    } catch (const json::exception& e) {
        std::cerr << "error [config]: " << e.what() << "\n";
        return 1;
    } catch (const data_error& e) {
        std::cerr << "error [" << g_stage << "]: " << e.what() << "\n";
        return 2;
    } catch (const numeric_error& e) {
        std::cerr << "error [" << g_stage << "]: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error [" << g_stage << "]: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
