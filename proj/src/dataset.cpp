#include "rmd/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "rmd/common.hpp"

namespace rmd {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

bool parse_finite_double(const std::string& cell, double& out) {
    if (cell.empty()) return false;
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str() + cell.size()) return false;
    if (!std::isfinite(v)) return false;
    out = v;
    return true;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    for (auto& cell : cells) {
        const auto b = cell.find_first_not_of(" \t");
        const auto e = cell.find_last_not_of(" \t");
        cell = b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1);
    }
    return cells;
}

// Draw one sample from N(mean, cov) given the precomputed factor F with
// F F^T = cov (from a PSD eigendecomposition, so singular covs work too).
Eigen::VectorXd draw_gaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& factor,
                              rng_stream& rng) {
    Eigen::VectorXd z(mean.size());
    for (int i = 0; i < z.size(); ++i) z[i] = rng.next_gaussian();
    return mean + factor * z;
}

Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& cov) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success) throw numeric_error("covariance eigendecomposition failed");
    const double tol = 1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    if (es.eigenvalues().minCoeff() < -tol) {
        throw data_error("mixture covariance is not positive semidefinite");
    }
    Eigen::VectorXd sqrt_vals = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * sqrt_vals.asDiagonal();
}

}  // namespace

void data_set::validate() const {
    if (points.rows() < 1 || points.cols() < 1) {
        throw data_error("data set must have n >= 1 points and d >= 1 dimensions");
    }
    if (!points.allFinite()) throw data_error("data set contains non-finite coordinates");
    if (labels && static_cast<int>(labels->size()) != n()) {
        throw data_error("label count does not match point count");
    }
    if (labeled_mask) {
        if (static_cast<int>(labeled_mask->size()) != n()) {
            throw data_error("labeled_mask size does not match point count");
        }
        if (!labels) throw data_error("labeled_mask present without labels");
    }
}

int mixture_spec::dim() const {
    return components.empty() ? 0 : static_cast<int>(components.front().mean.size());
}

void mixture_spec::validate() const {
    if (components.empty()) throw data_error("mixture spec has no components");
    const int d = dim();
    double total = 0.0;
    for (const auto& c : components) {
        if (c.weight <= 0.0) throw data_error("mixture weights must be positive");
        if (c.mean.size() != d) throw data_error("mixture component dimension mismatch");
        if (c.covariance.rows() != d || c.covariance.cols() != d) {
            throw data_error("mixture covariance dimension mismatch");
        }
        psd_factor(c.covariance);  // PSD check
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw data_error("mixture weights must sum to 1 (got " + format_double(total) + ")");
    }
}

data_set load_csv(const std::string& path, const std::optional<std::string>& label_column) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open file: " + path);

    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.front() == '#') continue;  // comment/header metadata
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        lines.push_back(line);
    }
    if (lines.empty()) throw data_error("empty file: " + path);

    // Header auto-detection: a first row with any non-numeric cell is a header.
    auto first_cells = split_line(lines.front());
    bool has_header = false;
    for (const auto& cell : first_cells) {
        double v;
        if (!parse_finite_double(cell, v)) {
            has_header = true;
            break;
        }
    }
    std::vector<std::string> header;
    std::size_t first_data_row = 0;
    if (has_header) {
        header = first_cells;
        first_data_row = 1;
    }
    if (label_column && !has_header) {
        throw data_error("label column '" + *label_column + "' requested but file has no header row");
    }

    int label_idx = -1;
    if (label_column) {
        const auto it = std::find(header.begin(), header.end(), *label_column);
        if (it == header.end()) {
            throw data_error("label column '" + *label_column + "' not found in header");
        }
        label_idx = static_cast<int>(it - header.begin());
    }

    if (first_data_row >= lines.size()) throw data_error("file has a header but no data rows: " + path);

    const std::size_t ncols = split_line(lines[first_data_row]).size();
    const std::size_t nfeat = ncols - (label_idx >= 0 ? 1 : 0);
    if (nfeat < 1) throw data_error("no feature columns in " + path);
    const std::size_t nrows = lines.size() - first_data_row;

    data_set out;
    out.points.resize(static_cast<Eigen::Index>(nrows), static_cast<Eigen::Index>(nfeat));
    std::vector<std::string> raw_labels;
    raw_labels.reserve(label_idx >= 0 ? nrows : 0);

    for (std::size_t r = 0; r < nrows; ++r) {
        const auto cells = split_line(lines[first_data_row + r]);
        if (cells.size() != ncols) {
            throw data_error("row " + std::to_string(r + 1) + " has " + std::to_string(cells.size()) +
                             " cells, expected " + std::to_string(ncols));
        }
        std::size_t f = 0;
        for (std::size_t c = 0; c < ncols; ++c) {
            if (static_cast<int>(c) == label_idx) {
                raw_labels.push_back(cells[c]);
                continue;
            }
            double v;
            if (!parse_finite_double(cells[c], v)) {
                throw data_error("non-numeric or non-finite cell '" + cells[c] + "' at row " +
                                 std::to_string(r + 1) + ", column " + std::to_string(c + 1));
            }
            out.points(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f++)) = v;
        }
    }

    if (label_idx >= 0) {
        std::vector<std::string> names = raw_labels;
        std::sort(names.begin(), names.end());
        names.erase(std::unique(names.begin(), names.end()), names.end());
        std::vector<int> ids(nrows);
        for (std::size_t r = 0; r < nrows; ++r) {
            ids[r] = static_cast<int>(std::lower_bound(names.begin(), names.end(), raw_labels[r]) -
                                      names.begin());
        }
        out.labels = std::move(ids);
        out.label_names = std::move(names);
    }
    out.provenance.generator = "load_csv";
    out.provenance.params = {{"path", path}};
    if (label_column) out.provenance.params["label_column"] = *label_column;
    out.validate();
    return out;
}

void save_csv(const data_set& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write file: " + path);
    for (int c = 0; c < data.d(); ++c) out << (c ? ",x" : "x") << c;
    if (data.labels) out << ",label";
    if (data.labeled_mask) out << ",labeled";
    out << '\n';
    for (int r = 0; r < data.n(); ++r) {
        for (int c = 0; c < data.d(); ++c) {
            if (c) out << ',';
            out << format_double(data.points(r, c));
        }
        if (data.labels) {
            const int id = (*data.labels)[r];
            out << ',';
            if (id >= 0 && id < static_cast<int>(data.label_names.size())) {
                out << data.label_names[id];
            } else {
                out << id;
            }
        }
        if (data.labeled_mask) out << ',' << static_cast<int>((*data.labeled_mask)[r]);
        out << '\n';
    }
}

nlohmann::json dataset_to_json(const data_set& data) {
    nlohmann::json j;
    j["n"] = data.n();
    j["d"] = data.d();
    auto points = nlohmann::json::array();
    for (int r = 0; r < data.n(); ++r) {
        auto row = nlohmann::json::array();
        for (int c = 0; c < data.d(); ++c) row.push_back(data.points(r, c));
        points.push_back(std::move(row));
    }
    j["points"] = std::move(points);
    if (data.labels) j["labels"] = *data.labels;
    if (data.labeled_mask) {
        std::vector<int> mask(data.labeled_mask->begin(), data.labeled_mask->end());
        j["labeled_mask"] = mask;
    }
    if (!data.label_names.empty()) j["label_names"] = data.label_names;
    j["seed_provenance"] = {{"generator", data.provenance.generator},
                            {"seed", data.provenance.seed},
                            {"params", data.provenance.params}};
    return j;
}

data_set dataset_from_json(const nlohmann::json& j) {
    data_set out;
    const int n = j.at("n").get<int>();
    const int d = j.at("d").get<int>();
    out.points.resize(n, d);
    const auto& points = j.at("points");
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < d; ++c) out.points(r, c) = points.at(r).at(c).get<double>();
    }
    if (j.contains("labels")) out.labels = j.at("labels").get<std::vector<int>>();
    if (j.contains("labeled_mask")) {
        const auto mask = j.at("labeled_mask").get<std::vector<int>>();
        out.labeled_mask = std::vector<std::uint8_t>(mask.begin(), mask.end());
    }
    if (j.contains("label_names")) out.label_names = j.at("label_names").get<std::vector<std::string>>();
    if (j.contains("seed_provenance")) {
        const auto& p = j.at("seed_provenance");
        out.provenance.generator = p.value("generator", std::string{});
        out.provenance.seed = p.value("seed", std::uint64_t{0});
        if (p.contains("params")) out.provenance.params = p.at("params");
    }
    out.validate();
    return out;
}

data_set gen_gaussian_mixture(const mixture_spec& spec, int n, std::uint64_t seed) {
    if (n < 1) throw data_error("sample count must be positive");
    spec.validate();
    const int d = spec.dim();
    const int k = static_cast<int>(spec.components.size());

    std::vector<Eigen::MatrixXd> factors;
    factors.reserve(k);
    std::vector<double> cumulative(k);
    double acc = 0.0;
    for (int c = 0; c < k; ++c) {
        factors.push_back(psd_factor(spec.components[c].covariance));
        acc += spec.components[c].weight;
        cumulative[c] = acc;
    }
    cumulative.back() = 1.0;

    rng_stream rng(derive_seed(seed, "gaussian-mixture"));
    data_set out;
    out.points.resize(n, d);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
        const double u = rng.next_double();
        int c = static_cast<int>(std::lower_bound(cumulative.begin(), cumulative.end(), u) -
                                 cumulative.begin());
        if (c >= k) c = k - 1;
        out.points.row(i) = draw_gaussian(spec.components[c].mean, factors[c], rng).transpose();
        labels[i] = c;
    }
    out.labels = std::move(labels);
    out.label_names.resize(k);
    for (int c = 0; c < k; ++c) out.label_names[c] = std::to_string(c);

    nlohmann::json comp_json = nlohmann::json::array();
    for (const auto& c : spec.components) {
        nlohmann::json cj;
        cj["weight"] = c.weight;
        cj["mean"] = std::vector<double>(c.mean.data(), c.mean.data() + c.mean.size());
        auto cov = nlohmann::json::array();
        for (int r = 0; r < c.covariance.rows(); ++r) {
            auto row = nlohmann::json::array();
            for (int cc = 0; cc < c.covariance.cols(); ++cc) row.push_back(c.covariance(r, cc));
            cov.push_back(std::move(row));
        }
        cj["covariance"] = std::move(cov);
        comp_json.push_back(std::move(cj));
    }
    out.provenance = {"gaussian_mixture", seed, {{"n", n}, {"components", comp_json}}};
    return out;
}

data_set gen_two_moons_gaussian(int n, const std::array<double, 3>& proportions, double noise,
                                std::uint64_t seed) {
    if (n < 1) throw data_error("sample count must be positive");
    double total = 0.0;
    for (double p : proportions) {
        if (p <= 0.0) throw data_error("moon/blob proportions must be positive");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw data_error("proportions must sum to 1");
    if (noise < 0.0) throw data_error("noise must be nonnegative");

    // Unit-radius half circles; the second moon is the first reflected and
    // shifted by (1, -0.5). Blob center sits 2.5 beyond the moons' right
    // extent (x = 2), with covariance 0.25*I.
    const double blob_x = 2.0 + 2.5;
    rng_stream rng(derive_seed(seed, "two-moons-gaussian"));
    data_set out;
    out.points.resize(n, 2);
    std::vector<int> labels(n);
    const std::array<double, 3> cum = {proportions[0], proportions[0] + proportions[1], 1.0};
    for (int i = 0; i < n; ++i) {
        const double u = rng.next_double();
        int c = u < cum[0] ? 0 : (u < cum[1] ? 1 : 2);
        double x, y;
        if (c == 2) {
            x = blob_x + 0.5 * rng.next_gaussian();
            y = 0.0 + 0.5 * rng.next_gaussian();
        } else {
            const double theta = M_PI * rng.next_double();
            if (c == 0) {
                x = std::cos(theta);
                y = std::sin(theta);
            } else {
                x = 1.0 - std::cos(theta);
                y = 0.5 - std::sin(theta);
            }
            x += noise * rng.next_gaussian();
            y += noise * rng.next_gaussian();
        }
        out.points(i, 0) = x;
        out.points(i, 1) = y;
        labels[i] = c;
    }
    out.labels = std::move(labels);
    out.label_names = {"0", "1", "2"};
    out.provenance = {"two_moons_gaussian",
                      seed,
                      {{"n", n},
                       {"proportions", std::vector<double>(proportions.begin(), proportions.end())},
                       {"noise", noise}}};
    return out;
}

data_set subsample_unbalanced(const data_set& data, const std::map<int, int>& class_counts,
                              std::uint64_t seed) {
    data.validate();
    if (!data.labels) throw data_error("subsample_unbalanced requires a labeled data set");
    const auto& labels = *data.labels;

    std::map<int, std::vector<int>> by_class;
    for (int i = 0; i < data.n(); ++i) by_class[labels[i]].push_back(i);

    std::vector<int> chosen;
    rng_stream rng(derive_seed(seed, "subsample"));
    for (const auto& [cls, count] : class_counts) {
        const auto it = by_class.find(cls);
        if (it == by_class.end()) {
            throw data_error("requested class " + std::to_string(cls) + " absent from data set");
        }
        auto pool = it->second;
        if (count <= 0) throw data_error("requested count must be positive");
        if (count > static_cast<int>(pool.size())) {
            throw data_error("requested " + std::to_string(count) + " points of class " +
                             std::to_string(cls) + " but only " + std::to_string(pool.size()) +
                             " available");
        }
        // Fisher-Yates prefix shuffle
        for (int i = 0; i < count; ++i) {
            const std::size_t j = i + rng.next_below(pool.size() - i);
            std::swap(pool[i], pool[j]);
        }
        chosen.insert(chosen.end(), pool.begin(), pool.begin() + count);
    }

    data_set out;
    out.points.resize(static_cast<int>(chosen.size()), data.d());
    std::vector<int> out_labels(chosen.size());
    for (std::size_t i = 0; i < chosen.size(); ++i) {
        out.points.row(static_cast<int>(i)) = data.points.row(chosen[i]);
        out_labels[i] = labels[chosen[i]];
    }
    out.labels = std::move(out_labels);
    out.label_names = data.label_names;
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [cls, count] : class_counts) counts[std::to_string(cls)] = count;
    out.provenance = {"subsample_unbalanced", seed, {{"counts", counts}, {"source", data.provenance.generator}}};
    return out;
}

mixture_spec two_gaussian_spec() {
    mixture_spec spec;
    mixture_component a;
    a.weight = 0.85;
    a.mean = Eigen::Vector2d(4.5, 0.0);
    a.covariance = Eigen::Vector2d(2.0, 1.0).asDiagonal();
    mixture_component b;
    b.weight = 0.15;
    b.mean = Eigen::Vector2d(0.0, 0.0);
    b.covariance = Eigen::Matrix2d::Identity();
    spec.components = {a, b};
    return spec;
}

mixture_spec three_gaussian_spec() {
    mixture_spec spec;
    mixture_component a;
    a.weight = 2.0 / 11.0;
    a.mean = Eigen::Vector2d(-0.7, 0.0);
    a.covariance = Eigen::Matrix2d::Identity();
    mixture_component b;
    b.weight = 8.0 / 11.0;
    b.mean = Eigen::Vector2d(4.5, 0.0);
    b.covariance = Eigen::Vector2d(2.0, 1.0).asDiagonal();
    mixture_component c;
    c.weight = 1.0 / 11.0;
    c.mean = Eigen::Vector2d(9.7, 0.0);
    c.covariance = 0.7 * Eigen::Matrix2d::Identity();
    spec.components = {a, b, c};
    return spec;
}

}  // namespace rmd
