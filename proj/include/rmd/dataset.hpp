#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

namespace rmd {

/// Record of how a data set was produced (generator name, seed, parameters).
struct seed_provenance {
    std::string generator;
    std::uint64_t seed = 0;
    nlohmann::json params = nlohmann::json::object();
};

/// Points in R^d with optional class labels and a partial label mask.
/// Immutable after construction by convention; safe to share read-only.
struct data_set {
    Eigen::MatrixXd points;                              // n x d
    std::optional<std::vector<int>> labels;              // class id per point
    std::optional<std::vector<std::uint8_t>> labeled_mask;  // for SSL
    std::vector<std::string> label_names;                // id -> original name
    seed_provenance provenance;

    int n() const { return static_cast<int>(points.rows()); }
    int d() const { return static_cast<int>(points.cols()); }

    /// Checks the structural invariants (n,d >= 1, finite rows, masked
    /// points carry labels). Throws data_error on violation.
    void validate() const;
};

struct mixture_component {
    double weight = 0.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;  // d x d PSD (diagonal or full)
};

struct mixture_spec {
    std::vector<mixture_component> components;

    int dim() const;
    /// Weights positive summing to 1 (within 1e-9), covariances PSD.
    void validate() const;
};

data_set load_csv(const std::string& path,
                  const std::optional<std::string>& label_column = std::nullopt);
void save_csv(const data_set& data, const std::string& path);

nlohmann::json dataset_to_json(const data_set& data);
data_set dataset_from_json(const nlohmann::json& j);

/// n i.i.d. draws from the mixture; component index recorded as label.
data_set gen_gaussian_mixture(const mixture_spec& spec, int n, std::uint64_t seed);

/// Two interleaved unit-radius half-circle clusters plus one Gaussian blob
/// beyond their right extent. Labels 0 (upper moon), 1 (lower moon), 2 (blob).
data_set gen_two_moons_gaussian(int n, const std::array<double, 3>& proportions,
                                double noise, std::uint64_t seed);

/// Sample the requested number of points per class without replacement.
data_set subsample_unbalanced(const data_set& data, const std::map<int, int>& class_counts,
                              std::uint64_t seed);

/// Fig-2-style spec: two bivariate Gaussians, weights .85/.15,
/// means [4.5;0] / [0;0], covariances diag(2,1) / diag(1,1).
mixture_spec two_gaussian_spec();

/// Three-component spec with weights 2:8:1, means [-0.7;0], [4.5;0], [9.7;0],
/// covariances I, diag(2,1), 0.7*I.
mixture_spec three_gaussian_spec();

}  // namespace rmd
