#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

#include "rmd/dataset.hpp"
#include "rmd/spectral.hpp"

namespace rmd {

/// Gaussian-mixture density in R^1 or R^2 with exact pdf / marginal masses
/// and a cached Monte-Carlo sample for sublevel-set probabilities in 2D.
class analytic_density {
public:
    explicit analytic_density(mixture_spec spec);

    int dim() const { return spec_.dim(); }
    const mixture_spec& spec() const { return spec_; }

    double pdf(const Eigen::VectorXd& x) const;
    double pdf1(double x) const;  // dim() == 1 convenience

    /// P(x[axis] <= c), exact via component marginals.
    double mass_below(int axis, double c) const;

    /// Effective support along an axis: [min(mean - 8 sigma), max(mean + 8 sigma)].
    std::pair<double, double> support_bounds(int axis) const;

    /// Numerical check that the pdf integrates to 1 over the support box.
    double normalization_integral() const;

    data_set sample(int n, std::uint64_t seed) const;

    /// Sorted pdf values of the cached Monte-Carlo sample (2D sublevel masses).
    const std::vector<double>& mc_pdf_values() const;

private:
    mixture_spec spec_;
    mutable std::shared_ptr<std::vector<double>> mc_cache_;
};

/// Axis-aligned separating hyperplane {x : x[axis] = offset}.
struct hyperplane {
    int axis = 0;
    double offset = 0.0;
};

/// Limiting rank p(y): probability mass of the sublevel set {x : f(x) <= f(y)}.
/// 1D uses exact level-crossing quadrature, 2D a 10^6-draw Monte-Carlo sample.
double analytic_p(const analytic_density& density, const Eigen::VectorXd& y);

/// Volume of the unit ball in R^d (the 0-dimensional ball counts as 1).
double unit_ball_volume(int d);

struct limit_constants {
    int d = 1;
    double eta_d = 0.0;
    double eta_dm1 = 0.0;
    double c_d = 0.0;  // 2 eta_{d-1} / ((d+1) eta_d^{1+1/d})
};

limit_constants make_limit_constants(int d);

/// Degree-modulation factor lambda + 2(1-lambda) p, ranging over [lambda, 2-lambda].
double rho(double p, double lambda);

/// B_S = 1/mu(C+) + 1/mu(C-) for the halfspaces induced by the plane.
double b_s(const analytic_density& density, const hyperplane& plane);

/// Asymptotic scaled cut value across the plane:
/// C_d * B_S * integral over S of f^{1-1/d} * rho(p)^{1+1/d}.
/// Returns 0 when the plane misses the effective support.
double limit_cut_integral(const analytic_density& density, const hyperplane& plane, double lambda);

/// Position of the density minimum on [lo, hi] (1D; grid scan + golden section).
double density_valley_1d(const analytic_density& density, double lo, double hi);

/// Growth rule for l_n or k_n: "sqrt" (ceil of sqrt(n)), "pow" (ceil of n^value),
/// "log2" (ceil of log(n)^2), or "fixed" (constant value).
struct growth_rule {
    std::string kind = "sqrt";
    double value = 0.0;

    int eval(int n) const;
    static growth_rule from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct convergence_report {
    std::vector<int> sizes;
    std::vector<double> statistic;  // per size
    double target = 0.0;
    std::vector<double> errors;  // per size
    bool monotone_flag = false;  // errors nonincreasing, allowing one inversion

    nlohmann::json to_json() const;
};

void save_convergence_csv(const convergence_report& report, const std::string& path);

/// Rank-consistency check: per size, draw a sample containing a fixed
/// 50-point probe set, estimate ranks, and report mean |R - p| on the probes.
convergence_report verify_rank_convergence(const analytic_density& density,
                                           const std::vector<int>& sizes,
                                           const growth_rule& l_rule, int rounds,
                                           std::uint64_t seed);

/// Limit-cut check: per size, build the idealized directed RMD graph with
/// exact analytic degrees, measure the plane's scaled RCut (or NCut) and
/// compare against limit_cut_integral. The per-size statistic is averaged
/// over `replicates` independent draws.
convergence_report verify_cut_limit(const analytic_density& density, const hyperplane& plane,
                                    double lambda, const std::vector<int>& sizes,
                                    const growth_rule& k_rule, std::uint64_t seed,
                                    cut_objective objective = cut_objective::rcut,
                                    int workers = 0, int replicates = 1);

}  // namespace rmd
