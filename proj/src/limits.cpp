#include "rmd/limits.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <Eigen/Dense>

#include "rmd/common.hpp"
#include "rmd/rank.hpp"

namespace rmd {

namespace {

constexpr int kMcDraws = 1000000;
constexpr std::uint64_t kMcSeed = 0x52414E4B4C494DULL;

double gaussian_cdf(double x, double mean, double variance) {
    return 0.5 * std::erfc(-(x - mean) / std::sqrt(2.0 * variance));
}

// mass of the mixture on the interval [a, b] (1D)
double interval_mass(const mixture_spec& spec, double a, double b) {
    double total = 0.0;
    for (const auto& c : spec.components) {
        const double var = c.covariance(0, 0);
        total += c.weight * (gaussian_cdf(b, c.mean[0], var) - gaussian_cdf(a, c.mean[0], var));
    }
    return total;
}

}  // namespace

analytic_density::analytic_density(mixture_spec spec) : spec_(std::move(spec)) {
    spec_.validate();
    if (dim() != 1 && dim() != 2) {
        throw data_error("analytic_density supports 1D and 2D mixtures");
    }
}

double analytic_density::pdf(const Eigen::VectorXd& x) const {
    if (x.size() != dim()) throw data_error("pdf: point dimension mismatch");
    double total = 0.0;
    for (const auto& c : spec_.components) {
        const Eigen::VectorXd diff = x - c.mean;
        if (dim() == 1) {
            const double var = c.covariance(0, 0);
            total += c.weight * std::exp(-0.5 * diff[0] * diff[0] / var) /
                     std::sqrt(2.0 * M_PI * var);
        } else {
            const double det = c.covariance.determinant();
            const Eigen::Vector2d solved = c.covariance.llt().solve(diff.head<2>());
            const double quad = diff.head<2>().dot(solved);
            total += c.weight * std::exp(-0.5 * quad) / (2.0 * M_PI * std::sqrt(det));
        }
    }
    return total;
}

double analytic_density::pdf1(double x) const {
    if (dim() != 1) throw data_error("pdf1 requires a 1D density");
    Eigen::VectorXd v(1);
    v[0] = x;
    return pdf(v);
}

double analytic_density::mass_below(int axis, double c) const {
    if (axis < 0 || axis >= dim()) throw data_error("axis out of range");
    double total = 0.0;
    for (const auto& comp : spec_.components) {
        total += comp.weight * gaussian_cdf(c, comp.mean[axis], comp.covariance(axis, axis));
    }
    return total;
}

std::pair<double, double> analytic_density::support_bounds(int axis) const {
    if (axis < 0 || axis >= dim()) throw data_error("axis out of range");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& comp : spec_.components) {
        const double sigma = std::sqrt(comp.covariance(axis, axis));
        lo = std::min(lo, comp.mean[axis] - 8.0 * sigma);
        hi = std::max(hi, comp.mean[axis] + 8.0 * sigma);
    }
    return {lo, hi};
}

double analytic_density::normalization_integral() const {
    // Simpson's rule on a fine grid over the support box.
    const int steps = dim() == 1 ? 4096 : 512;
    const auto [lo0, hi0] = support_bounds(0);
    if (dim() == 1) {
        const double h = (hi0 - lo0) / steps;
        double acc = 0.0;
        for (int i = 0; i <= steps; ++i) {
            const double w = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            acc += w * pdf1(lo0 + i * h);
        }
        return acc * h / 3.0;
    }
    const auto [lo1, hi1] = support_bounds(1);
    const double h0 = (hi0 - lo0) / steps;
    const double h1 = (hi1 - lo1) / steps;
    double acc = 0.0;
    Eigen::VectorXd x(2);
    for (int i = 0; i <= steps; ++i) {
        const double wi = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        x[0] = lo0 + i * h0;
        double inner = 0.0;
        for (int j = 0; j <= steps; ++j) {
            const double wj = (j == 0 || j == steps) ? 1.0 : (j % 2 ? 4.0 : 2.0);
            x[1] = lo1 + j * h1;
            inner += wj * pdf(x);
        }
        acc += wi * inner * h1 / 3.0;
    }
    return acc * h0 / 3.0;
}

data_set analytic_density::sample(int n, std::uint64_t seed) const {
    return gen_gaussian_mixture(spec_, n, seed);
}

const std::vector<double>& analytic_density::mc_pdf_values() const {
    if (!mc_cache_) {
        const data_set draws = sample(kMcDraws, kMcSeed);
        auto values = std::make_shared<std::vector<double>>();
        values->reserve(kMcDraws);
        for (int i = 0; i < draws.n(); ++i) {
            values->push_back(pdf(draws.points.row(i).transpose()));
        }
        std::sort(values->begin(), values->end());
        mc_cache_ = std::move(values);
    }
    return *mc_cache_;
}

double analytic_p(const analytic_density& density, const Eigen::VectorXd& y) {
    const double level = density.pdf(y);

    if (density.dim() == 1) {
        // Find the crossings of f(x) = level and add up the exact mass of the
        // sublevel intervals; the mass outside the 8-sigma box is sublevel by
        // construction and enters through the unbounded end intervals.
        const auto [lo, hi] = density.support_bounds(0);
        const int grid = 8192;
        const double h = (hi - lo) / grid;
        std::vector<double> crossings;
        double prev_x = lo;
        double prev_v = density.pdf1(lo) - level;
        for (int i = 1; i <= grid; ++i) {
            const double x = lo + i * h;
            const double v = density.pdf1(x) - level;
            if ((prev_v <= 0.0) != (v <= 0.0)) {
                double a = prev_x, b = x, fa = prev_v;
                for (int step = 0; step < 60; ++step) {
                    const double mid = 0.5 * (a + b);
                    const double fm = density.pdf1(mid) - level;
                    if ((fa <= 0.0) == (fm <= 0.0)) {
                        a = mid;
                        fa = fm;
                    } else {
                        b = mid;
                    }
                }
                crossings.push_back(0.5 * (a + b));
            }
            prev_x = x;
            prev_v = v;
        }

        double mass = 0.0;
        double segment_start = -std::numeric_limits<double>::infinity();
        bool below = density.pdf1(lo) <= level;  // tails are below for any level > 0
        for (double c : crossings) {
            if (below) mass += interval_mass(density.spec(), segment_start, c);
            segment_start = c;
            below = !below;
        }
        if (below) {
            mass += interval_mass(density.spec(), segment_start,
                                  std::numeric_limits<double>::infinity());
        }
        return std::clamp(mass, 0.0, 1.0);
    }

    // 2D: P(f(X) <= level) from the cached sorted Monte-Carlo pdf values.
    const auto& values = density.mc_pdf_values();
    const auto it = std::upper_bound(values.begin(), values.end(), level);
    return static_cast<double>(it - values.begin()) / static_cast<double>(values.size());
}

double unit_ball_volume(int d) {
    if (d < 0) throw data_error("dimension must be nonnegative");
    if (d == 0) return 1.0;
    return std::pow(M_PI, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
}

limit_constants make_limit_constants(int d) {
    if (d < 1) throw data_error("dimension must be positive");
    limit_constants c;
    c.d = d;
    c.eta_d = unit_ball_volume(d);
    c.eta_dm1 = unit_ball_volume(d - 1);
    c.c_d = 2.0 * c.eta_dm1 / ((d + 1) * std::pow(c.eta_d, 1.0 + 1.0 / d));
    return c;
}

double rho(double p, double lambda) {
    if (p < 0.0 || p > 1.0) throw data_error("p must lie in [0, 1]");
    if (lambda <= 0.0 || lambda > 1.0) throw data_error("lambda must lie in (0, 1]");
    return lambda + 2.0 * (1.0 - lambda) * p;
}

double b_s(const analytic_density& density, const hyperplane& plane) {
    const double below = density.mass_below(plane.axis, plane.offset);
    const double above = 1.0 - below;
    if (below <= 1e-12 || above <= 1e-12) {
        return std::numeric_limits<double>::infinity();
    }
    return 1.0 / below + 1.0 / above;
}

double limit_cut_integral(const analytic_density& density, const hyperplane& plane, double lambda) {
    const int d = density.dim();
    const auto [lo, hi] = density.support_bounds(plane.axis);
    if (plane.offset <= lo || plane.offset >= hi) return 0.0;  // plane outside support
    const double bs = b_s(density, plane);
    if (!std::isfinite(bs)) return 0.0;
    const limit_constants constants = make_limit_constants(d);

    if (d == 1) {
        // The "integral over S" collapses to a point evaluation with
        // f^{1-1/d} = f^0 = 1, leaving C_1 * B_S * rho^2.
        Eigen::VectorXd s(1);
        s[0] = plane.offset;
        const double p = analytic_p(density, s);
        const double r = rho(p, lambda);
        return constants.c_d * bs * r * r;
    }

    // d == 2: integrate f^{1/2} rho^{3/2} along the line x[axis] = offset.
    const int other = 1 - plane.axis;
    const auto [tlo, thi] = density.support_bounds(other);
    const int steps = 512;
    const double h = (thi - tlo) / steps;
    double acc = 0.0;
    Eigen::VectorXd s(2);
    s[plane.axis] = plane.offset;
    for (int i = 0; i <= steps; ++i) {
        const double w = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        s[other] = tlo + i * h;
        const double f = density.pdf(s);
        if (f <= 0.0) continue;
        const double r = rho(analytic_p(density, s), lambda);
        acc += w * std::sqrt(f) * r * std::sqrt(r);
    }
    return constants.c_d * bs * acc * h / 3.0;
}

double density_valley_1d(const analytic_density& density, double lo, double hi) {
    if (density.dim() != 1) throw data_error("density_valley_1d requires a 1D density");
    if (!(hi > lo)) throw config_error("invalid valley search interval");
    const int grid = 512;
    double best_x = lo;
    double best_f = density.pdf1(lo);
    for (int i = 1; i <= grid; ++i) {
        const double x = lo + (hi - lo) * i / grid;
        const double f = density.pdf1(x);
        if (f < best_f) {
            best_f = f;
            best_x = x;
        }
    }
    double a = std::max(lo, best_x - (hi - lo) / grid);
    double b = std::min(hi, best_x + (hi - lo) / grid);
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = density.pdf1(x1), f2 = density.pdf1(x2);
    for (int iter = 0; iter < 200 && b - a > 1e-12; ++iter) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = density.pdf1(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = density.pdf1(x2);
        }
    }
    return 0.5 * (a + b);
}

int growth_rule::eval(int n) const {
    if (n < 1) throw data_error("growth rule needs positive n");
    if (kind == "sqrt") return static_cast<int>(std::ceil(std::sqrt(double(n))));
    if (kind == "pow") return static_cast<int>(std::ceil(std::pow(double(n), value)));
    if (kind == "log2") {
        const double l = std::log(double(n));
        return static_cast<int>(std::ceil(l * l));
    }
    if (kind == "fixed") return static_cast<int>(value);
    throw config_error("unknown growth rule kind: " + kind);
}

growth_rule growth_rule::from_json(const nlohmann::json& j) {
    growth_rule rule;
    rule.kind = j.value("kind", std::string{"sqrt"});
    rule.value = j.value("value", 0.0);
    return rule;
}

nlohmann::json growth_rule::to_json() const {
    return {{"kind", kind}, {"value", value}};
}

nlohmann::json convergence_report::to_json() const {
    return {{"sizes", sizes},
            {"statistic", statistic},
            {"target", target},
            {"errors", errors},
            {"monotone_flag", monotone_flag}};
}

void save_convergence_csv(const convergence_report& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write file: " + path);
    out << "size,statistic,target,error\n";
    char buf[40];
    for (std::size_t i = 0; i < report.sizes.size(); ++i) {
        out << report.sizes[i] << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", report.statistic[i]);
        out << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", report.target);
        out << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", report.errors[i]);
        out << buf << '\n';
    }
}

namespace {

bool nonincreasing_with_one_slack(const std::vector<double>& errors) {
    int inversions = 0;
    for (std::size_t i = 1; i < errors.size(); ++i) {
        if (errors[i] > errors[i - 1]) ++inversions;
    }
    return inversions <= 1;
}

void check_sizes(const std::vector<int>& sizes) {
    if (sizes.empty()) throw config_error("size list is empty");
    for (std::size_t i = 1; i < sizes.size(); ++i) {
        if (sizes[i] <= sizes[i - 1]) throw config_error("sizes must be strictly increasing");
    }
}

}  // namespace

convergence_report verify_rank_convergence(const analytic_density& density,
                                           const std::vector<int>& sizes,
                                           const growth_rule& l_rule, int rounds,
                                           std::uint64_t seed) {
    check_sizes(sizes);
    constexpr int kProbeCount = 50;
    if (sizes.front() <= kProbeCount) throw config_error("sizes must exceed the 50-point probe set");

    // Fixed probe points shared by all sizes; they are themselves i.i.d.
    // draws so prepending them keeps the pooled sample i.i.d.
    const data_set probes = density.sample(kProbeCount, derive_seed(seed, "probe"));
    Eigen::VectorXd probe_p(kProbeCount);
    for (int i = 0; i < kProbeCount; ++i) {
        probe_p[i] = analytic_p(density, probes.points.row(i).transpose());
    }

    convergence_report report;
    report.sizes = sizes;
    report.target = 0.0;
    for (std::size_t s = 0; s < sizes.size(); ++s) {
        const int n = sizes[s];
        const data_set rest = density.sample(n - kProbeCount, derive_seed(seed, "sample", s));
        data_set pooled;
        pooled.points.resize(n, density.dim());
        pooled.points.topRows(kProbeCount) = probes.points;
        pooled.points.bottomRows(n - kProbeCount) = rest.points;
        pooled.provenance.generator = "verify_rank_convergence";

        const int l = l_rule.eval(n);
        const rank_estimate est =
            compute_ranks(pooled, l, rounds, derive_seed(seed, "ranks", s));

        double err = 0.0;
        for (int i = 0; i < kProbeCount; ++i) err += std::abs(est.ranks[i] - probe_p[i]);
        err /= kProbeCount;
        report.statistic.push_back(err);
        report.errors.push_back(err);
    }
    report.monotone_flag = nonincreasing_with_one_slack(report.errors);
    return report;
}

convergence_report verify_cut_limit(const analytic_density& density, const hyperplane& plane,
                                    double lambda, const std::vector<int>& sizes,
                                    const growth_rule& k_rule, std::uint64_t seed,
                                    cut_objective objective, int workers, int replicates) {
    check_sizes(sizes);
    if (replicates < 1) throw config_error("replicates must be positive");
    const int d = density.dim();
    const double target = limit_cut_integral(density, plane, lambda);
    if (!(target > 0.0)) throw config_error("limit integral vanishes for this plane");

    // For 1D densities, tabulate p on a fine position grid once and
    // interpolate per sample (p is continuous in x; the grid is fine enough
    // to keep the interpolation error well below the Monte-Carlo noise).
    std::vector<double> p_grid;
    double grid_lo = 0.0, grid_step = 1.0;
    if (d == 1) {
        const auto [lo, hi] = density.support_bounds(0);
        const int cells = 4096;
        grid_lo = lo;
        grid_step = (hi - lo) / cells;
        p_grid.resize(cells + 1);
        Eigen::VectorXd x(1);
        for (int i = 0; i <= cells; ++i) {
            x[0] = lo + i * grid_step;
            p_grid[i] = analytic_p(density, x);
        }
    }
    auto p_at = [&](const Eigen::VectorXd& point) {
        if (d != 1) return analytic_p(density, point);
        const double t = (point[0] - grid_lo) / grid_step;
        if (t <= 0.0) return p_grid.front();
        if (t >= static_cast<double>(p_grid.size() - 1)) return p_grid.back();
        const auto idx = static_cast<std::size_t>(t);
        const double frac = t - static_cast<double>(idx);
        return (1.0 - frac) * p_grid[idx] + frac * p_grid[idx + 1];
    };

    // One independent draw: build the idealized directed RMD graph with exact
    // analytic degrees (isolating the cut limit from rank-estimation noise;
    // no symmetrization) and return the scaled cut across the plane.
    auto scaled_cut_once = [&](int n, int k_n, std::uint64_t draw_seed) {
        const data_set draws = density.sample(n, draw_seed);
        std::vector<int> deg(n);
        int max_deg = 1;
        for (int i = 0; i < n; ++i) {
            const double p = p_at(draws.points.row(i).transpose());
            const int target_deg = static_cast<int>(std::lround(k_n * rho(p, lambda)));
            deg[i] = std::clamp(target_deg, 1, n - 1);
            max_deg = std::max(max_deg, deg[i]);
        }

        const neighbor_index nn = knn_self(draws.points, max_deg, workers);
        std::vector<std::uint8_t> below(n);
        for (int i = 0; i < n; ++i) {
            below[i] = draws.points(i, plane.axis) <= plane.offset ? 1 : 0;
        }
        const auto n_below = static_cast<double>(std::count(below.begin(), below.end(), 1));
        const double n_above = n - n_below;
        if (n_below == 0 || n_above == 0) {
            throw data_error("hyperplane leaves one side empty at n = " + std::to_string(n));
        }

        // Directed crossing count: every edge x -> neighbor with endpoints on
        // opposite sides contributes once.
        double cut = 0.0;
        double vol_below = 0.0, vol_above = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < deg[i]; ++j) {
                if (below[nn.indices(i, j)] != below[i]) cut += 1.0;
            }
            (below[i] ? vol_below : vol_above) += deg[i];
        }

        // Per-side reciprocal sums (the ratio/normalized cut convention the
        // limit statement is normalized for; the |V|-scaled variant of the
        // clustering objectives would diverge under this scaling).
        if (objective == cut_objective::rcut) {
            const double rcut = cut * (1.0 / n_below + 1.0 / n_above);
            return rcut / k_n * std::pow(double(n) / k_n, 1.0 / d);
        }
        const double ncut = cut * (1.0 / vol_below + 1.0 / vol_above);
        return ncut * std::pow(double(n) / k_n, 1.0 / d);
    };

    convergence_report report;
    report.sizes = sizes;
    report.target = target;
    for (std::size_t s = 0; s < sizes.size(); ++s) {
        const int n = sizes[s];
        const int k_n = std::max(1, k_rule.eval(n));
        double scaled_sum = 0.0;
        for (int rep = 0; rep < replicates; ++rep) {
            scaled_sum += scaled_cut_once(n, k_n, derive_seed(seed, "cut-sample", s * 1000 + rep));
        }
        const double mean_scaled = scaled_sum / replicates;
        report.statistic.push_back(mean_scaled);
        report.errors.push_back(std::abs(mean_scaled - target) / target);
    }
    report.monotone_flag = nonincreasing_with_one_slack(report.errors);
    return report;
}

}  // namespace rmd
