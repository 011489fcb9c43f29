#include "rmd/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "rmd/common.hpp"

namespace rmd {

namespace {

// Orthogonalize v against the columns of basis (classical Gram-Schmidt, twice).
void project_out(const Eigen::MatrixXd& basis, Eigen::VectorXd& v) {
    if (basis.cols() == 0) return;
    v.noalias() -= basis * (basis.transpose() * v);
    v.noalias() -= basis * (basis.transpose() * v);
}

}  // namespace

std::string to_string(cut_objective obj) {
    return obj == cut_objective::rcut ? "rcut" : "ncut";
}

cut_objective objective_from_string(const std::string& s) {
    if (s == "rcut") return cut_objective::rcut;
    if (s == "ncut") return cut_objective::ncut;
    throw config_error("unknown objective: " + s + " (expected rcut or ncut)");
}

Eigen::SparseMatrix<double> laplacian(const sparse_graph& graph, laplacian_kind kind) {
    graph.validate();
    const int n = graph.n;
    const Eigen::VectorXd deg = graph.degrees();

    if (kind == laplacian_kind::normalized_sym) {
        for (int i = 0; i < n; ++i) {
            if (!(deg[i] > 0.0)) {
                throw data_error("normalized Laplacian undefined: node " + std::to_string(i) +
                                 " is isolated");
            }
        }
    }

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(graph.edges.size() * 2 + n);
    if (kind == laplacian_kind::unnormalized) {
        for (const auto& e : graph.edges) {
            triplets.emplace_back(e.u, e.v, -e.w);
            triplets.emplace_back(e.v, e.u, -e.w);
        }
        for (int i = 0; i < n; ++i) triplets.emplace_back(i, i, deg[i]);
    } else {
        for (const auto& e : graph.edges) {
            const double w = -e.w / std::sqrt(deg[e.u] * deg[e.v]);
            triplets.emplace_back(e.u, e.v, w);
            triplets.emplace_back(e.v, e.u, w);
        }
        for (int i = 0; i < n; ++i) triplets.emplace_back(i, i, 1.0);
    }
    Eigen::SparseMatrix<double> l(n, n);
    l.setFromTriplets(triplets.begin(), triplets.end());
    return l;
}

std::vector<int> connected_components(const sparse_graph& graph) {
    const int n = graph.n;
    std::vector<int> comp(n, -1);
    int next_id = 0;
    std::deque<int> queue;
    for (int start = 0; start < n; ++start) {
        if (comp[start] >= 0) continue;
        comp[start] = next_id;
        queue.push_back(start);
        while (!queue.empty()) {
            const int u = queue.front();
            queue.pop_front();
            for (int j = graph.adj_offsets[u]; j < graph.adj_offsets[u + 1]; ++j) {
                const int v = graph.adj_neighbors[j];
                if (comp[v] < 0) {
                    comp[v] = next_id;
                    queue.push_back(v);
                }
            }
        }
        ++next_id;
    }
    return comp;
}

std::vector<int> partition::cluster_sizes() const {
    std::vector<int> sizes(k, 0);
    for (int a : assignment) ++sizes[a];
    return sizes;
}

void partition::validate() const {
    if (k < 2) throw data_error("partition needs K >= 2");
    if (assignment.empty()) throw data_error("empty partition");
    for (int a : assignment) {
        if (a < 0 || a >= k) throw data_error("cluster id out of range");
    }
}

eig_result smallest_eigenpairs(const Eigen::SparseMatrix<double>& matrix, int k,
                               std::uint64_t seed, double tol, int max_iter,
                               const Eigen::MatrixXd* known_null) {
    const int n = static_cast<int>(matrix.rows());
    if (matrix.cols() != n) throw data_error("eigensolver needs a square matrix");
    if (k < 1 || k > n) throw data_error("requested eigenpair count out of range");

    if (n <= 500) {
        const Eigen::MatrixXd dense(matrix);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
        if (es.info() != Eigen::Success) throw numeric_error("dense eigensolver failed");
        eig_result out;
        out.values = es.eigenvalues().head(k);
        out.vectors = es.eigenvectors().leftCols(k);
        return out;
    }

    Eigen::MatrixXd deflated(n, 0);
    if (known_null) deflated = *known_null;
    const int n_null = static_cast<int>(deflated.cols());
    if (n_null > k) throw data_error("null basis larger than requested eigenpair count");
    const int want = k - n_null;

    eig_result out;
    out.values = Eigen::VectorXd::Zero(k);
    out.vectors.resize(n, k);
    if (n_null > 0) out.vectors.leftCols(n_null) = deflated;
    if (want == 0) return out;

    // Shift-invert: factor (A + mu*I) once, run Lanczos on its inverse so the
    // smallest eigenvalues of A become the dominant ones.
    double diag_mean = 0.0;
    for (int i = 0; i < n; ++i) diag_mean += matrix.coeff(i, i);
    diag_mean /= n;
    const double mu = std::max(1e-10, 1e-6 * diag_mean);

    Eigen::SparseMatrix<double> shifted = matrix;
    for (int i = 0; i < n; ++i) shifted.coeffRef(i, i) += mu;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
    solver.compute(shifted);
    if (solver.info() != Eigen::Success) {
        throw numeric_error("sparse factorization failed in eigensolver");
    }

    // Gershgorin bound for the residual scale.
    double norm_bound = 0.0;
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (Eigen::SparseMatrix<double>::InnerIterator it(matrix, i); it; ++it) {
            row += std::abs(it.value());
        }
        norm_bound = std::max(norm_bound, row);
    }
    norm_bound = std::max(norm_bound, 1.0);

    const int max_subspace = std::min(n - n_null, std::max(4 * k + 30, 60));
    Eigen::MatrixXd basis(n, max_subspace + 1);
    std::vector<double> alpha, beta;
    rng_stream rng(derive_seed(seed, "lanczos"));

    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.next_gaussian();
    project_out(deflated, v);
    v.normalize();
    basis.col(0) = v;

    int iterations = 0;
    int m = 0;
    while (m < max_subspace && iterations < max_iter) {
        ++iterations;
        Eigen::VectorXd w = solver.solve(basis.col(m));
        project_out(deflated, w);
        const double a = basis.col(m).dot(w);
        w -= a * basis.col(m);
        if (m > 0) w -= beta.back() * basis.col(m - 1);
        // full reorthogonalization
        w -= basis.leftCols(m + 1) * (basis.leftCols(m + 1).transpose() * w);
        w -= basis.leftCols(m + 1) * (basis.leftCols(m + 1).transpose() * w);
        alpha.push_back(a);
        const double b = w.norm();
        if (b < 1e-14) {
            // invariant subspace found; restart with a fresh direction
            Eigen::VectorXd fresh(n);
            for (int i = 0; i < n; ++i) fresh[i] = rng.next_gaussian();
            project_out(deflated, fresh);
            fresh -= basis.leftCols(m + 1) * (basis.leftCols(m + 1).transpose() * fresh);
            const double fn = fresh.norm();
            if (fn < 1e-12) break;  // complement exhausted
            beta.push_back(0.0);
            basis.col(m + 1) = fresh / fn;
        } else {
            beta.push_back(b);
            basis.col(m + 1) = w / b;
        }
        ++m;

        if (m < want) continue;
        if (m % 5 != 0 && m != max_subspace) continue;

        // Ritz pairs of the tridiagonal operator.
        Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            tri(i, i) = alpha[i];
            if (i + 1 < m && beta[i] != 0.0) {
                tri(i, i + 1) = beta[i];
                tri(i + 1, i) = beta[i];
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
        if (es.info() != Eigen::Success) throw numeric_error("tridiagonal eigensolver failed");

        // Largest eigenvalues of the inverse operator = smallest of A.
        Eigen::MatrixXd ritz(n, want);
        Eigen::VectorXd vals(want);
        bool all_converged = true;
        for (int j = 0; j < want; ++j) {
            const int col = m - 1 - j;
            Eigen::VectorXd y = basis.leftCols(m) * es.eigenvectors().col(col);
            y.normalize();
            const double lambda = y.dot(matrix * y);
            const double resid = (matrix * y - lambda * y).norm();
            ritz.col(j) = y;
            vals[j] = lambda;
            if (resid > tol * norm_bound) {
                all_converged = false;
                break;
            }
        }
        if (all_converged) {
            // order ascending by eigenvalue of A
            std::vector<int> order(want);
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](int a2, int b2) { return vals[a2] < vals[b2]; });
            for (int j = 0; j < want; ++j) {
                out.values[n_null + j] = vals[order[j]];
                out.vectors.col(n_null + j) = ritz.col(order[j]);
            }
            return out;
        }
    }
    throw numeric_error("Lanczos eigensolver did not converge (n = " + std::to_string(n) +
                        ", requested " + std::to_string(k) + " pairs)");
}

kmeans_result kmeans(const Eigen::MatrixXd& rows, int k, std::uint64_t seed, int restarts,
                     int max_iter, double rel_tol) {
    const int n = static_cast<int>(rows.rows());
    const int d = static_cast<int>(rows.cols());
    if (k < 1 || k > n) throw data_error("kmeans: k out of range");

    kmeans_result best;
    best.wcss = std::numeric_limits<double>::infinity();

    std::vector<int> assign(n);
    Eigen::MatrixXd centroids(k, d);

    for (int restart = 0; restart < restarts; ++restart) {
        rng_stream rng(derive_seed(seed, "kmeans-restart", static_cast<std::uint64_t>(restart)));

        // greedy farthest-point initialization from a random first center
        std::vector<int> chosen;
        chosen.push_back(static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n))));
        Eigen::VectorXd min_d2 =
            (rows.rowwise() - rows.row(chosen[0])).rowwise().squaredNorm();
        while (static_cast<int>(chosen.size()) < k) {
            int far = 0;
            double far_d2 = -1.0;
            for (int i = 0; i < n; ++i) {
                if (min_d2[i] > far_d2) {
                    far_d2 = min_d2[i];
                    far = i;
                }
            }
            chosen.push_back(far);
            min_d2 = min_d2.cwiseMin(
                (rows.rowwise() - rows.row(far)).rowwise().squaredNorm().eval());
        }
        for (int c = 0; c < k; ++c) centroids.row(c) = rows.row(chosen[c]);

        double prev_wcss = std::numeric_limits<double>::infinity();
        double wcss = 0.0;
        for (int iter = 0; iter < max_iter; ++iter) {
            wcss = 0.0;
            for (int i = 0; i < n; ++i) {
                int best_c = 0;
                double best_d2 = (rows.row(i) - centroids.row(0)).squaredNorm();
                for (int c = 1; c < k; ++c) {
                    const double d2 = (rows.row(i) - centroids.row(c)).squaredNorm();
                    if (d2 < best_d2) {
                        best_d2 = d2;
                        best_c = c;
                    }
                }
                assign[i] = best_c;
                wcss += best_d2;
            }

            Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, d);
            std::vector<int> counts(k, 0);
            for (int i = 0; i < n; ++i) {
                sums.row(assign[i]) += rows.row(i);
                ++counts[assign[i]];
            }
            for (int c = 0; c < k; ++c) {
                if (counts[c] > 0) {
                    centroids.row(c) = sums.row(c) / counts[c];
                } else {
                    // empty cluster: seize the point farthest from its centroid
                    int far = 0;
                    double far_d2 = -1.0;
                    for (int i = 0; i < n; ++i) {
                        const double d2 = (rows.row(i) - centroids.row(assign[i])).squaredNorm();
                        if (d2 > far_d2) {
                            far_d2 = d2;
                            far = i;
                        }
                    }
                    centroids.row(c) = rows.row(far);
                    assign[far] = c;
                }
            }

            if (prev_wcss - wcss <= rel_tol * std::max(prev_wcss, 1e-300) && iter > 0) break;
            prev_wcss = wcss;
        }
        if (wcss < best.wcss) {
            best.wcss = wcss;
            best.assignment = assign;
            best.centroids = centroids;
        }
    }
    return best;
}

partition spectral_cluster(const sparse_graph& graph, int K, cut_objective objective,
                           std::uint64_t seed) {
    graph.validate();
    const int n = graph.n;
    if (K < 2) throw data_error("spectral clustering needs K >= 2");
    if (K > n) throw data_error("K exceeds node count");

    partition part;
    part.k = K;
    part.provenance = {{"graph", graph.build_params.to_json()},
                       {"objective", to_string(objective)},
                       {"seed", seed}};

    const std::vector<int> comp = connected_components(graph);
    const int n_comp = 1 + *std::max_element(comp.begin(), comp.end());

    if (n_comp >= K) {
        // Trivially separable: the K-1 smallest components become their own
        // clusters, the rest merge. Cross-component cuts are all zero, so any
        // grouping of whole components is optimal; this one is deterministic
        // and mirrors how isolated outliers end up as singleton clusters.
        std::vector<int> sizes(n_comp, 0);
        for (int c : comp) ++sizes[c];
        std::vector<int> order(n_comp);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return sizes[a] != sizes[b] ? sizes[a] < sizes[b] : a < b;
        });
        std::vector<int> comp_to_cluster(n_comp, K - 1);
        for (int j = 0; j < K - 1; ++j) comp_to_cluster[order[j]] = j;
        part.assignment.resize(n);
        for (int i = 0; i < n; ++i) part.assignment[i] = comp_to_cluster[comp[i]];
        part.provenance["method"] = "connected_components";
        return part;
    }

    const laplacian_kind kind = objective == cut_objective::rcut
                                    ? laplacian_kind::unnormalized
                                    : laplacian_kind::normalized_sym;
    const Eigen::SparseMatrix<double> lap = laplacian(graph, kind);

    // Exact null-space basis from the components (constant per component for
    // the unnormalized Laplacian, D^{1/2}-weighted for the normalized one).
    Eigen::MatrixXd null_basis = Eigen::MatrixXd::Zero(n, n_comp);
    if (kind == laplacian_kind::unnormalized) {
        std::vector<int> sizes(n_comp, 0);
        for (int c : comp) ++sizes[c];
        for (int i = 0; i < n; ++i) null_basis(i, comp[i]) = 1.0 / std::sqrt(double(sizes[comp[i]]));
    } else {
        const Eigen::VectorXd deg = graph.degrees();
        Eigen::VectorXd comp_vol = Eigen::VectorXd::Zero(n_comp);
        for (int i = 0; i < n; ++i) comp_vol[comp[i]] += deg[i];
        for (int i = 0; i < n; ++i) {
            null_basis(i, comp[i]) = std::sqrt(deg[i]) / std::sqrt(comp_vol[comp[i]]);
        }
    }

    const eig_result eig = n <= 500
                               ? smallest_eigenpairs(lap, K, seed)
                               : smallest_eigenpairs(lap, K, seed, 1e-8, 5000, &null_basis);

    Eigen::MatrixXd embedding = eig.vectors;
    if (objective == cut_objective::ncut) {
        for (int i = 0; i < n; ++i) {
            const double norm = embedding.row(i).norm();
            if (norm > 0.0) embedding.row(i) /= norm;
        }
    }

    const kmeans_result km = kmeans(embedding, K, derive_seed(seed, "spectral-kmeans"));
    part.assignment = km.assignment;
    part.provenance["method"] = "spectral";
    part.validate();
    return part;
}

void save_partition_csv(const partition& part, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write file: " + path);
    nlohmann::json header = part.provenance;
    header["K"] = part.k;
    out << "# " << header.dump() << '\n';
    out << "node,cluster\n";
    for (int i = 0; i < part.n(); ++i) out << i << ',' << part.assignment[i] << '\n';
}

partition load_partition_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open file: " + path);
    partition part;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line == "node,cluster") continue;
        if (line.front() == '#') {
            const auto j = nlohmann::json::parse(line.substr(1));
            part.k = j.value("K", 0);
            part.provenance = j;
            part.provenance.erase("K");
            continue;
        }
        std::istringstream ss(line);
        std::string a, b;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b)) {
            throw data_error("malformed partition row: " + line);
        }
        const std::size_t node = std::stoul(a);
        if (part.assignment.size() != node) throw data_error("partition rows out of order");
        part.assignment.push_back(std::stoi(b));
    }
    part.validate();
    return part;
}

}  // namespace rmd
