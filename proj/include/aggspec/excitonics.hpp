#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "aggspec/errors.hpp"
#include "aggspec/geometry.hpp"

namespace aggspec {

enum class CouplingMode { all_pairs, nearest_neighbour };

// Dimensionless point dipole-dipole coupling between two sites (units mu^2/a^3).
inline double pair_coupling(const MonomerSite& a, const MonomerSite& b) {
    const Vec3 x = b.position - a.position;
    const double r = x.norm();
    if (r < 1e-9) throw singular_geometry_error("coincident sites in coupling evaluation");
    const Vec3 xhat = x / r;
    const double r3 = r * r * r;
    return (a.dipole.dot(b.dipole) - 3.0 * a.dipole.dot(xhat) * b.dipole.dot(xhat)) / r3;
}

struct CouplingMatrix {
    Eigen::MatrixXd values;          // symmetric, zero diagonal
    double reference_coupling = 0.0; // V_{1,2} of the undistorted counterpart
    CouplingMode mode = CouplingMode::all_pairs;

    int n() const { return static_cast<int>(values.rows()); }
};

namespace detail {

inline bool neighbours(const AggregateGeometry& g, int i, int j) {
    const int n = g.size();
    const int d = std::abs(i - j);
    if (g.kind == GeometryKind::ring || g.kind == GeometryKind::ellipse)
        return d == 1 || d == n - 1;
    return d == 1;
}

// Nearest-neighbour coupling of the geometry's undistorted counterpart: the
// straight chain for (bent) chains, the f = 0 ring for ellipses.
inline double undistorted_reference(const AggregateGeometry& g) {
    switch (g.kind) {
        case GeometryKind::chain:
        case GeometryKind::bent_chain: {
            // straight chain: both frames coincide, sites 1,2 at unit spacing on x
            const Vec3 d = g.kind == GeometryKind::chain ? g.sites[0].dipole
                                                         : g.params.dipole.direction;
            return 1.0 - 3.0 * d.x() * d.x();
        }
        case GeometryKind::ellipse: {
            const AggregateGeometry ring =
                build_ring(g.params.n, g.params.tangent_angle_deg, g.params.polar_angle_deg);
            return pair_coupling(ring.sites[0], ring.sites[1]);
        }
        default:
            return pair_coupling(g.sites[0], g.sites[1]);
    }
}

} // namespace detail

// All-pairs (or, for closed-form tests, nearest-neighbour-only) dipole-dipole
// coupling matrix.
inline CouplingMatrix coupling_matrix(const AggregateGeometry& g,
                                      CouplingMode mode = CouplingMode::all_pairs) {
    const int n = g.size();
    CouplingMatrix v;
    v.mode = mode;
    v.values = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            if (mode == CouplingMode::nearest_neighbour && !detail::neighbours(g, i, j))
                continue;
            const double vij = pair_coupling(g.sites[static_cast<std::size_t>(i)],
                                             g.sites[static_cast<std::size_t>(j)]);
            v.values(i, j) = vij;
            v.values(j, i) = vij;
        }
    v.reference_coupling = detail::undistorted_reference(g);
    return v;
}

struct ExcitonBasis {
    Eigen::VectorXd eigenvalues;  // C_k ascending, units mu^2/a^3
    Eigen::MatrixXd eigenvectors; // column k holds a_{nk}
    Eigen::Matrix3Xd collective_dipoles;
    Eigen::VectorXd participation_ratios;
    double reference_coupling = 0.0;
    // index ranges [first, last] of numerically degenerate eigenvalue clusters
    std::vector<std::pair<int, int>> clusters;

    int n() const { return static_cast<int>(eigenvalues.size()); }

    int cluster_of(int k) const {
        for (std::size_t c = 0; c < clusters.size(); ++c)
            if (k >= clusters[c].first && k <= clusters[c].second) return static_cast<int>(c);
        return -1;
    }
};

inline Eigen::VectorXd participation_ratio(const Eigen::MatrixXd& eigenvectors) {
    const int n = static_cast<int>(eigenvectors.cols());
    Eigen::VectorXd pr(n);
    for (int k = 0; k < n; ++k) {
        const double s = eigenvectors.col(k).array().pow(4).sum();
        pr(k) = 1.0 / s;
    }
    return pr;
}

inline Eigen::VectorXd participation_ratio(const ExcitonBasis& basis) {
    return basis.participation_ratios;
}

namespace detail {

inline std::vector<std::pair<int, int>> find_clusters(const Eigen::VectorXd& ev, double tol) {
    std::vector<std::pair<int, int>> clusters;
    int first = 0;
    for (int k = 1; k <= ev.size(); ++k) {
        if (k == ev.size() || ev(k) - ev(k - 1) > tol) {
            clusters.emplace_back(first, k - 1);
            first = k;
        }
    }
    return clusters;
}

// Fourth-moment site localization of a degenerate subspace. Pairwise Jacobi
// rotations; L(t) = sum_n a^4 + b^4 is A + B cos 4t + C sin 4t, maximized in
// closed form. Makes the reported basis of an exactly degenerate cluster
// deterministic and maximally site-localized.
inline void localize_cluster(Eigen::MatrixXd& vecs, int first, int last) {
    auto quartic_sum = [&](const Eigen::VectorXd& u) { return u.array().pow(4).sum(); };
    const int m = last - first + 1;
    if (m < 2) return;
    for (int sweep = 0; sweep < 60; ++sweep) {
        double gain = 0.0;
        for (int p = first; p <= last; ++p)
            for (int q = p + 1; q <= last; ++q) {
                const Eigen::VectorXd u = vecs.col(p), v = vecs.col(q);
                auto value = [&](double t) {
                    const double c = std::cos(t), s = std::sin(t);
                    return quartic_sum(c * u + s * v) + quartic_sum(-s * u + c * v);
                };
                const double l0 = value(0.0);
                const double l45 = value(std::numbers::pi / 4.0);
                const double l225 = value(std::numbers::pi / 8.0);
                const double a = 0.5 * (l0 + l45);
                const double b = l0 - a;
                const double c = l225 - a;
                const double t = 0.25 * std::atan2(c, b);
                const double lt = value(t);
                if (lt > l0 + 1e-14 * std::max(1.0, l0)) {
                    const double cs = std::cos(t), sn = std::sin(t);
                    vecs.col(p) = cs * u + sn * v;
                    vecs.col(q) = -sn * u + cs * v;
                    gain += lt - l0;
                }
            }
        if (gain < 1e-13) break;
    }
}

inline int argmax_abs(const Eigen::VectorXd& u) {
    int best = 0;
    double bv = std::abs(u(0));
    for (int i = 1; i < u.size(); ++i)
        if (std::abs(u(i)) > bv + 1e-12 * (bv + 1.0)) {
            bv = std::abs(u(i));
            best = i;
        }
    return best;
}

} // namespace detail

// Full real-symmetric eigendecomposition of the coupling matrix. Eigenvalues
// ascend; within a degenerate cluster the basis is rotated to maximal site
// localization, ordered by dominant site, and sign-fixed, so results do not
// depend on solver internals.
inline ExcitonBasis diagonalize(const CouplingMatrix& v, const AggregateGeometry& geom) {
    const int n = v.n();
    if (geom.size() != n)
        throw validation_error("geometry and coupling matrix size mismatch");
    if (!v.values.isApprox(v.values.transpose(), 1e-12))
        throw validation_error("coupling matrix is not symmetric");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(v.values);
    if (solver.info() != Eigen::Success)
        throw solver_failure_error("symmetric eigensolver failed to converge");

    ExcitonBasis basis;
    basis.eigenvalues = solver.eigenvalues();
    basis.eigenvectors = solver.eigenvectors();
    basis.reference_coupling = v.reference_coupling;

    const double scale =
        std::max({std::abs(basis.eigenvalues(0)), std::abs(basis.eigenvalues(n - 1)), 1e-300});
    basis.clusters = detail::find_clusters(basis.eigenvalues, 1e-9 * scale);

    for (const auto& [first, last] : basis.clusters) {
        detail::localize_cluster(basis.eigenvectors, first, last);
        // deterministic order inside the cluster: by dominant site index
        std::vector<int> order(static_cast<std::size_t>(last - first + 1));
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = first + static_cast<int>(i);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return detail::argmax_abs(basis.eigenvectors.col(a)) <
                   detail::argmax_abs(basis.eigenvectors.col(b));
        });
        Eigen::MatrixXd tmp(n, last - first + 1);
        for (std::size_t i = 0; i < order.size(); ++i) tmp.col(static_cast<int>(i)) = basis.eigenvectors.col(order[i]);
        basis.eigenvectors.middleCols(first, last - first + 1) = tmp;
    }
    for (int k = 0; k < n; ++k) {
        const int i = detail::argmax_abs(basis.eigenvectors.col(k));
        if (basis.eigenvectors(i, k) < 0.0) basis.eigenvectors.col(k) *= -1.0;
    }

    basis.collective_dipoles.resize(3, n);
    for (int k = 0; k < n; ++k) {
        Vec3 mu = Vec3::Zero();
        for (int m = 0; m < n; ++m)
            mu += geom.sites[static_cast<std::size_t>(m)].dipole * basis.eigenvectors(m, k);
        basis.collective_dipoles.col(k) = mu;
    }
    basis.participation_ratios = participation_ratio(basis.eigenvectors);
    return basis;
}

// Closed-form eigenvalues of a symmetric circulant coupling matrix (even N):
//   E_j = 2 sum_{m=1}^{N/2-1} V_{1,1+m} cos(2 pi j m / N) + (-1)^j V_{1,N/2+1}
// Returned in j = 0..N-1 order. `first_row` is row 1 of the matrix.
inline Eigen::VectorXd ring_eigenvalues_analytic(const Eigen::VectorXd& first_row) {
    const int n = static_cast<int>(first_row.size());
    if (n < 2 || n % 2 != 0)
        throw unsupported_parity_error("analytic ring eigenvalues require even N");
    Eigen::VectorXd e(n);
    for (int j = 0; j < n; ++j) {
        const double k = 2.0 * std::numbers::pi * j / n;
        double sum = 0.0;
        for (int m = 1; m < n / 2; ++m) sum += std::cos(k * m) * first_row(m);
        e(j) = 2.0 * sum + (j % 2 == 0 ? 1.0 : -1.0) * first_row(n / 2);
    }
    return e;
}

struct Polarization {
    enum class Kind { fixed, isotropic };
    Kind kind = Kind::isotropic;
    Vec3 vector{0.0, 0.0, 1.0};

    static Polarization isotropic() { return {}; }
    static Polarization along(const Vec3& e) {
        const double nrm = e.norm();
        if (nrm < 1e-12) throw validation_error("polarization vector must be non-zero");
        return {Kind::fixed, e / nrm};
    }
};

struct OscillatorStrengths {
    Eigen::VectorXd raw;        // |e.mu_k|^2, isotropic: |mu_k|^2 / 3
    Eigen::VectorXd normalized; // sums to 1 unless zero_total
    Eigen::VectorXd cluster_normalized; // per state: its degenerate cluster's summed strength
    double total = 0.0;
    bool zero_total = false;
};

// Per-state light absorption weights for a fixed or isotropic polarization,
// normalized to unit sum. Cluster sums are the basis-invariant quantity for
// degenerate levels.
inline OscillatorStrengths oscillator_strengths(const ExcitonBasis& basis,
                                                const AggregateGeometry& geom,
                                                const Polarization& pol) {
    const int n = basis.n();
    if (geom.size() != n)
        throw validation_error("geometry and exciton basis size mismatch");
    OscillatorStrengths f;
    f.raw.resize(n);
    for (int k = 0; k < n; ++k) {
        const Vec3 mu = basis.collective_dipoles.col(k);
        f.raw(k) = pol.kind == Polarization::Kind::isotropic
                       ? mu.squaredNorm() / 3.0
                       : std::pow(pol.vector.dot(mu), 2);
    }
    f.total = f.raw.sum();
    f.zero_total = f.total < 1e-12 * n;
    f.normalized = f.zero_total ? Eigen::VectorXd::Zero(n).eval() : (f.raw / f.total).eval();
    f.cluster_normalized.resize(n);
    for (const auto& [first, last] : basis.clusters) {
        const double sum = f.normalized.segment(first, last - first + 1).sum();
        for (int k = first; k <= last; ++k) f.cluster_normalized(k) = sum;
    }
    return f;
}

} // namespace aggspec
