#pragma once

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "aggspec/errors.hpp"

namespace aggspec {

using Vec3 = Eigen::Vector3d;

enum class GeometryKind { chain, bent_chain, ring, ellipse, custom };

inline const char* to_string(GeometryKind k) {
    switch (k) {
        case GeometryKind::chain: return "chain";
        case GeometryKind::bent_chain: return "bent_chain";
        case GeometryKind::ring: return "ring";
        case GeometryKind::ellipse: return "ellipse";
        default: return "custom";
    }
}

// How a chain dipole direction is interpreted when the chain is bent:
//  - global: the same lab-frame vector on every site, unaffected by the bend
//  - segment_local: the vector is given in the local frame of each straight
//    segment (x along the segment axis, z out of the bend plane); sites on the
//    second segment carry the direction co-rotated by the bend angle, the
//    vertex site uses the bisector frame.
enum class DipoleFrame { global, segment_local };

struct DipoleSpec {
    DipoleFrame frame = DipoleFrame::global;
    Vec3 direction{0.0, 0.0, 1.0};
};

struct MonomerSite {
    Vec3 position; // units of the undistorted nearest-neighbour spacing (a = 1)
    Vec3 dipole;   // unit vector
};

// Construction parameters, kept for unit-of-energy bookkeeping and export headers.
struct GeometryParams {
    int n = 0;
    int vertex = 0;                 // bent_chain, 1-based site index
    double bend_angle_deg = 0.0;    // bent_chain
    double tangent_angle_deg = 0.0; // ring/ellipse: phi, dipole vs local tangent
    double polar_angle_deg = 90.0;  // ring/ellipse: theta from the plane normal; 90 = in-plane
    double flattening = 0.0;        // ellipse: f = 1 - b/a
    DipoleSpec dipole;              // chain/bent_chain
};

struct AggregateGeometry {
    GeometryKind kind = GeometryKind::custom;
    GeometryParams params;
    std::vector<MonomerSite> sites;

    int size() const { return static_cast<int>(sites.size()); }
};

namespace detail {

inline Vec3 normalized_dipole(const Vec3& d) {
    const double n = d.norm();
    if (n < 1e-12) throw invalid_dipole_error("dipole direction must be non-zero");
    return d / n;
}

inline double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

// Rotation about z by `angle` (radians).
inline Eigen::Matrix3d rot_z(double angle) {
    Eigen::Matrix3d r;
    const double c = std::cos(angle), s = std::sin(angle);
    r << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
    return r;
}

} // namespace detail

// Straight chain along x with unit spacing and one common dipole direction.
inline AggregateGeometry build_chain(int n, const Vec3& dipole_dir) {
    if (n < 2) throw invalid_geometry_error("chain needs at least 2 sites");
    const Vec3 d = detail::normalized_dipole(dipole_dir);

    AggregateGeometry g;
    g.kind = GeometryKind::chain;
    g.params.n = n;
    g.params.dipole = DipoleSpec{DipoleFrame::global, d};
    g.sites.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        g.sites.push_back({Vec3(static_cast<double>(i), 0.0, 0.0), d});
    return g;
}

// Chain with a single bend of `angle_deg` at the 1-based `vertex` site; both
// segments keep unit spacing and the chain lies in the (x,y) plane. angle 0
// reproduces build_chain exactly.
inline AggregateGeometry build_bent_chain(int n, int vertex, double angle_deg,
                                          const DipoleSpec& dipole) {
    if (n < 2) throw invalid_geometry_error("bent chain needs at least 2 sites");
    if (vertex < 2 || vertex > n - 1)
        throw invalid_geometry_error("bend vertex must satisfy 2 <= vertex <= N-1");
    if (angle_deg < 0.0 || angle_deg >= 180.0)
        throw invalid_angle_error("bend angle must satisfy 0 <= angle < 180 degrees");

    const Vec3 d = detail::normalized_dipole(dipole.direction);
    const double phi = detail::deg2rad(angle_deg);
    const Eigen::Matrix3d seg2 = detail::rot_z(phi);
    const Eigen::Matrix3d bisector = detail::rot_z(0.5 * phi);

    AggregateGeometry g;
    g.kind = GeometryKind::bent_chain;
    g.params.n = n;
    g.params.vertex = vertex;
    g.params.bend_angle_deg = angle_deg;
    g.params.dipole = DipoleSpec{dipole.frame, d};
    g.sites.reserve(static_cast<std::size_t>(n));

    const Vec3 apex(static_cast<double>(vertex - 1), 0.0, 0.0);
    const Vec3 dir2 = seg2 * Vec3::UnitX();
    for (int i = 1; i <= n; ++i) {
        Vec3 pos;
        if (i <= vertex)
            pos = Vec3(static_cast<double>(i - 1), 0.0, 0.0);
        else
            pos = apex + static_cast<double>(i - vertex) * dir2;

        Vec3 dip = d;
        if (dipole.frame == DipoleFrame::segment_local) {
            if (i > vertex)
                dip = seg2 * d;
            else if (i == vertex)
                dip = bisector * d;
        }
        g.sites.push_back({pos, dip});
    }
    return g;
}

namespace detail {

// In-plane tangent/normal dipole at angle phi from the tangent, tilted by the
// polar angle theta measured from the plane normal (z); theta = 90 deg is
// fully in-plane.
inline Vec3 oriented_dipole(const Vec3& tangent, double phi_rad, double theta_rad) {
    const Vec3 outward = tangent.cross(Vec3::UnitZ()); // outward in-plane normal
    const Vec3 in_plane = std::cos(phi_rad) * tangent + std::sin(phi_rad) * outward;
    return std::sin(theta_rad) * in_plane + std::cos(theta_rad) * Vec3::UnitZ();
}

} // namespace detail

// Regular N-gon in the (x,y) plane with unit chord spacing. The dipole on each
// site makes angle `tangent_angle_deg` with the local tangent (0 = tangential,
// 90 = radial) and polar angle `polar_angle_deg` with the plane normal.
inline AggregateGeometry build_ring(int n, double tangent_angle_deg,
                                    double polar_angle_deg = 90.0) {
    if (n < 3) throw invalid_geometry_error("ring needs at least 3 sites");

    const double phi = detail::deg2rad(tangent_angle_deg);
    const double theta = detail::deg2rad(polar_angle_deg);
    const double radius = 0.5 / std::sin(std::numbers::pi / n);

    AggregateGeometry g;
    g.kind = GeometryKind::ring;
    g.params.n = n;
    g.params.tangent_angle_deg = tangent_angle_deg;
    g.params.polar_angle_deg = polar_angle_deg;
    g.sites.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double alpha = 2.0 * std::numbers::pi * i / n;
        const Vec3 pos(radius * std::cos(alpha), radius * std::sin(alpha), 0.0);
        const Vec3 tangent(-std::sin(alpha), std::cos(alpha), 0.0);
        g.sites.push_back({pos, detail::oriented_dipole(tangent, phi, theta)});
    }
    return g;
}

namespace detail {

// Arc length machinery for x = a cos t, y = b sin t. Cumulative table over
// [0, 2pi] with Gauss-Legendre panels, then Newton inversion.
class EllipseArc {
  public:
    EllipseArc(double a, double b) : a_(a), b_(b) {
        cum_.resize(kPanels + 1, 0.0);
        for (int i = 0; i < kPanels; ++i) {
            const double t0 = 2.0 * std::numbers::pi * i / kPanels;
            const double t1 = 2.0 * std::numbers::pi * (i + 1) / kPanels;
            cum_[static_cast<std::size_t>(i) + 1] = cum_[static_cast<std::size_t>(i)] + gauss(t0, t1);
        }
    }

    double total() const { return cum_.back(); }

    double speed(double t) const {
        const double s = a_ * std::sin(t), c = b_ * std::cos(t);
        return std::sqrt(s * s + c * c);
    }

    double length(double t) const {
        const double step = 2.0 * std::numbers::pi / kPanels;
        int i = static_cast<int>(t / step);
        if (i < 0) i = 0;
        if (i >= kPanels) i = kPanels - 1;
        return cum_[static_cast<std::size_t>(i)] + gauss(step * i, t);
    }

    // Parameter t with arc length s from t = 0, |error in s| < 1e-12 * total.
    double invert(double s) const {
        const double step = 2.0 * std::numbers::pi / kPanels;
        // bracket from the table
        std::size_t lo = 0;
        while (lo + 1 < cum_.size() && cum_[lo + 1] < s) ++lo;
        double t = step * (lo + 0.5);
        for (int it = 0; it < 100; ++it) {
            const double f = length(t) - s;
            if (std::abs(f) < 1e-12 * total()) break;
            t -= f / speed(t);
            if (t < 0.0) t = 0.0;
            if (t > 2.0 * std::numbers::pi) t = 2.0 * std::numbers::pi;
        }
        return t;
    }

  private:
    static constexpr int kPanels = 1024;

    // 16-point Gauss-Legendre on [t0, t1].
    double gauss(double t0, double t1) const {
        static const double xs[8] = {0.0950125098376374, 0.2816035507792589,
                                     0.4580167776572274, 0.6178762444026438,
                                     0.7554044083550030, 0.8656312023878318,
                                     0.9445750230732326, 0.9894009349916499};
        static const double ws[8] = {0.1894506104550685, 0.1826034150449236,
                                     0.1691565193950025, 0.1495959888165767,
                                     0.1246289712555339, 0.0951585116824928,
                                     0.0622535239386479, 0.0271524594117541};
        const double c = 0.5 * (t0 + t1), h = 0.5 * (t1 - t0);
        double sum = 0.0;
        for (int j = 0; j < 8; ++j)
            sum += ws[j] * (speed(c + h * xs[j]) + speed(c - h * xs[j]));
        return sum * h;
    }

    double a_, b_;
    std::vector<double> cum_;
};

} // namespace detail

// Ellipse with flattening f = 1 - b/a, perimeter equal to the f = 0 ring's, and
// sites at equal arc-length spacing starting on the major axis. f = 0 returns
// the ring bit-for-bit.
inline AggregateGeometry build_ellipse(int n, double flattening, double tangent_angle_deg,
                                       double polar_angle_deg = 90.0) {
    if (n < 3) throw invalid_geometry_error("ellipse needs at least 3 sites");
    if (flattening < 0.0 || flattening >= 1.0)
        throw invalid_flattening_error("flattening must satisfy 0 <= f < 1");

    if (flattening == 0.0) {
        AggregateGeometry g = build_ring(n, tangent_angle_deg, polar_angle_deg);
        g.kind = GeometryKind::ellipse;
        g.params.flattening = 0.0;
        return g;
    }

    const double phi = detail::deg2rad(tangent_angle_deg);
    const double theta = detail::deg2rad(polar_angle_deg);
    const double radius = 0.5 / std::sin(std::numbers::pi / n);
    const double perimeter = 2.0 * std::numbers::pi * radius;

    const double ratio = 1.0 - flattening; // b/a
    detail::EllipseArc unit(1.0, ratio);
    const double a = perimeter / unit.total();
    const double b = a * ratio;
    detail::EllipseArc arc(a, b);

    AggregateGeometry g;
    g.kind = GeometryKind::ellipse;
    g.params.n = n;
    g.params.tangent_angle_deg = tangent_angle_deg;
    g.params.polar_angle_deg = polar_angle_deg;
    g.params.flattening = flattening;
    g.sites.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double t = (i == 0) ? 0.0 : arc.invert(perimeter * i / n);
        const Vec3 pos(a * std::cos(t), b * std::sin(t), 0.0);
        Vec3 tangent(-a * std::sin(t), b * std::cos(t), 0.0);
        tangent.normalize();
        g.sites.push_back({pos, detail::oriented_dipole(tangent, phi, theta)});
    }
    return g;
}

// Arbitrary site list (used for tests and ad-hoc studies).
inline AggregateGeometry custom_geometry(std::vector<MonomerSite> sites) {
    if (sites.size() < 2) throw invalid_geometry_error("geometry needs at least 2 sites");
    AggregateGeometry g;
    g.kind = GeometryKind::custom;
    g.params.n = static_cast<int>(sites.size());
    for (auto& s : sites) s.dipole = detail::normalized_dipole(s.dipole);
    g.sites = std::move(sites);
    return g;
}

// Structural invariants shared by every constructor; throws on violation.
inline void check_geometry(const AggregateGeometry& g) {
    const int n = g.size();
    if (n < 2) throw invalid_geometry_error("geometry needs at least 2 sites");
    for (const auto& s : g.sites)
        if (std::abs(s.dipole.norm() - 1.0) > 1e-12)
            throw invalid_dipole_error("site dipole is not unit length");
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if ((g.sites[static_cast<std::size_t>(i)].position -
                 g.sites[static_cast<std::size_t>(j)].position)
                    .norm() < 1e-9)
                throw singular_geometry_error("coincident sites " + std::to_string(i + 1) +
                                              " and " + std::to_string(j + 1));

    auto dist = [&](int i, int j) {
        return (g.sites[static_cast<std::size_t>(i)].position -
                g.sites[static_cast<std::size_t>(j)].position)
            .norm();
    };
    if (g.kind == GeometryKind::chain || g.kind == GeometryKind::bent_chain) {
        for (int i = 0; i + 1 < n; ++i)
            if (std::abs(dist(i, i + 1) - 1.0) > 1e-9)
                throw invalid_geometry_error("chain spacing deviates from 1");
    } else if (g.kind == GeometryKind::ring) {
        const double r0 = g.sites[0].position.norm();
        for (int i = 0; i < n; ++i) {
            if (std::abs(g.sites[static_cast<std::size_t>(i)].position.norm() - r0) > 1e-9)
                throw invalid_geometry_error("ring sites not on a common circle");
            if (std::abs(dist(i, (i + 1) % n) - 1.0) > 1e-9)
                throw invalid_geometry_error("ring chord spacing deviates from 1");
        }
    } else if (g.kind == GeometryKind::ellipse) {
        // recover the parameterization and compare consecutive arc lengths
        const double radius = 0.5 / std::sin(std::numbers::pi / n);
        const double perimeter = 2.0 * std::numbers::pi * radius;
        const double ratio = 1.0 - g.params.flattening;
        detail::EllipseArc unit(1.0, ratio);
        const double a = perimeter / unit.total();
        const double b = a * ratio;
        detail::EllipseArc arc(a, b);
        std::vector<double> s(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            const auto& p = g.sites[static_cast<std::size_t>(i)].position;
            double t = std::atan2(p.y() / b, p.x() / a);
            if (t < 0.0) t += 2.0 * std::numbers::pi;
            s[static_cast<std::size_t>(i)] = arc.length(t);
        }
        const double mean = arc.total() / n;
        for (int i = 0; i < n; ++i) {
            double ds = (i + 1 < n) ? s[static_cast<std::size_t>(i) + 1] - s[static_cast<std::size_t>(i)]
                                    : arc.total() - s[static_cast<std::size_t>(n) - 1] + s[0];
            if (std::abs(ds - mean) > 1e-6 * mean)
                throw invalid_geometry_error("ellipse arc spacing not uniform");
        }
    }
}

// One row per site: n x y z mx my mz, preceded by a comment header.
inline void write_geometry_table(std::ostream& os, const AggregateGeometry& g) {
    char buf[256];
    os << "# geometry kind=" << to_string(g.kind) << " n=" << g.size();
    if (g.kind == GeometryKind::bent_chain) {
        std::snprintf(buf, sizeof buf, " vertex=%d angle_deg=%.10g", g.params.vertex,
                      g.params.bend_angle_deg);
        os << buf;
    }
    if (g.kind == GeometryKind::ring || g.kind == GeometryKind::ellipse) {
        std::snprintf(buf, sizeof buf, " tangent_angle_deg=%.10g polar_angle_deg=%.10g",
                      g.params.tangent_angle_deg, g.params.polar_angle_deg);
        os << buf;
        if (g.kind == GeometryKind::ellipse) {
            std::snprintf(buf, sizeof buf, " flattening=%.10g", g.params.flattening);
            os << buf;
        }
    }
    os << "\n# n x y z mx my mz\n";
    for (int i = 0; i < g.size(); ++i) {
        const auto& s = g.sites[static_cast<std::size_t>(i)];
        std::snprintf(buf, sizeof buf, "%d %.9g %.9g %.9g %.9g %.9g %.9g\n", i + 1,
                      s.position.x(), s.position.y(), s.position.z(), s.dipole.x(),
                      s.dipole.y(), s.dipole.z());
        os << buf;
    }
}

} // namespace aggspec
