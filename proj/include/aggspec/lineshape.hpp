#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <istream>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "aggspec/errors.hpp"
#include "aggspec/grid.hpp"

namespace aggspec {

using Complex = std::complex<double>;

enum class BroadeningKind { lorentzian, gaussian };

// Vibronic progression model for the monomer lineshape: Franck-Condon weighted
// peaks at e00 + m * vib_spacing, m = 0 .. n_peaks-1, each broadened with
// half-width `width`.
struct LineshapeModel {
    double e00 = 17500.0;        // 0-0 transition energy, cm^-1
    double vib_spacing = 1200.0; // cm^-1
    double huang_rhys = 0.9;     // dimensionless S
    int n_peaks = 4;
    double width = 350.0;        // cm^-1, half-width per peak
    BroadeningKind broadening = BroadeningKind::lorentzian;

    // e^-S S^m / m!, renormalized over the included peaks.
    std::vector<double> franck_condon_weights() const {
        if (n_peaks < 1) throw validation_error("lineshape needs n_peaks >= 1");
        if (huang_rhys < 0.0) throw validation_error("Huang-Rhys factor must be >= 0");
        std::vector<double> w(static_cast<std::size_t>(n_peaks));
        double term = std::exp(-huang_rhys);
        double sum = 0.0;
        for (int m = 0; m < n_peaks; ++m) {
            w[static_cast<std::size_t>(m)] = term;
            sum += term;
            term *= huang_rhys / (m + 1);
        }
        for (auto& x : w) x /= sum;
        return w;
    }

    void validate() const {
        if (e00 <= 0.0 || vib_spacing <= 0.0)
            throw validation_error("lineshape energies must be positive");
        if (width <= 0.0) throw invalid_broadening_error("lineshape width must be positive");
        (void)franck_condon_weights();
    }
};

// Complex vibrationally averaged monomer Green function on a uniform grid.
// -Im g is (pi times) the normalized monomer absorption profile.
struct MonomerGreen {
    EnergyGrid grid;
    std::vector<Complex> values;
    double spectral_weight = 0.0; // (1/pi) integral of -Im g
    double centroid = 0.0;        // first moment of -Im g

    double neg_im(int i) const { return -values[static_cast<std::size_t>(i)].imag(); }

    // Linear interpolation inside the grid; Herglotz 1/E continuation outside.
    Complex interp(double e) const {
        if (e <= grid.e_min || e >= grid.e_max) {
            const double d = e - centroid;
            if (std::abs(d) < 1e-300) return values.front();
            return Complex(spectral_weight / d, 0.0);
        }
        const double x = (e - grid.e_min) / grid.spacing();
        const int i = std::min(static_cast<int>(x), grid.n_points - 2);
        const double f = x - i;
        return (1.0 - f) * values[static_cast<std::size_t>(i)] +
               f * values[static_cast<std::size_t>(i) + 1];
    }
};

// Principal-value Hilbert transform producing Re g from samples of -Im g:
//   Re g(E) = (1/pi) P-int rho(E') / (E - E') dE',  rho = -Im g >= 0.
// The integral is evaluated exactly for the piecewise-linear interpolant of
// rho (integration by parts removes the singularity), so no pole subtraction
// or tail correction is needed as long as the support lies inside the grid.
// O(N^2).
inline std::vector<double> kramers_kronig(const EnergyGrid& grid,
                                          const std::vector<double>& neg_im) {
    const int m = grid.n_points;
    if (static_cast<int>(neg_im.size()) != m)
        throw validation_error("kramers_kronig: sample count does not match grid");
    double max_rho = 0.0;
    for (double r : neg_im) {
        if (r < -1e-12) throw validation_error("kramers_kronig: -Im g must be non-negative");
        max_rho = std::max(max_rho, r);
    }
    if (max_rho <= 0.0) return std::vector<double>(static_cast<std::size_t>(m), 0.0);
    if (neg_im.front() > 1e-3 * max_rho || neg_im.back() > 1e-3 * max_rho)
        throw support_boundary_error("spectral support touches the grid boundary");

    const double h = grid.spacing();
    // second-difference coefficients of the interpolant (zero-extended)
    std::vector<double> c(static_cast<std::size_t>(m), 0.0);
    auto rho = [&](int i) { return (i >= 0 && i < m) ? neg_im[static_cast<std::size_t>(i)] : 0.0; };
    for (int i = 0; i < m; ++i)
        c[static_cast<std::size_t>(i)] = (2.0 * rho(i) - rho(i - 1) - rho(i + 1)) / h;

    // kernel K(d) = integral antiderivative (E' - E)(ln|E' - E| - 1) at distance d*h
    std::vector<double> kernel(static_cast<std::size_t>(2 * m - 1), 0.0);
    for (int d = -(m - 1); d < m; ++d) {
        if (d == 0) continue;
        const double x = d * h;
        kernel[static_cast<std::size_t>(d + m - 1)] = x * (std::log(std::abs(x)) - 1.0);
    }

    // the interpolant ramps to zero one spacing beyond each edge; these are the
    // ramp nodes' second-difference coefficients
    const double c_left = -neg_im.front() / h;
    const double c_right = -neg_im.back() / h;
    auto antideriv = [](double x) { return x == 0.0 ? 0.0 : x * (std::log(std::abs(x)) - 1.0); };

    std::vector<double> re(static_cast<std::size_t>(m), 0.0);
    for (int i = 0; i < m; ++i) {
        double sum = 0.0;
        const double* k = kernel.data() + (m - 1 - i);
        for (int j = 0; j < m; ++j) sum += c[static_cast<std::size_t>(j)] * k[j];
        sum += c_left * antideriv(-(i + 1) * h) + c_right * antideriv((m - i) * h);
        re[static_cast<std::size_t>(i)] = sum / std::numbers::pi;
    }
    return re;
}

namespace detail {

inline MonomerGreen finalize_green(const EnergyGrid& grid, std::vector<Complex> values) {
    MonomerGreen g;
    g.grid = grid;
    g.values = std::move(values);

    std::vector<double> rho(static_cast<std::size_t>(grid.n_points));
    std::vector<double> erho(static_cast<std::size_t>(grid.n_points));
    for (int i = 0; i < grid.n_points; ++i) {
        const double r = g.neg_im(i);
        if (r < -1e-12)
            throw validation_error("monomer Green function has negative spectral density");
        rho[static_cast<std::size_t>(i)] = r;
        erho[static_cast<std::size_t>(i)] = r * grid.at(i);
    }
    const double mass = trapezoid(grid, rho);
    g.spectral_weight = mass / std::numbers::pi;
    g.centroid = mass > 0.0 ? trapezoid(grid, erho) / mass : 0.0;

    if (std::abs(g.spectral_weight - 1.0) > 0.01)
        throw grid_too_narrow_error(
            "monomer Green function weight deviates from 1 by more than 1%: grid too narrow");
    for (int i : {0, grid.n_points - 1}) {
        const Complex tail = (grid.at(i) - g.centroid) * g.values[static_cast<std::size_t>(i)];
        if (std::abs(tail - 1.0) > 0.05)
            throw grid_too_narrow_error(
                "monomer Green function tail is not Herglotz at the grid edge: grid too narrow");
    }
    return g;
}

} // namespace detail

// One-level electronic Green function g(E) = 1 / (E - epsilon + i delta).
inline MonomerGreen electronic_green(double epsilon, double delta, const EnergyGrid& grid) {
    if (delta <= 0.0) throw invalid_broadening_error("electronic broadening delta must be > 0");
    std::vector<Complex> v(static_cast<std::size_t>(grid.n_points));
    for (int i = 0; i < grid.n_points; ++i)
        v[static_cast<std::size_t>(i)] = 1.0 / Complex(grid.at(i) - epsilon, delta);
    return detail::finalize_green(grid, std::move(v));
}

// Vibrationally averaged Green function of the progression model. Lorentzian
// broadening is assembled analytically; Gaussian broadening samples -Im g and
// recovers Re g with the Kramers-Kronig transform.
inline MonomerGreen vibronic_green(const LineshapeModel& model, const EnergyGrid& grid) {
    model.validate();
    const double support_lo = model.e00 - 10.0 * model.width;
    const double support_hi =
        model.e00 + model.n_peaks * model.vib_spacing + 10.0 * model.width;
    if (grid.e_min > support_lo || grid.e_max < support_hi)
        throw grid_too_narrow_error("vibronic grid must enclose the progression with margin");

    const auto weights = model.franck_condon_weights();
    std::vector<Complex> v(static_cast<std::size_t>(grid.n_points), Complex(0.0, 0.0));
    if (model.broadening == BroadeningKind::lorentzian) {
        for (int i = 0; i < grid.n_points; ++i) {
            Complex sum(0.0, 0.0);
            for (int m = 0; m < model.n_peaks; ++m)
                sum += weights[static_cast<std::size_t>(m)] /
                       Complex(grid.at(i) - (model.e00 + m * model.vib_spacing), model.width);
            v[static_cast<std::size_t>(i)] = sum;
        }
    } else {
        // width is the half-width at half maximum of each Gaussian peak
        const double sigma = model.width / std::sqrt(2.0 * std::numbers::ln2);
        const double norm = std::numbers::pi / (sigma * std::sqrt(2.0 * std::numbers::pi));
        std::vector<double> rho(static_cast<std::size_t>(grid.n_points), 0.0);
        for (int i = 0; i < grid.n_points; ++i) {
            double sum = 0.0;
            for (int m = 0; m < model.n_peaks; ++m) {
                const double x = (grid.at(i) - (model.e00 + m * model.vib_spacing)) / sigma;
                sum += weights[static_cast<std::size_t>(m)] * std::exp(-0.5 * x * x);
            }
            rho[static_cast<std::size_t>(i)] = norm * sum;
        }
        const auto re = kramers_kronig(grid, rho);
        for (int i = 0; i < grid.n_points; ++i)
            v[static_cast<std::size_t>(i)] =
                Complex(re[static_cast<std::size_t>(i)], -rho[static_cast<std::size_t>(i)]);
    }
    return detail::finalize_green(grid, std::move(v));
}

// Two-column (energy, absorption) text table; '#' starts a comment.
inline std::vector<std::pair<double, double>> read_lineshape_table(std::istream& in) {
    std::vector<std::pair<double, double>> rows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        double e, a;
        if (ss >> e >> a)
            rows.emplace_back(e, a);
        else if (!line.empty() && line.find_first_not_of(" \t\r") != std::string::npos)
            throw parse_error(lineno, "expected two numeric columns");
    }
    return rows;
}

// Measured absorption profile -> normalized MonomerGreen on `grid`, with the
// real part from the Kramers-Kronig transform. The input scale is irrelevant.
inline MonomerGreen load_tabulated_lineshape(std::vector<std::pair<double, double>> table,
                                             const EnergyGrid& grid) {
    if (table.size() < 2) throw validation_error("tabulated lineshape needs at least 2 rows");
    bool increasing = true, decreasing = true;
    for (std::size_t i = 1; i < table.size(); ++i) {
        if (table[i].first <= table[i - 1].first) increasing = false;
        if (table[i].first >= table[i - 1].first) decreasing = false;
    }
    if (!increasing && !decreasing)
        throw validation_error("tabulated lineshape energies must be strictly monotone");
    if (decreasing) std::reverse(table.begin(), table.end());

    double max_abs = 0.0;
    for (const auto& [e, a] : table) {
        if (a < 0.0) throw validation_error("tabulated absorption must be non-negative");
        max_abs = std::max(max_abs, a);
    }
    if (max_abs <= 0.0) throw validation_error("tabulated absorption is identically zero");

    // linear resampling; zero outside the table
    std::vector<double> rho(static_cast<std::size_t>(grid.n_points), 0.0);
    std::size_t seg = 0;
    for (int i = 0; i < grid.n_points; ++i) {
        const double e = grid.at(i);
        if (e < table.front().first || e > table.back().first) continue;
        while (seg + 2 < table.size() && table[seg + 1].first < e) ++seg;
        const auto& [e0, a0] = table[seg];
        const auto& [e1, a1] = table[seg + 1];
        const double f = (e - e0) / (e1 - e0);
        rho[static_cast<std::size_t>(i)] = (1.0 - f) * a0 + f * a1;
    }

    const double mass = trapezoid(grid, rho);
    if (mass <= 0.0)
        throw validation_error("tabulated lineshape has no weight inside the grid");
    for (auto& r : rho) r *= std::numbers::pi / mass;

    const auto re = kramers_kronig(grid, rho);
    std::vector<Complex> v(static_cast<std::size_t>(grid.n_points));
    for (int i = 0; i < grid.n_points; ++i)
        v[static_cast<std::size_t>(i)] =
            Complex(re[static_cast<std::size_t>(i)], -rho[static_cast<std::size_t>(i)]);
    return detail::finalize_green(grid, std::move(v));
}

} // namespace aggspec
