#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "aggspec/excitonics.hpp"
#include "aggspec/grid.hpp"
#include "aggspec/lineshape.hpp"

namespace aggspec {

// Stick energies are reported in units of |reference_coupling| when that is
// meaningfully non-zero, otherwise in raw dimensionless units (mu^2/a^3); near
// the magic angle the nearest-neighbour reference vanishes and cannot serve as
// an energy unit.
enum class EnergyUnit { reference, raw };

struct Stick {
    double energy;           // C_k / |V_ref| (reference) or C_k (raw)
    double strength;         // normalized oscillator strength
    double cluster_strength; // summed over the degenerate cluster
    double pr;               // participation ratio
};

struct ContinuousSpectrum {
    std::vector<double> energy; // cm^-1, ascending (may contain refined points)
    std::vector<double> value;  // -Im A(E) >= 0
};

// A CES resonance pushed outside the monomer band: a near-Lorentzian line of
// width `width`; `weight_fraction` is its share of the sum rule.
struct SplitOffLine {
    int state;
    double energy; // cm^-1
    double width;  // cm^-1 (half width)
    double weight_fraction;
    bool resolved; // false if too narrow to sample numerically
};

struct SpectrumResult {
    std::vector<Stick> sticks;
    EnergyUnit stick_unit = EnergyUnit::reference;
    std::optional<ContinuousSpectrum> continuous;

    // metadata
    double v_abs = 0.0;               // cm^-1 scale applied to the couplings (0 for sticks)
    double reference_coupling = 0.0;  // dimensionless V_ref of the scenario
    Polarization polarization;
    bool zero_strength = false;
    bool pole_at_machine_precision = false;
    double total_raw_strength = 0.0;  // sum_k |e.mu_k|^2 before normalization
    std::vector<SplitOffLine> split_off;
    std::vector<std::vector<double>> partials; // optional per-state -Im contributions
};

struct CesOptions {
    bool normalized_strengths = true;
    bool keep_partials = false;
    bool refine_split_off = true;
    // |V_ref| below this (in mu^2/a^3 units) falls back to raw coupling units;
    // near the magic angle the nearest-neighbour value is a meaningless unit
    double reference_floor = 0.05;
};

namespace detail {

inline EnergyUnit pick_unit(double reference_coupling, double floor_value) {
    return std::abs(reference_coupling) >= floor_value ? EnergyUnit::reference
                                                       : EnergyUnit::raw;
}

// C_k in absolute cm^-1 for a given coupling scale.
inline std::vector<double> absolute_couplings(const ExcitonBasis& basis, double v_abs,
                                              EnergyUnit unit) {
    const double scale =
        unit == EnergyUnit::reference ? v_abs / std::abs(basis.reference_coupling) : v_abs;
    std::vector<double> c(static_cast<std::size_t>(basis.n()));
    for (int k = 0; k < basis.n(); ++k) c[static_cast<std::size_t>(k)] = basis.eigenvalues(k) * scale;
    return c;
}

} // namespace detail

// Normalized oscillator-strength stick spectrum; energies dimensionless.
inline SpectrumResult stick_spectrum(const ExcitonBasis& basis, const AggregateGeometry& geom,
                                     const Polarization& pol,
                                     double reference_floor = CesOptions{}.reference_floor) {
    const auto f = oscillator_strengths(basis, geom, pol);
    SpectrumResult r;
    r.stick_unit = detail::pick_unit(basis.reference_coupling, reference_floor);
    r.reference_coupling = basis.reference_coupling;
    r.polarization = pol;
    r.zero_strength = f.zero_total;
    r.total_raw_strength = f.total;
    const double scale =
        r.stick_unit == EnergyUnit::reference ? 1.0 / std::abs(basis.reference_coupling) : 1.0;
    r.sticks.reserve(static_cast<std::size_t>(basis.n()));
    for (int k = 0; k < basis.n(); ++k)
        r.sticks.push_back({basis.eigenvalues(k) * scale, f.normalized(k),
                            f.cluster_normalized(k), basis.participation_ratios(k)});
    return r;
}

// CES aggregate absorption spectrum
//   A(E) = sum_k f_k <g(E)> / (1 - <g(E)> C_k),
// with C_k scaled to absolute energy by `v_abs`. Split-off resonances narrower
// than the grid spacing are located from the real part of 1 - <g>C and locally
// refined so the sum rule survives on the sampled curve.
inline SpectrumResult ces_spectrum(const ExcitonBasis& basis, const AggregateGeometry& geom,
                                   const Polarization& pol, const MonomerGreen& green,
                                   double v_abs, const CesOptions& opts = {}) {
    if (v_abs <= 0.0) throw validation_error("ces_spectrum requires v_abs > 0");
    const int n = basis.n();
    const auto f = oscillator_strengths(basis, geom, pol);
    const Eigen::VectorXd& weights = opts.normalized_strengths ? f.normalized : f.raw;

    SpectrumResult r = stick_spectrum(basis, geom, pol, opts.reference_floor);
    r.v_abs = v_abs;
    const auto c_abs = detail::absolute_couplings(basis, v_abs, r.stick_unit);

    const EnergyGrid& grid = green.grid;
    const int m = grid.n_points;
    const double h = grid.spacing();

    std::vector<double> energies = grid.values();
    std::vector<double> base(static_cast<std::size_t>(m), 0.0);
    if (opts.keep_partials)
        r.partials.assign(static_cast<std::size_t>(n),
                          std::vector<double>(static_cast<std::size_t>(m), 0.0));

    double min_denom = 1e300;
    for (int i = 0; i < m; ++i) {
        const Complex g = green.values[static_cast<std::size_t>(i)];
        double sum = 0.0;
        for (int k = 0; k < n; ++k) {
            const Complex denom = 1.0 - g * c_abs[static_cast<std::size_t>(k)];
            min_denom = std::min(min_denom, std::abs(denom));
            const double part = -std::imag(weights(k) * g / denom);
            sum += part;
            if (opts.keep_partials) r.partials[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] = part;
        }
        base[static_cast<std::size_t>(i)] = sum;
    }
    r.pole_at_machine_precision = min_denom < 1e-12;

    // locate split-off resonances of each state from sign changes of 1 - Re g * C
    std::vector<double> extra_e;
    for (int k = 0; k < n && opts.refine_split_off; ++k) {
        const double c = c_abs[static_cast<std::size_t>(k)];
        if (std::abs(c) < 1e-300 || weights(k) <= 0.0) continue;
        for (int i = 0; i + 1 < m; ++i) {
            const double d0 = 1.0 - green.values[static_cast<std::size_t>(i)].real() * c;
            const double d1 = 1.0 - green.values[static_cast<std::size_t>(i) + 1].real() * c;
            if (d0 == 0.0 || d0 * d1 >= 0.0) continue;
            const double estar = grid.at(i) + h * d0 / (d0 - d1);
            const double rprime = (green.values[static_cast<std::size_t>(i) + 1].real() -
                                   green.values[static_cast<std::size_t>(i)].real()) / h;
            if (std::abs(rprime) < 1e-300) continue;
            const double eta = -green.interp(estar).imag();
            const double width = eta / std::abs(rprime);
            if (width > 3.0 * h) continue; // resolved by the base grid already
            SplitOffLine line;
            line.state = k;
            line.energy = estar;
            line.width = width;
            line.weight_fraction = weights(k) / (c * c * std::abs(rprime));
            line.resolved = width > 1e-7 * (grid.e_max - grid.e_min);
            if (line.resolved) {
                static const double offsets[] = {0.0,  0.15, 0.3,  0.45, 0.6,  0.8,  1.0,
                                                 1.25, 1.55, 1.9,  2.3,  2.8,  3.4,  4.2,
                                                 5.2,  6.5,  8.0,  10.0, 13.0, 17.0, 22.0,
                                                 28.0, 36.0, 47.0, 62.0, 80.0, 100.0};
                for (double u : offsets)
                    for (double s : {1.0, -1.0}) {
                        const double e = estar + s * u * width;
                        if (e > grid.e_min && e < grid.e_max) extra_e.push_back(e);
                        if (u == 0.0) break;
                    }
            }
            r.split_off.push_back(line);
        }
    }

    ContinuousSpectrum cs;
    if (extra_e.empty()) {
        cs.energy = std::move(energies);
        cs.value = std::move(base);
    } else {
        std::sort(extra_e.begin(), extra_e.end());
        extra_e.erase(std::unique(extra_e.begin(), extra_e.end()), extra_e.end());
        auto evaluate = [&](double e) {
            const Complex g = green.interp(e);
            double sum = 0.0;
            for (int k = 0; k < n; ++k)
                sum += -std::imag(weights(k) * g / (1.0 - g * c_abs[static_cast<std::size_t>(k)]));
            return sum;
        };
        cs.energy.reserve(energies.size() + extra_e.size());
        cs.value.reserve(energies.size() + extra_e.size());
        std::size_t ei = 0;
        for (int i = 0; i < m; ++i) {
            const double e = energies[static_cast<std::size_t>(i)];
            while (ei < extra_e.size() && extra_e[ei] < e) {
                cs.energy.push_back(extra_e[ei]);
                cs.value.push_back(evaluate(extra_e[ei]));
                ++ei;
            }
            cs.energy.push_back(e);
            cs.value.push_back(base[static_cast<std::size_t>(i)]);
        }
        while (ei < extra_e.size()) {
            cs.energy.push_back(extra_e[ei]);
            cs.value.push_back(evaluate(extra_e[ei]));
            ++ei;
        }
    }
    r.continuous = std::move(cs);
    return r;
}

// Non-interacting monomer spectrum M(E) = (sum_n |e.mu_n|^2) <g(E)>.
inline SpectrumResult monomer_spectrum(const AggregateGeometry& geom, const Polarization& pol,
                                       const MonomerGreen& green) {
    double prefactor = 0.0;
    for (const auto& site : geom.sites)
        prefactor += pol.kind == Polarization::Kind::isotropic
                         ? site.dipole.squaredNorm() / 3.0
                         : std::pow(pol.vector.dot(site.dipole), 2);
    SpectrumResult r;
    r.polarization = pol;
    r.total_raw_strength = prefactor;
    r.zero_strength = prefactor < 1e-12 * geom.size();
    ContinuousSpectrum cs;
    cs.energy = green.grid.values();
    cs.value.resize(static_cast<std::size_t>(green.grid.n_points));
    for (int i = 0; i < green.grid.n_points; ++i)
        cs.value[static_cast<std::size_t>(i)] = prefactor * green.neg_im(i);
    r.continuous = std::move(cs);
    return r;
}

// Purely electronic spectral function: Lorentzian-broadened sticks at
// epsilon + C_k; identical to ces_spectrum with the one-level Green function.
inline SpectrumResult electronic_spectral_function(const ExcitonBasis& basis,
                                                   const AggregateGeometry& geom,
                                                   const Polarization& pol, double epsilon,
                                                   double delta, const EnergyGrid& grid,
                                                   double v_abs, const CesOptions& opts = {}) {
    const MonomerGreen g = electronic_green(epsilon, delta, grid);
    return ces_spectrum(basis, geom, pol, g, v_abs, opts);
}

} // namespace aggspec
