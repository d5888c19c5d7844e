#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "aggspec/errors.hpp"

namespace aggspec {

// Uniform energy grid in cm^-1.
struct EnergyGrid {
    double e_min = 0.0;
    double e_max = 0.0;
    int n_points = 0;

    EnergyGrid() = default;
    EnergyGrid(double min, double max, int points) : e_min(min), e_max(max), n_points(points) {
        if (!(e_min < e_max))
            throw grid_too_narrow_error("energy grid requires e_min < e_max");
        if (n_points < 64)
            throw grid_too_narrow_error("energy grid requires at least 64 points");
    }

    double spacing() const { return (e_max - e_min) / (n_points - 1); }
    double at(int i) const { return e_min + i * spacing(); }

    std::vector<double> values() const {
        std::vector<double> v(static_cast<std::size_t>(n_points));
        for (int i = 0; i < n_points; ++i) v[static_cast<std::size_t>(i)] = at(i);
        return v;
    }

    // Index of the grid point closest to e, clamped to the grid.
    int nearest(double e) const {
        if (e <= e_min) return 0;
        if (e >= e_max) return n_points - 1;
        return static_cast<int>((e - e_min) / spacing() + 0.5);
    }

    bool contains(double e) const { return e >= e_min && e <= e_max; }
};

// Trapezoid rule on a uniform grid.
inline double trapezoid(const EnergyGrid& grid, std::span<const double> y) {
    const double h = grid.spacing();
    double sum = 0.5 * (y.front() + y.back());
    for (std::size_t i = 1; i + 1 < y.size(); ++i) sum += y[i];
    return sum * h;
}

// Trapezoid rule on explicit (possibly non-uniform) abscissae.
inline double trapezoid(std::span<const double> x, std::span<const double> y) {
    double sum = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i)
        sum += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
    return sum;
}

} // namespace aggspec
