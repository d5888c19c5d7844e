#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "aggspec/spectra.hpp"
#include "oracles.hpp"

using namespace aggspec;
using Catch::Matchers::WithinAbs;

namespace {

double spectrum_mass(const SpectrumResult& r) {
    return trapezoid(r.continuous->energy, r.continuous->value);
}

// integrate -Im A over [lo, hi]
double window_mass(const SpectrumResult& r, double lo, double hi) {
    const auto& cs = *r.continuous;
    double sum = 0.0;
    for (std::size_t i = 1; i < cs.energy.size(); ++i) {
        if (cs.energy[i - 1] < lo || cs.energy[i] > hi) continue;
        sum += 0.5 * (cs.value[i] + cs.value[i - 1]) * (cs.energy[i] - cs.energy[i - 1]);
    }
    return sum;
}

} // namespace

TEST_CASE("polarization type") {
    CHECK_THROWS_AS(Polarization::along(Vec3(0, 0, 0)), validation_error);
    const auto p = Polarization::along(Vec3(0, 0, 5));
    CHECK_THAT(p.vector.norm(), WithinAbs(1.0, 1e-12));
}

TEST_CASE("stick spectra of straight chains") {
    SECTION("perpendicular dipoles form an H configuration") {
        const auto g = build_chain(19, Vec3(0, 0, 1));
        const auto basis = diagonalize(coupling_matrix(g), g);
        const auto sticks = stick_spectrum(basis, g, Polarization::isotropic());
        REQUIRE(sticks.sticks.size() == 19);
        CHECK(sticks.stick_unit == EnergyUnit::reference);
        // the top state carries nearly all oscillator strength
        int kmax = 0;
        for (int k = 0; k < 19; ++k)
            if (sticks.sticks[k].strength > sticks.sticks[kmax].strength) kmax = k;
        CHECK(kmax == 18);
        CHECK(sticks.sticks[18].strength > 0.7);
        double sum = 0.0;
        for (const auto& s : sticks.sticks) sum += s.strength;
        CHECK_THAT(sum, WithinAbs(1.0, 1e-12));
    }
    SECTION("parallel dipoles form a J configuration") {
        const auto g = build_chain(19, Vec3(1, 0, 0));
        const auto basis = diagonalize(coupling_matrix(g), g);
        const auto sticks = stick_spectrum(basis, g, Polarization::isotropic());
        int kmax = 0;
        for (int k = 0; k < 19; ++k)
            if (sticks.sticks[k].strength > sticks.sticks[kmax].strength) kmax = k;
        CHECK(kmax == 0);
        CHECK(sticks.sticks[0].strength > 0.7);
    }
    SECTION("nearest-neighbour sticks stay inside (-2, 2) in units of V") {
        for (const Vec3& d : {Vec3(0, 0, 1), Vec3(1, 0, 0)}) {
            const auto g = build_chain(19, d);
            const auto basis = diagonalize(coupling_matrix(g, CouplingMode::nearest_neighbour), g);
            const auto sticks = stick_spectrum(basis, g, Polarization::isotropic());
            for (const auto& s : sticks.sticks) {
                CHECK(s.energy > -2.0);
                CHECK(s.energy < 2.0);
            }
        }
    }
    SECTION("near-magic-angle rings fall back to raw units") {
        const auto g = build_ring(16, 54.0, 90.0);
        const auto basis = diagonalize(coupling_matrix(g), g);
        const auto sticks = stick_spectrum(basis, g, Polarization::isotropic());
        CHECK(sticks.stick_unit == EnergyUnit::raw);
        CHECK(std::abs(sticks.reference_coupling) < 0.01);
    }
}

TEST_CASE("CES spectrum identities") {
    SECTION("vanishing couplings reproduce the monomer shape") {
        // magic-angle dimer: C_k numerically zero
        const double t = std::acos(1.0 / std::sqrt(3.0));
        const Vec3 d(std::cos(t), std::sin(t), 0.0);
        const auto g = custom_geometry({{Vec3(0, 0, 0), d}, {Vec3(1, 0, 0), d}});
        const auto basis = diagonalize(coupling_matrix(g), g);
        REQUIRE(std::abs(basis.eigenvalues(0)) < 1e-14);

        const EnergyGrid grid(-20000.0, 55000.0, 2001);
        const auto green = vibronic_green(LineshapeModel{}, grid);
        const auto ces = ces_spectrum(basis, g, Polarization::isotropic(), green, 300.0);
        const auto mono = monomer_spectrum(g, Polarization::isotropic(), green);
        const double scale = mono.total_raw_strength; // CES strengths are normalized
        double max_rel = 0.0, max_val = 0.0;
        for (int i = 0; i < grid.n_points; ++i) {
            max_val = std::max(max_val, mono.continuous->value[i]);
            max_rel = std::max(max_rel, std::abs(ces.continuous->value[i] * scale -
                                                 mono.continuous->value[i]));
        }
        CHECK(max_rel < 1e-10 * max_val);
    }
    SECTION("single-level Green function shifts the peak by the coupling") {
        const auto g = build_chain(2, Vec3(0, 0, 1)); // C = +-1, V_ref = 1
        const auto basis = diagonalize(coupling_matrix(g), g);
        const double eps = 18000.0, delta = 5.0, v_abs = 300.0;
        const EnergyGrid grid(eps - 3000.0, eps + 3000.0, 6001);
        const auto r = electronic_spectral_function(basis, g, Polarization::along(Vec3(0, 0, 1)),
                                                    eps, delta, grid, v_abs);
        // only the symmetric state absorbs; peak at eps + v_abs
        const auto& cs = *r.continuous;
        std::size_t imax = 0;
        for (std::size_t i = 0; i < cs.value.size(); ++i)
            if (cs.value[i] > cs.value[imax]) imax = i;
        CHECK(std::abs(cs.energy[imax] - (eps + v_abs)) <= grid.spacing());
    }
    SECTION("electronic spectral function equals CES with the electronic Green function") {
        const auto g = oracles::random_geometry(7);
        const auto basis = diagonalize(coupling_matrix(g), g);
        const EnergyGrid grid(-3000.0, 3000.0, 4001);
        const auto green = electronic_green(0.0, 5.0, grid);
        const auto a = ces_spectrum(basis, g, Polarization::isotropic(), green, 120.0);
        const auto b = electronic_spectral_function(basis, g, Polarization::isotropic(), 0.0, 5.0,
                                                    grid, 120.0);
        REQUIRE(a.continuous->energy.size() == b.continuous->energy.size());
        for (std::size_t i = 0; i < a.continuous->value.size(); i += 17)
            CHECK_THAT(a.continuous->value[i], WithinAbs(b.continuous->value[i], 1e-14));
    }
}

TEST_CASE("electronic spectral function converges to the sticks") {
    // asymmetric dimer: both states bright with distinct weights
    const auto g = custom_geometry(
        {{Vec3(0, 0, 0), Vec3(0, 0, 1)}, {Vec3(1, 0, 0), Vec3(0, 1, 1).normalized()}});
    const auto basis = diagonalize(coupling_matrix(g), g);
    const auto f = oscillator_strengths(basis, g, Polarization::along(Vec3(0, 0, 1)));
    REQUIRE(f.normalized(0) > 0.01);
    REQUIRE(f.normalized(1) > 0.01);

    const double eps = 0.0, delta = 0.1, v_abs = 40.0;
    const EnergyGrid grid(-600.0, 600.0, 24001); // spacing 0.05
    const auto r = electronic_spectral_function(basis, g, Polarization::along(Vec3(0, 0, 1)), eps,
                                                delta, grid, v_abs);

    const double scale = v_abs / std::abs(basis.reference_coupling);
    const auto& cs = *r.continuous;
    for (int k = 0; k < 2; ++k) {
        const double expected = eps + basis.eigenvalues(k) * scale;
        // peak center: maximum inside a +-2 window around the expected position
        double best_e = 0.0, best_v = -1.0;
        for (std::size_t i = 0; i < cs.energy.size(); ++i)
            if (std::abs(cs.energy[i] - expected) < 2.0 && cs.value[i] > best_v) {
                best_v = cs.value[i];
                best_e = cs.energy[i];
            }
        CHECK(std::abs(best_e - expected) <= grid.spacing());
        // integrated weight across the half-axis belonging to this peak
        const double lo = k == 0 ? grid.e_min : eps;
        const double hi = k == 0 ? eps : grid.e_max;
        CHECK_THAT(window_mass(r, lo, hi) / std::numbers::pi,
                   WithinAbs(f.normalized(k), 0.01));
    }
    CHECK_THAT(spectrum_mass(r) / std::numbers::pi, WithinAbs(1.0, 0.01));
}

TEST_CASE("monomer spectrum") {
    const EnergyGrid grid(-20000.0, 55000.0, 2001);
    const auto green = vibronic_green(LineshapeModel{}, grid);

    SECTION("single monomer with aligned polarization gives -Im g") {
        const auto g =
            custom_geometry({{Vec3(0, 0, 0), Vec3(0, 0, 1)}, {Vec3(100, 0, 0), Vec3(0, 0, 1)}});
        // far-separated pair: per-site contribution is additive; use fixed e||mu
        const auto r = monomer_spectrum(g, Polarization::along(Vec3(0, 0, 1)), green);
        for (int i = 0; i < grid.n_points; i += 97)
            CHECK_THAT(r.continuous->value[i], WithinAbs(2.0 * green.neg_im(i), 1e-14));
        const double mass = spectrum_mass(r);
        CHECK_THAT(mass / (std::numbers::pi * r.total_raw_strength), WithinAbs(1.0, 0.01));
    }
    SECTION("perpendicular polarization yields zero") {
        const auto g = build_chain(4, Vec3(0, 0, 1));
        const auto r = monomer_spectrum(g, Polarization::along(Vec3(1, 0, 0)), green);
        CHECK(r.zero_strength);
        for (double v : r.continuous->value) CHECK(v == 0.0);
    }
    SECTION("site and exciton bases agree") {
        std::mt19937 rng(4242);
        const auto g = oracles::random_geometry(77);
        const auto basis = diagonalize(coupling_matrix(g), g);
        const Vec3 e = oracles::random_unit(rng);
        double site_sum = 0.0;
        for (const auto& s : g.sites) site_sum += std::pow(e.dot(s.dipole), 2);
        double exciton_sum = 0.0;
        for (int k = 0; k < basis.n(); ++k)
            exciton_sum += std::pow(e.dot(Vec3(basis.collective_dipoles.col(k))), 2);
        CHECK_THAT(exciton_sum, WithinAbs(site_sum, 1e-10));
    }
}

TEST_CASE("CES positivity and sum rule") {
    const EnergyGrid grid(-20000.0, 55000.0, 3001);
    const auto green = vibronic_green(LineshapeModel{}, grid);

    SECTION("positivity across a coupling sweep") {
        const auto g = build_chain(2, Vec3(0, 0, 1));
        auto basis = diagonalize(coupling_matrix(g), g);
        for (double c = -5000.0; c <= 5000.0; c += 250.0) {
            basis.eigenvalues(0) = c / 300.0; // v_abs of 300 scales it back to c
            basis.eigenvalues(1) = -c / 300.0;
            const auto r = ces_spectrum(basis, g, Polarization::isotropic(), green, 300.0);
            double mn = 0.0;
            for (double v : r.continuous->value) mn = std::min(mn, v);
            CHECK(mn >= -1e-12);
        }
    }
    SECTION("sum rule on random aggregates") {
        for (unsigned seed : {3u, 14u, 15u}) {
            const auto g = oracles::random_geometry(seed, 3, 6);
            const auto basis = diagonalize(coupling_matrix(g), g);
            // keep the shifted poles well inside the grid (random close pairs can
            // produce couplings of tens of reference units)
            const double unit_scale = std::abs(basis.reference_coupling) >= 0.01
                                          ? std::abs(basis.reference_coupling)
                                          : 1.0;
            const double cmax = basis.eigenvalues.cwiseAbs().maxCoeff() / unit_scale;
            const double v_abs = std::min(400.0, 8000.0 / cmax);
            const auto r = ces_spectrum(basis, g, Polarization::isotropic(), green, v_abs);
            CHECK_THAT(spectrum_mass(r) / std::numbers::pi, WithinAbs(1.0, 0.01));
        }
    }
}

TEST_CASE("isotropic spectrum is the average over the axes") {
    const auto g = oracles::random_geometry(123, 3, 5);
    const auto basis = diagonalize(coupling_matrix(g), g);
    const EnergyGrid grid(-20000.0, 55000.0, 1501);
    const auto green = vibronic_green(LineshapeModel{}, grid);
    CesOptions opts;
    opts.normalized_strengths = false; // raw weights make the identity exact
    opts.refine_split_off = false;
    const auto iso = ces_spectrum(basis, g, Polarization::isotropic(), green, 350.0, opts);
    const auto ex = ces_spectrum(basis, g, Polarization::along(Vec3(1, 0, 0)), green, 350.0, opts);
    const auto ey = ces_spectrum(basis, g, Polarization::along(Vec3(0, 1, 0)), green, 350.0, opts);
    const auto ez = ces_spectrum(basis, g, Polarization::along(Vec3(0, 0, 1)), green, 350.0, opts);
    double max_val = 0.0;
    for (int i = 0; i < grid.n_points; ++i)
        max_val = std::max(max_val, std::abs(iso.continuous->value[i]));
    for (int i = 0; i < grid.n_points; ++i) {
        const double avg = (ex.continuous->value[i] + ey.continuous->value[i] +
                            ez.continuous->value[i]) / 3.0;
        CHECK_THAT(iso.continuous->value[i], WithinAbs(avg, 1e-12 * std::max(1.0, max_val)));
    }
}

TEST_CASE("split-off lines outside the monomer band") {
    // a Gaussian monomer band has negligible tails, so states pushed outside it
    // become near-delta lines in the CES spectrum
    const auto g = build_chain(2, Vec3(0, 0, 1)); // C = +-1, V_ref = 1
    const auto basis = diagonalize(coupling_matrix(g), g);
    LineshapeModel m;
    m.broadening = BroadeningKind::gaussian;
    m.huang_rhys = 0.0;
    m.n_peaks = 1;
    m.e00 = 18000.0;
    m.width = 250.0;
    const EnergyGrid grid(10000.0, 26000.0, 1601); // spacing 10
    const auto green = vibronic_green(m, grid);

    SECTION("moderately split lines get refined and keep the sum rule") {
        // only the symmetric (bright) state produces a line; the dark partner
        // carries no weight
        const auto r = ces_spectrum(basis, g, Polarization::isotropic(), green, 750.0);
        REQUIRE(r.split_off.size() == 1);
        const auto& line = r.split_off.front();
        CHECK(line.resolved);
        CHECK(line.state == 1);
        // the pole sits slightly beyond e00 + C_abs (Gaussian band curvature)
        CHECK(line.energy - m.e00 > 750.0);
        CHECK(line.energy - m.e00 < 950.0);
        CHECK(line.width < 3.0 * grid.spacing());
        CHECK(r.continuous->energy.size() > static_cast<std::size_t>(grid.n_points));
        CHECK_THAT(spectrum_mass(r) / std::numbers::pi, WithinAbs(1.0, 0.01));

        // without refinement the sampled curve misses part of the line weight
        CesOptions off;
        off.refine_split_off = false;
        const auto coarse =
            ces_spectrum(basis, g, Polarization::isotropic(), green, 750.0, off);
        CHECK(spectrum_mass(coarse) / std::numbers::pi < 0.985);
        CHECK(spectrum_mass(coarse) < spectrum_mass(r));
    }
    SECTION("far-split lines are reported with their analytic weight") {
        const auto r = ces_spectrum(basis, g, Polarization::isotropic(), green, 2000.0);
        REQUIRE(r.split_off.size() == 1);
        CHECK_FALSE(r.split_off.front().resolved);
        // strong-coupling limit: essentially all weight sits in the line
        CHECK_THAT(r.split_off.front().weight_fraction + spectrum_mass(r) / std::numbers::pi,
                   WithinAbs(1.0, 0.02));
        CHECK(spectrum_mass(r) / std::numbers::pi < 0.1);
    }
}

TEST_CASE("bent chain develops a high-energy shoulder under strong coupling") {
    const auto g = build_bent_chain(19, 12, 135.0, {DipoleFrame::global, Vec3(0, 0, 1)});
    const auto basis = diagonalize(coupling_matrix(g), g);
    const EnergyGrid grid(-20000.0, 55000.0, 5001);
    const auto green = vibronic_green(LineshapeModel{}, grid);

    auto shoulder_ratio = [&](double v_abs) {
        const auto r = ces_spectrum(basis, g, Polarization::isotropic(), green, v_abs);
        const auto& cs = *r.continuous;
        double global_max = 0.0, high_max = 0.0;
        for (std::size_t i = 1; i + 1 < cs.energy.size(); ++i) {
            global_max = std::max(global_max, cs.value[i]);
            const bool local_max =
                cs.value[i] > cs.value[i - 1] && cs.value[i] > cs.value[i + 1];
            if (local_max && cs.energy[i] > 21000.0) high_max = std::max(high_max, cs.value[i]);
        }
        return high_max / global_max;
    };
    // the split-off dimer state turns into a pronounced shoulder as V grows
    CHECK(shoulder_ratio(450.0) > 0.5);
    CHECK(shoulder_ratio(450.0) > 1.5 * shoulder_ratio(150.0));
}

TEST_CASE("ces_spectrum validates its inputs") {
    const auto g = build_chain(2, Vec3(0, 0, 1));
    const auto basis = diagonalize(coupling_matrix(g), g);
    const EnergyGrid grid(-2000.0, 2000.0, 2001);
    const auto green = electronic_green(0.0, 5.0, grid);
    CHECK_THROWS_AS(ces_spectrum(basis, g, Polarization::isotropic(), green, 0.0),
                    validation_error);
    CHECK_THROWS_AS(ces_spectrum(basis, g, Polarization::isotropic(), green, -10.0),
                    validation_error);
}
