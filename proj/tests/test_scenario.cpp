#include <catch2/catch_amalgamated.hpp>

#include "aggspec/scenario.hpp"

using namespace aggspec;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

TEST_CASE("fig1c preset parses to the bent-chain scenario") {
    const std::string* text = find_preset("fig1c");
    REQUIRE(text != nullptr);
    const auto spec = parse_scenario(*text);
    CHECK(spec.name == "fig1c");
    CHECK(spec.geometry.kind == GeometryKind::bent_chain);
    CHECK(spec.geometry.n == 19);
    CHECK(spec.geometry.vertex == 12);
    CHECK_THAT(spec.geometry.angle_deg, WithinAbs(135.0, 1e-12));
    CHECK(spec.dipole.frame == DipoleFrame::global);
    CHECK_THAT((spec.dipole.direction - Vec3(0, 0, 1)).norm(), WithinAbs(0.0, 1e-12));
    REQUIRE(spec.spectra.v_abs.size() == 3);
    CHECK(spec.spectra.v_abs[0] == 150.0);
    CHECK(spec.spectra.v_abs[1] == 300.0);
    CHECK(spec.spectra.v_abs[2] == 450.0);
    CHECK_FALSE(spec.sweep.has_value());
    CHECK(spec.spectra.out_wavefunctions);
}

TEST_CASE("fig6 preset sweeps the flattening") {
    const auto spec = parse_scenario(*find_preset("fig6"));
    CHECK(spec.geometry.kind == GeometryKind::ellipse);
    CHECK_THAT(spec.geometry.tangent_angle_deg, WithinAbs(54.0, 1e-12));
    REQUIRE(spec.sweep.has_value());
    CHECK(spec.sweep->parameter == "geometry.flattening");
    const std::vector<double> expected{0.0, 0.2, 0.4, 0.7};
    CHECK(spec.sweep->values == expected);
}

TEST_CASE("every preset parses, validates and builds") {
    for (const auto& [name, text] : preset_library()) {
        INFO("preset " << name);
        const auto spec = parse_scenario(text);
        ScenarioSpec point = spec;
        point.sweep.reset();
        if (spec.sweep) apply_parameter(point, spec.sweep->parameter, spec.sweep->values.back());
        const auto geom = point.build_geometry();
        CHECK_NOTHROW(check_geometry(geom));
        CHECK(geom.size() == spec.geometry.n);
    }
}

TEST_CASE("empty and incomplete documents list the missing sections") {
    CHECK_THROWS_WITH(parse_scenario(""), ContainsSubstring("[geometry]"));
    CHECK_THROWS_WITH(
        parse_scenario("[geometry]\nkind = chain\nn = 5\n"),
        ContainsSubstring("[dipole]"));
    CHECK_THROWS_AS(parse_scenario(""), validation_error);
}

TEST_CASE("unknown keys and sections are hard errors with line numbers") {
    const std::string doc =
        "[geometry]\n"
        "kind = chain\n"
        "n = 5\n"
        "typo_key = 3\n"
        "\n"
        "[dipole]\n"
        "direction = 0 0 1\n";
    try {
        parse_scenario(doc);
        FAIL("expected parse_error");
    } catch (const parse_error& e) {
        CHECK(e.line == 4);
        CHECK_THAT(e.what(), ContainsSubstring("typo_key"));
    }

    CHECK_THROWS_AS(parse_scenario("[geometry]\nkind = chain\nn = 5\n\n[dipole]\n"
                                   "direction = 0 0 1\n\n[nonsense]\nx = 1\n"),
                    parse_error);
    CHECK_THROWS_AS(parse_scenario("[geometry]\nkind = chain\nkind = ring\nn = 4\n"),
                    parse_error);
    CHECK_THROWS_AS(parse_scenario("[geometry\nkind = chain\n"), parse_error);
    CHECK_THROWS_AS(parse_scenario("kind = chain\n"), parse_error);
}

TEST_CASE("value validation") {
    const std::string base =
        "[geometry]\nkind = chain\nn = 5\n\n[dipole]\ndirection = 0 0 1\n";

    CHECK_THROWS_AS(parse_scenario("[geometry]\nkind = blob\nn = 5\n"), parse_error);
    CHECK_THROWS_AS(parse_scenario("[geometry]\nkind = chain\nn = 4.5\n"), parse_error);
    // chain must not carry bend or ellipse keys
    CHECK_THROWS_AS(
        parse_scenario("[geometry]\nkind = chain\nn = 5\nangle_deg = 10\n\n[dipole]\ndirection = 0 0 1\n"),
        parse_error);
    CHECK_THROWS_AS(
        parse_scenario("[geometry]\nkind = chain\nn = 5\nflattening = 0.1\n\n[dipole]\ndirection = 0 0 1\n"),
        parse_error);
    // rings define the dipole through the angles
    CHECK_THROWS_AS(
        parse_scenario("[geometry]\nkind = ring\nn = 16\n\n[dipole]\ndirection = 0 0 1\n"),
        validation_error);
    // bent chain needs vertex and angle
    CHECK_THROWS_AS(
        parse_scenario("[geometry]\nkind = bent_chain\nn = 19\nangle_deg = 135\n\n[dipole]\ndirection = 0 0 1\n"),
        validation_error);
    // zero dipole
    CHECK_THROWS_AS(
        parse_scenario("[geometry]\nkind = chain\nn = 5\n\n[dipole]\ndirection = 0 0 0\n"),
        parse_error);
    // bad numbers in spectra
    CHECK_THROWS_AS(parse_scenario(base + "\n[spectra]\nv_abs = 150 -20\n"), parse_error);
    CHECK_THROWS_AS(parse_scenario(base + "\n[spectra]\ngrid_points = 10\n"),
                    grid_too_narrow_error);
    CHECK_THROWS_AS(parse_scenario(base + "\n[spectra]\npolarization = sideways\n"), parse_error);
    CHECK_THROWS_AS(parse_scenario(base + "\n[spectra]\noutputs = sticks plots\n"), parse_error);
    CHECK_THROWS_AS(parse_scenario(base + "\n[lineshape]\nkind = mystery\n"), parse_error);
    // vertex range enforced at validation
    CHECK_THROWS_AS(
        parse_scenario("[geometry]\nkind = bent_chain\nn = 19\nvertex = 19\nangle_deg = 10\n\n[dipole]\ndirection = 0 0 1\n"),
        validation_error);
}

TEST_CASE("defaults are applied") {
    const auto spec = parse_scenario(
        "[geometry]\nkind = chain\nn = 7\n\n[dipole]\ndirection = 1 0 0\n");
    CHECK(spec.name == "scenario");
    CHECK(spec.lineshape.kind == LineshapeKind::vibronic);
    CHECK(spec.lineshape.model.e00 == 17500.0);
    CHECK(spec.lineshape.model.vib_spacing == 1200.0);
    CHECK(spec.lineshape.model.huang_rhys == 0.9);
    CHECK(spec.lineshape.model.n_peaks == 4);
    CHECK(spec.lineshape.model.width == 350.0);
    CHECK(spec.lineshape.model.broadening == BroadeningKind::lorentzian);
    CHECK(spec.spectra.polarization.kind == Polarization::Kind::isotropic);
    CHECK(spec.spectra.v_abs == std::vector<double>{150.0, 300.0, 450.0});
    CHECK(spec.spectra.grid_min == -20000.0);
    CHECK(spec.spectra.grid_max == 55000.0);
    CHECK(spec.spectra.grid_points == 5001);
    CHECK(spec.spectra.out_sticks);
    CHECK(spec.spectra.out_ces);
    CHECK(spec.spectra.out_monomer);
    CHECK_FALSE(spec.spectra.out_wavefunctions);
}

TEST_CASE("explicit spectra and lineshape settings") {
    const auto spec = parse_scenario(
        "[geometry]\nkind = ring\nn = 16\ntangent_angle_deg = 45\npolar_angle_deg = 55\n\n"
        "[lineshape]\nkind = electronic\nepsilon = 18000\ndelta = 2\n\n"
        "[spectra]\npolarization = fixed 0 0 2\nv_abs = 100\ngrid_min = 10000\n"
        "grid_max = 26000\ngrid_points = 2001\noutputs = sticks ces\n");
    CHECK(spec.lineshape.kind == LineshapeKind::electronic);
    CHECK(spec.lineshape.epsilon == 18000.0);
    CHECK(spec.spectra.polarization.kind == Polarization::Kind::fixed);
    CHECK_THAT(spec.spectra.polarization.vector.z(), WithinAbs(1.0, 1e-12));
    CHECK(spec.spectra.out_sticks);
    CHECK(spec.spectra.out_ces);
    CHECK_FALSE(spec.spectra.out_monomer);
    CHECK_FALSE(spec.spectra.out_geometry);
    // tabulated kind requires a file
    CHECK_THROWS_AS(parse_scenario("[geometry]\nkind = ring\nn = 16\n\n[lineshape]\nkind = tabulated\n"),
                    validation_error);
}

TEST_CASE("sweep validation and application") {
    const std::string ok =
        "[geometry]\nkind = bent_chain\nn = 19\nvertex = 12\nangle_deg = 0\n\n"
        "[dipole]\ndirection = 0 0 1\n\n"
        "[sweep]\nparameter = geometry.angle_deg\nvalues = 0 45 90 135\n";
    const auto spec = parse_scenario(ok);
    REQUIRE(spec.sweep.has_value());
    CHECK(spec.sweep->values.size() == 4);

    ScenarioSpec point = spec;
    apply_parameter(point, "geometry.angle_deg", 90.0);
    CHECK(point.geometry.angle_deg == 90.0);
    CHECK_THROWS_AS(apply_parameter(point, "geometry.n", 4.5), validation_error);
    CHECK_THROWS_AS(apply_parameter(point, "nonsense.key", 1.0), validation_error);

    // unknown sweep parameter
    CHECK_THROWS_AS(parse_scenario(
                        "[geometry]\nkind = chain\nn = 5\n\n[dipole]\ndirection = 0 0 1\n\n"
                        "[sweep]\nparameter = geometry.bananas\nvalues = 1 2\n"),
                    validation_error);
    // sweep parameter must fit the geometry kind (vertex is validated on apply)
    CHECK_THROWS_AS(parse_scenario(
                        "[geometry]\nkind = chain\nn = 5\n\n[dipole]\ndirection = 0 0 1\n\n"
                        "[sweep]\nparameter = geometry.vertex\nvalues = 0\n"),
                    validation_error);
    // sweep needs both keys
    CHECK_THROWS_AS(parse_scenario(
                        "[geometry]\nkind = chain\nn = 5\n\n[dipole]\ndirection = 0 0 1\n\n"
                        "[sweep]\nvalues = 1 2\n"),
                    validation_error);
}

TEST_CASE("comments and whitespace are tolerated") {
    const auto spec = parse_scenario(
        "# top comment\n"
        "[geometry]   # section\n"
        "  kind = chain   # inline comment\n"
        "  n = 5\n"
        "\n"
        "[dipole]\n"
        "direction = 0 0 1\n");
    CHECK(spec.geometry.n == 5);
}
