#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "aggspec/errors.hpp"
#include "aggspec/scenario.hpp"
#include "aggspec/spectra.hpp"

#ifndef AGGSPEC_VERSION
#define AGGSPEC_VERSION "0.0.0"
#endif

namespace aggspec {

struct InvariantRecord {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

struct RunRecord {
    int index = 0;
    std::string label;
    std::map<std::string, double> parameters;
    std::vector<std::string> outputs;
    std::vector<InvariantRecord> checks;
    double wall_ms = 0.0;
    bool ok = false;
    std::string error;
};

struct RunManifest {
    std::string scenario;
    std::string version;
    std::string out_dir;
    std::vector<RunRecord> runs;
    std::string manifest_path;

    bool all_ok() const {
        if (runs.empty()) return false;
        for (const auto& r : runs) {
            if (!r.ok) return false;
            for (const auto& c : r.checks)
                if (!c.pass) return false;
        }
        return true;
    }
};

// a_nk and a_nk^2 per state, states ordered by ascending energy.
inline void export_wavefunctions(const ExcitonBasis& basis, std::ostream& os) {
    os << "# exciton wavefunctions: one row per (state k, site n)\n";
    os << "# k C_k n amplitude amplitude_sq\n";
    char buf[160];
    for (int k = 0; k < basis.n(); ++k)
        for (int m = 0; m < basis.n(); ++m) {
            const double a = basis.eigenvectors(m, k);
            std::snprintf(buf, sizeof buf, "%d %.12g %d %.12g %.12g\n", k + 1,
                          basis.eigenvalues(k), m + 1, a, a * a);
            os << buf;
        }
}

namespace detail {

inline std::string sanitize_number(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%g", v);
    std::string s(buf);
    for (auto& c : s) {
        if (c == '.') c = 'p';
        if (c == '-') c = 'm';
        if (c == '+') c = '_';
    }
    return s;
}

inline std::string short_parameter(const std::string& dotted) {
    const auto dot = dotted.find('.');
    return dot == std::string::npos ? dotted : dotted.substr(dot + 1);
}

inline void write_sticks_file(std::ostream& os, const SpectrumResult& sticks,
                              const ScenarioSpec& spec) {
    os << "# stick spectrum for scenario " << spec.name << "\n";
    os << "# polarization="
       << (sticks.polarization.kind == Polarization::Kind::isotropic ? "isotropic" : "fixed")
       << " normalization=unit_sum"
       << " energy_unit="
       << (sticks.stick_unit == EnergyUnit::reference ? "reference_coupling" : "mu^2/a^3")
       << "\n";
    char buf[160];
    std::snprintf(buf, sizeof buf, "# reference_coupling=%.9g zero_strength=%d\n",
                  sticks.reference_coupling, sticks.zero_strength ? 1 : 0);
    os << buf;
    os << "# k energy strength cluster_strength pr\n";
    for (std::size_t k = 0; k < sticks.sticks.size(); ++k) {
        const auto& s = sticks.sticks[k];
        std::snprintf(buf, sizeof buf, "%zu %.9g %.9g %.9g %.9g\n", k + 1, s.energy, s.strength,
                      s.cluster_strength, s.pr);
        os << buf;
    }
}

inline void write_continuous_file(std::ostream& os, const SpectrumResult& r,
                                  const std::string& what, const ScenarioSpec& spec) {
    os << "# " << what << " spectrum for scenario " << spec.name << "\n";
    char buf[200];
    if (r.v_abs > 0.0) {
        std::snprintf(buf, sizeof buf, "# v_abs_cm1=%.9g energy_unit_into_ck=%s\n", r.v_abs,
                      r.stick_unit == EnergyUnit::reference ? "reference_coupling" : "mu^2/a^3");
        os << buf;
    }
    for (const auto& line : r.split_off) {
        std::snprintf(buf, sizeof buf,
                      "# split_off_state k=%d energy_cm1=%.9g width_cm1=%.6g weight=%.6g resolved=%d\n",
                      line.state + 1, line.energy, line.width, line.weight_fraction,
                      line.resolved ? 1 : 0);
        os << buf;
    }
    os << "# energy_cm1 absorption\n";
    const auto& cs = *r.continuous;
    for (std::size_t i = 0; i < cs.energy.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.9g %.9g\n", cs.energy[i], cs.value[i]);
        os << buf;
    }
}

inline double eigen_residual(const CouplingMatrix& v, const ExcitonBasis& basis) {
    const Eigen::MatrixXd r =
        v.values * basis.eigenvectors - basis.eigenvectors * basis.eigenvalues.asDiagonal();
    return r.cwiseAbs().maxCoeff();
}

inline double orthonormality_defect(const ExcitonBasis& basis) {
    const int n = basis.n();
    const Eigen::MatrixXd d = basis.eigenvectors.transpose() * basis.eigenvectors -
                              Eigen::MatrixXd::Identity(n, n);
    return d.cwiseAbs().maxCoeff();
}

struct PointOutcome {
    RunRecord record;
};

} // namespace detail

// Execute one scenario (all sweep points, each v_abs) into `out_dir`.
// Sweep points run in parallel up to `parallelism` workers; file contents are
// deterministic because every point's pipeline is independent and evaluation
// order inside a point is fixed.
inline RunManifest run(const ScenarioSpec& base_spec, const std::filesystem::path& out_dir,
                       int parallelism = 1) {
    namespace fs = std::filesystem;
    if (parallelism < 1) parallelism = 1;
    fs::create_directories(out_dir);

    std::vector<double> sweep_values;
    std::string sweep_parameter;
    if (base_spec.sweep) {
        sweep_parameter = base_spec.sweep->parameter;
        sweep_values = base_spec.sweep->values;
    } else {
        sweep_values.push_back(0.0); // single unnamed point
    }
    const int n_points = static_cast<int>(sweep_values.size());

    RunManifest manifest;
    manifest.scenario = base_spec.name;
    manifest.version = AGGSPEC_VERSION;
    manifest.out_dir = out_dir.string();
    manifest.runs.resize(static_cast<std::size_t>(n_points));

    auto run_point = [&](int index) {
        RunRecord rec;
        rec.index = index;
        const auto t0 = std::chrono::steady_clock::now();

        ScenarioSpec spec = base_spec;
        spec.sweep.reset();
        char labelbuf[96];
        if (!sweep_parameter.empty()) {
            apply_parameter(spec, sweep_parameter, sweep_values[static_cast<std::size_t>(index)]);
            rec.parameters[sweep_parameter] = sweep_values[static_cast<std::size_t>(index)];
            std::snprintf(labelbuf, sizeof labelbuf, "point%02d_%s_%s", index,
                          detail::short_parameter(sweep_parameter).c_str(),
                          detail::sanitize_number(sweep_values[static_cast<std::size_t>(index)]).c_str());
        } else {
            std::snprintf(labelbuf, sizeof labelbuf, "point%02d", index);
        }
        rec.label = labelbuf;

        auto out_path = [&](const std::string& what) {
            return out_dir / (base_spec.name + "__" + rec.label + "__" + what + ".dat");
        };
        auto emit = [&](const std::string& what, auto&& writer) {
            const fs::path p = out_path(what);
            std::ofstream os(p);
            if (!os) throw io_error("cannot open output file " + p.string());
            writer(os);
            os.flush();
            if (!os || fs::file_size(p) == 0)
                throw io_error("failed to write output file " + p.string());
            rec.outputs.push_back(p.string());
        };
        auto check = [&](const std::string& name, double value, double threshold) {
            rec.checks.push_back({name, value, threshold, value <= threshold});
        };

        try {
            const AggregateGeometry geom = spec.build_geometry();
            check_geometry(geom);
            const CouplingMatrix coupling = coupling_matrix(geom);
            const ExcitonBasis basis = diagonalize(coupling, geom);

            const double scale = std::max(1.0, coupling.values.cwiseAbs().maxCoeff());
            check("eigen_residual", detail::eigen_residual(coupling, basis), 1e-10 * scale);
            check("orthonormality", detail::orthonormality_defect(basis), 1e-10);
            check("trace_sum", std::abs(basis.eigenvalues.sum()), 1e-10 * scale);
            if ((geom.kind == GeometryKind::ring ||
                 (geom.kind == GeometryKind::ellipse && geom.params.flattening == 0.0)) &&
                geom.size() % 2 == 0) {
                Eigen::VectorXd analytic =
                    ring_eigenvalues_analytic(coupling.values.row(0).transpose());
                Eigen::VectorXd numeric = basis.eigenvalues;
                std::sort(analytic.data(), analytic.data() + analytic.size());
                check("circulant_eigenvalues", (analytic - numeric).cwiseAbs().maxCoeff(),
                      1e-10 * scale);
            }

            const Polarization& pol = spec.spectra.polarization;
            if (spec.spectra.out_geometry)
                emit("geometry", [&](std::ostream& os) { write_geometry_table(os, geom); });
            if (spec.spectra.out_sticks) {
                const SpectrumResult sticks = stick_spectrum(basis, geom, pol);
                emit("sticks",
                     [&](std::ostream& os) { detail::write_sticks_file(os, sticks, spec); });
            }
            if (spec.spectra.out_wavefunctions)
                emit("wavefunctions", [&](std::ostream& os) { export_wavefunctions(basis, os); });

            if (spec.spectra.out_ces || spec.spectra.out_monomer) {
                const MonomerGreen green = spec.build_green();
                if (spec.spectra.out_monomer) {
                    const SpectrumResult mono = monomer_spectrum(geom, pol, green);
                    emit("monomer", [&](std::ostream& os) {
                        detail::write_continuous_file(os, mono, "monomer", spec);
                    });
                    const double mass = trapezoid(mono.continuous->energy, mono.continuous->value);
                    check("monomer_weight",
                          std::abs(mass / (std::numbers::pi * mono.total_raw_strength) - 1.0),
                          0.01);
                }
                if (spec.spectra.out_ces) {
                    for (double v_abs : spec.spectra.v_abs) {
                        const SpectrumResult ces = ces_spectrum(basis, geom, pol, green, v_abs);
                        emit("ces_V" + detail::sanitize_number(v_abs), [&](std::ostream& os) {
                            detail::write_continuous_file(os, ces, "CES", spec);
                        });
                        const double mass =
                            trapezoid(ces.continuous->energy, ces.continuous->value);
                        double unresolved = 0.0;
                        for (const auto& so : ces.split_off)
                            if (!so.resolved) unresolved += so.weight_fraction;
                        char name[64];
                        std::snprintf(name, sizeof name, "ces_sum_rule_V%g", v_abs);
                        check(name,
                              std::abs(mass / std::numbers::pi + unresolved - 1.0), 0.01);
                    }
                }
            }
            rec.ok = true;
        } catch (const std::exception& e) {
            rec.ok = false;
            rec.error = e.what();
        }

        rec.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        manifest.runs[static_cast<std::size_t>(index)] = std::move(rec);
    };

    if (parallelism == 1 || n_points == 1) {
        for (int i = 0; i < n_points; ++i) run_point(i);
    } else {
        std::atomic<int> next{0};
        const int workers = std::min(parallelism, n_points);
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (int i = next.fetch_add(1); i < n_points; i = next.fetch_add(1)) run_point(i);
            });
        for (auto& t : pool) t.join();
    }

    // manifest file
    nlohmann::json j;
    j["scenario"] = manifest.scenario;
    j["version"] = manifest.version;
    j["out_dir"] = manifest.out_dir;
    j["runs"] = nlohmann::json::array();
    for (const auto& r : manifest.runs) {
        nlohmann::json jr;
        jr["index"] = r.index;
        jr["label"] = r.label;
        jr["ok"] = r.ok;
        if (!r.error.empty()) jr["error"] = r.error;
        jr["wall_ms"] = r.wall_ms;
        jr["parameters"] = r.parameters;
        jr["outputs"] = r.outputs;
        jr["checks"] = nlohmann::json::array();
        for (const auto& c : r.checks)
            jr["checks"].push_back({{"name", c.name},
                                    {"value", c.value},
                                    {"threshold", c.threshold},
                                    {"pass", c.pass}});
        j["runs"].push_back(std::move(jr));
    }
    const fs::path mpath = out_dir / "manifest.json";
    std::ofstream ms(mpath);
    if (!ms) throw io_error("cannot write manifest " + mpath.string());
    ms << j.dump(2) << "\n";
    manifest.manifest_path = mpath.string();
    return manifest;
}

} // namespace aggspec
