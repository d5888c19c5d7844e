#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "aggspec/errors.hpp"
#include "aggspec/excitonics.hpp"
#include "aggspec/geometry.hpp"
#include "aggspec/grid.hpp"
#include "aggspec/lineshape.hpp"

namespace aggspec {

enum class LineshapeKind { electronic, vibronic, tabulated };

struct GeometryBlock {
    GeometryKind kind = GeometryKind::chain;
    int n = 0;
    int vertex = 0;
    double angle_deg = 0.0;
    double flattening = 0.0;
    double tangent_angle_deg = 0.0;
    double polar_angle_deg = 90.0;
};

struct LineshapeBlock {
    LineshapeKind kind = LineshapeKind::vibronic;
    LineshapeModel model;     // vibronic parameters
    double epsilon = 17500.0; // electronic
    double delta = 1.0;       // electronic
    std::string file;         // tabulated
};

struct SpectraBlock {
    Polarization polarization = Polarization::isotropic();
    std::vector<double> v_abs{150.0, 300.0, 450.0};
    double grid_min = -20000.0;
    double grid_max = 55000.0;
    int grid_points = 5001;
    bool out_sticks = true;
    bool out_ces = true;
    bool out_monomer = true;
    bool out_wavefunctions = false;
    bool out_geometry = true;

    EnergyGrid grid() const { return EnergyGrid(grid_min, grid_max, grid_points); }
};

struct SweepBlock {
    std::string parameter; // e.g. "geometry.angle_deg"
    std::vector<double> values;
};

struct ScenarioSpec {
    std::string name = "scenario";
    GeometryBlock geometry;
    DipoleSpec dipole;
    LineshapeBlock lineshape;
    SpectraBlock spectra;
    std::optional<SweepBlock> sweep;

    AggregateGeometry build_geometry() const {
        switch (geometry.kind) {
            case GeometryKind::chain:
                return build_chain(geometry.n, dipole.direction);
            case GeometryKind::bent_chain:
                return build_bent_chain(geometry.n, geometry.vertex, geometry.angle_deg, dipole);
            case GeometryKind::ring:
                return build_ring(geometry.n, geometry.tangent_angle_deg,
                                  geometry.polar_angle_deg);
            case GeometryKind::ellipse:
                return build_ellipse(geometry.n, geometry.flattening,
                                     geometry.tangent_angle_deg, geometry.polar_angle_deg);
            default:
                throw validation_error("scenario geometry kind not buildable");
        }
    }

    MonomerGreen build_green() const {
        const EnergyGrid grid = spectra.grid();
        switch (lineshape.kind) {
            case LineshapeKind::electronic:
                return electronic_green(lineshape.epsilon, lineshape.delta, grid);
            case LineshapeKind::vibronic:
                return vibronic_green(lineshape.model, grid);
            case LineshapeKind::tabulated: {
                std::ifstream in(lineshape.file);
                if (!in) throw io_error("cannot open lineshape table: " + lineshape.file);
                return load_tabulated_lineshape(read_lineshape_table(in), grid);
            }
        }
        throw validation_error("unknown lineshape kind");
    }
};

namespace detail {

struct KeyValue {
    std::string value;
    int line = 0;
    bool used = false;
};

using Section = std::map<std::string, KeyValue>;

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double to_double(const KeyValue& kv, const std::string& key) {
    std::istringstream ss(kv.value);
    double x;
    if (!(ss >> x) || !(ss >> std::ws).eof())
        throw parse_error(kv.line, "key '" + key + "' expects a number, got '" + kv.value + "'");
    return x;
}

inline int to_int(const KeyValue& kv, const std::string& key) {
    const double x = to_double(kv, key);
    const int i = static_cast<int>(std::lround(x));
    if (std::abs(x - i) > 1e-9)
        throw parse_error(kv.line, "key '" + key + "' expects an integer");
    return i;
}

inline std::vector<double> to_list(const KeyValue& kv, const std::string& key) {
    std::istringstream ss(kv.value);
    std::vector<double> out;
    double x;
    while (ss >> x) out.push_back(x);
    if (out.empty() || !(ss >> std::ws).eof())
        throw parse_error(kv.line, "key '" + key + "' expects a list of numbers");
    return out;
}

class Document {
  public:
    explicit Document(const std::string& text) {
        std::istringstream in(text);
        std::string raw;
        int lineno = 0;
        std::string section;
        while (std::getline(in, raw)) {
            ++lineno;
            const auto hash = raw.find('#');
            if (hash != std::string::npos) raw.erase(hash);
            const std::string line = trim(raw);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw parse_error(lineno, "malformed section header '" + line + "'");
                section = trim(line.substr(1, line.size() - 2));
                if (!sections_.count(section)) sections_[section] = {};
                section_lines_[section] = lineno;
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw parse_error(lineno, "expected 'key = value', got '" + line + "'");
            if (section.empty())
                throw parse_error(lineno, "key outside of any [section]");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty() || value.empty())
                throw parse_error(lineno, "empty key or value");
            auto& sec = sections_[section];
            if (sec.count(key)) throw parse_error(lineno, "duplicate key '" + key + "'");
            sec[key] = KeyValue{value, lineno, false};
        }
    }

    bool has_section(const std::string& name) const { return sections_.count(name) > 0; }

    const KeyValue* find(const std::string& section, const std::string& key) {
        auto s = sections_.find(section);
        if (s == sections_.end()) return nullptr;
        auto k = s->second.find(key);
        if (k == s->second.end()) return nullptr;
        k->second.used = true;
        return &k->second;
    }

    // every section must be known and every key consumed
    void finish(const std::vector<std::string>& known_sections) const {
        for (const auto& [name, sec] : sections_) {
            bool known = false;
            for (const auto& k : known_sections) known |= (k == name);
            if (!known)
                throw parse_error(section_lines_.at(name), "unknown section [" + name + "]");
            for (const auto& [key, kv] : sec)
                if (!kv.used)
                    throw parse_error(kv.line, "unknown key '" + key + "' in [" + name + "]");
        }
    }

  private:
    std::map<std::string, Section> sections_;
    std::map<std::string, int> section_lines_;
};

inline GeometryKind parse_geometry_kind(const KeyValue& kv) {
    if (kv.value == "chain") return GeometryKind::chain;
    if (kv.value == "bent_chain") return GeometryKind::bent_chain;
    if (kv.value == "ring") return GeometryKind::ring;
    if (kv.value == "ellipse") return GeometryKind::ellipse;
    throw parse_error(kv.line, "unknown geometry kind '" + kv.value + "'");
}

} // namespace detail

// Scalar parameters a sweep may target.
inline const std::vector<std::string>& sweepable_parameters() {
    static const std::vector<std::string> params = {
        "geometry.n",           "geometry.vertex",        "geometry.angle_deg",
        "geometry.flattening",  "geometry.tangent_angle_deg", "geometry.polar_angle_deg",
        "lineshape.e00",        "lineshape.vib_spacing",  "lineshape.huang_rhys",
        "lineshape.n_peaks",    "lineshape.width",        "lineshape.epsilon",
        "lineshape.delta"};
    return params;
}

// Set one scalar parameter by its dotted path (used by sweeps).
inline void apply_parameter(ScenarioSpec& spec, const std::string& parameter, double value) {
    auto as_int = [&](int lo) {
        const int i = static_cast<int>(std::lround(value));
        if (std::abs(value - i) > 1e-9 || i < lo)
            throw validation_error("sweep value " + std::to_string(value) +
                                   " invalid for parameter " + parameter);
        return i;
    };
    if (parameter == "geometry.n") spec.geometry.n = as_int(2);
    else if (parameter == "geometry.vertex") spec.geometry.vertex = as_int(2);
    else if (parameter == "geometry.angle_deg") spec.geometry.angle_deg = value;
    else if (parameter == "geometry.flattening") spec.geometry.flattening = value;
    else if (parameter == "geometry.tangent_angle_deg") spec.geometry.tangent_angle_deg = value;
    else if (parameter == "geometry.polar_angle_deg") spec.geometry.polar_angle_deg = value;
    else if (parameter == "lineshape.e00") spec.lineshape.model.e00 = value;
    else if (parameter == "lineshape.vib_spacing") spec.lineshape.model.vib_spacing = value;
    else if (parameter == "lineshape.huang_rhys") spec.lineshape.model.huang_rhys = value;
    else if (parameter == "lineshape.n_peaks") spec.lineshape.model.n_peaks = as_int(1);
    else if (parameter == "lineshape.width") spec.lineshape.model.width = value;
    else if (parameter == "lineshape.epsilon") spec.lineshape.epsilon = value;
    else if (parameter == "lineshape.delta") spec.lineshape.delta = value;
    else
        throw validation_error("unknown sweep parameter '" + parameter + "'");
}

// Parse and fully validate a scenario document (line-oriented sections of
// key = value pairs). Unknown sections or keys are hard errors.
inline ScenarioSpec parse_scenario(const std::string& text) {
    detail::Document doc(text);

    std::vector<std::string> missing;
    if (!doc.has_section("geometry")) missing.push_back("geometry");
    ScenarioSpec spec;

    if (doc.has_section("scenario"))
        if (const auto* kv = doc.find("scenario", "name")) spec.name = kv->value;

    const detail::KeyValue* kind_kv = doc.find("geometry", "kind");
    const detail::KeyValue* n_kv = doc.find("geometry", "n");
    if (doc.has_section("geometry")) {
        if (!kind_kv) throw validation_error("[geometry] requires key 'kind'");
        spec.geometry.kind = detail::parse_geometry_kind(*kind_kv);
        if (!n_kv) throw validation_error("[geometry] requires key 'n'");
        spec.geometry.n = detail::to_int(*n_kv, "n");
    }

    const bool is_chain = spec.geometry.kind == GeometryKind::chain ||
                          spec.geometry.kind == GeometryKind::bent_chain;
    if (is_chain && !doc.has_section("dipole")) missing.push_back("dipole");
    if (!missing.empty()) {
        std::string msg = "missing required section(s):";
        for (const auto& m : missing) msg += " [" + m + "]";
        throw validation_error(msg);
    }

    auto forbid = [&](const char* key, const char* why) {
        if (const auto* kv = doc.find("geometry", key))
            throw parse_error(kv->line, std::string("key '") + key + "' is only valid for " + why);
    };
    switch (spec.geometry.kind) {
        case GeometryKind::chain:
            forbid("vertex", "bent_chain");
            forbid("angle_deg", "bent_chain");
            forbid("flattening", "ellipse");
            forbid("tangent_angle_deg", "ring/ellipse");
            forbid("polar_angle_deg", "ring/ellipse");
            break;
        case GeometryKind::bent_chain:
            if (const auto* kv = doc.find("geometry", "vertex"))
                spec.geometry.vertex = detail::to_int(*kv, "vertex");
            else
                throw validation_error("[geometry] bent_chain requires key 'vertex'");
            if (const auto* kv = doc.find("geometry", "angle_deg"))
                spec.geometry.angle_deg = detail::to_double(*kv, "angle_deg");
            else
                throw validation_error("[geometry] bent_chain requires key 'angle_deg'");
            forbid("flattening", "ellipse");
            forbid("tangent_angle_deg", "ring/ellipse");
            forbid("polar_angle_deg", "ring/ellipse");
            break;
        case GeometryKind::ring:
        case GeometryKind::ellipse:
            if (const auto* kv = doc.find("geometry", "tangent_angle_deg"))
                spec.geometry.tangent_angle_deg = detail::to_double(*kv, "tangent_angle_deg");
            if (const auto* kv = doc.find("geometry", "polar_angle_deg"))
                spec.geometry.polar_angle_deg = detail::to_double(*kv, "polar_angle_deg");
            if (spec.geometry.kind == GeometryKind::ellipse) {
                if (const auto* kv = doc.find("geometry", "flattening"))
                    spec.geometry.flattening = detail::to_double(*kv, "flattening");
            } else {
                forbid("flattening", "ellipse");
            }
            forbid("vertex", "bent_chain");
            forbid("angle_deg", "bent_chain");
            if (doc.has_section("dipole"))
                throw validation_error(
                    "ring/ellipse dipoles are set by tangent/polar angles; remove [dipole]");
            break;
        default:
            break;
    }

    if (doc.has_section("dipole")) {
        if (const auto* kv = doc.find("dipole", "frame")) {
            if (kv->value == "global") spec.dipole.frame = DipoleFrame::global;
            else if (kv->value == "segment_local") spec.dipole.frame = DipoleFrame::segment_local;
            else throw parse_error(kv->line, "dipole frame must be global or segment_local");
        }
        if (const auto* kv = doc.find("dipole", "direction")) {
            const auto v = detail::to_list(*kv, "direction");
            if (v.size() != 3) throw parse_error(kv->line, "dipole direction needs 3 components");
            spec.dipole.direction = Vec3(v[0], v[1], v[2]);
            if (spec.dipole.direction.norm() < 1e-12)
                throw parse_error(kv->line, "dipole direction must be non-zero");
        } else {
            throw validation_error("[dipole] requires key 'direction'");
        }
    }

    if (doc.has_section("lineshape")) {
        if (const auto* kv = doc.find("lineshape", "kind")) {
            if (kv->value == "electronic") spec.lineshape.kind = LineshapeKind::electronic;
            else if (kv->value == "vibronic") spec.lineshape.kind = LineshapeKind::vibronic;
            else if (kv->value == "tabulated") spec.lineshape.kind = LineshapeKind::tabulated;
            else throw parse_error(kv->line, "unknown lineshape kind '" + kv->value + "'");
        }
        if (const auto* kv = doc.find("lineshape", "e00"))
            spec.lineshape.model.e00 = detail::to_double(*kv, "e00");
        if (const auto* kv = doc.find("lineshape", "vib_spacing"))
            spec.lineshape.model.vib_spacing = detail::to_double(*kv, "vib_spacing");
        if (const auto* kv = doc.find("lineshape", "huang_rhys"))
            spec.lineshape.model.huang_rhys = detail::to_double(*kv, "huang_rhys");
        if (const auto* kv = doc.find("lineshape", "n_peaks"))
            spec.lineshape.model.n_peaks = detail::to_int(*kv, "n_peaks");
        if (const auto* kv = doc.find("lineshape", "width"))
            spec.lineshape.model.width = detail::to_double(*kv, "width");
        if (const auto* kv = doc.find("lineshape", "broadening")) {
            if (kv->value == "lorentzian")
                spec.lineshape.model.broadening = BroadeningKind::lorentzian;
            else if (kv->value == "gaussian")
                spec.lineshape.model.broadening = BroadeningKind::gaussian;
            else
                throw parse_error(kv->line, "broadening must be lorentzian or gaussian");
        }
        if (const auto* kv = doc.find("lineshape", "epsilon"))
            spec.lineshape.epsilon = detail::to_double(*kv, "epsilon");
        if (const auto* kv = doc.find("lineshape", "delta"))
            spec.lineshape.delta = detail::to_double(*kv, "delta");
        if (const auto* kv = doc.find("lineshape", "file")) spec.lineshape.file = kv->value;
        if (spec.lineshape.kind == LineshapeKind::tabulated && spec.lineshape.file.empty())
            throw validation_error("tabulated lineshape requires key 'file'");
    }

    if (doc.has_section("spectra")) {
        if (const auto* kv = doc.find("spectra", "polarization")) {
            std::istringstream ss(kv->value);
            std::string mode;
            ss >> mode;
            if (mode == "isotropic") {
                spec.spectra.polarization = Polarization::isotropic();
            } else if (mode == "fixed") {
                double x, y, z;
                if (!(ss >> x >> y >> z))
                    throw parse_error(kv->line, "fixed polarization needs 3 components");
                spec.spectra.polarization = Polarization::along(Vec3(x, y, z));
            } else {
                throw parse_error(kv->line, "polarization must be isotropic or fixed ex ey ez");
            }
        }
        if (const auto* kv = doc.find("spectra", "v_abs")) {
            spec.spectra.v_abs = detail::to_list(*kv, "v_abs");
            for (double v : spec.spectra.v_abs)
                if (v <= 0.0) throw parse_error(kv->line, "v_abs values must be positive");
        }
        if (const auto* kv = doc.find("spectra", "grid_min"))
            spec.spectra.grid_min = detail::to_double(*kv, "grid_min");
        if (const auto* kv = doc.find("spectra", "grid_max"))
            spec.spectra.grid_max = detail::to_double(*kv, "grid_max");
        if (const auto* kv = doc.find("spectra", "grid_points"))
            spec.spectra.grid_points = detail::to_int(*kv, "grid_points");
        if (const auto* kv = doc.find("spectra", "outputs")) {
            spec.spectra.out_sticks = spec.spectra.out_ces = spec.spectra.out_monomer = false;
            spec.spectra.out_wavefunctions = spec.spectra.out_geometry = false;
            std::istringstream ss(kv->value);
            std::string word;
            while (ss >> word) {
                if (word == "sticks") spec.spectra.out_sticks = true;
                else if (word == "ces") spec.spectra.out_ces = true;
                else if (word == "monomer") spec.spectra.out_monomer = true;
                else if (word == "wavefunctions") spec.spectra.out_wavefunctions = true;
                else if (word == "geometry") spec.spectra.out_geometry = true;
                else throw parse_error(kv->line, "unknown output '" + word + "'");
            }
        }
        (void)spec.spectra.grid(); // validates bounds and point count
    }

    if (doc.has_section("sweep")) {
        SweepBlock sweep;
        if (const auto* kv = doc.find("sweep", "parameter")) sweep.parameter = kv->value;
        else throw validation_error("[sweep] requires key 'parameter'");
        if (const auto* kv = doc.find("sweep", "values")) sweep.values = detail::to_list(*kv, "values");
        else throw validation_error("[sweep] requires key 'values'");

        bool known = false;
        for (const auto& p : sweepable_parameters()) known |= (p == sweep.parameter);
        if (!known)
            throw validation_error("sweep parameter '" + sweep.parameter + "' is not sweepable");
        // the parameter must be meaningful for this scenario's geometry kind
        ScenarioSpec probe = spec;
        apply_parameter(probe, sweep.parameter, sweep.values.front());
        spec.sweep = sweep;
    }

    doc.finish({"scenario", "geometry", "dipole", "lineshape", "spectra", "sweep"});

    // structural validation of the base point
    if (spec.geometry.kind == GeometryKind::bent_chain &&
        (spec.geometry.vertex < 2 || spec.geometry.vertex > spec.geometry.n - 1))
        throw validation_error("bend vertex must satisfy 2 <= vertex <= N-1");
    if (spec.geometry.kind == GeometryKind::bent_chain &&
        (spec.geometry.angle_deg < 0.0 || spec.geometry.angle_deg >= 180.0))
        throw validation_error("bend angle must satisfy 0 <= angle < 180");
    if (spec.geometry.kind == GeometryKind::ellipse &&
        (spec.geometry.flattening < 0.0 || spec.geometry.flattening >= 1.0))
        throw validation_error("flattening must satisfy 0 <= f < 1");
    if (spec.geometry.n < 2) throw validation_error("geometry needs n >= 2");

    return spec;
}

// Built-in scenario documents for the bent-chain, ring and ellipse studies.
inline const std::vector<std::pair<std::string, std::string>>& preset_library() {
    static const std::vector<std::pair<std::string, std::string>> presets = {
        {"fig1",
         "[scenario]\nname = fig1\n\n"
         "[geometry]\nkind = bent_chain\nn = 19\nvertex = 12\nangle_deg = 0\n\n"
         "[dipole]\nframe = global\ndirection = 0 0 1\n\n"
         "[spectra]\nv_abs = 150 300 450\noutputs = sticks ces monomer wavefunctions geometry\n\n"
         "[sweep]\nparameter = geometry.angle_deg\nvalues = 0 120 135\n"},
        {"fig1c",
         "[scenario]\nname = fig1c\n\n"
         "[geometry]\nkind = bent_chain\nn = 19\nvertex = 12\nangle_deg = 135\n\n"
         "[dipole]\nframe = global\ndirection = 0 0 1\n\n"
         "[spectra]\nv_abs = 150 300 450\noutputs = sticks ces monomer wavefunctions geometry\n"},
        {"fig3a",
         "[scenario]\nname = fig3a\n\n"
         "[geometry]\nkind = bent_chain\nn = 19\nvertex = 12\nangle_deg = 135\n\n"
         "[dipole]\nframe = segment_local\ndirection = 0 0.7071067811865475 0.7071067811865475\n\n"
         "[spectra]\nv_abs = 150 300 450\noutputs = sticks ces monomer wavefunctions geometry\n"},
        {"fig3b",
         "[scenario]\nname = fig3b\n\n"
         "[geometry]\nkind = bent_chain\nn = 19\nvertex = 12\nangle_deg = 135\n\n"
         "[dipole]\nframe = segment_local\ndirection = 1 0 0\n\n"
         "[spectra]\nv_abs = 150 300 450\noutputs = sticks ces monomer wavefunctions geometry\n"},
        {"fig4",
         "[scenario]\nname = fig4\n\n"
         "[geometry]\nkind = ring\nn = 16\ntangent_angle_deg = 0\npolar_angle_deg = 90\n\n"
         "[spectra]\nv_abs = 150 300 450\noutputs = sticks ces monomer geometry\n\n"
         "[sweep]\nparameter = geometry.tangent_angle_deg\nvalues = 0 48 53 54 55 90\n"},
        {"fig5",
         "[scenario]\nname = fig5\n\n"
         "[geometry]\nkind = ellipse\nn = 16\nflattening = 0\ntangent_angle_deg = 0\npolar_angle_deg = 90\n\n"
         "[spectra]\nv_abs = 50 100 150\noutputs = sticks ces monomer geometry\n\n"
         "[sweep]\nparameter = geometry.flattening\nvalues = 0 0.7\n"},
        {"fig6",
         "[scenario]\nname = fig6\n\n"
         "[geometry]\nkind = ellipse\nn = 16\nflattening = 0\ntangent_angle_deg = 54\npolar_angle_deg = 90\n\n"
         "[spectra]\nv_abs = 150 300 450\noutputs = sticks ces monomer wavefunctions geometry\n\n"
         "[sweep]\nparameter = geometry.flattening\nvalues = 0 0.2 0.4 0.7\n"},
        {"fig7",
         "[scenario]\nname = fig7\n\n"
         // polar angle acos(1/sqrt(3)): equal x,y,z dipole components
         "[geometry]\nkind = ellipse\nn = 16\nflattening = 0\ntangent_angle_deg = 45\npolar_angle_deg = 54.7356\n\n"
         "[spectra]\nv_abs = 750 1500 2250\noutputs = sticks ces monomer wavefunctions geometry\n\n"
         "[sweep]\nparameter = geometry.flattening\nvalues = 0 0.2 0.4\n"},
    };
    return presets;
}

inline const std::string* find_preset(const std::string& name) {
    for (const auto& [n, text] : preset_library())
        if (n == name) return &text;
    return nullptr;
}

} // namespace aggspec
