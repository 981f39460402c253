#include "bilat/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "bilat/errors.hpp"

namespace bilat::config {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_real(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

bool parse_real(const std::string& text, double& out) {
    std::string_view body = text;
    if (!body.empty() && body.front() == '+') body.remove_prefix(1);
    if (body.empty()) return false;
    const auto res = std::from_chars(body.data(), body.data() + body.size(), out);
    return res.ec == std::errc() && res.ptr == body.data() + body.size();
}

struct Bounds {
    double lo = -kInf;
    double hi = kInf;
    bool lo_open = false;
    bool hi_open = false;
};

Bounds positive() { return {0.0, kInf, true, false}; }
Bounds at_least(double lo) { return {lo, kInf, false, false}; }
Bounds between(double lo, double hi) { return {lo, hi, false, false}; }
Bounds open_between(double lo, double hi) { return {lo, hi, true, true}; }
Bounds unbounded() { return {}; }

bool inside(const Bounds& b, double v) {
    if (!std::isfinite(v)) return false;
    if (b.lo_open ? !(v > b.lo) : !(v >= b.lo)) return false;
    if (b.hi_open ? !(v < b.hi) : !(v <= b.hi)) return false;
    return true;
}

std::string describe(const Bounds& b) {
    if (b.lo == -kInf && b.hi == kInf) return "a finite number";
    if (b.hi == kInf) return (b.lo_open ? "> " : ">= ") + format_real(b.lo);
    if (b.lo == -kInf) return (b.hi_open ? "< " : "<= ") + format_real(b.hi);
    return std::string("in ") + (b.lo_open ? '(' : '[') + format_real(b.lo) + ", " +
           format_real(b.hi) + (b.hi_open ? ')' : ']');
}

// One schema row: documentation, bounds, and typed accessors. `set` returns
// an error description ("must be > 0 (got -1)") or an empty string; `get`
// returns the canonical text form used by dump_config.
struct KeyEntry {
    std::string section;
    std::string key;
    std::string doc;
    std::function<std::string(const RunConfig&)> get;
    std::function<std::string(RunConfig&, const std::string&)> set;
};

using Schema = std::vector<KeyEntry>;

template <typename Ref>  // Ref: double& (*)(RunConfig&)
void add_real(Schema& t, const char* section, const char* key, Ref ref, const char* doc,
              Bounds bounds) {
    KeyEntry e;
    e.section = section;
    e.key = key;
    e.doc = doc;
    e.get = [ref](const RunConfig& c) { return format_real(ref(const_cast<RunConfig&>(c))); };
    e.set = [ref, bounds](RunConfig& c, const std::string& text) -> std::string {
        double v = 0.0;
        if (!parse_real(text, v)) return "expects a number (got '" + text + "')";
        if (!inside(bounds, v)) return "must be " + describe(bounds) + " (got " + text + ")";
        ref(c) = v;
        return {};
    };
    t.push_back(std::move(e));
}

template <typename Ref>  // Ref: int& (*)(RunConfig&)
void add_int(Schema& t, const char* section, const char* key, Ref ref, const char* doc,
             long lo, long hi) {
    KeyEntry e;
    e.section = section;
    e.key = key;
    e.doc = doc;
    e.get = [ref](const RunConfig& c) {
        return std::to_string(ref(const_cast<RunConfig&>(c)));
    };
    e.set = [ref, lo, hi](RunConfig& c, const std::string& text) -> std::string {
        long v = 0;
        const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
        if (res.ec != std::errc() || res.ptr != text.data() + text.size())
            return "expects an integer (got '" + text + "')";
        if (v < lo || v > hi)
            return "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "] (got " +
                   text + ")";
        ref(c) = int(v);
        return {};
    };
    t.push_back(std::move(e));
}

void add_seed(Schema& t, const char* section, const char* key, const char* doc) {
    KeyEntry e;
    e.section = section;
    e.key = key;
    e.doc = doc;
    e.get = [](const RunConfig& c) { return std::to_string(c.run.seed); };
    e.set = [](RunConfig& c, const std::string& text) -> std::string {
        std::uint64_t v = 0;
        const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
        if (res.ec != std::errc() || res.ptr != text.data() + text.size())
            return "expects an unsigned integer (got '" + text + "')";
        c.run.seed = v;
        return {};
    };
    t.push_back(std::move(e));
}

template <typename Ref>  // Ref: std::string& (*)(RunConfig&)
void add_choice(Schema& t, const char* section, const char* key, Ref ref, const char* doc,
                std::vector<std::string> choices) {
    KeyEntry e;
    e.section = section;
    e.key = key;
    e.doc = doc;
    e.get = [ref](const RunConfig& c) -> std::string {
        return ref(const_cast<RunConfig&>(c));
    };
    e.set = [ref, choices](RunConfig& c, const std::string& text) -> std::string {
        for (const std::string& choice : choices) {
            if (text == choice) {
                ref(c) = text;
                return {};
            }
        }
        std::string allowed;
        for (const std::string& choice : choices) {
            if (!allowed.empty()) allowed += ", ";
            allowed += choice;
        }
        return "must be one of {" + allowed + "} (got '" + text + "')";
    };
    t.push_back(std::move(e));
}

template <typename Ref>
void add_text(Schema& t, const char* section, const char* key, Ref ref, const char* doc) {
    KeyEntry e;
    e.section = section;
    e.key = key;
    e.doc = doc;
    e.get = [ref](const RunConfig& c) -> std::string {
        return ref(const_cast<RunConfig&>(c));
    };
    e.set = [ref](RunConfig& c, const std::string& text) -> std::string {
        ref(c) = text;
        return {};
    };
    t.push_back(std::move(e));
}

Schema build_schema() {
    Schema t;

    add_seed(t, "run", "seed",
             "seed for every stochastic path; identical configs and seeds give "
             "byte-identical artifacts");

    add_real(t, "doe", "L_um", [](RunConfig& c) -> double& { return c.doe.L_um; },
             "triangle side of the two-level phase mask, micrometers", positive());
    add_real(t, "doe", "depth_nm", [](RunConfig& c) -> double& { return c.doe.depth_nm; },
             "etch depth between the raised and recessed triangles, nanometers", positive());
    add_int(t, "doe", "grid", [](RunConfig& c) -> int& { return c.doe.grid; },
            "samples per axis of the synthesized mask (an even multiple of grid cells, at "
            "least 16 per cell)",
            16, 8192);
    add_int(t, "doe", "cells", [](RunConfig& c) -> int& { return c.doe.cells; },
            "unit cells spanned per axis by the synthesized mask", 1, 64);
    add_real(t, "doe", "probe_wavelength_nm",
             [](RunConfig& c) -> double& { return c.doe.probe_wavelength_nm; },
             "wavelength at which diffraction efficiencies are tabulated, nanometers",
             positive());
    add_real(t, "doe", "wavelength_red_nm",
             [](RunConfig& c) -> double& { return c.doe.wavelength_red_nm; },
             "short (red) operating wavelength, nanometers", positive());
    add_real(t, "doe", "wavelength_ir_nm",
             [](RunConfig& c) -> double& { return c.doe.wavelength_ir_nm; },
             "long (infrared) operating wavelength, nanometers", positive());

    add_real(t, "lens", "collimator_focal_mm",
             [](RunConfig& c) -> double& { return c.lens.collimator_focal_mm; },
             "focal length of the ideal collimating lens, millimeters", positive());
    add_real(t, "lens", "weak_focal_mm",
             [](RunConfig& c) -> double& { return c.lens.weak_focal_mm; },
             "starting focal length of the weak plano-convex corrector, millimeters",
             positive());
    add_real(t, "lens", "asphere_focal_mm",
             [](RunConfig& c) -> double& { return c.lens.asphere_focal_mm; },
             "focal length of the stigmatic asphere, millimeters", positive());
    add_real(t, "lens", "singlet_focal_mm",
             [](RunConfig& c) -> double& { return c.lens.singlet_focal_mm; },
             "focal length of the spherical singlet used as the comparison objective, "
             "millimeters",
             positive());
    add_real(t, "lens", "singlet_thickness_mm",
             [](RunConfig& c) -> double& { return c.lens.singlet_thickness_mm; },
             "center thickness of the comparison singlet, millimeters", positive());
    add_real(t, "lens", "balance_focal_min_mm",
             [](RunConfig& c) -> double& { return c.lens.balance_focal_min_mm; },
             "lower bound of the corrector focal-length search, millimeters", positive());
    add_real(t, "lens", "balance_focal_max_mm",
             [](RunConfig& c) -> double& { return c.lens.balance_focal_max_mm; },
             "upper bound of the corrector focal-length search, millimeters", positive());
    add_real(t, "lens", "spacing_min_mm",
             [](RunConfig& c) -> double& { return c.lens.spacing_min_mm; },
             "lower bound of the corrector-to-asphere spacing search, millimeters",
             positive());
    add_real(t, "lens", "spacing_max_mm",
             [](RunConfig& c) -> double& { return c.lens.spacing_max_mm; },
             "upper bound of the corrector-to-asphere spacing search, millimeters",
             positive());
    add_real(t, "lens", "target_um", [](RunConfig& c) -> double& { return c.lens.target_um; },
             "focal-split magnitude the balancing step aims under, micrometers", positive());
    add_text(t, "lens", "prescription",
             [](RunConfig& c) -> std::string& { return c.lens.prescription; },
             "optional path to a surface-by-surface prescription evaluated alongside the "
             "built-in configurations");

    add_real(t, "lattice", "wavelength_red_nm",
             [](RunConfig& c) -> double& { return c.lattice.wavelength_red_nm; },
             "wavelength of the red three-beam pattern, nanometers", positive());
    add_real(t, "lattice", "polar_red_deg",
             [](RunConfig& c) -> double& { return c.lattice.polar_red_deg; },
             "polar angle of the red beams from the image-plane normal, degrees",
             open_between(0.0, 90.0));
    add_real(t, "lattice", "wavelength_ir_nm",
             [](RunConfig& c) -> double& { return c.lattice.wavelength_ir_nm; },
             "wavelength of the infrared three-beam pattern, nanometers", positive());
    add_real(t, "lattice", "polar_ir_deg",
             [](RunConfig& c) -> double& { return c.lattice.polar_ir_deg; },
             "polar angle of the infrared beams from the image-plane normal, degrees",
             open_between(0.0, 90.0));
    add_real(t, "lattice", "azimuth_deg",
             [](RunConfig& c) -> double& { return c.lattice.azimuth_deg; },
             "azimuth of the first beam; the other two follow at +120 and +240 degrees",
             unbounded());
    add_real(t, "lattice", "phase1_rad",
             [](RunConfig& c) -> double& { return c.lattice.phase1_rad; },
             "initial optical phase of beam 1, radians", unbounded());
    add_real(t, "lattice", "phase2_rad",
             [](RunConfig& c) -> double& { return c.lattice.phase2_rad; },
             "initial optical phase of beam 2, radians", unbounded());
    add_real(t, "lattice", "phase3_rad",
             [](RunConfig& c) -> double& { return c.lattice.phase3_rad; },
             "initial optical phase of beam 3, radians", unbounded());
    add_int(t, "lattice", "grid", [](RunConfig& c) -> int& { return c.lattice.grid; },
            "pixels per axis of the synthesized pattern images", 16, 4096);
    add_real(t, "lattice", "pixel_pitch_nm",
             [](RunConfig& c) -> double& { return c.lattice.pixel_pitch_nm; },
             "pixel pitch of the synthesized pattern images, nanometers", positive());
    add_text(t, "lattice", "image_red",
             [](RunConfig& c) -> std::string& { return c.lattice.image_red; },
             "optional path to an existing red-pattern PGM image analyzed instead of a "
             "synthesized one");
    add_text(t, "lattice", "image_ir",
             [](RunConfig& c) -> std::string& { return c.lattice.image_ir; },
             "optional path to an existing infrared-pattern PGM image analyzed instead of a "
             "synthesized one");

    add_real(t, "eom", "r13_pm_per_v",
             [](RunConfig& c) -> double& { return c.eom.r13_pm_per_v; },
             "electro-optic coefficient of the modulator wafer, picometers per volt",
             positive());
    add_int(t, "eom", "passes", [](RunConfig& c) -> int& { return c.eom.passes; },
            "number of optical passes through the wafer", 1, 2);
    add_real(t, "eom", "incidence_deg",
             [](RunConfig& c) -> double& { return c.eom.incidence_deg; },
             "beam incidence angle on the wafer, degrees", between(0.0, 89.0));
    add_real(t, "eom", "pad_capacitance_pf",
             [](RunConfig& c) -> double& { return c.eom.pad_capacitance_pf; },
             "capacitance of one drive pad, picofarads", positive());
    add_real(t, "eom", "series_resistance_ohm",
             [](RunConfig& c) -> double& { return c.eom.series_resistance_ohm; },
             "series resistance of the electrode and spark path, ohms", positive());
    add_real(t, "eom", "supply_kv", [](RunConfig& c) -> double& { return c.eom.supply_kv; },
             "amplifier supply voltage, kilovolts", positive());
    add_real(t, "eom", "current_limit_ma",
             [](RunConfig& c) -> double& { return c.eom.current_limit_ma; },
             "amplifier output current limit, milliamps", positive());
    add_real(t, "eom", "reservoir_capacitance_uf",
             [](RunConfig& c) -> double& { return c.eom.reservoir_capacitance_uf; },
             "reservoir capacitor the spark gap dumps into, microfarads", positive());
    add_real(t, "eom", "reservoir_bias_kv",
             [](RunConfig& c) -> double& { return c.eom.reservoir_bias_kv; },
             "reservoir bias voltage (signed; negative values oppose the pad), kilovolts",
             unbounded());
    add_real(t, "eom", "ignition_ns", [](RunConfig& c) -> double& { return c.eom.ignition_ns; },
             "spark conduction onset timescale, nanoseconds", positive());
    add_real(t, "eom", "drive_amplitude_kv",
             [](RunConfig& c) -> double& { return c.eom.drive_amplitude_kv; },
             "pad swing of the synthesized translation drive (-amplitude to +amplitude), "
             "kilovolts",
             positive());
    add_real(t, "eom", "spark_start_kv",
             [](RunConfig& c) -> double& { return c.eom.spark_start_kv; },
             "pad voltage at which the spark-gap jump starts, kilovolts", positive());
    add_text(t, "eom", "drive_csv", [](RunConfig& c) -> std::string& { return c.eom.drive_csv; },
             "optional path to a drive waveform CSV (t_s,V1,V2,V3) replacing the synthesized "
             "ramp");

    add_real(t, "dynamics", "mass_amu",
             [](RunConfig& c) -> double& { return c.dynamics.mass_amu; },
             "atomic mass, unified atomic mass units", positive());
    add_real(t, "dynamics", "site_frequency_khz",
             [](RunConfig& c) -> double& { return c.dynamics.site_frequency_khz; },
             "harmonic frequency of one lattice site, kilohertz", positive());
    add_real(t, "dynamics", "lattice_constant_um",
             [](RunConfig& c) -> double& { return c.dynamics.lattice_constant_um; },
             "lattice constant, micrometers", positive());
    add_choice(t, "dynamics", "protocol",
               [](RunConfig& c) -> std::string& { return c.dynamics.protocol; },
               "transport protocol", {"smooth_ramp", "sudden_jump"});
    add_real(t, "dynamics", "distance_sites",
             [](RunConfig& c) -> double& { return c.dynamics.distance_sites; },
             "transport distance in lattice sites (fractional allowed)",
             between(-256.0, 256.0));
    add_real(t, "dynamics", "duration_us",
             [](RunConfig& c) -> double& { return c.dynamics.duration_us; },
             "ramp duration, microseconds (smooth_ramp only)", positive());
    add_choice(t, "dynamics", "ramp", [](RunConfig& c) -> std::string& { return c.dynamics.ramp; },
               "ramp shape of smooth_ramp transports", {"minimum_jerk", "linear"});
    add_int(t, "dynamics", "samples_per_site",
            [](RunConfig& c) -> int& { return c.dynamics.samples_per_site; },
            "spatial samples per lattice site", 64, 4096);
    add_int(t, "dynamics", "steps_per_period",
            [](RunConfig& c) -> int& { return c.dynamics.steps_per_period; },
            "time steps per site oscillation period", 2, 1000000);
    add_int(t, "dynamics", "padding_sites",
            [](RunConfig& c) -> int& { return c.dynamics.padding_sites; },
            "grid padding beyond the travelled range, sites each side", 8, 1024);
    add_int(t, "dynamics", "trace_stride",
            [](RunConfig& c) -> int& { return c.dynamics.trace_stride; },
            "record every k-th step in the trace artifact (0 disables the trace)", 0,
            1000000);
    add_text(t, "dynamics", "sweep_periods",
             [](RunConfig& c) -> std::string& { return c.dynamics.sweep_periods; },
             "comma-separated ramp durations for the sweep artifact, in units of the site "
             "oscillation period");

    add_real(t, "stability", "duration_s",
             [](RunConfig& c) -> double& { return c.stability.duration_s; },
             "length of the synthesized measurement run, seconds", positive());
    add_int(t, "stability", "samples", [](RunConfig& c) -> int& { return c.stability.samples; },
            "number of samples in each synthesized series", 16, 1000000);
    add_real(t, "stability", "common_drift_nm",
             [](RunConfig& c) -> double& { return c.stability.common_drift_nm; },
             "common-mode drift accumulated over the run, nanometers", at_least(0.0));
    add_real(t, "stability", "vibration_amplitude_nm",
             [](RunConfig& c) -> double& { return c.stability.vibration_amplitude_nm; },
             "amplitude of the common-mode vibration, nanometers", at_least(0.0));
    add_real(t, "stability", "vibration_period_s",
             [](RunConfig& c) -> double& { return c.stability.vibration_period_s; },
             "period of the common-mode vibration, seconds", positive());
    add_real(t, "stability", "independent_noise_nm",
             [](RunConfig& c) -> double& { return c.stability.independent_noise_nm; },
             "per-series independent gaussian noise, RMS nanometers", at_least(0.0));
    add_real(t, "stability", "window_s",
             [](RunConfig& c) -> double& { return c.stability.window_s; },
             "moving-mean window separating fast motion from drift, seconds", positive());

    add_text(t, "output", "directory",
             [](RunConfig& c) -> std::string& { return c.output.directory; },
             "directory artifacts are written into (created if missing)");
    add_choice(t, "output", "pgm_format",
               [](RunConfig& c) -> std::string& { return c.output.pgm_format; },
               "encoding of PGM image artifacts", {"binary", "ascii"});

    return t;
}

const Schema& schema() {
    static const Schema table = build_schema();
    return table;
}

const KeyEntry* find_entry(const std::string& section, const std::string& key) {
    for (const KeyEntry& e : schema())
        if (e.section == section && e.key == key) return &e;
    return nullptr;
}

bool known_section(const std::string& section) {
    for (const KeyEntry& e : schema())
        if (e.section == section) return true;
    return false;
}

[[noreturn]] void fail(int line, const std::string& what) {
    throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

// Cross-key constraints that a single bounds check cannot express.
void validate_relations(const RunConfig& c) {
    if (!(c.lens.balance_focal_min_mm < c.lens.balance_focal_max_mm))
        throw ConfigError(
            "config: lens.balance_focal_min_mm must be less than lens.balance_focal_max_mm");
    if (!(c.lens.spacing_min_mm < c.lens.spacing_max_mm))
        throw ConfigError("config: lens.spacing_min_mm must be less than lens.spacing_max_mm");
    if (c.doe.grid % c.doe.cells != 0 || (c.doe.grid / c.doe.cells) % 2 != 0 ||
        c.doe.grid / c.doe.cells < 16)
        throw ConfigError(
            "config: doe.grid must be an even multiple of doe.cells with at least 16 samples "
            "per cell");
    (void)parse_number_list(c.dynamics.sweep_periods, "dynamics.sweep_periods");
    if (c.output.directory.empty())
        throw ConfigError("config: output.directory must not be empty");
}

} // namespace

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::string section;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string raw;
    int line_number = 0;
    while (std::getline(in, raw)) {
        ++line_number;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        const std::string line = trim(raw);
        if (line.empty() || line.front() == '#' || line.front() == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                fail(line_number, "unterminated section header '" + line + "'");
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            if (!known_section(section))
                fail(line_number, "unknown section '[" + section + "]'");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            fail(line_number, "expected 'key = value' or '[section]' (got '" + line + "')");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) fail(line_number, "missing key before '='");
        if (section.empty())
            fail(line_number, "key '" + key + "' appears before any [section] header");
        const KeyEntry* entry = find_entry(section, key);
        if (entry == nullptr)
            fail(line_number, "unknown key '" + section + "." + key + "'");
        const std::string qualified = section + "." + key;
        if (!seen.insert(qualified).second)
            fail(line_number, "duplicate key '" + qualified + "'");
        const std::string error = entry->set(cfg, value);
        if (!error.empty()) fail(line_number, qualified + " " + error);
    }
    validate_relations(cfg);
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config_text(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::string dump_config(const RunConfig& config) {
    const RunConfig defaults;
    std::string out =
        "# resolved run configuration: every key with its documentation and default\n";
    std::string current;
    for (const KeyEntry& e : schema()) {
        if (e.section != current) {
            out += "\n[" + e.section + "]\n";
            current = e.section;
        }
        const std::string default_text = e.get(defaults);
        out += "# " + e.doc + " (default: " +
               (default_text.empty() ? std::string("empty") : default_text) + ")\n";
        const std::string value = e.get(config);
        out += e.key + (value.empty() ? " =" : " = " + value) + "\n";
    }
    return out;
}

std::vector<double> parse_number_list(const std::string& text, const std::string& key) {
    std::vector<double> values;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = std::min(text.find(',', pos), text.size());
        const std::string item = trim(std::string_view(text).substr(pos, comma - pos));
        double v = 0.0;
        if (!parse_real(item, v) || !(v > 0.0))
            throw ConfigError("config: " + key +
                              " must be a comma-separated list of positive numbers (got '" +
                              text + "')");
        values.push_back(v);
        pos = comma + 1;
    }
    return values;
}

} // namespace bilat::config
