#pragma once

// Run configuration for the command-line tool.
//
// The file format is INI-style: `[section]` headers, `key = value` lines,
// full-line comments starting with `#` or `;`. Unknown sections, unknown
// keys, duplicate keys, and out-of-range values are rejected with messages
// that name the offending key and line. Every physical-quantity key carries
// its unit as a suffix (`_nm`, `_kv`, `_us`, ...) and is stored in that same
// unit; commands convert to SI at the point of use.
//
// dump_config writes every key (with a doc comment and its default) in a
// form that parses back to the identical configuration, so
// parse -> dump -> parse is an identity and the dump doubles as the
// reference documentation of the schema.

#include <cstdint>
#include <string>
#include <vector>

namespace bilat::config {

struct RunConfig {
    struct Run {
        std::uint64_t seed = 1;
    } run;

    struct Doe {
        double L_um = 26.0;
        double depth_nm = 218.0;
        int grid = 512;
        int cells = 4;
        double probe_wavelength_nm = 872.5;
        double wavelength_red_nm = 681.0;
        double wavelength_ir_nm = 1064.0;
    } doe;

    struct Lens {
        double collimator_focal_mm = 440.0;
        double weak_focal_mm = 175.0;
        double asphere_focal_mm = 40.0;
        double singlet_focal_mm = 55.0;
        double singlet_thickness_mm = 16.0;
        double balance_focal_min_mm = 100.0;
        double balance_focal_max_mm = 400.0;
        double spacing_min_mm = 10.0;
        double spacing_max_mm = 100.0;
        double target_um = 100.0;
        std::string prescription;
    } lens;

    struct Lattice {
        double wavelength_red_nm = 681.0;
        double polar_red_deg = 18.0;
        double wavelength_ir_nm = 1064.0;
        double polar_ir_deg = 28.0;
        double azimuth_deg = 90.0;
        double phase1_rad = 0.0;
        double phase2_rad = 0.0;
        double phase3_rad = 0.0;
        int grid = 256;
        double pixel_pitch_nm = 80.0;
        std::string image_red;
        std::string image_ir;
    } lattice;

    struct Eom {
        double r13_pm_per_v = 8.6;
        int passes = 2;
        double incidence_deg = 8.5;
        double pad_capacitance_pf = 16.0;
        double series_resistance_ohm = 5.0;
        double supply_kv = 4.5;
        double current_limit_ma = 9.6;
        double reservoir_capacitance_uf = 1.0;
        double reservoir_bias_kv = 0.0;
        double ignition_ns = 10.0;
        double drive_amplitude_kv = 5.2;
        double spark_start_kv = 9.0;
        std::string drive_csv;
    } eom;

    struct Dynamics {
        double mass_amu = 132.905451961;
        double site_frequency_khz = 50.0;
        double lattice_constant_um = 1.5;
        std::string protocol = "smooth_ramp";
        double distance_sites = 1.0;
        double duration_us = 160.0;
        std::string ramp = "minimum_jerk";
        int samples_per_site = 128;
        int steps_per_period = 256;
        int padding_sites = 8;
        int trace_stride = 16;
        std::string sweep_periods = "4,8,16,32";
    } dynamics;

    struct Stability {
        double duration_s = 1500.0;
        int samples = 1501;
        double common_drift_nm = 100.0;
        double vibration_amplitude_nm = 84.0;
        double vibration_period_s = 5.0;
        double independent_noise_nm = 8.5;
        double window_s = 30.0;
    } stability;

    struct Output {
        std::string directory = "out";
        std::string pgm_format = "binary";
    } output;
};

// Parse and fully validate; throws ConfigError naming key and line.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

// Every key in schema order, each preceded by a `# <doc> (default: <v>)`
// comment; parses back to the identical configuration.
std::string dump_config(const RunConfig& config);

// Comma-separated list of positive reals (e.g. dynamics.sweep_periods);
// throws ConfigError naming `key` on malformed input.
std::vector<double> parse_number_list(const std::string& text, const std::string& key);

} // namespace bilat::config
