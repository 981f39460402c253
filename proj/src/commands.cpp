#include "bilat/commands.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "bilat/artifacts.hpp"
#include "bilat/doe.hpp"
#include "bilat/dynamics.hpp"
#include "bilat/eom.hpp"
#include "bilat/errors.hpp"
#include "bilat/glass.hpp"
#include "bilat/lattice.hpp"
#include "bilat/lens.hpp"
#include "bilat/pgm.hpp"
#include "bilat/rng.hpp"
#include "bilat/units.hpp"

namespace bilat::commands {

namespace {

using namespace bilat::units;
using artifacts::RunDirectory;
using config::RunConfig;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// `metric,value` table builder shared by the summary artifacts.
class MetricTable {
  public:
    void add(const std::string& name, double value) {
        body_ += name + "," + fmt(value) + "\n";
    }
    const std::string& str() const { return body_; }

  private:
    std::string body_ = "metric,value\n";
};

doe::GratingSpec grating_from(const RunConfig& cfg) {
    doe::GratingSpec spec;
    spec.triangle_side = cfg.doe.L_um * um;
    spec.etch_depth = cfg.doe.depth_nm * nm;
    spec.validate();
    return spec;
}

lattice::LatticeConfig beams_from(const RunConfig& cfg, double wavelength, double polar) {
    const std::array<double, 3> phases{cfg.lattice.phase1_rad, cfg.lattice.phase2_rad,
                                       cfg.lattice.phase3_rad};
    lattice::LatticeConfig geometry;
    for (int j = 0; j < 3; ++j) {
        lattice::BeamSpec beam;
        beam.wavelength = wavelength;
        beam.polar_angle = polar;
        beam.azimuth = (cfg.lattice.azimuth_deg + 120.0 * j) * deg;
        beam.phase = phases[std::size_t(j)];
        geometry.beams.push_back(beam);
    }
    geometry.validate();
    return geometry;
}

lattice::LatticeConfig red_beams(const RunConfig& cfg) {
    return beams_from(cfg, cfg.lattice.wavelength_red_nm * nm, cfg.lattice.polar_red_deg * deg);
}

lattice::LatticeConfig ir_beams(const RunConfig& cfg) {
    return beams_from(cfg, cfg.lattice.wavelength_ir_nm * nm, cfg.lattice.polar_ir_deg * deg);
}

eom::ModulatorSpec modulator_from(const RunConfig& cfg) {
    eom::ModulatorSpec mod = eom::standard_modulator();
    mod.r13 = cfg.eom.r13_pm_per_v * pm;
    mod.passes = cfg.eom.passes;
    mod.incidence_angle = cfg.eom.incidence_deg * deg;
    mod.pad_capacitance = cfg.eom.pad_capacitance_pf * pF;
    mod.series_resistance = cfg.eom.series_resistance_ohm * ohm;
    mod.validate();
    return mod;
}

eom::AmplifierSpec amplifier_from(const RunConfig& cfg) {
    eom::AmplifierSpec amp;
    amp.supply_voltage = cfg.eom.supply_kv * kV;
    amp.current_limit = cfg.eom.current_limit_ma * mA;
    amp.validate();
    return amp;
}

// --- doe ------------------------------------------------------------------

void doe_body(const RunConfig& cfg, RunDirectory& dir) {
    const doe::GratingSpec spec = grating_from(cfg);
    const double red = cfg.doe.wavelength_red_nm * nm;
    const double ir = cfg.doe.wavelength_ir_nm * nm;
    const double probe = cfg.doe.probe_wavelength_nm * nm;

    std::string angles = "wavelength_nm,angle_deg\n";
    for (const double wl : {red, ir})
        angles += fmt(wl / nm) + "," + fmt(doe::first_order_angle(spec, wl) / deg) + "\n";
    dir.write("doe_angles.csv", angles);

    Grid2D grid;
    grid.nx = grid.ny = cfg.doe.grid;
    grid.pitch = spec.triangle_side * cfg.doe.cells / cfg.doe.grid;
    const doe::PhaseMask mask = doe::synthesize_grating_profile(spec, grid, probe);
    const doe::EfficiencyTable table = doe::order_efficiencies(mask, mask.phi_step);
    std::string efficiency = "m,n,efficiency\n";
    for (const doe::OrderEfficiency& order : table.orders)
        efficiency += std::to_string(order.m) + "," + std::to_string(order.n) + "," +
                      fmt(order.efficiency) + "\n";
    dir.write("doe_efficiency.csv", efficiency);

    MetricTable summary;
    summary.add("compromise_depth_nm", doe::compromise_depth(red, ir) / nm);
    summary.add("probe_phase_step_rad", mask.phi_step);
    summary.add("raised_area_fraction", mask.raised_area_fraction());
    summary.add("zeroth_order_efficiency", table.efficiency(0, 0));
    summary.add("first_order_efficiency", table.efficiency(1, 0));
    dir.write("doe_summary.csv", summary.str());
}

// --- lens -----------------------------------------------------------------

// Plano-convex spherical singlet, curved side toward the collimated input;
// the comparison objective the asphere replaces.
lens::OpticalSystem spherical_singlet(const glass::GlassModel& g, double f,
                                      double design_wavelength, double aperture,
                                      double center_thickness) {
    lens::OpticalSystem sys;
    sys.ambient = glass::vacuum();
    lens::Surface front;
    front.kind = lens::Surface::Kind::spherical;
    front.curvature_radius = (g.index(design_wavelength) - 1.0) * f;
    front.aperture_radius = aperture;
    front.medium = g;
    front.thickness = center_thickness;
    lens::Surface back;
    back.kind = lens::Surface::Kind::flat;
    back.aperture_radius = aperture;
    back.medium = glass::vacuum();
    back.thickness = 0.0;
    sys.surfaces = {front, back};
    return sys;
}

void lens_body(const RunConfig& cfg, RunDirectory& dir) {
    const doe::GratingSpec grating = grating_from(cfg);
    const double red = cfg.doe.wavelength_red_nm * nm;
    const double ir = cfg.doe.wavelength_ir_nm * nm;
    const double design = cfg.doe.probe_wavelength_nm * nm;
    const double collimator_f = cfg.lens.collimator_focal_mm * mm;
    const double h1 = collimator_f * std::tan(doe::first_order_angle(grating, red));
    const double h2 = collimator_f * std::tan(doe::first_order_angle(grating, ir));

    lens::FocusingGroupSpec group;
    group.weak_f = cfg.lens.weak_focal_mm * mm;
    group.asphere_f = cfg.lens.asphere_focal_mm * mm;
    group.design_wavelength = design;

    std::string rows = "configuration,f_weak_mm,spacing_mm,delta_f_mm\n";

    lens::FocusingGroupSpec bare = group;
    bare.weak_f = -1.0;
    const lens::FocusReport bare_report =
        lens::aberration_report(lens::focusing_group(bare), red, ir, h1, h2);
    rows += "asphere_only,,," + fmt(bare_report.delta_f / mm) + "\n";

    lens::BalanceProblem problem;
    problem.group = group;
    problem.lambda1 = red;
    problem.lambda2 = ir;
    problem.h1 = h1;
    problem.h2 = h2;
    problem.f_min = cfg.lens.balance_focal_min_mm * mm;
    problem.f_max = cfg.lens.balance_focal_max_mm * mm;
    problem.d1_min = cfg.lens.spacing_min_mm * mm;
    problem.d1_max = cfg.lens.spacing_max_mm * mm;
    problem.target = cfg.lens.target_um * um;
    const lens::BalanceResult balanced = lens::balance_aberrations(problem);
    rows += "balanced," + fmt(balanced.f_weak / mm) + "," + fmt(balanced.d1 / mm) + "," +
            fmt(balanced.delta_f / mm) + "\n";

    const lens::OpticalSystem singlet =
        spherical_singlet(glass::load_glass("fused_silica"), cfg.lens.singlet_focal_mm * mm,
                          design, group.asphere_aperture, cfg.lens.singlet_thickness_mm * mm);
    const lens::FocusReport singlet_report = lens::aberration_report(singlet, red, ir, h1, h2);
    rows += "spherical_singlet,,," + fmt(singlet_report.delta_f / mm) + "\n";

    if (!cfg.lens.prescription.empty()) {
        const lens::OpticalSystem loaded = lens::load_prescription_file(cfg.lens.prescription);
        const lens::FocusReport loaded_report = lens::aberration_report(loaded, red, ir, h1, h2);
        rows += "prescription,,," + fmt(loaded_report.delta_f / mm) + "\n";
    }
    dir.write("lens_delta_f.csv", rows);

    std::ostringstream focus;
    lens::write_focus_report_csv(focus,
                                 lens::aberration_report(balanced.system, red, ir, h1, h2));
    dir.write("lens_focus_balanced.csv", focus.str());
}

// --- lattice ----------------------------------------------------------------

IntensityImage pattern_image(const RunConfig& cfg, const lattice::LatticeConfig& geometry,
                             const std::string& override_path) {
    Grid2D grid;
    grid.nx = grid.ny = cfg.lattice.grid;
    grid.pitch = cfg.lattice.pixel_pitch_nm * nm;
    if (override_path.empty()) return lattice::interference_intensity(geometry, grid);

    std::ifstream in(override_path, std::ios::binary);
    if (!in)
        throw ValidationError("lattice: cannot open image '" + override_path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    const pgm::Image16 raw = pgm::decode(buf.str());
    IntensityImage image;
    image.grid = grid;
    image.grid.nx = raw.nx;
    image.grid.ny = raw.ny;
    image.wavelength = geometry.beams.front().wavelength;
    image.values.assign(raw.pixels.begin(), raw.pixels.end());
    image.validate();
    return image;
}

void write_pattern(const RunConfig& cfg, RunDirectory& dir, const std::string& stem,
                   const IntensityImage& image) {
    double lo = 0.0, hi = 0.0;
    const pgm::Image16 quantized =
        pgm::quantize(image.values, image.grid.nx, image.grid.ny, lo, hi);
    dir.write(stem + ".pgm", pgm::encode(quantized, cfg.output.pgm_format == "ascii"));

    MetricTable scale;
    scale.add("pixels_per_axis", image.grid.nx);
    scale.add("pixel_pitch_nm", image.grid.pitch / nm);
    scale.add("wavelength_nm", image.wavelength / nm);
    scale.add("intensity_min", lo);
    scale.add("intensity_max", hi);
    dir.write(stem + "_scale.csv", scale.str());
}

void lattice_body(const RunConfig& cfg, RunDirectory& dir) {
    const lattice::LatticeConfig red = red_beams(cfg);
    const lattice::LatticeConfig ir = ir_beams(cfg);
    const IntensityImage red_image = pattern_image(cfg, red, cfg.lattice.image_red);
    const IntensityImage ir_image = pattern_image(cfg, ir, cfg.lattice.image_ir);
    write_pattern(cfg, dir, "lattice_red", red_image);
    write_pattern(cfg, dir, "lattice_ir", ir_image);

    const double red_analytic = lattice::lattice_constant_analytic(
        cfg.lattice.wavelength_red_nm * nm, cfg.lattice.polar_red_deg * deg);
    const double ir_analytic = lattice::lattice_constant_analytic(
        cfg.lattice.wavelength_ir_nm * nm, cfg.lattice.polar_ir_deg * deg);
    const double red_measured = lattice::lattice_constant_from_image(red_image);
    const double ir_measured = lattice::lattice_constant_from_image(ir_image);

    std::string rows = "label,analytic_um,measured_um,relative_error\n";
    rows += "red," + fmt(red_analytic / um) + "," + fmt(red_measured / um) + "," +
            fmt(std::abs(red_measured - red_analytic) / red_analytic) + "\n";
    rows += "infrared," + fmt(ir_analytic / um) + "," + fmt(ir_measured / um) + "," +
            fmt(std::abs(ir_measured - ir_analytic) / ir_analytic) + "\n";
    dir.write("lattice_constants.csv", rows);

    MetricTable mismatch;
    mismatch.add("mismatch_analytic", lattice::commensurability_mismatch(red_analytic, ir_analytic));
    mismatch.add("mismatch_measured", lattice::commensurability_mismatch(red_measured, ir_measured));
    dir.write("lattice_mismatch.csv", mismatch.str());
}

// --- translate --------------------------------------------------------------

void translate_body(const RunConfig& cfg, RunDirectory& dir) {
    const eom::ModulatorSpec mod = modulator_from(cfg);
    const eom::AmplifierSpec amp = amplifier_from(cfg);
    const double wavelength = cfg.lattice.wavelength_red_nm * nm;
    const lattice::LatticeConfig geometry = red_beams(cfg);

    eom::DriveWaveforms drive;
    double ramp_duration = 0.0;
    if (!cfg.eom.drive_csv.empty()) {
        std::ifstream in(cfg.eom.drive_csv, std::ios::binary);
        if (!in)
            throw ValidationError("translate: cannot open drive CSV '" + cfg.eom.drive_csv +
                                  "'");
        drive = eom::read_drive_waveforms_csv(in);
        ramp_duration = drive.timestamps.back() - drive.timestamps.front();
    } else {
        // Differential drive to the +/-amplitude point: pad 1 ramps up while
        // pads 2 and 3 ramp down, all at the amplifier slew limit.
        const eom::RampResult ramp =
            eom::slew_limited_ramp(cfg.eom.drive_amplitude_kv * kV, amp, mod);
        drive.timestamps = ramp.timestamps;
        drive.voltages.reserve(ramp.voltages.size());
        for (const double v : ramp.voltages) drive.voltages.push_back({v, -v, -v});
        ramp_duration = ramp.duration;
    }

    const eom::TrajectoryResult trajectory =
        eom::drive_to_trajectory(drive, mod, wavelength, geometry);
    std::ostringstream out;
    eom::write_trajectory_csv(out, trajectory);
    dir.write("translate_trajectory.csv", out.str());

    MetricTable summary;
    summary.add("half_wave_voltage_kv", eom::half_wave_voltage(mod, wavelength) / kV);
    summary.add("phase_slew_rad_per_us", eom::phase_slew(amp, mod, wavelength) * us);
    summary.add("one_site_ramp_us", 2.0 * pi / eom::phase_slew(amp, mod, wavelength) / us);
    summary.add("drive_duration_us", ramp_duration / us);
    summary.add("final_sites", trajectory.sites.back());
    summary.add("final_displacement_nm", trajectory.displacements.back().norm() / nm);
    dir.write("translate_summary.csv", summary.str());
}

// --- jump -------------------------------------------------------------------

void jump_body(const RunConfig& cfg, RunDirectory& dir) {
    const eom::ModulatorSpec mod = modulator_from(cfg);
    eom::DischargeSpec spec;
    spec.reservoir_capacitance = cfg.eom.reservoir_capacitance_uf * uF;
    spec.reservoir_bias = cfg.eom.reservoir_bias_kv * kV;
    spec.ignition_timescale = cfg.eom.ignition_ns * ns;
    spec.validate();

    const eom::DischargeResult discharge =
        eom::spark_discharge(cfg.eom.spark_start_kv * kV, mod, spec);
    std::string rows = "t_s,v_volts\n";
    for (std::size_t i = 0; i < discharge.timestamps.size(); ++i)
        rows += fmt(discharge.timestamps[i]) + "," + fmt(discharge.voltages[i]) + "\n";
    dir.write("jump_waveform.csv", rows);

    MetricTable summary;
    summary.add("time_constant_ps", discharge.time_constant / ps);
    summary.add("peak_current_ka", discharge.peak_current / 1e3);
    summary.add("settle_10_90_ns", discharge.settle_time_10_90 / ns);
    summary.add("equilibrium_voltage_v", discharge.equilibrium_voltage / V);
    summary.add("charge_transferred_nc", discharge.charge_transferred / 1e-9);
    dir.write("jump_summary.csv", summary.str());
}

// --- dynamics ---------------------------------------------------------------

void dynamics_body(const RunConfig& cfg, RunDirectory& dir) {
    const double mass = cfg.dynamics.mass_amu * amu;
    const double spacing = cfg.dynamics.lattice_constant_um * um;
    const double omega = 2.0 * pi * cfg.dynamics.site_frequency_khz * kHz;
    const double site_period = 2.0 * pi / omega;

    dynamics::LatticePotential1D potential;
    potential.depth = dynamics::depth_for_site_frequency(omega, spacing, mass);
    potential.lattice_constant = spacing;

    dynamics::TransportOptions options;
    options.samples_per_site = cfg.dynamics.samples_per_site;
    options.padding_sites = cfg.dynamics.padding_sites;
    options.steps_per_period = cfg.dynamics.steps_per_period;
    options.trace_stride = cfg.dynamics.trace_stride;

    dynamics::TransportProtocol protocol;
    const bool sudden = cfg.dynamics.protocol == "sudden_jump";
    protocol.mode = sudden ? dynamics::TransportMode::sudden_jump
                           : dynamics::TransportMode::smooth_ramp;
    protocol.distance = cfg.dynamics.distance_sites;
    protocol.duration = sudden ? 0.0 : cfg.dynamics.duration_us * us;
    protocol.ramp_shape = cfg.dynamics.ramp == "linear" ? dynamics::RampShape::linear
                                                        : dynamics::RampShape::minimum_jerk;

    const dynamics::FidelityResult result =
        dynamics::transport_fidelity(protocol, potential, mass, options);
    if (!result.trace_times.empty()) {
        std::ostringstream trace;
        dynamics::write_fidelity_trace_csv(trace, result);
        dir.write("dynamics_trace.csv", trace.str());
    }

    // Ramp-duration sweep at the configured shape; sweep entries are in units
    // of the site oscillation period, the artifact stores seconds.
    const std::vector<double> periods =
        config::parse_number_list(cfg.dynamics.sweep_periods, "dynamics.sweep_periods");
    dynamics::TransportOptions sweep_options = options;
    sweep_options.trace_stride = 0;
    std::vector<std::array<double, 2>> sweep_rows;
    for (const double periods_count : periods) {
        dynamics::TransportProtocol ramp = protocol;
        ramp.mode = dynamics::TransportMode::smooth_ramp;
        ramp.duration = periods_count * site_period;
        const dynamics::FidelityResult point =
            dynamics::transport_fidelity(ramp, potential, mass, sweep_options);
        sweep_rows.push_back({ramp.duration, point.fidelity});
    }
    std::ostringstream sweep;
    dynamics::write_sweep_csv(sweep, sweep_rows);
    dir.write("dynamics_sweep.csv", sweep.str());

    MetricTable summary;
    summary.add("site_period_us", site_period / us);
    summary.add("depth_level_spacings", potential.depth / (hbar * omega));
    summary.add("fidelity", result.fidelity);
    summary.add("excitation_level_spacings", result.excitation_energy / (hbar * omega));
    dir.write("dynamics_summary.csv", summary.str());
}

// --- stability ----------------------------------------------------------------

lattice::PositionSeries synthesize_series(const RunConfig& cfg, Rng& rng,
                                          const std::string& label) {
    const int n = cfg.stability.samples;
    const double duration = cfg.stability.duration_s;
    lattice::PositionSeries series;
    series.label = label;
    series.timestamps.reserve(std::size_t(n));
    series.positions.reserve(std::size_t(n));
    for (int i = 0; i < n; ++i) {
        const double t = duration * i / (n - 1);
        const double common =
            cfg.stability.common_drift_nm * nm * (t / duration) +
            cfg.stability.vibration_amplitude_nm * nm *
                std::sin(2.0 * pi * t / cfg.stability.vibration_period_s);
        series.timestamps.push_back(t);
        series.positions.push_back(
            {common + cfg.stability.independent_noise_nm * nm * rng.gaussian(), 0.0});
    }
    series.validate();
    return series;
}

void stability_body(const RunConfig& cfg, RunDirectory& dir) {
    Rng rng(cfg.run.seed);
    const lattice::PositionSeries red = synthesize_series(cfg, rng, "red");
    const lattice::PositionSeries ir = synthesize_series(cfg, rng, "infrared");

    std::ostringstream red_out, ir_out;
    lattice::write_position_series_csv(red_out, red);
    lattice::write_position_series_csv(ir_out, ir);
    dir.write("stability_series_red.csv", red_out.str());
    dir.write("stability_series_ir.csv", ir_out.str());

    const lattice::StabilityReport report =
        lattice::stability_report(red, ir, cfg.stability.window_s);
    std::ostringstream report_out;
    lattice::write_stability_report_csv(report_out, report);
    dir.write("stability_report.csv", report_out.str());
}

// --- figures ------------------------------------------------------------------

void figures_body(const RunConfig& cfg, RunDirectory& dir) {
    lattice_body(cfg, dir);
    stability_body(cfg, dir);
    lens_body(cfg, dir);
    translate_body(cfg, dir);
}

struct Command {
    const char* name;
    const char* help;
    void (*body)(const RunConfig&, RunDirectory&);
};

constexpr std::array<Command, 8> kCommands{{
    {"doe", "diffraction angles and order efficiencies of the triangular phase mask",
     doe_body},
    {"lens", "focal-split comparison and weak-lens balancing of the focusing group",
     lens_body},
    {"lattice", "synthesized interference patterns and recovered lattice constants",
     lattice_body},
    {"translate", "slew-limited pad drive mapped to lattice displacement", translate_body},
    {"jump", "spark-gap discharge waveform and settling metrics", jump_body},
    {"dynamics", "wavepacket transport fidelity for the configured protocol",
     dynamics_body},
    {"stability", "synthesized dual-series stability run and differential report",
     stability_body},
    {"figures", "lattice, stability, lens, and translate artifacts in one run",
     figures_body},
}};

const Command& find_command(const std::string& name) {
    for (const Command& command : kCommands)
        if (name == command.name) return command;
    throw ValidationError("unknown subcommand '" + name + "'");
}

} // namespace

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> list;
        for (const Command& command : kCommands) list.emplace_back(command.name);
        return list;
    }();
    return names;
}

std::string description(const std::string& subcommand) {
    return find_command(subcommand).help;
}

void run(const std::string& subcommand, const config::RunConfig& cfg) {
    const Command& command = find_command(subcommand);
    RunDirectory dir(cfg.output.directory);
    dir.write("resolved.cfg", config::dump_config(cfg));
    command.body(cfg, dir);
    dir.finalize();
}

} // namespace bilat::commands
