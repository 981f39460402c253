#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bilat/artifacts.hpp"
#include "bilat/commands.hpp"
#include "bilat/config.hpp"
#include "bilat/errors.hpp"
#include "bilat/pgm.hpp"

using namespace bilat;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory per test case, removed on destruction.
struct Scratch {
    fs::path dir;

    Scratch() {
        static int counter = 0;
        dir = fs::temp_directory_path() /
              ("bilat_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
    fs::path operator/(const std::string& name) const { return dir / name; }
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(bool(in));
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spit(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(bool(out));
    out << text;
}

// Runs the tool binary through the shell, captures stderr, returns exit code.
int run_tool(const Scratch& scratch, const std::string& args) {
    const std::string cmd = std::string(BILAT_TOOL_PATH) + " " + args + " > " +
                            (scratch / "stdout.txt").string() + " 2> " +
                            (scratch / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

std::string captured_stderr(const Scratch& scratch) { return slurp(scratch / "stderr.txt"); }

struct ManifestRow {
    std::string name;
    std::uint64_t bytes = 0;
    std::uint32_t crc = 0;
};

std::vector<ManifestRow> read_manifest(const fs::path& dir) {
    std::istringstream in(slurp(dir / "manifest.csv"));
    std::string line;
    REQUIRE(std::getline(in, line));
    REQUIRE(line == "file,bytes,crc32");
    std::vector<ManifestRow> rows;
    while (std::getline(in, line)) {
        const std::size_t c1 = line.find(',');
        const std::size_t c2 = line.find(',', c1 + 1);
        REQUIRE(c1 != std::string::npos);
        REQUIRE(c2 != std::string::npos);
        ManifestRow row;
        row.name = line.substr(0, c1);
        row.bytes = std::stoull(line.substr(c1 + 1, c2 - c1 - 1));
        row.crc = std::uint32_t(std::stoul(line.substr(c2 + 1), nullptr, 16));
        rows.push_back(row);
    }
    return rows;
}

// Value of one `metric,value` (or `label,...`) row by its first field.
double metric(const fs::path& csv, const std::string& name) {
    std::istringstream in(slurp(csv));
    std::string line;
    while (std::getline(in, line))
        if (line.rfind(name + ",", 0) == 0)
            return std::strtod(line.c_str() + name.size() + 1, nullptr);
    FAIL("no row '", name, "' in ", csv.string());
    return 0.0;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::directory_iterator(dir))
        files[entry.path().filename().string()] = slurp(entry.path());
    return files;
}

} // namespace

TEST_CASE("config: a minimal file fills the documented defaults") {
    const auto cfg = config::parse_config_text("[doe]\nL_um = 26\n");
    CHECK(cfg.doe.L_um == 26.0);
    CHECK(cfg.doe.depth_nm == 218.0);
    CHECK(cfg.doe.grid == 512);
    CHECK(cfg.doe.cells == 4);
    CHECK(cfg.doe.probe_wavelength_nm == 872.5);
    CHECK(cfg.run.seed == 1);
    CHECK(cfg.output.directory == "out");
    CHECK(cfg.output.pgm_format == "binary");
    CHECK(cfg.lattice.polar_red_deg == 18.0);
    CHECK(cfg.lattice.polar_ir_deg == 28.0);
    CHECK(cfg.eom.drive_amplitude_kv == 5.2);
    CHECK(cfg.dynamics.duration_us == 160.0);
    CHECK(cfg.dynamics.protocol == "smooth_ramp");
    CHECK(cfg.stability.samples == 1501);
    CHECK(cfg.lens.prescription.empty());

    // the dump echoes the resolved values and documents the defaults
    const std::string dump = config::dump_config(cfg);
    CHECK(dump.find("L_um = 26\n") != std::string::npos);
    CHECK(dump.find("depth_nm = 218\n") != std::string::npos);
    CHECK(dump.find("(default: 218)") != std::string::npos);
    CHECK(dump.find("[dynamics]") != std::string::npos);
    CHECK(dump.find("sweep_periods = 4,8,16,32\n") != std::string::npos);
}

TEST_CASE("config: errors name the key and the line") {
    const auto error_text = [](const std::string& text) -> std::string {
        try {
            (void)config::parse_config_text(text);
        } catch (const ConfigError& e) {
            return e.what();
        }
        return {};
    };

    std::string msg = error_text("[doe]\nL_um = -1\n");
    CHECK(msg.find("L_um") != std::string::npos);
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("> 0") != std::string::npos);

    msg = error_text("\n[doe]\ntriangle = 3\n");
    CHECK(msg.find("unknown key 'doe.triangle'") != std::string::npos);
    CHECK(msg.find("line 3") != std::string::npos);

    CHECK(error_text("[orbit]\n").find("unknown section '[orbit]'") != std::string::npos);
    CHECK(error_text("[doe]\nL_um = 26\nL_um = 27\n").find("duplicate key 'doe.L_um'") !=
          std::string::npos);
    CHECK(error_text("L_um = 26\n").find("before any [section]") != std::string::npos);
    CHECK(error_text("[doe]\nL_um\n").find("expected 'key = value'") != std::string::npos);
    CHECK(error_text("[doe]\nL_um = fast\n").find("expects a number") != std::string::npos);
    CHECK(error_text("[doe]\ngrid = 12\n").find("[16, 8192]") != std::string::npos);
    CHECK(error_text("[doe\n").find("unterminated") != std::string::npos);
    CHECK(error_text("[run]\nseed = -4\n").find("unsigned") != std::string::npos);
    CHECK(error_text("[dynamics]\nprotocol = warp\n").find("one of {smooth_ramp, sudden_jump}") !=
          std::string::npos);
    CHECK(error_text("[output]\npgm_format = jpeg\n").find("one of {binary, ascii}") !=
          std::string::npos);
    CHECK(error_text("[lattice]\npolar_red_deg = 90\n").find("in (0, 90)") != std::string::npos);

    // constraints between keys name every key involved
    msg = error_text("[lens]\nbalance_focal_min_mm = 300\nbalance_focal_max_mm = 200\n");
    CHECK(msg.find("balance_focal_min_mm") != std::string::npos);
    CHECK(msg.find("balance_focal_max_mm") != std::string::npos);
    msg = error_text("[doe]\ngrid = 500\n");  // 125 samples per cell: odd
    CHECK(msg.find("doe.grid") != std::string::npos);
    CHECK(msg.find("doe.cells") != std::string::npos);
    CHECK(error_text("[dynamics]\nsweep_periods = 4,,8\n").find("dynamics.sweep_periods") !=
          std::string::npos);

    // a missing file names its path
    try {
        (void)config::parse_config_file("/nonexistent/path.cfg");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("/nonexistent/path.cfg") != std::string::npos);
    }
}

TEST_CASE("config: tolerant syntax, exact round trip") {
    // CRLF endings, comments, blank lines, spacing, explicit plus sign
    const std::string text =
        "# leading comment\r\n"
        "[lattice]\r\n"
        "  phase1_rad =  -0.25 \r\n"
        "; alternate comment style\r\n"
        "phase2_rad = +0.125\r\n"
        "pixel_pitch_nm=72.5\r\n"
        "\r\n"
        "[run]\r\n"
        "seed = 42\r\n";
    const auto cfg = config::parse_config_text(text);
    CHECK(cfg.lattice.phase1_rad == -0.25);
    CHECK(cfg.lattice.phase2_rad == 0.125);
    CHECK(cfg.lattice.pixel_pitch_nm == 72.5);
    CHECK(cfg.run.seed == 42);

    // dump(parse(dump(x))) == dump(x), including non-terminating decimals
    const auto probe = config::parse_config_text(
        "[lattice]\nphase1_rad = 0.1\nphase3_rad = 1e-3\n[dynamics]\nmass_amu = "
        "86.909180531\n[lens]\nprescription = optics/relay.lens\n");
    const std::string dump1 = config::dump_config(probe);
    const std::string dump2 = config::dump_config(config::parse_config_text(dump1));
    CHECK(dump1 == dump2);
    CHECK(dump1.find("phase1_rad = 0.1\n") != std::string::npos);
    CHECK(dump1.find("prescription = optics/relay.lens\n") != std::string::npos);

    // the all-defaults dump is itself a valid config
    const std::string reference = config::dump_config(config::RunConfig{});
    CHECK(config::dump_config(config::parse_config_text(reference)) == reference);
}

TEST_CASE("config: comma-separated number lists") {
    CHECK(config::parse_number_list("4,8,16,32", "k") ==
          std::vector<double>{4.0, 8.0, 16.0, 32.0});
    CHECK(config::parse_number_list(" 4 , 8 ", "k") == std::vector<double>{4.0, 8.0});
    CHECK_THROWS_AS((void)config::parse_number_list("4,-8", "k"), ConfigError);
    CHECK_THROWS_AS((void)config::parse_number_list("", "k"), ConfigError);
    CHECK_THROWS_AS((void)config::parse_number_list("4,,8", "k"), ConfigError);
}

TEST_CASE("artifact checksums and the run manifest") {
    // standard CRC-32 check vector
    CHECK(artifacts::crc32("123456789") == 0xCBF43926u);
    CHECK(artifacts::crc32("") == 0u);

    Scratch scratch;
    const fs::path dir = scratch / "run";
    artifacts::RunDirectory run(dir);
    run.write("b.csv", "x,y\n1,2\n");
    run.write("a.csv", "head\n");
    CHECK_THROWS_AS(run.write("a.csv", "again"), ValidationError);
    CHECK_THROWS_AS(run.write("sub/dir.csv", "no"), ValidationError);
    CHECK_THROWS_AS(run.write("manifest.csv", "no"), ValidationError);
    run.finalize();
    CHECK_THROWS_AS(run.write("late.csv", "no"), ValidationError);

    const auto rows = read_manifest(dir);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].name == "a.csv");  // sorted
    CHECK(rows[1].name == "b.csv");
    CHECK(rows[1].bytes == 8);
    CHECK(rows[0].crc == artifacts::crc32("head\n"));
    CHECK(slurp(dir / "b.csv") == "x,y\n1,2\n");
    for (const auto& entry : fs::directory_iterator(dir))
        CHECK(entry.path().extension() != ".tmp");
}

TEST_CASE("pgm images encode, decode, and quantize consistently") {
    pgm::Image16 image;
    image.nx = 3;
    image.ny = 2;
    image.pixels = {0, 65535, 1234, 256, 7, 40000};

    for (const bool ascii : {false, true}) {
        const std::string bytes = pgm::encode(image, ascii);
        CHECK(bytes.substr(0, 2) == (ascii ? "P2" : "P5"));
        const pgm::Image16 back = pgm::decode(bytes);
        CHECK(back.nx == 3);
        CHECK(back.ny == 2);
        CHECK(back.pixels == image.pixels);
    }

    // quantization maps the extremes onto the full 16-bit range
    double lo = 0.0, hi = 0.0;
    const pgm::Image16 q = pgm::quantize({0.5, 1.0, 2.0, 4.0}, 2, 2, lo, hi);
    CHECK(lo == 0.5);
    CHECK(hi == 4.0);
    CHECK(q.pixels[0] == 0);
    CHECK(q.pixels[3] == 65535);
    CHECK(q.pixels[1] == 9362);  // (1.0 - 0.5) / 3.5 of the range

    // a constant field quantizes to zero with equal bounds
    const pgm::Image16 flat = pgm::quantize({3.0, 3.0, 3.0, 3.0}, 2, 2, lo, hi);
    CHECK(lo == hi);
    for (const auto p : flat.pixels) CHECK(p == 0);

    // headers may carry comments; 8-bit rasters use one byte per sample
    const pgm::Image16 tiny = pgm::decode("P5\n# cam\n2 1\n255\n\x01\x02");
    CHECK(tiny.pixels == std::vector<std::uint16_t>{1, 2});

    CHECK_THROWS_AS((void)pgm::decode("Q5\n1 1\n255\nx"), ValidationError);
    CHECK_THROWS_AS((void)pgm::decode("P5\n4 4\n65535\nshort"), ValidationError);
    CHECK_THROWS_AS((void)pgm::decode("P5\n1 1\n0\nx"), ValidationError);
    CHECK_THROWS_AS((void)pgm::decode("P2\n1 1\n255\n300\n"), ValidationError);
    CHECK_THROWS_AS((void)pgm::quantize({1.0}, 2, 2, lo, hi), ValidationError);

    CHECK_THROWS_AS((void)commands::description("warp"), ValidationError);
}

TEST_CASE("tool: the mask run writes a verifiable artifact set") {
    Scratch scratch;
    spit(scratch / "min.cfg", "[doe]\nL_um = 26\n");
    const fs::path out = scratch / "run";
    const int code =
        run_tool(scratch, "doe --config " + (scratch / "min.cfg").string() + " --out " +
                              out.string());
    CHECK(code == 0);

    for (const char* name :
         {"resolved.cfg", "doe_angles.csv", "doe_efficiency.csv", "doe_summary.csv",
          "manifest.csv"})
        CHECK(fs::exists(out / name));

    // the manifest covers every artifact and its checksums verify
    const auto rows = read_manifest(out);
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(out)) {
        CHECK(entry.path().extension() != ".tmp");
        if (entry.path().filename() != "manifest.csv") ++files;
    }
    CHECK(rows.size() == files);
    for (const auto& row : rows) {
        const std::string bytes = slurp(out / row.name);
        CHECK(bytes.size() == row.bytes);
        CHECK(artifacts::crc32(bytes) == row.crc);
    }

    // zeroth order leads the efficiency table and is extinguished
    std::istringstream eff(slurp(out / "doe_efficiency.csv"));
    std::string header, first;
    REQUIRE(std::getline(eff, header));
    CHECK(header == "m,n,efficiency");
    REQUIRE(std::getline(eff, first));
    CHECK(first.rfind("0,0,", 0) == 0);
    CHECK(std::strtod(first.c_str() + 4, nullptr) < 1e-6);

    // emission angles of the two colors
    const double red_angle = metric(out / "doe_angles.csv", "681");
    const double ir_angle = metric(out / "doe_angles.csv", "1064");
    CHECK(red_angle == doctest::Approx(1.73).epsilon(0.05 / 1.73));
    CHECK(ir_angle == doctest::Approx(2.71).epsilon(0.05 / 2.71));
}

TEST_CASE("tool: identical config and seed give byte-identical artifacts") {
    Scratch scratch;
    spit(scratch / "run.cfg", "[stability]\nsamples = 301\nduration_s = 300\n");
    const fs::path out = scratch / "run";
    const std::string base =
        "stability --config " + (scratch / "run.cfg").string() + " --out " + out.string();

    REQUIRE(run_tool(scratch, base) == 0);
    const auto first = snapshot(out);
    REQUIRE(run_tool(scratch, base) == 0);
    CHECK(snapshot(out) == first);

    // a different seed changes the synthesized series deterministically
    REQUIRE(run_tool(scratch, base + " --seed 9") == 0);
    const auto reseeded = snapshot(out);
    CHECK(reseeded.at("stability_series_red.csv") != first.at("stability_series_red.csv"));
    REQUIRE(run_tool(scratch, base + " --seed 9") == 0);
    CHECK(snapshot(out) == reseeded);
}

TEST_CASE("tool: the drive point translates the lattice a site and a half") {
    Scratch scratch;
    spit(scratch / "run.cfg", "[run]\nseed = 3\n");
    const fs::path out = scratch / "run";
    REQUIRE(run_tool(scratch, "translate --config " + (scratch / "run.cfg").string() +
                                  " --out " + out.string()) == 0);

    CHECK(metric(out / "translate_summary.csv", "final_sites") ==
          doctest::Approx(1.53).epsilon(0.03 / 1.53));
    CHECK(metric(out / "translate_summary.csv", "half_wave_voltage_kv") ==
          doctest::Approx(3.4).epsilon(0.2 / 3.4));
    CHECK(metric(out / "translate_summary.csv", "one_site_ramp_us") ==
          doctest::Approx(11.33).epsilon(1.0 / 11.33));
    const std::string trajectory = slurp(out / "translate_trajectory.csv");
    CHECK(trajectory.rfind("t_s,phi1,phi2,phi3,dx_nm,dy_nm,sites", 0) == 0);
}

TEST_CASE("tool: exit codes separate usage, config, and domain errors") {
    Scratch scratch;

    CHECK(run_tool(scratch, "doe") == 2);  // missing --config
    CHECK(captured_stderr(scratch).find("--config") != std::string::npos);

    CHECK(run_tool(scratch, "warp --config x.cfg") == 2);  // unknown subcommand
    CHECK(run_tool(scratch, "--help") == 0);

    CHECK(run_tool(scratch, "doe --config " + (scratch / "missing.cfg").string()) == 2);

    spit(scratch / "bad.cfg", "[doe]\nL_um = -1\n");
    CHECK(run_tool(scratch, "doe --config " + (scratch / "bad.cfg").string()) == 2);
    const std::string message = captured_stderr(scratch);
    CHECK(message.find("L_um") != std::string::npos);
    CHECK(message.find("line 2") != std::string::npos);

    // a valid config whose physics fails is a domain error: with a 1 um
    // triangle side the infrared first order is evanescent
    spit(scratch / "evanescent.cfg", "[doe]\nL_um = 1\n");
    CHECK(run_tool(scratch, "doe --config " + (scratch / "evanescent.cfg").string() +
                                " --out " + (scratch / "e").string()) == 1);

    spit(scratch / "ghost.cfg", "[lattice]\nimage_red = /nonexistent.pgm\n");
    CHECK(run_tool(scratch, "lattice --config " + (scratch / "ghost.cfg").string() +
                                " --out " + (scratch / "g").string()) == 1);
}

TEST_CASE("tool: the resolved config reruns to the identical resolved config") {
    Scratch scratch;
    spit(scratch / "run.cfg", "[doe]\nL_um = 26\ndepth_nm = 218.125\n[run]\nseed = 11\n");
    const fs::path out = scratch / "run";
    REQUIRE(run_tool(scratch, "doe --config " + (scratch / "run.cfg").string() + " --out " +
                                  out.string()) == 0);
    const std::string resolved = slurp(out / "resolved.cfg");
    const auto first = snapshot(out);

    REQUIRE(run_tool(scratch, "doe --config " + (out / "resolved.cfg").string() + " --out " +
                                  out.string()) == 0);
    CHECK(slurp(out / "resolved.cfg") == resolved);
    CHECK(snapshot(out) == first);
}

TEST_CASE("tool: figures bundles patterns, stability, optics, and drive artifacts") {
    Scratch scratch;
    spit(scratch / "run.cfg",
         "[lattice]\ngrid = 128\n[stability]\nsamples = 301\nduration_s = 300\n");
    const fs::path out = scratch / "fig";
    REQUIRE(run_tool(scratch, "figures --config " + (scratch / "run.cfg").string() +
                                  " --out " + out.string()) == 0);

    for (const char* name :
         {"lattice_red.pgm", "lattice_red_scale.csv", "lattice_ir.pgm", "lattice_ir_scale.csv",
          "lattice_constants.csv", "lattice_mismatch.csv", "stability_series_red.csv",
          "stability_series_ir.csv", "stability_report.csv", "lens_delta_f.csv",
          "lens_focus_balanced.csv", "translate_trajectory.csv", "translate_summary.csv"})
        CHECK(fs::exists(out / name));

    const pgm::Image16 red = pgm::decode(slurp(out / "lattice_red.pgm"));
    CHECK(red.nx == 128);
    CHECK(red.ny == 128);
    CHECK(metric(out / "lattice_red_scale.csv", "pixel_pitch_nm") == 80.0);

    // both recovered lattice constants agree with their analytic spacings
    std::istringstream constants(slurp(out / "lattice_constants.csv"));
    std::string line;
    REQUIRE(std::getline(constants, line));
    int rows = 0;
    while (std::getline(constants, line)) {
        const std::size_t last = line.rfind(',');
        CHECK(std::strtod(line.c_str() + last + 1, nullptr) < 0.005);
        ++rows;
    }
    CHECK(rows == 2);
}

TEST_CASE("tool: a coarse transport run writes trace, sweep, and summary") {
    Scratch scratch;
    // sampling stays at the defaults: a 75-level well needs the full spatial
    // and temporal resolution to clear the solver's stability guards
    spit(scratch / "run.cfg",
         "[dynamics]\nduration_us = 80\ntrace_stride = 8\nsweep_periods = 4,8\n");
    const fs::path out = scratch / "run";
    REQUIRE(run_tool(scratch, "dynamics --config " + (scratch / "run.cfg").string() +
                                  " --out " + out.string()) == 0);

    CHECK(metric(out / "dynamics_summary.csv", "site_period_us") == doctest::Approx(20.0));
    CHECK(metric(out / "dynamics_summary.csv", "fidelity") > 0.99);

    const std::string sweep = slurp(out / "dynamics_sweep.csv");
    CHECK(sweep.rfind("param,fidelity", 0) == 0);
    std::istringstream sweep_in(sweep);
    std::string line;
    std::getline(sweep_in, line);
    double previous = 0.0;
    int rows = 0;
    while (std::getline(sweep_in, line)) {
        const double f = std::strtod(line.c_str() + line.find(',') + 1, nullptr);
        CHECK(f > previous);  // longer ramps are more adiabatic
        previous = f;
        ++rows;
    }
    CHECK(rows == 2);

    const std::string trace = slurp(out / "dynamics_trace.csv");
    CHECK(trace.rfind("t_s,fidelity,energy_J", 0) == 0);
}
