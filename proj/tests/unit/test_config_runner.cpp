#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "droplet/errors.hpp"
#include "droplet/run_config.hpp"
#include "droplet/sim_runner.hpp"

using droplet::RunConfig;

namespace fs = std::filesystem;

namespace {

const char* kMinimalConfig = R"(
# minimal droplet run
mode = predict
params.omega_r_bar = 1.14e-5
params.b0 = 100
params.delta = -10000
params.mirror_R = 0.99
params.p0 = 2.28e-6
)";

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("dropletsim_test_" + tag);
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config parses and exposes the reference parameters") {
    const auto cfg = RunConfig::parse_text(kMinimalConfig);
    CHECK(cfg.mode == RunConfig::Mode::Predict);
    CHECK(cfg.params.omega_r_bar == doctest::Approx(1.14e-5));
    CHECK(cfg.params.p0 == doctest::Approx(2.28e-6));
    CHECK(cfg.grid_n_points == 768);  // 12 pattern periods at dx ≈ 0.098
    CHECK(cfg.dt_auto);
    cfg.validate();
}

TEST_CASE("unknown and duplicate keys are rejected") {
    CHECK_THROWS_WITH_AS(RunConfig::parse_text("params.omega_bar = 1\n"),
                         doctest::Contains("unknown config key"), droplet::ConfigError);
    CHECK_THROWS_WITH_AS(RunConfig::parse_text("mode = predict\nmode = sense\n"),
                         doctest::Contains("duplicate"), droplet::ConfigError);
    CHECK_THROWS_AS(RunConfig::parse_text("params.p0 = not_a_number\n"), droplet::ConfigError);
    CHECK_THROWS_AS(RunConfig::parse_text("just a line without equals\n"), droplet::ConfigError);
}

TEST_CASE("canonical form round-trips to itself") {
    auto cfg = RunConfig::parse_text(kMinimalConfig);
    cfg.apply_override("evolution.dt=0.5");
    cfg.apply_override("seed.width=0.61");
    const std::string canon1 = cfg.canonical();
    const auto reparsed = RunConfig::parse_text(canon1);
    const std::string canon2 = reparsed.canonical();
    CHECK(canon1 == canon2);
    CHECK_FALSE(reparsed.dt_auto);
    CHECK(reparsed.dt == doctest::Approx(0.5));
    CHECK_FALSE(reparsed.seed_width_auto);
}

TEST_CASE("overrides replace values and keep validation") {
    auto cfg = RunConfig::parse_text(kMinimalConfig);
    cfg.apply_override("params.mirror_R=0.5");
    CHECK(cfg.params.mirror_R == doctest::Approx(0.5));
    CHECK_THROWS_AS(cfg.apply_override("nonsense"), droplet::ConfigError);
    CHECK_THROWS_AS(cfg.apply_override("bogus.key=1"), droplet::ConfigError);
}

TEST_CASE("invalid reflectivity is reported naming mirror_R") {
    auto cfg = RunConfig::parse_text(kMinimalConfig);
    cfg.apply_override("params.mirror_R=1.5");
    std::ostringstream report;
    const auto outcome = droplet::run(cfg, report);
    CHECK(outcome.status == droplet::RunStatus::ConfigFailure);
    CHECK(outcome.message.find("mirror_R") != std::string::npos);
}

TEST_CASE("predict mode reports derived quantities without simulating") {
    TempDir tmp("predict");
    auto cfg = RunConfig::parse_text(kMinimalConfig);
    cfg.output_dir = (tmp.path / "out").string();
    std::ostringstream report;
    const auto outcome = droplet::run(cfg, report);
    REQUIRE(outcome.status == droplet::RunStatus::Ok);
    const std::string text = report.str();
    CHECK(text.find("derived.p_th = 2.3030303030303") != std::string::npos);
    CHECK(text.find("derived.predicted_width = 0.5637") != std::string::npos);
    CHECK(text.find("derived.t_limit = 440800.49") != std::string::npos);
    CHECK(text.find("derived.heating_ok = true") != std::string::npos);

    const std::string manifest = slurp(fs::path(cfg.output_dir) / "manifest.txt");
    CHECK(manifest.find("p_th = 2*omega_r_bar/(b0*mirror_R)") != std::string::npos);
    CHECK(manifest.find("mode = predict") != std::string::npos);
}

TEST_CASE("anchors enter the manifest with unit conversions") {
    TempDir tmp("anchors");
    auto cfg = RunConfig::parse_text(kMinimalConfig);
    cfg.apply_override("anchors.lambda0=852e-9");
    cfg.apply_override("anchors.d_mirror=7.4e-6");
    cfg.apply_override("anchors.gamma=3.2811e7");
    cfg.apply_override("anchors.mass=2.20695e-25");
    cfg.output_dir = (tmp.path / "out").string();
    std::ostringstream report;
    const auto outcome = droplet::run(cfg, report);
    REQUIRE(outcome.status == droplet::RunStatus::Ok);
    const std::string text = report.str();
    CHECK(text.find("derived.q_c") != std::string::npos);
    CHECK(text.find("derived.lambda_c") != std::string::npos);
    CHECK(text.find("derived.omega_r_bar_anchors = 1.139") != std::string::npos);
}

TEST_CASE("evolve mode writes deterministic artifacts" * doctest::timeout(300)) {
    auto make_cfg = [&](const std::string& dir) {
        auto cfg = RunConfig::parse_text(kMinimalConfig);
        cfg.mode = RunConfig::Mode::Evolve;
        cfg.grid_n_points = 128;
        cfg.grid_length = 4.0 * 6.283185307179586;
        cfg.dt_auto = false;
        cfg.dt = 1.0;
        cfg.t_final = 500.0;
        cfg.snapshot_stride = 50;
        cfg.seed_width_auto = false;
        cfg.seed_width = 0.6;
        cfg.field_stride = 5;
        cfg.output_dir = dir;
        return cfg;
    };

    TempDir tmp("determinism");
    std::ostringstream rep1, rep2;
    const auto cfg1 = make_cfg((tmp.path / "run1").string());
    const auto cfg2 = make_cfg((tmp.path / "run2").string());
    REQUIRE(droplet::run(cfg1, rep1).status == droplet::RunStatus::Ok);
    REQUIRE(droplet::run(cfg2, rep2).status == droplet::RunStatus::Ok);

    const std::string ts1 = slurp(fs::path(cfg1.output_dir) / "timeseries.csv");
    const std::string ts2 = slurp(fs::path(cfg2.output_dir) / "timeseries.csv");
    CHECK(ts1 == ts2);
    CHECK(ts1.rfind("t,peak_position,width,norm\n", 0) == 0);

    // Snapshot files and their index exist per the schema.
    CHECK(fs::exists(fs::path(cfg1.output_dir) / "snap_000000.dat"));
    const std::string index = slurp(fs::path(cfg1.output_dir) / "snapshots_index.csv");
    CHECK(index.rfind("file,t\n", 0) == 0);
    const std::string snap = slurp(fs::path(cfg1.output_dir) / "snap_000000.dat");
    CHECK(snap.find("# columns: x re_psi im_psi density intensity_forward_image "
                    "intensity_backward") != std::string::npos);
    CHECK(fs::exists(fs::path(cfg1.output_dir) / "plots" / "density_map.dat"));
    CHECK(fs::exists(fs::path(cfg1.output_dir) / "plots" / "intensity_map.dat"));
}

TEST_CASE("output directory lock refuses concurrent use") {
    TempDir tmp("lock");
    auto cfg = RunConfig::parse_text(kMinimalConfig);
    cfg.output_dir = (tmp.path / "out").string();
    fs::create_directories(cfg.output_dir);
    std::ofstream(fs::path(cfg.output_dir) / ".dropletsim.lock") << "held\n";
    std::ostringstream report;
    const auto outcome = droplet::run(cfg, report);
    CHECK(outcome.status == droplet::RunStatus::ConfigFailure);
    CHECK(outcome.message.find("locked") != std::string::npos);
}

TEST_CASE("ground_state mode at weak pumping reports no droplet solution") {
    TempDir tmp("nodroplet");
    auto cfg = RunConfig::parse_text(kMinimalConfig);
    cfg.mode = RunConfig::Mode::GroundState;
    cfg.grid_n_points = 64;
    cfg.grid_length = 2.0 * 6.283185307179586;
    cfg.params.p0 = 1.15e-8;  // ≈ 0.05·p_th: below the subcritical droplet fold
    cfg.seed_width_auto = false;
    cfg.seed_width = 0.6;
    cfg.relax_dt = 20.0;
    cfg.relax_max_steps = 400000;
    cfg.relax_tol = 1e-8;
    cfg.output_dir = (tmp.path / "out").string();
    std::ostringstream report;
    const auto outcome = droplet::run(cfg, report);
    CHECK(outcome.status == droplet::RunStatus::PhysicsAbort);
    CHECK(outcome.message.find("no droplet solution") != std::string::npos);
    const std::string manifest = slurp(fs::path(cfg.output_dir) / "manifest.txt");
    CHECK(manifest.find("result.relax_outcome = no_droplet_solution") != std::string::npos);
    CHECK(fs::exists(fs::path(cfg.output_dir) / "ground_state.dat"));
}

TEST_CASE("boundary-guard abort surfaces as a physics-validity status") {
    TempDir tmp("guard");
    auto cfg = RunConfig::parse_text(kMinimalConfig);
    cfg.mode = RunConfig::Mode::Evolve;
    cfg.grid_n_points = 512;
    cfg.grid_length = 4.0 * 6.283185307179586;
    cfg.params.p0 = 0.0;
    cfg.params.a_bar = 1e-3;
    cfg.dt_auto = false;
    cfg.dt = 1.0;
    cfg.t_final = 5.0e4;
    cfg.snapshot_stride = 500;
    cfg.seed_width_auto = false;
    cfg.seed_width = 0.562;
    cfg.track = droplet::IntensityKind::ImagePlaneForward;
    cfg.field_stride = 0;
    cfg.output_dir = (tmp.path / "out").string();
    std::ostringstream report;
    const auto outcome = droplet::run(cfg, report);
    CHECK(outcome.status == droplet::RunStatus::PhysicsAbort);
    CHECK(outcome.message.find("density peak") != std::string::npos);
    // Partial artifacts are still on disk.
    CHECK(fs::exists(fs::path(cfg.output_dir) / "timeseries.csv"));
    const std::string manifest = slurp(fs::path(cfg.output_dir) / "manifest.txt");
    CHECK(manifest.find("result.stop = boundary_guard") != std::string::npos);
}

TEST_CASE("threshold_scan mode writes the scan table") {
    TempDir tmp("scan");
    auto cfg = RunConfig::parse_text(kMinimalConfig);
    cfg.mode = RunConfig::Mode::ThresholdScan;
    cfg.scan_p0_factors = {0.5, 2.0};
    cfg.output_dir = (tmp.path / "out").string();
    std::ostringstream report;
    const auto outcome = droplet::run(cfg, report);
    REQUIRE(outcome.status == droplet::RunStatus::Ok);
    const std::string csv = slurp(fs::path(cfg.output_dir) / "scan.csv");
    CHECK(csv.rfind("p0,p0_over_p_th,growth_rate,grew", 0) == 0);
    CHECK(csv.find("false") != std::string::npos);
    CHECK(csv.find("true") != std::string::npos);
}
