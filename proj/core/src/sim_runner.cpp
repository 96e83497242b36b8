#include "droplet/sim_runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <vector>

#include "droplet/accel_sensing.hpp"
#include "droplet/bec_dynamics.hpp"
#include "droplet/droplet_analysis.hpp"

namespace droplet {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Exclusive ownership of an output directory for the duration of a run.
class LockFile {
public:
    LockFile() = default;

    void acquire(const fs::path& dir) {
        path_ = dir / ".dropletsim.lock";
        std::error_code ec;
        if (fs::exists(path_, ec)) {
            throw ConfigError("output.dir '" + dir.string() +
                              "' is locked by another run (remove " + path_.string() +
                              " if that run is dead)");
        }
        std::ofstream lock(path_);
        if (!lock) {
            throw ConfigError("cannot create lockfile in output.dir '" + dir.string() + "'");
        }
        lock << "pid-less lock; one run per output directory\n";
        owned_ = true;
    }

    ~LockFile() {
        if (owned_) {
            std::error_code ec;
            fs::remove(path_, ec);
        }
    }

    LockFile(const LockFile&) = delete;
    LockFile& operator=(const LockFile&) = delete;

private:
    fs::path path_;
    bool owned_ = false;
};

void write_snapshot_file(const fs::path& path, const SnapshotSink::Frame& frame,
                         const SpectralGrid& grid) {
    std::ofstream out(path);
    out << "# t = " << fmt(frame.t) << "\n";
    out << "# columns: x re_psi im_psi density intensity_forward_image intensity_backward\n";
    for (int j = 0; j < grid.n_points(); ++j) {
        out << fmt(grid.x()[j]) << ' ' << fmt(frame.psi[j].real()) << ' '
            << fmt(frame.psi[j].imag()) << ' ' << fmt(frame.density[j]) << ' '
            << fmt(frame.image_intensity.empty() ? 0.0 : frame.image_intensity[j]) << ' '
            << fmt(frame.backward_intensity[j]) << "\n";
    }
}

// Writes full-field snapshot files at a coarse cadence and retains
// downsampled raster rows for the plot emitter.
class FileSink : public SnapshotSink {
public:
    FileSink(fs::path dir, const SpectralGrid& grid, int field_stride, long expected_frames,
             bool keep_rasters)
        : dir_(std::move(dir)), grid_(grid), field_stride_(field_stride) {
        raster_keep_ = std::max<long>(1, (expected_frames + kMaxRasterRows - 1) / kMaxRasterRows);
        keep_rasters_ = keep_rasters;
    }

    void on_snapshot(const Frame& frame) override {
        if (field_stride_ > 0 && frame_index_ % field_stride_ == 0) {
            char name[32];
            std::snprintf(name, sizeof(name), "snap_%06ld.dat", file_index_);
            write_snapshot_file(dir_ / name, frame, grid_);
            index_.emplace_back(name, frame.t);
            ++file_index_;
        }
        if (keep_rasters_ && frame_index_ % raster_keep_ == 0) {
            raster_times_.push_back(frame.t);
            density_rows_.emplace_back(frame.density.begin(), frame.density.end());
            intensity_rows_.emplace_back(frame.image_intensity.begin(),
                                         frame.image_intensity.end());
        }
        ++frame_index_;
    }

    void write_index() const {
        if (field_stride_ <= 0) return;
        std::ofstream out(dir_ / "snapshots_index.csv");
        out << "file,t\n";
        for (const auto& [name, t] : index_) out << name << ',' << fmt(t) << "\n";
    }

    void write_rasters(const fs::path& plot_dir) const {
        if (!keep_rasters_ || raster_times_.empty()) return;
        auto write_matrix = [&](const fs::path& path,
                                const std::vector<std::vector<double>>& rows) {
            std::ofstream out(path);
            // gnuplot "nonuniform matrix": first row is n_cols then the x grid.
            out << grid_.n_points();
            for (int j = 0; j < grid_.n_points(); ++j) out << ' ' << fmt(grid_.x()[j]);
            out << "\n";
            for (size_t r = 0; r < rows.size(); ++r) {
                out << fmt(raster_times_[r]);
                for (double v : rows[r]) out << ' ' << fmt(v);
                out << "\n";
            }
        };
        write_matrix(plot_dir / "density_map.dat", density_rows_);
        write_matrix(plot_dir / "intensity_map.dat", intensity_rows_);
    }

private:
    static constexpr long kMaxRasterRows = 256;

    fs::path dir_;
    const SpectralGrid& grid_;
    int field_stride_;
    long raster_keep_ = 1;
    bool keep_rasters_ = true;
    long frame_index_ = 0;
    long file_index_ = 0;
    std::vector<std::pair<std::string, double>> index_;
    std::vector<double> raster_times_;
    std::vector<std::vector<double>> density_rows_;
    std::vector<std::vector<double>> intensity_rows_;
};

void write_timeseries(const fs::path& path, const TrajectoryRecord& record) {
    std::ofstream out(path);
    out << "t,peak_position,width,norm\n";
    for (size_t i = 0; i < record.size(); ++i) {
        out << fmt(record.times[i]) << ',' << fmt(record.peak_positions[i]) << ','
            << fmt(record.widths[i]) << ',' << fmt(record.norms[i]) << "\n";
    }
}

void write_trajectory_fit(const fs::path& path, const TrajectoryRecord& record,
                          const AccelEstimate& est) {
    std::ofstream out(path);
    const double two_pi = 2.0 * std::numbers::pi;
    out << "# gradient = " << fmt(est.gradient) << " (slope of x/Lambda_c against t^2)\n";
    out << "# a_bar_hat = " << fmt(est.a_bar_hat) << "\n";
    out << "# columns: t_sq x_over_lambda_c fit_over_lambda_c\n";
    const double c0 = record.size() ? record.peak_positions.front() : 0.0;
    for (size_t i = 0; i < record.size(); ++i) {
        const double t = record.times[i];
        const double fit_x = c0 + est.velocity_term * t + est.gradient * two_pi * t * t;
        out << fmt(t * t) << ' ' << fmt(record.peak_positions[i] / two_pi) << ' '
            << fmt(fit_x / two_pi) << "\n";
    }
}

Wavefunction load_state_file(const std::string& path, const SpectralGrid& grid, WarningLog* log) {
    std::ifstream in(path);
    if (!in) throw ConfigError("seed.file: cannot open '" + path + "'");
    Wavefunction wf;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream row(line);
        double x, re, im;
        if (row >> x >> re >> im) wf.psi.emplace_back(re, im);
    }
    if (wf.psi.size() != static_cast<size_t>(grid.n_points())) {
        throw ConfigError("seed.file '" + path + "' holds " + std::to_string(wf.psi.size()) +
                          " samples, grid.n_points is " + std::to_string(grid.n_points()));
    }
    const double mean = mean_density(wf);
    if (std::abs(mean - 1.0) > 1e-6) {
        warn(log, "seed.file: renormalized mean density from " + std::to_string(mean) + " to 1");
    }
    normalize_mean_density(wf);
    return wf;
}

struct Derived {
    double chi0 = 0.0;
    double p_th = std::numeric_limits<double>::infinity();
    double predicted_sigma = std::numeric_limits<double>::quiet_NaN();
    HeatingBudget budget{};
    std::optional<CriticalScales> scales;
    double omega_r_from_anchors = std::numeric_limits<double>::quiet_NaN();
};

Derived compute_derived(const RunConfig& cfg) {
    Derived d;
    d.chi0 = cfg.params.chi0();
    if (cfg.params.mirror_R > 0.0) {
        d.p_th = pump_threshold(cfg.params);
        if (cfg.params.p0 > d.p_th) {
            d.predicted_sigma = std::pow(cfg.params.p0 / d.p_th, -0.25);
        }
    }
    d.budget = heating_budget(cfg.params, cfg.t_final);
    if (cfg.anchors.has_value()) {
        d.scales = critical_wavenumber(*cfg.anchors);
        constexpr double hbar = 1.054571817e-34;
        d.omega_r_from_anchors = hbar * d.scales->q_c * d.scales->q_c /
                                 (2.0 * cfg.anchors->mass * cfg.anchors->gamma);
    }
    return d;
}

void print_derived_block(std::ostream& out, const RunConfig& cfg, const Derived& d,
                         double dt_used) {
    out << "derived.chi0 = " << fmt(d.chi0) << "  # chi0 = b0/(2*delta)\n";
    out << "derived.p_th = " << fmt(d.p_th)
        << "  # p_th = 2*omega_r_bar/(b0*mirror_R); infinite at R=0 (no instability without "
           "feedback)\n";
    out << "derived.p0_over_p_th = " << fmt(cfg.params.p0 / d.p_th) << "\n";
    out << "derived.predicted_width = " << fmt(d.predicted_sigma)
        << "  # sigma_x = (p0/p_th)^(-1/4), asymptotic in p0 >> p_th\n";
    out << "derived.r_s_over_gamma = " << fmt(d.budget.r_s_over_gamma)
        << "  # r_s/Gamma = (1+R)*p0/2\n";
    out << "derived.t_limit = " << fmt(d.budget.t_limit) << "  # t_limit = 2/((1+R)*p0)\n";
    out << "derived.heating_ok = " << (d.budget.ok ? "true" : "false")
        << "  # t_final < t_limit\n";
    if (dt_used > 0.0) {
        out << "derived.dt_used = " << fmt(dt_used) << "  # evolution.dt after auto probe\n";
    }
    const double dx = cfg.grid_length / cfg.grid_n_points;
    out << "derived.a_min_detectable = " << fmt(dx / (cfg.params.omega_r_bar * cfg.t_final * cfg.t_final))
        << "  # dx/(omega_r_bar*t_final^2)\n";
    if (d.scales.has_value()) {
        out << "derived.q_c = " << fmt(d.scales->q_c)
            << "  # q_c = sqrt(pi*k0/(2*d_mirror)), k0 = 2*pi/lambda0 [1/m]\n";
        out << "derived.lambda_c = " << fmt(d.scales->lambda_c) << "  # 2*pi/q_c [m]\n";
        out << "derived.omega_r_bar_anchors = " << fmt(d.omega_r_from_anchors)
            << "  # hbar*q_c^2/(2*mass*gamma)\n";
        out << "derived.x_scale = " << fmt(1.0 / d.scales->q_c) << "  # metres per unit x_bar\n";
        out << "derived.t_scale = " << fmt(1.0 / cfg.anchors->gamma)
            << "  # seconds per unit t_bar\n";
        constexpr double hbar = 1.054571817e-34;
        out << "derived.a_scale = "
            << fmt(hbar * d.scales->q_c * cfg.anchors->gamma / cfg.anchors->mass)
            << "  # (m/s^2) per unit a_bar = hbar*q_c*gamma/mass\n";
    }
}

void write_manifest(const fs::path& dir, const RunConfig& cfg, const Derived& derived,
                    double dt_used, const WarningLog& warnings,
                    const std::vector<std::pair<std::string, std::string>>& results) {
    std::ofstream out(dir / "manifest.txt");
    out << "# dropletsim run manifest (canonical config, derived quantities, results)\n";
    out << cfg.canonical();
    out << "# --- derived quantities ---\n";
    print_derived_block(out, cfg, derived, dt_used);
    out << "# --- results ---\n";
    for (const auto& [k, v] : results) out << "result." << k << " = " << v << "\n";
    if (!warnings.empty()) {
        out << "# --- warnings ---\n";
        for (const auto& w : warnings) out << "warning = " << w << "\n";
    }
}

Wavefunction build_seed(const RunConfig& cfg, const SpectralGrid& grid, const Derived& derived,
                        WarningLog* log) {
    switch (cfg.seed_profile) {
        case RunConfig::SeedProfile::Homogeneous:
            return homogeneous_state(grid);
        case RunConfig::SeedProfile::File:
            return load_state_file(cfg.seed_file, grid, log);
        case RunConfig::SeedProfile::Gaussian:
        default: {
            double width = cfg.seed_width;
            if (cfg.seed_width_auto) {
                if (!std::isfinite(derived.predicted_sigma)) {
                    throw ConfigError(
                        "seed.width = auto needs p0 above threshold to predict a width; set "
                        "seed.width explicitly");
                }
                width = derived.predicted_sigma;
            }
            return gaussian_state(grid, cfg.seed_center, width);
        }
    }
}

double resolve_dt(const RunConfig& cfg, const Wavefunction& state, const SpectralGrid& grid,
                  const EvolutionConfig& evo, WarningLog* log, std::vector<std::string>* table) {
    if (!cfg.dt_auto) return cfg.dt;
    DtProbe probe = choose_dt(state, cfg.params, grid, evo, log);
    if (table != nullptr) *table = probe.report;
    return probe.dt;
}

EvolutionConfig evolution_config_of(const RunConfig& cfg) {
    EvolutionConfig evo;
    evo.dt = cfg.dt;
    evo.t_final = cfg.t_final;
    evo.snapshot_stride = cfg.snapshot_stride;
    evo.mode = TimeMode::RealTime;
    evo.boundary_guard = cfg.boundary_guard;
    evo.track = cfg.track;
    return evo;
}

long expected_frames(const RunConfig& cfg, double dt) {
    const long steps = std::max<long>(1, std::llround(cfg.t_final / dt));
    return steps / cfg.snapshot_stride + 2;
}

RunStatus status_of_stop(StopReason stop) {
    switch (stop) {
        case StopReason::Completed: return RunStatus::Ok;
        case StopReason::BoundaryGuard: return RunStatus::PhysicsAbort;
        case StopReason::NumericalFailure: return RunStatus::NumericalFailure;
    }
    return RunStatus::NumericalFailure;
}

}  // namespace

RunOutcome run(const RunConfig& config, std::ostream& report) {
    RunOutcome outcome;
    LockFile lock;
    try {
        config.validate();
        const Derived derived = compute_derived(config);

        const bool needs_dir = (config.mode != RunConfig::Mode::Predict);
        fs::path dir;
        if (needs_dir || !config.output_dir.empty()) {
            if (config.output_dir.empty()) {
                throw ConfigError("output.dir is required for mode " + to_string(config.mode));
            }
            dir = config.output_dir;
            fs::create_directories(dir);
            lock.acquire(dir);
            outcome.output_dir = dir.string();
        }

        std::vector<std::pair<std::string, std::string>> results;

        switch (config.mode) {
            case RunConfig::Mode::Predict: {
                config.params.validate(&outcome.warnings);
                report << "# derived quantities for the configured parameters\n";
                print_derived_block(report, config, derived, 0.0);
                if (!dir.empty()) {
                    write_manifest(dir, config, derived, 0.0, outcome.warnings, results);
                }
                break;
            }

            case RunConfig::Mode::GroundState: {
                const SpectralGrid grid(config.grid_n_points, config.grid_length);
                Wavefunction seed = build_seed(config, grid, derived, &outcome.warnings);
                GroundStateOptions opts;
                opts.dt = config.relax_dt;
                opts.max_steps = config.relax_max_steps;
                auto ground = imaginary_time_ground_state(seed, config.params, grid,
                                                          config.relax_tol, opts,
                                                          &outcome.warnings);
                results.emplace_back("relax_steps", std::to_string(ground.steps));
                results.emplace_back("relax_change_rate", fmt(ground.final_change_rate));
                std::string outcome_name =
                    ground.outcome == GroundStateOutcome::Droplet       ? "droplet"
                    : ground.outcome == GroundStateOutcome::Homogeneous ? "no_droplet_solution"
                                                                        : "not_converged";
                results.emplace_back("relax_outcome", outcome_name);

                // Persist the state with its slaved fields in snapshot format.
                SplitStepper stepper(config.params, grid, ground.psi);
                const auto& fields = stepper.fields();
                std::vector<double> backward(grid.n_points()), image(grid.n_points());
                auto img = propagate_image(fields.f_trans, grid);
                for (int j = 0; j < grid.n_points(); ++j) {
                    backward[j] = std::norm(fields.b_field[j]);
                    image[j] = std::norm(img[j]);
                }
                SnapshotSink::Frame frame;
                frame.t = 0.0;
                frame.psi = ground.psi.psi;
                frame.density = stepper.density();
                frame.image_intensity = image;
                frame.backward_intensity = backward;
                write_snapshot_file(dir / "ground_state.dat", frame, grid);

                if (ground.outcome == GroundStateOutcome::Droplet) {
                    const auto fit = fit_gaussian(stepper.density(), grid);
                    results.emplace_back("width", fmt(fit.width));
                    results.emplace_back("center", fmt(fit.center));
                    results.emplace_back("amplitude", fmt(fit.amplitude));
                    const auto energy = energy_of(ground.psi, config.params, grid);
                    results.emplace_back("energy_total", fmt(energy.total));
                    report << "ground state: droplet, width = " << fmt(fit.width)
                           << " (predicted " << fmt(derived.predicted_sigma) << ")\n";
                } else if (ground.outcome == GroundStateOutcome::Homogeneous) {
                    outcome.status = RunStatus::PhysicsAbort;
                    outcome.message = "no droplet solution: relaxation reached the homogeneous "
                                      "state (p0 at or below threshold)";
                    report << outcome.message << "\n";
                } else {
                    outcome.status = RunStatus::NumericalFailure;
                    outcome.message = "imaginary-time relaxation did not converge within "
                                      "relax.max_steps";
                    report << outcome.message << "\n";
                }
                write_manifest(dir, config, derived, config.relax_dt, outcome.warnings, results);
                break;
            }

            case RunConfig::Mode::Evolve: {
                const SpectralGrid grid(config.grid_n_points, config.grid_length);
                Wavefunction seed = build_seed(config, grid, derived, &outcome.warnings);
                EvolutionConfig evo = evolution_config_of(config);
                std::vector<std::string> probe_table;
                evo.dt = resolve_dt(config, seed, grid, evo, &outcome.warnings, &probe_table);

                FileSink sink(dir, grid, config.field_stride, expected_frames(config, evo.dt),
                              config.plots);
                auto result = evolve(seed, config.params, grid, evo, &sink, &outcome.warnings);

                write_timeseries(dir / "timeseries.csv", result.record);
                sink.write_index();
                if (config.plots) {
                    fs::create_directories(dir / "plots");
                    sink.write_rasters(dir / "plots");
                }
                results.emplace_back("steps", std::to_string(result.steps_done));
                results.emplace_back("stop", result.stop == StopReason::Completed ? "completed"
                                             : result.stop == StopReason::BoundaryGuard
                                                 ? "boundary_guard"
                                                 : "numerical_failure");
                if (!result.record.widths.empty() && std::isfinite(result.record.widths.back())) {
                    results.emplace_back("final_width", fmt(result.record.widths.back()));
                }
                write_manifest(dir, config, derived, evo.dt, outcome.warnings, results);

                outcome.status = status_of_stop(result.stop);
                outcome.message = result.stop_detail;
                report << "evolve: " << result.steps_done << " steps, stop = "
                       << (result.stop == StopReason::Completed ? "completed" : result.stop_detail)
                       << "\n";
                break;
            }

            case RunConfig::Mode::Sense: {
                const SpectralGrid grid(config.grid_n_points, config.grid_length);
                SenseOptions options;
                options.seed_center = config.seed_center;
                options.relax_tol = config.relax_tol;
                options.relax.dt = config.relax_dt;
                options.relax.max_steps = config.relax_max_steps;
                if (!config.seed_width_auto) options.seed_width = config.seed_width;

                // Relax here so the auto-dt probe sees the droplet it will evolve.
                if (config.seed_profile == RunConfig::SeedProfile::File) {
                    options.initial_state = load_state_file(config.seed_file, grid,
                                                            &outcome.warnings);
                } else {
                    SystemParams relax_params = config.params;
                    relax_params.a_bar = 0.0;
                    if (!(relax_params.mirror_R > 0.0) ||
                        !(config.params.p0 > pump_threshold(relax_params))) {
                        throw ConfigError(
                            "sense: params.p0 does not exceed the pump threshold; no droplet to "
                            "track (use seed.profile = file to evolve a prepared state)");
                    }
                    double width = options.seed_width > 0.0 ? options.seed_width
                                                            : predicted_width(relax_params,
                                                                              &outcome.warnings);
                    auto ground = imaginary_time_ground_state(
                        gaussian_state(grid, config.seed_center, width), relax_params, grid,
                        config.relax_tol, options.relax, &outcome.warnings);
                    if (ground.outcome == GroundStateOutcome::Homogeneous) {
                        throw PhysicsError("sense: relaxation found no droplet solution");
                    }
                    options.initial_state = std::move(ground.psi);
                }

                EvolutionConfig evo = evolution_config_of(config);
                std::vector<std::string> probe_table;
                evo.dt = resolve_dt(config, *options.initial_state, grid, evo, &outcome.warnings,
                                    &probe_table);

                FileSink sink(dir, grid, config.field_stride, expected_frames(config, evo.dt),
                              config.plots);
                auto result = sense(config.params, grid, evo, options, &sink, &outcome.warnings);

                write_timeseries(dir / "timeseries.csv", result.evolution.record);
                sink.write_index();
                if (config.plots) {
                    fs::create_directories(dir / "plots");
                    sink.write_rasters(dir / "plots");
                    if (result.estimate.reliable) {
                        write_trajectory_fit(dir / "plots" / "trajectory_fit.dat",
                                             result.evolution.record, result.estimate);
                    }
                }

                {
                    std::ofstream est(dir / "estimate.txt");
                    const auto& e = result.estimate;
                    est << "a_bar_hat = " << fmt(e.a_bar_hat) << "\n";
                    est << "gradient = " << fmt(e.gradient)
                        << "  # slope of x/Lambda_c against t^2; a_bar = 2*pi*gradient/omega_r_bar\n";
                    est << "velocity_term = " << fmt(e.velocity_term) << "\n";
                    est << "rms_residual = " << fmt(e.rms_residual) << "\n";
                    est << "a_min_detectable = " << fmt(e.a_min_detectable)
                        << "  # dx/(omega_r_bar*t_max^2)\n";
                    est << "reliable = " << (e.reliable ? "true" : "false") << "\n";
                    if (!e.note.empty()) est << "note = " << e.note << "\n";
                    for (int a = 0; a < 3; ++a) {
                        for (int b = 0; b < 3; ++b) {
                            est << "cov_c" << a << "_c" << b << " = " << fmt(e.covariance[a][b])
                                << "\n";
                        }
                    }
                }

                results.emplace_back("a_bar_hat", fmt(result.estimate.a_bar_hat));
                results.emplace_back("gradient", fmt(result.estimate.gradient));
                results.emplace_back("velocity_term", fmt(result.estimate.velocity_term));
                results.emplace_back("rms_residual", fmt(result.estimate.rms_residual));
                results.emplace_back("reliable", result.estimate.reliable ? "true" : "false");
                if (!result.estimate.note.empty()) {
                    results.emplace_back("note", result.estimate.note);
                }
                results.emplace_back("relax_steps", std::to_string(result.relax_steps));
                if (config.anchors.has_value() && result.estimate.reliable) {
                    const auto phys = to_physical(config.params, *config.anchors, 0.0, 0.0,
                                                  result.estimate.a_bar_hat, &outcome.warnings);
                    results.emplace_back("a_physical_m_per_s2", fmt(phys.a));
                }
                write_manifest(dir, config, derived, evo.dt, outcome.warnings, results);

                outcome.status = status_of_stop(result.evolution.stop);
                outcome.message = result.evolution.stop_detail;
                report << "sense: a_bar_hat = " << fmt(result.estimate.a_bar_hat)
                       << ", gradient = " << fmt(result.estimate.gradient) << ", reliable = "
                       << (result.estimate.reliable ? "true" : "false") << "\n";
                if (!result.estimate.note.empty()) report << "note: " << result.estimate.note << "\n";
                break;
            }

            case RunConfig::Mode::ThresholdScan: {
                config.params.validate(&outcome.warnings);
                const SpectralGrid scan_grid(config.scan_n_points, config.scan_length);
                const double p_th = pump_threshold(config.params);
                std::vector<double> p0_values;
                p0_values.reserve(config.scan_p0_factors.size());
                for (double f : config.scan_p0_factors) p0_values.push_back(f * p_th);
                auto points = threshold_scan(config.params, p0_values, scan_grid,
                                             config.scan_probe_amplitude);

                std::ofstream csv(dir / "scan.csv");
                csv << "p0,p0_over_p_th,growth_rate,grew\n";
                for (const auto& pt : points) {
                    csv << fmt(pt.p0) << ',' << fmt(pt.p0 / p_th) << ',' << fmt(pt.growth_rate)
                        << ',' << (pt.grew ? "true" : "false") << "\n";
                }
                double largest_stable = 0.0, smallest_unstable =
                                                 std::numeric_limits<double>::infinity();
                for (const auto& pt : points) {
                    if (pt.growth_rate <= 0.0) largest_stable = std::max(largest_stable, pt.p0);
                    if (pt.growth_rate > 0.0) {
                        smallest_unstable = std::min(smallest_unstable, pt.p0);
                    }
                }
                results.emplace_back("largest_non_growing_p0", fmt(largest_stable));
                results.emplace_back("smallest_growing_p0", fmt(smallest_unstable));
                write_manifest(dir, config, derived, 0.0, outcome.warnings, results);
                report << "threshold scan: zero crossing bracketed in ("
                       << fmt(largest_stable / p_th) << ", " << fmt(smallest_unstable / p_th)
                       << ")·p_th\n";
                break;
            }
        }
    } catch (const ConfigError& e) {
        outcome.status = RunStatus::ConfigFailure;
        outcome.message = e.what();
    } catch (const PhysicsError& e) {
        outcome.status = RunStatus::PhysicsAbort;
        outcome.message = e.what();
    } catch (const FitError& e) {
        outcome.status = RunStatus::NumericalFailure;
        outcome.message = e.what();
    } catch (const NumericalError& e) {
        outcome.status = RunStatus::NumericalFailure;
        outcome.message = e.what();
    }
    return outcome;
}

RunOutcome run_convergence_probe(const RunConfig& config, std::ostream& report) {
    RunOutcome outcome;
    try {
        config.validate();
        const Derived derived = compute_derived(config);
        const SpectralGrid grid(config.grid_n_points, config.grid_length);

        Wavefunction state;
        if (config.mode == RunConfig::Mode::Sense &&
            config.seed_profile != RunConfig::SeedProfile::File) {
            SystemParams relax_params = config.params;
            relax_params.a_bar = 0.0;
            const double width = config.seed_width_auto ? predicted_width(relax_params, nullptr)
                                                        : config.seed_width;
            GroundStateOptions opts;
            opts.dt = config.relax_dt;
            opts.max_steps = config.relax_max_steps;
            auto ground = imaginary_time_ground_state(
                gaussian_state(grid, config.seed_center, width), relax_params, grid,
                config.relax_tol, opts, &outcome.warnings);
            state = std::move(ground.psi);
        } else {
            state = build_seed(config, grid, derived, &outcome.warnings);
        }

        EvolutionConfig evo = evolution_config_of(config);
        DtProbe probe = choose_dt(state, config.params, grid, evo, &outcome.warnings);
        for (const auto& line : probe.report) report << line << "\n";
        report << "accepted dt = " << fmt(probe.dt)
               << (probe.converged ? "" : " (probe budget exhausted, not converged)") << "\n";
    } catch (const ConfigError& e) {
        outcome.status = RunStatus::ConfigFailure;
        outcome.message = e.what();
    } catch (const PhysicsError& e) {
        outcome.status = RunStatus::PhysicsAbort;
        outcome.message = e.what();
    } catch (const NumericalError& e) {
        outcome.status = RunStatus::NumericalFailure;
        outcome.message = e.what();
    }
    return outcome;
}

}  // namespace droplet
