#pragma once

#include <optional>
#include <string>
#include <vector>

#include "droplet/droplet_analysis.hpp"
#include "droplet/system_params.hpp"
#include "droplet/trajectory.hpp"

namespace droplet {

/// Flat key-value run description ("section.key = value" lines, '#' comments).
/// Unknown and duplicate keys are rejected; every accepted config emits an
/// identical canonical text form.
struct RunConfig {
    enum class Mode { Predict, GroundState, Evolve, Sense, ThresholdScan };
    enum class SeedProfile { Gaussian, Homogeneous, File };

    Mode mode = Mode::Sense;

    SystemParams params;

    int grid_n_points = 768;
    double grid_length = 75.398223686155035;  // 12 pattern periods

    bool dt_auto = true;
    double dt = 1.0;
    double t_final = 3.0e5;
    int snapshot_stride = 300;
    double boundary_guard = 0.8;
    IntensityKind track = IntensityKind::BackwardAtBec;

    SeedProfile seed_profile = SeedProfile::Gaussian;
    double seed_center = 0.0;
    bool seed_width_auto = true;
    double seed_width = 0.0;
    std::string seed_file;

    double relax_tol = 1e-6;
    double relax_dt = 1.0;
    long relax_max_steps = 400000;

    std::vector<double> scan_p0_factors = {0.5, 0.8, 1.25, 2.0};
    double scan_probe_amplitude = 1e-4;
    int scan_n_points = 32;
    double scan_length = 6.283185307179586;

    std::optional<PhysicalAnchors> anchors;

    std::string output_dir;
    int field_stride = 50;  ///< record points between full-field snapshot files; 0 = none
    bool plots = true;

    /// Structural validation (ranges, mode-dependent requirements).
    void validate() const;

    /// Canonical text form: fixed key order, 17 significant digits.
    std::string canonical() const;

    static RunConfig parse_text(const std::string& text);
    static RunConfig parse_file(const std::string& path);

    /// Applies "key=value" overrides on top of the parsed config.
    void apply_override(const std::string& assignment);
};

std::string to_string(RunConfig::Mode mode);
std::string to_string(RunConfig::SeedProfile profile);

}  // namespace droplet
