#pragma once

#include <string>
#include <vector>

namespace droplet {

/// Which optical observable the peak tracker follows.
enum class IntensityKind {
    BackwardAtBec,      ///< |B(x̄)|² at the BEC plane (default; exerts the structured force)
    ImagePlaneForward,  ///< |P[F_tr](x̄)|², one diffraction step past the cloud
};

std::string to_string(IntensityKind kind);

/// Time series harvested from one evolution run. Positions are the tracked
/// optical-intensity extremum, refined to sub-grid resolution and unwrapped
/// so consecutive samples differ by less than half a critical wavelength.
struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<double> peak_positions;
    std::vector<double> widths;  ///< fitted Gaussian σ_x̄ per snapshot (NaN when the fit failed)
    std::vector<double> norms;   ///< ∑|Ψ|²dx̄ per snapshot
    IntensityKind intensity_kind = IntensityKind::BackwardAtBec;

    bool tracking_ok = true;       ///< false once any extremum location failed or jumped ≥ π
    std::string tracking_note;     ///< why tracking degraded, when it did

    size_t size() const { return times.size(); }
};

}  // namespace droplet
