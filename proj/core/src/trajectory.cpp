#include "droplet/trajectory.hpp"

namespace droplet {

std::string to_string(IntensityKind kind) {
    switch (kind) {
        case IntensityKind::BackwardAtBec:
            return "backward_at_BEC";
        case IntensityKind::ImagePlaneForward:
            return "image_plane_forward";
    }
    return "unknown";
}

}  // namespace droplet
