#pragma once

#include <cstdint>
#include <vector>

#include "strefine/plane.hpp"

namespace strefine {

/// A textured background translating at constant sub-pixel velocity under a
/// slowly drifting, spatially varying brightness field.
struct SyntheticSequenceConfig {
    int width = 176;
    int height = 144;
    int frames = 100;
    double velocity_x = 1.25;  ///< samples per frame
    double velocity_y = 0.5;
    int texture_components = 10;
    double brightness_amplitude = 24.0;
    double brightness_wavelength = 96.0;  ///< samples
    double brightness_period = 40.0;      ///< frames
    double noise_sigma = 0.0;
    std::uint64_t seed = 1;
};

std::vector<LumaPlane> make_synthetic_sequence(const SyntheticSequenceConfig& config);

}  // namespace strefine
