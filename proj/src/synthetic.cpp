#include "strefine/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace strefine {

std::vector<LumaPlane> make_synthetic_sequence(const SyntheticSequenceConfig& config)
{
    if (config.width <= 0 || config.height <= 0 || config.frames <= 0)
        throw std::invalid_argument("make_synthetic_sequence: dimensions and frame count must be positive");
    constexpr double two_pi = 2.0 * std::numbers::pi;

    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> freq(0.01, 0.12);  // cycles per sample
    std::uniform_real_distribution<double> amp(5.0, 14.0);
    std::uniform_real_distribution<double> phase(0.0, two_pi);
    std::uniform_int_distribution<int> sign(0, 1);

    struct Component {
        double fx, fy, a, phi;
    };
    std::vector<Component> texture;
    for (int i = 0; i < config.texture_components; ++i) {
        const double fx = freq(rng) * (sign(rng) ? 1.0 : -1.0);
        const double fy = freq(rng) * (sign(rng) ? 1.0 : -1.0);
        const double a = amp(rng);
        texture.push_back({fx, fy, a, phase(rng)});
    }
    const double light_phase_x = phase(rng);
    const double light_phase_y = phase(rng);
    std::normal_distribution<double> noise(0.0, config.noise_sigma > 0.0 ? config.noise_sigma : 1.0);

    std::vector<LumaPlane> frames;
    frames.reserve(std::size_t(config.frames));
    for (int t = 0; t < config.frames; ++t) {
        LumaPlane frame(config.width, config.height);
        const double ox = config.velocity_x * t;
        const double oy = config.velocity_y * t;
        const double drift = two_pi * t / config.brightness_period;
        for (int y = 0; y < config.height; ++y)
            for (int x = 0; x < config.width; ++x) {
                // Scene content moves with the camera; lighting stays put.
                const double sx = x + ox;
                const double sy = y + oy;
                double v = 128.0;
                for (const Component& c : texture)
                    v += c.a * std::sin(two_pi * (c.fx * sx + c.fy * sy) + c.phi);
                v += config.brightness_amplitude *
                     std::sin(two_pi * x / config.brightness_wavelength + light_phase_x + drift) *
                     std::cos(two_pi * y / (1.3 * config.brightness_wavelength) + light_phase_y - 0.7 * drift);
                if (config.noise_sigma > 0.0)
                    v += noise(rng);
                frame.at(x, y) = static_cast<unsigned char>(std::clamp(std::lround(v), 0L, 255L));
            }
        frames.push_back(std::move(frame));
    }
    return frames;
}

}  // namespace strefine
