// mmreg: deterministic synthetic benchmark cases with exact ground truth.
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mmreg/types.hpp"

namespace mmreg {

// SplitMix64 (Steele, Lea, Flood 2014). Chosen so phantom bytes are
// reproducible across platforms and implementations; std::uniform_real
// distributions are implementation-defined and therefore avoided.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    // Uniform integer in [lo, hi] by modulo reduction (bias immaterial here,
    // determinism is what matters).
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(next_u64() %
                                     static_cast<std::uint64_t>(hi - lo + 1));
    }

private:
    std::uint64_t state_;
};

struct PhantomSpec {
    std::uint64_t seed = 1;
    Dims dims{48, 48, 48};
    int channels = 1;  // 1 or 2
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    int control_grid = 4;        // control points per axis for the deformation
    double max_amplitude = 4.0;  // peak displacement magnitude in voxels
    int n_landmarks = 6;
    int n_blobs = 12;

    void validate() const;
};

// Closed-form scene and deformation backing a phantom case. Exposed so
// tests can query the analytic ground truth directly.
struct PhantomModel {
    Dims dims;
    int control_grid = 4;
    // One block per vector component, each control_grid^3 long, x fastest.
    std::array<std::vector<double>, 3> control;
    double field_scale = 0.0;

    struct Blob {
        std::array<double, 3> center;
        double sigma = 1.0;
        double amplitude = 1.0;
    };
    std::vector<Blob> blobs;
    double ramp_coeff = 0.25;
    double channel2_offset = 0.5;

    // Smooth deformation g: control vectors trilinearly interpolated over
    // the volume, rescaled so the dense-lattice peak magnitude equals
    // max_amplitude.
    std::array<double, 3> field_at(double x, double y, double z) const;
    // Gaussian-blob scene plus a mild linear ramp; channel 1 is a monotone
    // square-plus-offset remap of channel 0.
    double scene_at(double x, double y, double z, int channel = 0) const;
};

struct PhantomCase {
    Volume fixed;
    Volume moving;
    DisplacementField gt_field;  // fixed-grid, voxel units
    LandmarkSet landmarks;
};

// Deterministic by seed, bitwise. Draw order: control vectors, blobs,
// channel-2 remap offset (2-channel specs only), landmark positions.
PhantomModel build_model(const PhantomSpec& spec);
PhantomCase generate(const PhantomSpec& spec);

// Round through float32; phantom volumes and fields are quantized at
// creation so they survive the float32 file format bitwise.
inline double quantize_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace mmreg
