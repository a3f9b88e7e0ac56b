#include "mmreg/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "mmreg/sampling.hpp"

namespace mmreg {

void PhantomSpec::validate() const {
    if (dims.nx < 8 || dims.ny < 8 || dims.nz < 8)
        throw ValidationError("phantom: dims must be >= 8 per axis, got " + dims.to_string());
    if (channels != 1 && channels != 2)
        throw ValidationError("phantom: channels must be 1 or 2, got " +
                              std::to_string(channels));
    for (double s : spacing)
        if (!(s > 0.0) || !std::isfinite(s))
            throw ValidationError("phantom: spacing components must be finite and > 0");
    if (control_grid < 2)
        throw ValidationError("phantom: control_grid must be >= 2");
    if (!(max_amplitude >= 0.0) || !std::isfinite(max_amplitude))
        throw ValidationError("phantom: max_amplitude must be finite and >= 0");
    if (n_landmarks < 1) throw ValidationError("phantom: n_landmarks must be >= 1");
    if (n_blobs < 1) throw ValidationError("phantom: n_blobs must be >= 1");
}

std::array<double, 3> PhantomModel::field_at(double x, double y, double z) const {
    if (field_scale == 0.0) return {0.0, 0.0, 0.0};
    const int c = control_grid;
    const Dims cd{c, c, c};
    const double cx = x * (c - 1) / (dims.nx - 1);
    const double cy = y * (c - 1) / (dims.ny - 1);
    const double cz = z * (c - 1) / (dims.nz - 1);
    return {field_scale * detail::interp_block(control[0].data(), cd, cx, cy, cz),
            field_scale * detail::interp_block(control[1].data(), cd, cx, cy, cz),
            field_scale * detail::interp_block(control[2].data(), cd, cx, cy, cz)};
}

double PhantomModel::scene_at(double x, double y, double z, int channel) const {
    double s = ramp_coeff *
               (x / (dims.nx - 1) + y / (dims.ny - 1) + z / (dims.nz - 1)) / 3.0;
    for (const auto& blob : blobs) {
        const double dx = x - blob.center[0];
        const double dy = y - blob.center[1];
        const double dz = z - blob.center[2];
        const double d2 = dx * dx + dy * dy + dz * dz;
        s += blob.amplitude * std::exp(-d2 / (2.0 * blob.sigma * blob.sigma));
    }
    if (channel == 1) {
        const double t = s + channel2_offset;
        return t * t;
    }
    return s;
}

PhantomModel build_model(const PhantomSpec& spec) {
    spec.validate();
    SplitMix64 rng(spec.seed);

    PhantomModel model;
    model.dims = spec.dims;
    model.control_grid = spec.control_grid;

    // Control vectors, x fastest. Unit directions (area-uniform on the
    // sphere) keep |g| close to its peak across the whole volume, so the
    // field magnitude is not dominated by a few spots.
    const std::size_t n_ctrl = static_cast<std::size_t>(spec.control_grid) *
                               spec.control_grid * spec.control_grid;
    for (auto& comp : model.control) comp.resize(n_ctrl);
    for (std::size_t i = 0; i < n_ctrl; ++i) {
        const double zc = rng.uniform(-1.0, 1.0);
        const double phi = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        const double rc = std::sqrt(std::max(0.0, 1.0 - zc * zc));
        model.control[0][i] = rc * std::cos(phi);
        model.control[1][i] = rc * std::sin(phi);
        model.control[2][i] = zc;
    }

    // Peak magnitude of the raw interpolated field over the dense lattice.
    model.field_scale = 1.0;
    double max_mag = 0.0;
    for (int z = 0; z < spec.dims.nz; ++z)
        for (int y = 0; y < spec.dims.ny; ++y)
            for (int x = 0; x < spec.dims.nx; ++x) {
                const auto g = model.field_at(x, y, z);
                max_mag = std::max(max_mag,
                                   std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]));
            }
    model.field_scale = (spec.max_amplitude > 0.0 && max_mag > 0.0)
                            ? spec.max_amplitude / max_mag
                            : 0.0;

    const int min_dim = std::min({spec.dims.nx, spec.dims.ny, spec.dims.nz});
    model.blobs.resize(spec.n_blobs);
    for (auto& blob : model.blobs) {
        blob.center[0] = rng.uniform(0.12 * (spec.dims.nx - 1), 0.88 * (spec.dims.nx - 1));
        blob.center[1] = rng.uniform(0.12 * (spec.dims.ny - 1), 0.88 * (spec.dims.ny - 1));
        blob.center[2] = rng.uniform(0.12 * (spec.dims.nz - 1), 0.88 * (spec.dims.nz - 1));
        blob.sigma = rng.uniform(0.055, 0.13) * min_dim;
        blob.amplitude = rng.uniform(0.35, 1.0);
    }

    if (spec.channels == 2) model.channel2_offset = rng.uniform(0.25, 0.75);

    return model;
}

namespace {

LandmarkSet draw_landmarks(const PhantomSpec& spec, const DisplacementField& gt,
                           SplitMix64& rng) {
    const int margin = static_cast<int>(std::ceil(spec.max_amplitude)) + 2;
    const int hi_x = spec.dims.nx - 1 - margin;
    const int hi_y = spec.dims.ny - 1 - margin;
    const int hi_z = spec.dims.nz - 1 - margin;
    if (hi_x < margin || hi_y < margin || hi_z < margin)
        throw ValidationError("phantom: dims " + spec.dims.to_string() +
                              " too small to place landmarks with margin " +
                              std::to_string(margin));

    LandmarkSet landmarks;
    std::set<std::array<int, 3>> used;
    for (int i = 0; i < spec.n_landmarks; ++i) {
        std::array<int, 3> pos{};
        int attempts = 0;
        do {
            pos = {rng.uniform_int(margin, hi_x), rng.uniform_int(margin, hi_y),
                   rng.uniform_int(margin, hi_z)};
            if (++attempts > 10000)
                throw ValidationError("phantom: cannot place " +
                                      std::to_string(spec.n_landmarks) +
                                      " distinct landmarks inside the margin");
        } while (!used.insert(pos).second);

        Landmark lm;
        lm.id = "L" + std::to_string(i + 1);
        lm.fixed = {static_cast<double>(pos[0]), static_cast<double>(pos[1]),
                    static_cast<double>(pos[2])};
        // Moving counterpart uses the stored (float32-quantized) field value
        // at the lattice point, so TRE under gt_field is exactly zero.
        for (int k = 0; k < 3; ++k)
            lm.moving[k] = lm.fixed[k] + gt.at(pos[0], pos[1], pos[2], k);
        landmarks.entries.push_back(std::move(lm));
    }
    landmarks.validate();
    return landmarks;
}

}  // namespace

PhantomCase generate(const PhantomSpec& spec) {
    spec.validate();
    const PhantomModel model = build_model(spec);

    // Continue the same stream past the model draws for the landmarks.
    SplitMix64 rng(spec.seed);
    {
        const std::size_t model_draws =
            static_cast<std::size_t>(spec.control_grid) * spec.control_grid *
                spec.control_grid * 2 +
            static_cast<std::size_t>(spec.n_blobs) * 5 + (spec.channels == 2 ? 1 : 0);
        for (std::size_t i = 0; i < model_draws; ++i) rng.next_u64();
    }

    PhantomCase out;
    out.gt_field = DisplacementField::zeros(spec.dims);
    Volume fixed_raw = Volume::zeros(spec.dims, spec.channels, spec.spacing);
    Volume moving_raw = Volume::zeros(spec.dims, spec.channels, spec.spacing);

    for (int z = 0; z < spec.dims.nz; ++z)
        for (int y = 0; y < spec.dims.ny; ++y)
            for (int x = 0; x < spec.dims.nx; ++x) {
                const auto g = model.field_at(x, y, z);
                for (int k = 0; k < 3; ++k) out.gt_field.at(x, y, z, k) = quantize_f32(g[k]);
                for (int c = 0; c < spec.channels; ++c) {
                    moving_raw.at(x, y, z, c) = model.scene_at(x, y, z, c);
                    fixed_raw.at(x, y, z, c) =
                        model.scene_at(x + g[0], y + g[1], z + g[2], c);
                }
            }

    out.fixed = normalize(fixed_raw);
    out.moving = normalize(moving_raw);
    for (double& v : out.fixed.data) v = quantize_f32(v);
    for (double& v : out.moving.data) v = quantize_f32(v);

    out.landmarks = draw_landmarks(spec, out.gt_field, rng);
    return out;
}

}  // namespace mmreg
