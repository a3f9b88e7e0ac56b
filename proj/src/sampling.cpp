#include "mmreg/sampling.hpp"

#include <algorithm>
#include <cmath>

namespace mmreg {

namespace {

struct AxisWeights {
    int i0 = 0;      // lower cell corner
    int i1 = 0;      // upper cell corner
    double f = 0.0;  // fractional offset in [0,1]
    bool clamped = false;
};

// Clamp to [0, n-1], then pick the cell [i0, i0+1] containing the
// coordinate. floor() puts exact lattice points at the lower corner of the
// upper cell, which keeps interpolation exact at grid nodes.
AxisWeights interp_axis(double x, int n) {
    AxisWeights w;
    if (n == 1) {
        w.clamped = true;
        return w;
    }
    if (x <= 0.0) {
        w.clamped = (x < 0.0);
        w.i0 = 0;
        w.i1 = 1;
        w.f = 0.0;
        return w;
    }
    if (x >= static_cast<double>(n - 1)) {
        w.clamped = (x > static_cast<double>(n - 1));
        w.i0 = n - 2;
        w.i1 = n - 1;
        w.f = 1.0;
        return w;
    }
    int i0 = static_cast<int>(std::floor(x));
    if (i0 > n - 2) i0 = n - 2;
    w.i0 = i0;
    w.i1 = i0 + 1;
    w.f = x - static_cast<double>(i0);
    return w;
}

// Same clamping, but exact lattice points resolve to the lower cell so the
// one-sided derivative is deterministic at faces.
AxisWeights gradient_axis(double x, int n) {
    AxisWeights w;
    if (n == 1) {
        w.clamped = true;
        return w;
    }
    if (x <= 0.0) {
        w.clamped = (x < 0.0);
        w.i0 = 0;
        w.i1 = 1;
        w.f = 0.0;
        return w;
    }
    if (x >= static_cast<double>(n - 1)) {
        w.clamped = (x > static_cast<double>(n - 1));
        w.i0 = n - 2;
        w.i1 = n - 1;
        w.f = 1.0;
        return w;
    }
    double fl = std::floor(x);
    int i0 = static_cast<int>(fl);
    if (x == fl) i0 -= 1;  // tie toward the lower cell
    i0 = std::clamp(i0, 0, n - 2);
    w.i0 = i0;
    w.i1 = i0 + 1;
    w.f = x - static_cast<double>(i0);
    return w;
}

inline std::size_t block_index(const Dims& d, int x, int y, int z) {
    return (static_cast<std::size_t>(z) * d.ny + y) * d.nx + x;
}

}  // namespace

namespace detail {

double interp_block(const double* block, const Dims& dims, double x, double y, double z) {
    const AxisWeights wx = interp_axis(x, dims.nx);
    const AxisWeights wy = interp_axis(y, dims.ny);
    const AxisWeights wz = interp_axis(z, dims.nz);

    const double c000 = block[block_index(dims, wx.i0, wy.i0, wz.i0)];
    const double c100 = block[block_index(dims, wx.i1, wy.i0, wz.i0)];
    const double c010 = block[block_index(dims, wx.i0, wy.i1, wz.i0)];
    const double c110 = block[block_index(dims, wx.i1, wy.i1, wz.i0)];
    const double c001 = block[block_index(dims, wx.i0, wy.i0, wz.i1)];
    const double c101 = block[block_index(dims, wx.i1, wy.i0, wz.i1)];
    const double c011 = block[block_index(dims, wx.i0, wy.i1, wz.i1)];
    const double c111 = block[block_index(dims, wx.i1, wy.i1, wz.i1)];

    const double gx = 1.0 - wx.f, gy = 1.0 - wy.f, gz = 1.0 - wz.f;
    return gz * (gy * (gx * c000 + wx.f * c100) + wy.f * (gx * c010 + wx.f * c110)) +
           wz.f * (gy * (gx * c001 + wx.f * c101) + wy.f * (gx * c011 + wx.f * c111));
}

std::array<double, 3> interp_block_gradient(const double* block, const Dims& dims, double x,
                                            double y, double z) {
    const AxisWeights wx = gradient_axis(x, dims.nx);
    const AxisWeights wy = gradient_axis(y, dims.ny);
    const AxisWeights wz = gradient_axis(z, dims.nz);

    if (wx.clamped && wy.clamped && wz.clamped) return {0.0, 0.0, 0.0};

    const double c000 = block[block_index(dims, wx.i0, wy.i0, wz.i0)];
    const double c100 = block[block_index(dims, wx.i1, wy.i0, wz.i0)];
    const double c010 = block[block_index(dims, wx.i0, wy.i1, wz.i0)];
    const double c110 = block[block_index(dims, wx.i1, wy.i1, wz.i0)];
    const double c001 = block[block_index(dims, wx.i0, wy.i0, wz.i1)];
    const double c101 = block[block_index(dims, wx.i1, wy.i0, wz.i1)];
    const double c011 = block[block_index(dims, wx.i0, wy.i1, wz.i1)];
    const double c111 = block[block_index(dims, wx.i1, wy.i1, wz.i1)];

    const double gx = 1.0 - wx.f, gy = 1.0 - wy.f, gz = 1.0 - wz.f;

    std::array<double, 3> grad{0.0, 0.0, 0.0};
    if (!wx.clamped)
        grad[0] = gz * (gy * (c100 - c000) + wy.f * (c110 - c010)) +
                  wz.f * (gy * (c101 - c001) + wy.f * (c111 - c011));
    if (!wy.clamped)
        grad[1] = gz * (gx * (c010 - c000) + wx.f * (c110 - c100)) +
                  wz.f * (gx * (c011 - c001) + wx.f * (c111 - c101));
    if (!wz.clamped)
        grad[2] = gy * (gx * (c001 - c000) + wx.f * (c101 - c100)) +
                  wy.f * (gx * (c011 - c010) + wx.f * (c111 - c110));
    return grad;
}

}  // namespace detail

double sample(const Volume& v, SamplePoint p, int c) {
    const double* block = v.data.data() + v.dims.voxel_count() * static_cast<std::size_t>(c);
    return detail::interp_block(block, v.dims, p.x, p.y, p.z);
}

std::array<double, 3> sample_gradient(const Volume& v, SamplePoint p, int c) {
    const double* block = v.data.data() + v.dims.voxel_count() * static_cast<std::size_t>(c);
    return detail::interp_block_gradient(block, v.dims, p.x, p.y, p.z);
}

Volume warp(const Volume& v, const DisplacementField& u) {
    if (v.dims != u.dims)
        throw ShapeError("warp: volume dims " + v.dims.to_string() + " != field dims " +
                         u.dims.to_string());
    Volume out = Volume::zeros(v.dims, v.channels, v.spacing);
    const std::size_t nvox = v.dims.voxel_count();
    const double* ux = u.data.data();
    const double* uy = u.data.data() + nvox;
    const double* uz = u.data.data() + 2 * nvox;
    for (int c = 0; c < v.channels; ++c) {
        const double* block = v.data.data() + nvox * static_cast<std::size_t>(c);
        double* dst = out.data.data() + nvox * static_cast<std::size_t>(c);
        std::size_t i = 0;
        for (int z = 0; z < v.dims.nz; ++z)
            for (int y = 0; y < v.dims.ny; ++y)
                for (int x = 0; x < v.dims.nx; ++x, ++i)
                    dst[i] = detail::interp_block(block, v.dims, x + ux[i], y + uy[i],
                                                  z + uz[i]);
    }
    return out;
}

SamplePoint warp_point(const DisplacementField& u, SamplePoint p) {
    const std::size_t nvox = u.dims.voxel_count();
    SamplePoint out = p;
    out.x += detail::interp_block(u.data.data(), u.dims, p.x, p.y, p.z);
    out.y += detail::interp_block(u.data.data() + nvox, u.dims, p.x, p.y, p.z);
    out.z += detail::interp_block(u.data.data() + 2 * nvox, u.dims, p.x, p.y, p.z);
    return out;
}

}  // namespace mmreg
