// mmreg: trilinear interpolation, dense warping, and interpolant derivatives.
#pragma once

#include <array>

#include "mmreg/types.hpp"

namespace mmreg {

struct SamplePoint {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

// Trilinear interpolation of channel c at p. Coordinates outside the grid
// are clamped per-axis to [0, n-1] before interpolation (edge replication).
double sample(const Volume& v, SamplePoint p, int c = 0);

// Exact partial derivatives (d/dpx, d/dpy, d/dpz) of the trilinear
// interpolant at p. Piecewise constant per cell per axis; at exact cell
// faces the lower cell is used; clamped axes get zero derivative.
std::array<double, 3> sample_gradient(const Volume& v, SamplePoint p, int c = 0);

// Pull-back warp: out(p, c) = sample(v, p + u(p), c). Spacing copied from v.
Volume warp(const Volume& v, const DisplacementField& u);

// p + u interpolated at p (trilinear per component, clamped like sample).
SamplePoint warp_point(const DisplacementField& u, SamplePoint p);

namespace detail {

// Trilinear value/derivative on one contiguous nx*ny*nz block (a single
// channel of a Volume or one component of a DisplacementField).
double interp_block(const double* block, const Dims& dims, double x, double y, double z);
std::array<double, 3> interp_block_gradient(const double* block, const Dims& dims, double x,
                                            double y, double z);

}  // namespace detail

}  // namespace mmreg
