// mmreg: similarity metrics, smoothness regularizer, and the combined
// bidirectional objective with analytic gradients.
#pragma once

#include <utility>
#include <vector>

#include "mmreg/types.hpp"

namespace mmreg {

// Per-metric similarity values (unweighted, in the order of the spec's
// metric list), the regularizer, and the weighted total.
struct LossBreakdown {
    std::vector<double> sim_forward;
    std::vector<double> sim_backward;
    double regularizer = 0.0;
    double total = 0.0;
};

struct LossGradients {
    DisplacementField grad_forward;
    DisplacementField grad_backward;
};

// Mean over all voxels and channels of (a-b)^2.
double mse(const Volume& a, const Volume& b);

// Local squared correlation loss: 1 - mean over voxels and channels of
// cc^2 computed over cubic windows of side `window` clipped to the grid.
// Range [0, 1]; affine intensity maps leave it near 0 for non-constant
// windows, constant images give exactly cc^2 = 0 via the eps guard.
double lncc(const Volume& a, const Volume& b, int window = 9, double eps = 1e-5);

// Mean squared forward difference of the field components over all axes;
// the divisor counts every included squared term.
double diffusion(const DisplacementField& u);

// The weighted combination: sum_n (sim_f[n]*w_n + sim_b[n]*w_n) + reg*lambda,
// accumulated in metric order. Shared by combined_loss and its tests.
double eq1_total(const LossSpec& spec, const std::vector<double>& sim_forward,
                 const std::vector<double>& sim_backward, double regularizer);

// Forward terms compare warp(X, u_fwd) against Y, backward terms
// warp(Y, u_bwd) against X; the regularizer averages the two fields.
LossBreakdown combined_loss(const Volume& X, const Volume& Y, const DisplacementField& u_fwd,
                            const DisplacementField& u_bwd, const LossSpec& spec);

// Same breakdown (identical accumulation) plus analytic gradients of the
// total with respect to each field.
std::pair<LossBreakdown, LossGradients> combined_loss_grad(const Volume& X, const Volume& Y,
                                                           const DisplacementField& u_fwd,
                                                           const DisplacementField& u_bwd,
                                                           const LossSpec& spec);

}  // namespace mmreg
