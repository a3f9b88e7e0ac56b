// mmreg: instance-specific optimization of the displacement fields — Adam
// steps under the combined loss, wrapped in a coarse-to-fine pyramid.
#pragma once

#include <vector>

#include "mmreg/loss.hpp"
#include "mmreg/types.hpp"

namespace mmreg {

// Raised when a loss or gradient turns non-finite. Carries the iteration
// index and the best fields seen up to the last finite iterate.
class OptimizationError : public Error {
public:
    OptimizationError(const std::string& msg, int iteration, DisplacementField last_fwd,
                      DisplacementField last_bwd)
        : Error(msg),
          iteration(iteration),
          last_fwd(std::move(last_fwd)),
          last_bwd(std::move(last_bwd)) {}

    int iteration = 0;
    DisplacementField last_fwd;
    DisplacementField last_bwd;
};

struct AdamState {
    std::vector<double> m;  // first moment
    std::vector<double> v;  // second moment
    long t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState for_field(const DisplacementField& field, const OptimConfig& cfg);
};

// One bias-corrected Adam update, in place. Throws OptimizationError on a
// non-finite gradient (iteration = current step counter).
void adam_step(DisplacementField& params, const DisplacementField& grads, AdamState& state,
               double lr);

struct RegistrationResult {
    DisplacementField u_fwd;
    DisplacementField u_bwd;
    // One vector of per-iteration breakdowns per pyramid level, coarsest
    // first; each holds the loss before the first step plus one entry per
    // step.
    std::vector<std::vector<LossBreakdown>> loss_trace;
    double best_loss = 0.0;  // minimum total at the final level
    double elapsed_seconds = 0.0;
};

// cfg.iterations Adam steps on both fields jointly at a single resolution.
// Returns the best-so-far iterate by total loss, so the result never loses
// to the initialization.
RegistrationResult instance_optimize(const Volume& X, const Volume& Y,
                                     const DisplacementField& init_fwd,
                                     const DisplacementField& init_bwd, const LossSpec& spec,
                                     const OptimConfig& cfg);

// Full coarse-to-fine registration: factor-2 average-pooled pyramid with
// cfg.levels levels, zero fields at the coarsest level, instance_optimize
// per level, trilinear field upsampling with voxel-unit rescaling between
// levels. ("register" itself is a C++ keyword.)
RegistrationResult register_pair(const Volume& X, const Volume& Y, const LossSpec& spec,
                                 const OptimConfig& cfg);

// 2x2x2 average pooling, truncating odd remainders; spacing doubles.
Volume downsample_volume(const Volume& v);

// Each component trilinearly resampled onto target_dims with coordinates
// scaled by source/target dim ratio, values scaled by target/source ratio.
DisplacementField upsample_field(const DisplacementField& u, Dims target_dims);

}  // namespace mmreg
