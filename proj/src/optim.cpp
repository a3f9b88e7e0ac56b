#include "mmreg/optim.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "mmreg/sampling.hpp"

namespace mmreg {

AdamState AdamState::for_field(const DisplacementField& field, const OptimConfig& cfg) {
    AdamState s;
    s.m.assign(field.data.size(), 0.0);
    s.v.assign(field.data.size(), 0.0);
    s.beta1 = cfg.adam_beta1;
    s.beta2 = cfg.adam_beta2;
    s.eps = cfg.adam_eps;
    return s;
}

void adam_step(DisplacementField& params, const DisplacementField& grads, AdamState& state,
               double lr) {
    if (params.dims != grads.dims)
        throw ShapeError("adam_step: params dims " + params.dims.to_string() +
                         " != grads dims " + grads.dims.to_string());
    if (params.data.size() != state.m.size())
        throw ShapeError("adam_step: state size does not match params");
    if (!(lr >= 0.0) || !std::isfinite(lr))
        throw ValidationError("adam_step: learning rate must be finite and >= 0");
    for (double g : grads.data)
        if (!std::isfinite(g))
            throw OptimizationError(
                "adam_step: non-finite gradient at step " + std::to_string(state.t + 1),
                static_cast<int>(state.t + 1), params, params);

    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.data.size(); ++i) {
        const double g = grads.data[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params.data[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

RegistrationResult instance_optimize(const Volume& X, const Volume& Y,
                                     const DisplacementField& init_fwd,
                                     const DisplacementField& init_bwd, const LossSpec& spec,
                                     const OptimConfig& cfg) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();

    DisplacementField u_fwd = init_fwd;
    DisplacementField u_bwd = init_bwd;
    AdamState state_fwd = AdamState::for_field(u_fwd, cfg);
    AdamState state_bwd = AdamState::for_field(u_bwd, cfg);

    RegistrationResult result;
    result.loss_trace.emplace_back();
    auto& trace = result.loss_trace.back();

    DisplacementField best_fwd = u_fwd;
    DisplacementField best_bwd = u_bwd;
    double best_total = std::numeric_limits<double>::infinity();

    auto note_iterate = [&](const LossBreakdown& bd, int iteration) {
        if (!std::isfinite(bd.total))
            throw OptimizationError(
                "instance_optimize: non-finite loss at iteration " + std::to_string(iteration),
                iteration, best_fwd, best_bwd);
        trace.push_back(bd);
        if (bd.total < best_total) {
            best_total = bd.total;
            best_fwd = u_fwd;
            best_bwd = u_bwd;
        }
    };

    for (int k = 0; k < cfg.iterations; ++k) {
        auto [bd, grads] = combined_loss_grad(X, Y, u_fwd, u_bwd, spec);
        note_iterate(bd, k);
        adam_step(u_fwd, grads.grad_forward, state_fwd, cfg.learning_rate);
        adam_step(u_bwd, grads.grad_backward, state_bwd, cfg.learning_rate);
    }
    note_iterate(combined_loss(X, Y, u_fwd, u_bwd, spec), cfg.iterations);

    result.u_fwd = std::move(best_fwd);
    result.u_bwd = std::move(best_bwd);
    result.best_loss = best_total;
    result.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

Volume downsample_volume(const Volume& v) {
    Dims out_dims{v.dims.nx / 2, v.dims.ny / 2, v.dims.nz / 2};
    if (!out_dims.positive())
        throw ValidationError("downsample_volume: dims " + v.dims.to_string() +
                              " too small to pool");
    Volume out = Volume::zeros(out_dims, v.channels,
                               {v.spacing[0] * 2.0, v.spacing[1] * 2.0, v.spacing[2] * 2.0});
    for (int c = 0; c < v.channels; ++c)
        for (int z = 0; z < out_dims.nz; ++z)
            for (int y = 0; y < out_dims.ny; ++y)
                for (int x = 0; x < out_dims.nx; ++x) {
                    double acc = 0.0;
                    for (int dz = 0; dz < 2; ++dz)
                        for (int dy = 0; dy < 2; ++dy)
                            for (int dx = 0; dx < 2; ++dx)
                                acc += v.at(2 * x + dx, 2 * y + dy, 2 * z + dz, c);
                    out.at(x, y, z, c) = acc / 8.0;
                }
    return out;
}

DisplacementField upsample_field(const DisplacementField& u, Dims target_dims) {
    if (!target_dims.positive())
        throw ValidationError("upsample_field: non-positive target dims");
    if (target_dims.nx < u.dims.nx || target_dims.ny < u.dims.ny || target_dims.nz < u.dims.nz)
        throw ValidationError("upsample_field: target dims " + target_dims.to_string() +
                              " smaller than source " + u.dims.to_string());

    const double sx = static_cast<double>(u.dims.nx) / target_dims.nx;
    const double sy = static_cast<double>(u.dims.ny) / target_dims.ny;
    const double sz = static_cast<double>(u.dims.nz) / target_dims.nz;

    DisplacementField out = DisplacementField::zeros(target_dims);
    const std::size_t src_nvox = u.dims.voxel_count();
    const double value_scale[3] = {1.0 / sx, 1.0 / sy, 1.0 / sz};
    for (int comp = 0; comp < 3; ++comp) {
        const double* block = u.data.data() + src_nvox * static_cast<std::size_t>(comp);
        std::size_t i = out.dims.voxel_count() * static_cast<std::size_t>(comp);
        for (int z = 0; z < target_dims.nz; ++z)
            for (int y = 0; y < target_dims.ny; ++y)
                for (int x = 0; x < target_dims.nx; ++x, ++i)
                    out.data[i] = value_scale[comp] *
                                  detail::interp_block(block, u.dims, x * sx, y * sy, z * sz);
    }
    return out;
}

RegistrationResult register_pair(const Volume& X, const Volume& Y, const LossSpec& spec,
                                 const OptimConfig& cfg) {
    cfg.validate();
    spec.validate();
    if (X.dims != Y.dims || X.channels != Y.channels)
        throw ShapeError("register: volume shapes differ");
    const int min_extent = 1 << (cfg.levels - 1);
    if (X.dims.nx < min_extent || X.dims.ny < min_extent || X.dims.nz < min_extent)
        throw ValidationError("register: dims " + X.dims.to_string() + " too small for " +
                              std::to_string(cfg.levels) + " pyramid levels");

    const auto start = std::chrono::steady_clock::now();

    std::vector<Volume> pyr_x{X};
    std::vector<Volume> pyr_y{Y};
    for (int l = 1; l < cfg.levels; ++l) {
        pyr_x.push_back(downsample_volume(pyr_x.back()));
        pyr_y.push_back(downsample_volume(pyr_y.back()));
    }

    DisplacementField u_fwd = zero_field(pyr_x.back().dims);
    DisplacementField u_bwd = zero_field(pyr_x.back().dims);

    RegistrationResult result;
    for (int l = cfg.levels - 1; l >= 0; --l) {
        RegistrationResult level =
            instance_optimize(pyr_x[l], pyr_y[l], u_fwd, u_bwd, spec, cfg);
        result.loss_trace.push_back(std::move(level.loss_trace.front()));
        if (l > 0) {
            u_fwd = upsample_field(level.u_fwd, pyr_x[l - 1].dims);
            u_bwd = upsample_field(level.u_bwd, pyr_x[l - 1].dims);
        } else {
            result.u_fwd = std::move(level.u_fwd);
            result.u_bwd = std::move(level.u_bwd);
            result.best_loss = level.best_loss;
        }
    }
    result.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

}  // namespace mmreg
