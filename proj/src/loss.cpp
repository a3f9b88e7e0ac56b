#include "mmreg/loss.hpp"

#include <algorithm>
#include <cmath>

#include "mmreg/sampling.hpp"

namespace mmreg {

namespace {

void require_same_shape(const Volume& a, const Volume& b, const char* where) {
    if (a.dims != b.dims || a.channels != b.channels)
        throw ShapeError(std::string(where) + ": shape mismatch " + a.dims.to_string() + "x" +
                         std::to_string(a.channels) + " vs " + b.dims.to_string() + "x" +
                         std::to_string(b.channels));
}

// Sliding clipped box sum along one axis, windows [i-r, i+r] intersected
// with [0, n-1]. Incremental add/remove keeps it O(n) per line.
void box_line(const double* in, double* out, int n, std::size_t stride, int r) {
    double acc = 0.0;
    const int lead = std::min(r, n - 1);
    for (int k = 0; k <= lead; ++k) acc += in[static_cast<std::size_t>(k) * stride];
    out[0] = acc;
    for (int i = 1; i < n; ++i) {
        const int add = i + r;
        const int drop = i - r - 1;
        if (add < n) acc += in[static_cast<std::size_t>(add) * stride];
        if (drop >= 0) acc -= in[static_cast<std::size_t>(drop) * stride];
        out[static_cast<std::size_t>(i) * stride] = acc;
    }
}

// In-place 3D clipped box sum over one nx*ny*nz block, radius r per axis.
// Because the cubic window clips per-axis independently, the transpose of
// this operator is the operator itself.
void box_sum(std::vector<double>& f, const Dims& d, int r) {
    const std::size_t nx = d.nx, ny = d.ny, nz = d.nz;
    std::vector<double> tmp(f.size());
    // x lines
    for (std::size_t z = 0; z < nz; ++z)
        for (std::size_t y = 0; y < ny; ++y) {
            const std::size_t off = (z * ny + y) * nx;
            box_line(f.data() + off, tmp.data() + off, d.nx, 1, r);
        }
    // y lines
    for (std::size_t z = 0; z < nz; ++z)
        for (std::size_t x = 0; x < nx; ++x) {
            const std::size_t off = z * ny * nx + x;
            box_line(tmp.data() + off, f.data() + off, d.ny, nx, r);
        }
    // z lines
    for (std::size_t y = 0; y < ny; ++y)
        for (std::size_t x = 0; x < nx; ++x) {
            const std::size_t off = y * nx + x;
            box_line(f.data() + off, tmp.data() + off, d.nz, nx * ny, r);
        }
    f.swap(tmp);
}

inline int axis_count(int i, int n, int r) {
    return std::min(i + r, n - 1) - std::max(i - r, 0) + 1;
}

// MSE value over the whole data array; optionally accumulates the
// derivative with respect to `a` (weighted) into grad.
double mse_core(const std::vector<double>& a, const std::vector<double>& b, double grad_weight,
                std::vector<double>* grad) {
    const std::size_t m = a.size();
    const double inv_m = 1.0 / static_cast<double>(m);
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
        if (grad) (*grad)[i] += grad_weight * 2.0 * d * inv_m;
    }
    return acc * inv_m;
}

// LNCC value (and optional weighted derivative w.r.t. `a`). The value
// accumulation is identical with and without the gradient branch.
double lncc_core(const Volume& a, const Volume& b, int window, double eps, double grad_weight,
                 std::vector<double>* grad) {
    const Dims d = a.dims;
    const int r = window / 2;
    const std::size_t nvox = d.voxel_count();
    const std::size_t m = nvox * static_cast<std::size_t>(a.channels);
    const double inv_m = 1.0 / static_cast<double>(m);

    std::vector<int> cnt_x(d.nx), cnt_y(d.ny), cnt_z(d.nz);
    for (int i = 0; i < d.nx; ++i) cnt_x[i] = axis_count(i, d.nx, r);
    for (int i = 0; i < d.ny; ++i) cnt_y[i] = axis_count(i, d.ny, r);
    for (int i = 0; i < d.nz; ++i) cnt_z[i] = axis_count(i, d.nz, r);

    double acc = 0.0;
    std::vector<double> sa(nvox), sb(nvox), saa(nvox), sbb(nvox), sab(nvox);
    std::vector<double> alpha, beta, alpha_bm, beta_am;
    if (grad) {
        alpha.resize(nvox);
        beta.resize(nvox);
        alpha_bm.resize(nvox);
        beta_am.resize(nvox);
    }

    for (int c = 0; c < a.channels; ++c) {
        const double* av = a.data.data() + nvox * static_cast<std::size_t>(c);
        const double* bv = b.data.data() + nvox * static_cast<std::size_t>(c);
        for (std::size_t i = 0; i < nvox; ++i) {
            sa[i] = av[i];
            sb[i] = bv[i];
            saa[i] = av[i] * av[i];
            sbb[i] = bv[i] * bv[i];
            sab[i] = av[i] * bv[i];
        }
        box_sum(sa, d, r);
        box_sum(sb, d, r);
        box_sum(saa, d, r);
        box_sum(sbb, d, r);
        box_sum(sab, d, r);

        std::size_t i = 0;
        for (int z = 0; z < d.nz; ++z)
            for (int y = 0; y < d.ny; ++y)
                for (int x = 0; x < d.nx; ++x, ++i) {
                    const double n = static_cast<double>(cnt_x[x]) * cnt_y[y] * cnt_z[z];
                    const double A = sab[i] - sa[i] * sb[i] / n;
                    const double B = saa[i] - sa[i] * sa[i] / n;
                    const double C = sbb[i] - sb[i] * sb[i] / n;
                    const double D = B * C + eps;
                    const double cc2 = A * A / D;
                    acc += cc2;
                    if (grad) {
                        const double al = 2.0 * A / D;
                        const double be = 2.0 * A * A * C / (D * D);
                        alpha[i] = al;
                        beta[i] = be;
                        alpha_bm[i] = al * (sb[i] / n);
                        beta_am[i] = be * (sa[i] / n);
                    }
                }

        if (grad) {
            box_sum(alpha, d, r);
            box_sum(beta, d, r);
            box_sum(alpha_bm, d, r);
            box_sum(beta_am, d, r);
            double* g = grad->data() + nvox * static_cast<std::size_t>(c);
            for (std::size_t q = 0; q < nvox; ++q) {
                const double dcc = bv[q] * alpha[q] - alpha_bm[q] - av[q] * beta[q] + beta_am[q];
                g[q] += grad_weight * (-inv_m) * dcc;
            }
        }
    }
    return 1.0 - acc * inv_m;
}

double diffusion_core(const DisplacementField& u, double grad_scale,
                      std::vector<double>* grad) {
    const Dims d = u.dims;
    const std::size_t nvox = d.voxel_count();
    const double interior = static_cast<double>(d.nx - 1) * d.ny * d.nz +
                            static_cast<double>(d.nx) * (d.ny - 1) * d.nz +
                            static_cast<double>(d.nx) * d.ny * (d.nz - 1);
    const double count = 3.0 * interior;
    if (count == 0.0) return 0.0;  // 1x1x1 grid has no differences

    const std::size_t step[3] = {1, static_cast<std::size_t>(d.nx),
                                 static_cast<std::size_t>(d.nx) * d.ny};
    double acc = 0.0;
    for (int comp = 0; comp < 3; ++comp) {
        const double* v = u.data.data() + nvox * static_cast<std::size_t>(comp);
        double* g = grad ? grad->data() + nvox * static_cast<std::size_t>(comp) : nullptr;
        for (int axis = 0; axis < 3; ++axis) {
            const int lim_x = d.nx - (axis == 0 ? 1 : 0);
            const int lim_y = d.ny - (axis == 1 ? 1 : 0);
            const int lim_z = d.nz - (axis == 2 ? 1 : 0);
            const std::size_t s = step[axis];
            for (int z = 0; z < lim_z; ++z)
                for (int y = 0; y < lim_y; ++y) {
                    std::size_t i = (static_cast<std::size_t>(z) * d.ny + y) * d.nx;
                    for (int x = 0; x < lim_x; ++x, ++i) {
                        const double df = v[i + s] - v[i];
                        acc += df * df;
                        if (g) {
                            const double t = grad_scale * 2.0 * df / count;
                            g[i + s] += t;
                            g[i] -= t;
                        }
                    }
                }
        }
    }
    return acc / count;
}

// Chain the per-intensity derivative through the spatial gradient of the
// moving volume at the warped positions, accumulating into the field grad.
void chain_to_field(const Volume& moving, const DisplacementField& u,
                    const std::vector<double>& d_warped, DisplacementField& out) {
    const Dims d = u.dims;
    const std::size_t nvox = d.voxel_count();
    const double* ux = u.data.data();
    const double* uy = u.data.data() + nvox;
    const double* uz = u.data.data() + 2 * nvox;
    double* gx = out.data.data();
    double* gy = out.data.data() + nvox;
    double* gz = out.data.data() + 2 * nvox;

    std::size_t i = 0;
    for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x, ++i) {
                const double px = x + ux[i], py = y + uy[i], pz = z + uz[i];
                for (int c = 0; c < moving.channels; ++c) {
                    const double w = d_warped[nvox * static_cast<std::size_t>(c) + i];
                    if (w == 0.0) continue;
                    const double* block =
                        moving.data.data() + nvox * static_cast<std::size_t>(c);
                    const auto sg = detail::interp_block_gradient(block, d, px, py, pz);
                    gx[i] += w * sg[0];
                    gy[i] += w * sg[1];
                    gz[i] += w * sg[2];
                }
            }
}

LossBreakdown evaluate(const Volume& X, const Volume& Y, const DisplacementField& u_fwd,
                       const DisplacementField& u_bwd, const LossSpec& spec,
                       LossGradients* grads) {
    require_same_shape(X, Y, "combined_loss");
    if (u_fwd.dims != X.dims || u_bwd.dims != X.dims)
        throw ShapeError("combined_loss: field dims do not match the volumes");
    spec.validate();

    const Volume warped_fwd = warp(X, u_fwd);
    const Volume warped_bwd = warp(Y, u_bwd);

    // Derivative of the weighted similarity sum w.r.t. the warped samples.
    std::vector<double> d_fwd, d_bwd;
    if (grads) {
        d_fwd.assign(warped_fwd.data.size(), 0.0);
        d_bwd.assign(warped_bwd.data.size(), 0.0);
    }

    LossBreakdown bd;
    for (const auto& term : spec.metrics) {
        double lf = 0.0, lb = 0.0;
        switch (term.kind) {
            case Metric::MSE:
                lf = mse_core(warped_fwd.data, Y.data, term.weight, grads ? &d_fwd : nullptr);
                lb = mse_core(warped_bwd.data, X.data, term.weight, grads ? &d_bwd : nullptr);
                break;
            case Metric::NCC:
                lf = lncc_core(warped_fwd, Y, spec.ncc_window, spec.ncc_epsilon, term.weight,
                               grads ? &d_fwd : nullptr);
                lb = lncc_core(warped_bwd, X, spec.ncc_window, spec.ncc_epsilon, term.weight,
                               grads ? &d_bwd : nullptr);
                break;
        }
        bd.sim_forward.push_back(lf);
        bd.sim_backward.push_back(lb);
    }

    if (grads) {
        grads->grad_forward = DisplacementField::zeros(u_fwd.dims);
        grads->grad_backward = DisplacementField::zeros(u_bwd.dims);
        chain_to_field(X, u_fwd, d_fwd, grads->grad_forward);
        chain_to_field(Y, u_bwd, d_bwd, grads->grad_backward);
        std::vector<double> reg_f(u_fwd.data.size(), 0.0), reg_b(u_bwd.data.size(), 0.0);
        const double df = diffusion_core(u_fwd, spec.lambda * 0.5, &reg_f);
        const double db = diffusion_core(u_bwd, spec.lambda * 0.5, &reg_b);
        bd.regularizer = (df + db) / 2.0;
        for (std::size_t i = 0; i < reg_f.size(); ++i) grads->grad_forward.data[i] += reg_f[i];
        for (std::size_t i = 0; i < reg_b.size(); ++i) grads->grad_backward.data[i] += reg_b[i];
    } else {
        bd.regularizer = (diffusion(u_fwd) + diffusion(u_bwd)) / 2.0;
    }

    bd.total = eq1_total(spec, bd.sim_forward, bd.sim_backward, bd.regularizer);
    return bd;
}

}  // namespace

double mse(const Volume& a, const Volume& b) {
    require_same_shape(a, b, "mse");
    return mse_core(a.data, b.data, 0.0, nullptr);
}

double lncc(const Volume& a, const Volume& b, int window, double eps) {
    require_same_shape(a, b, "lncc");
    if (window < 3 || window % 2 == 0)
        throw ValidationError("lncc: window must be odd and >= 3, got " +
                              std::to_string(window));
    return lncc_core(a, b, window, eps, 0.0, nullptr);
}

double diffusion(const DisplacementField& u) { return diffusion_core(u, 0.0, nullptr); }

double eq1_total(const LossSpec& spec, const std::vector<double>& sim_forward,
                 const std::vector<double>& sim_backward, double regularizer) {
    double total = 0.0;
    for (std::size_t n = 0; n < spec.metrics.size(); ++n)
        total += sim_forward[n] * spec.metrics[n].weight +
                 sim_backward[n] * spec.metrics[n].weight;
    total += regularizer * spec.lambda;
    return total;
}

LossBreakdown combined_loss(const Volume& X, const Volume& Y, const DisplacementField& u_fwd,
                            const DisplacementField& u_bwd, const LossSpec& spec) {
    return evaluate(X, Y, u_fwd, u_bwd, spec, nullptr);
}

std::pair<LossBreakdown, LossGradients> combined_loss_grad(const Volume& X, const Volume& Y,
                                                           const DisplacementField& u_fwd,
                                                           const DisplacementField& u_bwd,
                                                           const LossSpec& spec) {
    LossGradients grads;
    LossBreakdown bd = evaluate(X, Y, u_fwd, u_bwd, spec, &grads);
    return {std::move(bd), std::move(grads)};
}

}  // namespace mmreg
