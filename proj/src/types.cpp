#include "mmreg/types.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <sstream>

namespace mmreg {

std::string Dims::to_string() const {
    std::ostringstream os;
    os << "(" << nx << "," << ny << "," << nz << ")";
    return os.str();
}

Volume Volume::zeros(Dims d, int channels, std::array<double, 3> spacing) {
    Volume v;
    v.dims = d;
    v.channels = channels;
    v.spacing = spacing;
    v.data.assign(v.expected_size(), 0.0);
    v.validate();
    return v;
}

void Volume::validate() const {
    if (!dims.positive())
        throw ValidationError("invalid volume: non-positive dims " + dims.to_string());
    if (channels < 1)
        throw ValidationError("invalid volume: channels must be >= 1, got " +
                              std::to_string(channels));
    for (double s : spacing)
        if (!(s > 0.0) || !std::isfinite(s))
            throw ValidationError("invalid volume: spacing components must be finite and > 0");
    if (data.size() != expected_size())
        throw ValidationError("invalid volume: data length " + std::to_string(data.size()) +
                              " does not match dims*channels " +
                              std::to_string(expected_size()));
    for (double v : data)
        if (!std::isfinite(v))
            throw ValidationError("invalid volume: non-finite intensity");
}

DisplacementField DisplacementField::zeros(Dims d) {
    DisplacementField u;
    u.dims = d;
    u.data.assign(u.expected_size(), 0.0);
    u.validate();
    return u;
}

void DisplacementField::validate() const {
    if (!dims.positive())
        throw ValidationError("invalid field: non-positive dims " + dims.to_string());
    if (data.size() != expected_size())
        throw ValidationError("invalid field: data length " + std::to_string(data.size()) +
                              " does not match dims*3 " + std::to_string(expected_size()));
    for (double v : data)
        if (!std::isfinite(v))
            throw ValidationError("invalid field: non-finite component");
}

const char* metric_name(Metric m) {
    switch (m) {
        case Metric::MSE: return "mse";
        case Metric::NCC: return "ncc";
    }
    return "?";
}

Metric metric_from_name(const std::string& name) {
    if (name == "mse") return Metric::MSE;
    if (name == "ncc") return Metric::NCC;
    throw ValidationError("unknown metric name '" + name + "' (expected 'mse' or 'ncc')");
}

LossSpec LossSpec::equal_weights(std::vector<Metric> kinds, double lambda) {
    LossSpec spec;
    spec.lambda = lambda;
    const double w = 1.0 / static_cast<double>(kinds.size());
    for (Metric k : kinds) spec.metrics.push_back({k, w});
    spec.validate();
    return spec;
}

void LossSpec::validate() const {
    if (metrics.empty()) throw ValidationError("loss spec: at least one metric required");
    std::set<Metric> seen;
    for (const auto& m : metrics) {
        if (!seen.insert(m.kind).second)
            throw ValidationError(std::string("loss spec: duplicate metric '") +
                                  metric_name(m.kind) + "'");
        if (!(m.weight >= 0.0) || !std::isfinite(m.weight))
            throw ValidationError(std::string("loss spec: weight of '") + metric_name(m.kind) +
                                  "' must be finite and >= 0");
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw ValidationError("loss spec: lambda must be finite and >= 0");
    if (ncc_window < 3 || ncc_window % 2 == 0)
        throw ValidationError("loss spec: ncc_window must be odd and >= 3, got " +
                              std::to_string(ncc_window));
    if (!(ncc_epsilon > 0.0) || !std::isfinite(ncc_epsilon))
        throw ValidationError("loss spec: ncc_epsilon must be finite and > 0");
}

void LandmarkSet::validate() const {
    std::set<std::string> ids;
    for (const auto& lm : entries) {
        if (!ids.insert(lm.id).second)
            throw ValidationError("landmarks: duplicate id '" + lm.id + "'");
        for (double c : lm.fixed)
            if (!std::isfinite(c))
                throw ValidationError("landmarks: non-finite fixed coordinate for id '" +
                                      lm.id + "'");
        for (double c : lm.moving)
            if (!std::isfinite(c))
                throw ValidationError("landmarks: non-finite moving coordinate for id '" +
                                      lm.id + "'");
    }
}

void LandmarkSet::validate_against(const Dims& fixed_dims) const {
    validate();
    const double hi[3] = {fixed_dims.nx + 0.5, fixed_dims.ny + 0.5, fixed_dims.nz + 0.5};
    for (const auto& lm : entries)
        for (int a = 0; a < 3; ++a)
            if (lm.fixed[a] < -0.5 || lm.fixed[a] >= hi[a])
                throw ValidationError("landmarks: id '" + lm.id +
                                      "' lies outside the fixed grid " + fixed_dims.to_string());
}

void OptimConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ValidationError("optim config: learning_rate must be finite and > 0");
    if (iterations < 1)
        throw ValidationError("optim config: iterations must be >= 1");
    if (levels < 1)
        throw ValidationError("optim config: levels must be >= 1");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
        throw ValidationError("optim config: adam betas must lie in [0, 1)");
    if (!(adam_eps > 0.0))
        throw ValidationError("optim config: adam_eps must be > 0");
}

Volume normalize(const Volume& v) {
    v.validate();
    Volume out = v;
    const std::size_t per_channel = v.dims.voxel_count();
    for (int c = 0; c < v.channels; ++c) {
        const std::size_t base = per_channel * static_cast<std::size_t>(c);
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < per_channel; ++i) {
            lo = std::min(lo, v.data[base + i]);
            hi = std::max(hi, v.data[base + i]);
        }
        const double range = hi - lo;
        if (range == 0.0) {
            for (std::size_t i = 0; i < per_channel; ++i) out.data[base + i] = 0.0;
        } else {
            for (std::size_t i = 0; i < per_channel; ++i)
                out.data[base + i] = (v.data[base + i] - lo) / range;
        }
    }
    return out;
}

DisplacementField zero_field(Dims dims) {
    if (!dims.positive())
        throw ValidationError("zero_field: non-positive dims " + dims.to_string());
    return DisplacementField::zeros(dims);
}

}  // namespace mmreg
