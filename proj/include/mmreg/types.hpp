// mmreg: core value types shared by all modules.
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmreg {

inline constexpr const char* kVersion = "0.1.0";

// Error hierarchy. ValidationError covers invalid values and malformed
// documents, ShapeError covers dimension mismatches, IoError covers file
// problems. OptimizationError (optim.hpp) carries the failing iteration.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class ShapeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class IoError : public Error {
public:
    using Error::Error;
};

struct Dims {
    int nx = 0;
    int ny = 0;
    int nz = 0;

    bool operator==(const Dims&) const = default;

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
               static_cast<std::size_t>(nz);
    }
    bool positive() const { return nx > 0 && ny > 0 && nz > 0; }
    std::string to_string() const;
};

// Dense multi-channel scalar grid. Data is linearized x fastest, then y,
// then z, then channel: index(x,y,z,c) = ((c*nz + z)*ny + y)*nx + x.
// Intensities live in memory as doubles; the on-disk format (io module)
// is float32, so anything loaded from disk round-trips bitwise.
struct Volume {
    Dims dims;
    int channels = 1;
    std::array<double, 3> spacing{1.0, 1.0, 1.0};  // mm per voxel
    std::vector<double> data;

    static Volume zeros(Dims d, int channels = 1,
                        std::array<double, 3> spacing = {1.0, 1.0, 1.0});

    std::size_t index(int x, int y, int z, int c = 0) const {
        return ((static_cast<std::size_t>(c) * dims.nz + z) * dims.ny + y) *
                   dims.nx +
               x;
    }
    double at(int x, int y, int z, int c = 0) const { return data[index(x, y, z, c)]; }
    double& at(int x, int y, int z, int c = 0) { return data[index(x, y, z, c)]; }

    std::size_t expected_size() const {
        return dims.voxel_count() * static_cast<std::size_t>(channels);
    }

    // Throws ValidationError unless dims/channels/spacing are positive, the
    // data length matches, and every intensity is finite.
    void validate() const;
};

// Dense per-voxel displacement vectors in voxel units, same linearization as
// Volume with the component index in the channel slot.
struct DisplacementField {
    Dims dims;
    std::vector<double> data;

    static DisplacementField zeros(Dims d);

    std::size_t index(int x, int y, int z, int comp) const {
        return ((static_cast<std::size_t>(comp) * dims.nz + z) * dims.ny + y) *
                   dims.nx +
               x;
    }
    double at(int x, int y, int z, int comp) const { return data[index(x, y, z, comp)]; }
    double& at(int x, int y, int z, int comp) { return data[index(x, y, z, comp)]; }

    std::size_t expected_size() const { return dims.voxel_count() * 3; }

    void validate() const;
};

enum class Metric { MSE, NCC };

const char* metric_name(Metric m);
Metric metric_from_name(const std::string& name);  // throws ValidationError

struct MetricTerm {
    Metric kind = Metric::MSE;
    double weight = 1.0;
};

// Coefficients of the combined objective: similarity metrics with weights
// plus the smoothness weight lambda.
struct LossSpec {
    std::vector<MetricTerm> metrics;
    double lambda = 1.0;
    int ncc_window = 9;
    double ncc_epsilon = 1e-5;

    // Equal weights summing to 1 across the listed metrics.
    static LossSpec equal_weights(std::vector<Metric> kinds, double lambda = 1.0);

    void validate() const;
};

struct Landmark {
    std::string id;
    std::array<double, 3> fixed{};   // continuous voxel coords, fixed image
    std::array<double, 3> moving{};  // continuous voxel coords, moving image
};

struct LandmarkSet {
    std::vector<Landmark> entries;

    // Unique ids, finite coordinates.
    void validate() const;
    // Additionally requires fixed coordinates within [-0.5, n + 0.5) of the
    // given grid.
    void validate_against(const Dims& fixed_dims) const;
};

struct OptimConfig {
    double learning_rate = 1e-3;
    int iterations = 30;  // per pyramid level
    int levels = 3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const;
};

// Per-channel affine min-max rescale to [0,1]; constant channels map to zero.
Volume normalize(const Volume& v);

DisplacementField zero_field(Dims dims);

}  // namespace mmreg
