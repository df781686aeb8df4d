#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace skewprune {

// Dense row-major float32 tensor. data.size() == product(shape) always.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> shape_, float fill = 0.0f);

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int dim(int i) const { return shape.at(static_cast<size_t>(i)); }
    int ndim() const { return static_cast<int>(shape.size()); }

    float& at(std::span<const int> idx);
    float at(std::span<const int> idx) const;
    int64_t offset(std::span<const int> idx) const;

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;

    static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape); }
};

int64_t shape_numel(const std::vector<int>& shape);
std::string shape_str(const std::vector<int>& shape);

// Uniform in [lo, hi), filled in row-major order from rng.
Tensor random_uniform(std::vector<int> shape, std::mt19937& rng, float lo = -1.0f, float hi = 1.0f);
// He/Kaiming-style normal init with std = sqrt(2 / fan_in).
Tensor random_normal(std::vector<int> shape, std::mt19937& rng, float stddev);

void check_finite(const Tensor& t, const std::string& op_name);

}  // namespace skewprune
