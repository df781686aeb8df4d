#include "skewprune/tensor.hpp"

#include <numeric>
#include <sstream>

namespace skewprune {

int64_t shape_numel(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("tensor dimension must be positive, got " + std::to_string(d));
        n *= d;
    }
    return n;
}

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ")";
    return os.str();
}

Tensor::Tensor(std::vector<int> shape_, float fill)
    : shape(std::move(shape_)) {
    data.assign(static_cast<size_t>(shape_numel(shape)), fill);
}

int64_t Tensor::offset(std::span<const int> idx) const {
    if (idx.size() != shape.size()) throw std::invalid_argument("index rank mismatch");
    int64_t off = 0;
    for (size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= shape[i]) throw std::out_of_range("tensor index out of range");
        off = off * shape[i] + idx[i];
    }
    return off;
}

float& Tensor::at(std::span<const int> idx) {
    return data[static_cast<size_t>(offset(idx))];
}

float Tensor::at(std::span<const int> idx) const {
    return data[static_cast<size_t>(offset(idx))];
}

bool Tensor::all_finite() const {
    for (float v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

Tensor random_uniform(std::vector<int> shape, std::mt19937& rng, float lo, float hi) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<float> dist(lo, hi);
    for (float& v : t.data) v = dist(rng);
    return t;
}

Tensor random_normal(std::vector<int> shape, std::mt19937& rng, float stddev) {
    Tensor t(std::move(shape));
    std::normal_distribution<float> dist(0.0f, stddev);
    for (float& v : t.data) v = dist(rng);
    return t;
}

void check_finite(const Tensor& t, const std::string& op_name) {
    if (!t.all_finite()) throw std::runtime_error(op_name + ": non-finite value in result");
}

}  // namespace skewprune
