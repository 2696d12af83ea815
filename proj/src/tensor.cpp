#include "hyformer/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace hyformer::nn {

Tensor::Tensor(std::vector<int> shape, double fill) : shape_(std::move(shape)) {
    std::int64_t n = 1;
    for (int d : shape_) {
        check(d >= 0, "Tensor: negative dimension");
        n *= d;
    }
    data_.assign(static_cast<std::size_t>(n), fill);
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values) {
    Tensor t;
    std::int64_t n = 1;
    for (int d : shape) n *= d;
    check(n == static_cast<std::int64_t>(values.size()), "Tensor::from: shape/data size mismatch");
    t.shape_ = std::move(shape);
    t.data_ = std::move(values);
    return t;
}

int Tensor::dim(int i) const {
    int r = rank();
    if (i < 0) i += r;
    check(i >= 0 && i < r, "Tensor::dim: index out of range");
    return shape_[static_cast<std::size_t>(i)];
}

double& Tensor::at4(int n, int c, int h, int w) {
    return data_[static_cast<std::size_t>(((static_cast<std::int64_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
}
double Tensor::at4(int n, int c, int h, int w) const {
    return data_[static_cast<std::size_t>(((static_cast<std::int64_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
}
double& Tensor::at3(int a, int b, int c) {
    return data_[static_cast<std::size_t>((static_cast<std::int64_t>(a) * shape_[1] + b) * shape_[2] + c)];
}
double Tensor::at3(int a, int b, int c) const {
    return data_[static_cast<std::size_t>((static_cast<std::int64_t>(a) * shape_[1] + b) * shape_[2] + c)];
}
double& Tensor::at2(int a, int b) {
    return data_[static_cast<std::size_t>(static_cast<std::int64_t>(a) * shape_[1] + b)];
}
double Tensor::at2(int a, int b) const {
    return data_[static_cast<std::size_t>(static_cast<std::int64_t>(a) * shape_[1] + b)];
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

double Tensor::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

double Tensor::min() const {
    check(!data_.empty(), "Tensor::min on empty tensor");
    return *std::min_element(data_.begin(), data_.end());
}

double Tensor::max() const {
    check(!data_.empty(), "Tensor::max on empty tensor");
    return *std::max_element(data_.begin(), data_.end());
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
    os << ")";
    return os.str();
}

Tensor zeros_like(const Tensor& t) { return Tensor(t.shape()); }

}  // namespace hyformer::nn
