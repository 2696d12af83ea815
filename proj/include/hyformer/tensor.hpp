#pragma once

#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace hyformer::nn {

// Dense row-major tensor of doubles. All training/inference math in this
// toolkit runs in double precision; reduced-precision storage is emulated
// at the optimizer level (see train::Precision).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape, double fill = 0.0);
    static Tensor from(std::vector<int> shape, std::vector<double> values);
    static Tensor scalar(double v) { return from({1}, {v}); }

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const;
    std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    // NCHW / NHW / NC accessors.
    double& at4(int n, int c, int h, int w);
    double at4(int n, int c, int h, int w) const;
    double& at3(int a, int b, int c);
    double at3(int a, int b, int c) const;
    double& at2(int a, int b);
    double at2(int a, int b) const;

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    void fill(double v);

    double sum() const;
    double min() const;
    double max() const;
    double mean() const { return numel() ? sum() / static_cast<double>(numel()) : 0.0; }
    bool all_finite() const;

    std::string shape_str() const;

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

Tensor zeros_like(const Tensor& t);

inline void check(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace hyformer::nn
