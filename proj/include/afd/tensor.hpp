#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "afd/rng.hpp"

namespace afd {

// Dense row-major 2-D array of doubles. Column vectors are (n, 1); scalars
// are (1, 1). All training-time math is 64-bit.
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

    static Tensor zeros(int r, int c) { return Tensor(r, c); }
    static Tensor scalar(double v);
    static Tensor column(const std::vector<double>& v);
    static Tensor identity(int n);
    static Tensor randn(int r, int c, Rng& rng, double sd = 1.0);

    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    size_t size() const { return data.size(); }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
    bool is_scalar() const { return rows == 1 && cols == 1; }
    bool all_finite() const;

    std::string shape_str() const;
};

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, double c);
double dot(const Tensor& a, const Tensor& b);
double squared_norm(const Tensor& a);
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace afd
