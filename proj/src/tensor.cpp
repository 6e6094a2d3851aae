#include "afd/tensor.hpp"

#include <cmath>
#include <cstdlib>

#include "afd/errors.hpp"

namespace afd {

Tensor Tensor::scalar(double v) {
    Tensor t(1, 1);
    t.data[0] = v;
    return t;
}

Tensor Tensor::column(const std::vector<double>& v) {
    Tensor t(static_cast<int>(v.size()), 1);
    t.data = v;
    return t;
}

Tensor Tensor::identity(int n) {
    Tensor t(n, n);
    for (int i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

Tensor Tensor::randn(int r, int c, Rng& rng, double sd) {
    Tensor t(r, c);
    for (double& x : t.data) x = rng.normal(0.0, sd);
    return t;
}

bool Tensor::all_finite() const {
    for (double x : data) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

std::string Tensor::shape_str() const {
    return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols != b.rows) {
        throw ConfigError("matmul shape mismatch " + a.shape_str() + " x " + b.shape_str());
    }
    Tensor out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = &a.data[static_cast<size_t>(i) * a.cols];
        double* orow = &out.data[static_cast<size_t>(i) * b.cols];
        for (int k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            const double* brow = &b.data[static_cast<size_t>(k) * b.cols];
            for (int j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

Tensor operator+(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw ConfigError("add shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    Tensor out = a;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

Tensor operator-(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw ConfigError("sub shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    Tensor out = a;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
    return out;
}

Tensor operator*(const Tensor& a, double c) {
    Tensor out = a;
    for (double& x : out.data) x *= c;
    return out;
}

double dot(const Tensor& a, const Tensor& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

double squared_norm(const Tensor& a) { return dot(a, a); }

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

}  // namespace afd
