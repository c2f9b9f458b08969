#include "pastprop/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pastprop {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    values_.reserve(rows_ * cols_);
    for (const auto &r : rows) {
        if (r.size() != cols_) {
            throw std::invalid_argument("Matrix: ragged initializer list");
        }
        values_.insert(values_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

std::string Matrix::shape_string() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix matmul(const Matrix &a, const Matrix &b) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("matmul: shape mismatch " + a.shape_string() + " * " + b.shape_string());
    }
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) {
                out(i, j) += aik * b(k, j);
            }
        }
    }
    if (!all_finite(out.values())) {
        throw std::domain_error("matmul: non-finite result for " + a.shape_string() + " * " + b.shape_string());
    }
    return out;
}

void matvec(const Matrix &m, std::span<const double> v, std::span<double> out) noexcept {
    const std::size_t rows = m.rows();
    const std::size_t cols = m.cols();
    const double *w = m.values().data();
    const double *x = v.data();
    std::size_t r = 0;
    // Four rows at a time; each row keeps its own sequential sum, so the
    // result is identical to the plain loop.
    for (; r + 4 <= rows; r += 4) {
        const double *w0 = w + r * cols;
        const double *w1 = w0 + cols;
        const double *w2 = w1 + cols;
        const double *w3 = w2 + cols;
        double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            const double xc = x[c];
            a0 += w0[c] * xc;
            a1 += w1[c] * xc;
            a2 += w2[c] * xc;
            a3 += w3[c] * xc;
        }
        out[r] = a0;
        out[r + 1] = a1;
        out[r + 2] = a2;
        out[r + 3] = a3;
    }
    for (; r < rows; ++r) {
        const double *wr = w + r * cols;
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            acc += wr[c] * x[c];
        }
        out[r] = acc;
    }
}

void matvec_transposed_add(const Matrix &m, std::span<const double> v, std::span<double> out) noexcept {
    const std::size_t cols = m.cols();
    const double *w = m.values().data();
    for (std::size_t r = 0; r < m.rows(); ++r, w += cols) {
        const double vr = v[r];
        for (std::size_t c = 0; c < cols; ++c) {
            out[c] += w[c] * vr;
        }
    }
}

void outer_add(Matrix &m, std::span<const double> u, std::span<const double> v) noexcept {
    const std::size_t cols = m.cols();
    double *w = m.values().data();
    for (std::size_t r = 0; r < m.rows(); ++r, w += cols) {
        const double ur = u[r];
        for (std::size_t c = 0; c < cols; ++c) {
            w[c] += ur * v[c];
        }
    }
}

double sigmoid(double x) noexcept {
    // Branch keeps exp() from overflowing for large negative inputs.
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Vector sigmoid(std::span<const double> v) {
    Vector out(v.size());
    std::transform(v.begin(), v.end(), out.begin(), [](double x) { return sigmoid(x); });
    return out;
}

Vector tanh(std::span<const double> v) {
    Vector out(v.size());
    std::transform(v.begin(), v.end(), out.begin(), [](double x) { return std::tanh(x); });
    return out;
}

bool all_finite(std::span<const double> v) noexcept {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

namespace {

std::uint64_t splitmix64(std::uint64_t &x) noexcept {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
}

} // namespace

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t sm = seed;
    for (auto &s : state_) {
        s = splitmix64(sm);
    }
}

std::uint64_t SeededRng::next_u64() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double SeededRng::next_unit() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::uniform(double low, double high) noexcept {
    const double x = low + (high - low) * next_unit();
    // Rounding can land exactly on the open upper bound.
    return x < high ? x : std::nextafter(high, low);
}

Matrix init_uniform(SeededRng &rng, std::size_t rows, std::size_t cols, double low, double high) {
    if (!(low < high)) {
        throw std::invalid_argument("init_uniform: requires low < high");
    }
    Matrix m(rows, cols);
    for (double &v : m.values()) {
        v = rng.uniform(low, high);
    }
    return m;
}

} // namespace pastprop
