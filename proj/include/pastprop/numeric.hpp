#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace pastprop {

using Vector = std::vector<double>;

/**
 * Dense row-major matrix of doubles.
 */
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return values_.size(); }

    double &operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<const double> row(std::size_t r) const noexcept { return {values_.data() + r * cols_, cols_}; }

    bool same_shape(const Matrix &other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    std::string shape_string() const;

    bool operator==(const Matrix &other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

/// Standard matrix product. Throws std::invalid_argument on a shape mismatch
/// and std::domain_error if the result is not finite.
Matrix matmul(const Matrix &a, const Matrix &b);

// Hot-path kernels used by the LSTM. Shapes are the caller's responsibility.

/// out = m * v
void matvec(const Matrix &m, std::span<const double> v, std::span<double> out) noexcept;
/// out += m^T * v
void matvec_transposed_add(const Matrix &m, std::span<const double> v, std::span<double> out) noexcept;
/// m += u * v^T
void outer_add(Matrix &m, std::span<const double> u, std::span<const double> v) noexcept;

double sigmoid(double x) noexcept;
Vector sigmoid(std::span<const double> v);
Vector tanh(std::span<const double> v);

/// Derivatives expressed through the activation output y.
inline double sigmoid_grad_from_output(double y) noexcept { return y * (1.0 - y); }
inline double tanh_grad_from_output(double y) noexcept { return 1.0 - y * y; }

bool all_finite(std::span<const double> v) noexcept;

/**
 * xoshiro256** seeded through splitmix64.
 *
 * The algorithm is fixed so that draw sequences are identical across
 * compilers and platforms. Copying an instance duplicates the stream;
 * fork() derives an independent child stream.
 */
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t next_u64() noexcept;
    /// Uniform in [0, 1) with 53 random bits.
    double next_unit() noexcept;
    /// Uniform in [low, high).
    double uniform(double low, double high) noexcept;
    /// Fair coin; true with probability 1/2.
    bool coin() noexcept { return (next_u64() >> 63) != 0; }

    SeededRng fork() noexcept { return SeededRng(next_u64()); }

private:
    std::uint64_t seed_;
    std::array<std::uint64_t, 4> state_{};
};

/// Matrix of i.i.d. uniform entries in [low, high). Throws if low >= high.
Matrix init_uniform(SeededRng &rng, std::size_t rows, std::size_t cols, double low, double high);

} // namespace pastprop
