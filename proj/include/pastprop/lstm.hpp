#pragma once

#include "pastprop/numeric.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pastprop {

struct LstmDims {
    std::size_t input_dim = 1;
    std::size_t hidden_units = 200;
    std::size_t sample_size = 5;  // time steps per input window
    std::size_t label_size = 1;   // predicted steps

    /// Length of [x_t, h_{t-1}, 1].
    std::size_t hidden_input_size() const noexcept { return input_dim + hidden_units + 1; }
    void validate() const;

    bool operator==(const LstmDims &) const = default;
};

/**
 * Parameters of a single-layer LSTM with a linear output head.
 *
 * Each gate matrix acts on the concatenated hidden input [x_t, h_{t-1}, 1],
 * so the input, recurrent and bias parameters of a gate live in one
 * hidden_units x (input_dim + hidden_units + 1) matrix. The head maps the
 * last hidden state to label_size outputs and has no bias.
 */
struct LstmWeights {
    Matrix input_gate;
    Matrix forget_gate;
    Matrix output_gate;
    Matrix candidate;
    Matrix head;

    static LstmWeights zeros(const LstmDims &dims);

    std::array<Matrix *, 5> matrices() noexcept {
        return {&input_gate, &forget_gate, &output_gate, &candidate, &head};
    }
    std::array<const Matrix *, 5> matrices() const noexcept {
        return {&input_gate, &forget_gate, &output_gate, &candidate, &head};
    }

    bool matches(const LstmDims &dims) const noexcept;
    bool same_shape(const LstmWeights &other) const noexcept;
    /// FNV-1a over the raw bytes of every matrix, in declaration order.
    std::uint64_t checksum() const noexcept;

    bool operator==(const LstmWeights &) const = default;
};

using LstmGradients = LstmWeights;

/// Activations of one recurrent block.
struct BlockState {
    Vector hidden_input;  // [x_t, h_{t-1}, 1]
    Vector input_gate;
    Vector forget_gate;
    Vector output_gate;
    Vector candidate;
    Vector cell;
    Vector hidden;
};

struct WindowCache {
    std::vector<BlockState> blocks;
    Vector prediction;
};

struct BackwardResult {
    LstmGradients weight_grads;
    /// dLoss/dx_t for every block of the window, each of length input_dim.
    std::vector<Vector> input_grads;
    double loss = 0.0;
};

/// Uniform initialization in [low, high). The draw order is fixed: gates in
/// declaration order, then the head.
LstmWeights init_weights(const LstmDims &dims, SeededRng &rng, double low = -0.1, double high = 0.1);

/// Runs the window from zero hidden and cell state. `window` is time-major,
/// sample_size * input_dim values.
WindowCache forward_window(const LstmWeights &weights, std::span<const double> window, const LstmDims &dims);

/// Mean squared error over the label entries.
double loss(std::span<const double> prediction, std::span<const double> label);

/// Backpropagation through time over the cached window.
BackwardResult backward_window(const LstmWeights &weights, const WindowCache &cache, std::span<const double> label);

// Variants that reuse the storage already held by `cache` / `out`; results
// are identical to the allocating versions above.
void forward_window_into(const LstmWeights &weights, std::span<const double> window, const LstmDims &dims,
                         WindowCache &cache);
void backward_window_into(const LstmWeights &weights, const WindowCache &cache, std::span<const double> label,
                          BackwardResult &out);

LstmWeights sgd_step(LstmWeights weights, const LstmGradients &grads, double learning_rate);
void apply_sgd(LstmWeights &weights, const LstmGradients &grads, double learning_rate);

Vector predict(const LstmWeights &weights, std::span<const double> window, const LstmDims &dims);

} // namespace pastprop
