#include "pastprop/lstm.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace pastprop {

void LstmDims::validate() const {
    if (input_dim == 0 || hidden_units == 0 || sample_size == 0 || label_size == 0) {
        throw std::invalid_argument("LstmDims: all dimensions must be >= 1");
    }
}

LstmWeights LstmWeights::zeros(const LstmDims &dims) {
    dims.validate();
    const std::size_t hin = dims.hidden_input_size();
    return LstmWeights{
        Matrix(dims.hidden_units, hin),
        Matrix(dims.hidden_units, hin),
        Matrix(dims.hidden_units, hin),
        Matrix(dims.hidden_units, hin),
        Matrix(dims.label_size, dims.hidden_units),
    };
}

bool LstmWeights::matches(const LstmDims &dims) const noexcept {
    const std::size_t hin = dims.hidden_input_size();
    for (const Matrix *gate : {&input_gate, &forget_gate, &output_gate, &candidate}) {
        if (gate->rows() != dims.hidden_units || gate->cols() != hin) {
            return false;
        }
    }
    return head.rows() == dims.label_size && head.cols() == dims.hidden_units;
}

bool LstmWeights::same_shape(const LstmWeights &other) const noexcept {
    const auto mine = matrices();
    const auto theirs = other.matrices();
    for (std::size_t i = 0; i < mine.size(); ++i) {
        if (!mine[i]->same_shape(*theirs[i])) {
            return false;
        }
    }
    return true;
}

std::uint64_t LstmWeights::checksum() const noexcept {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (const Matrix *m : matrices()) {
        for (double v : m->values()) {
            unsigned char bytes[sizeof(double)];
            std::memcpy(bytes, &v, sizeof(double));
            for (unsigned char b : bytes) {
                hash ^= b;
                hash *= 0x100000001b3ULL;
            }
        }
    }
    return hash;
}

LstmWeights init_weights(const LstmDims &dims, SeededRng &rng, double low, double high) {
    dims.validate();
    const std::size_t hin = dims.hidden_input_size();
    LstmWeights w;
    w.input_gate = init_uniform(rng, dims.hidden_units, hin, low, high);
    w.forget_gate = init_uniform(rng, dims.hidden_units, hin, low, high);
    w.output_gate = init_uniform(rng, dims.hidden_units, hin, low, high);
    w.candidate = init_uniform(rng, dims.hidden_units, hin, low, high);
    w.head = init_uniform(rng, dims.label_size, dims.hidden_units, low, high);
    return w;
}

WindowCache forward_window(const LstmWeights &weights, std::span<const double> window, const LstmDims &dims) {
    WindowCache cache;
    forward_window_into(weights, window, dims, cache);
    return cache;
}

void forward_window_into(const LstmWeights &weights, std::span<const double> window, const LstmDims &dims,
                         WindowCache &cache) {
    dims.validate();
    if (window.size() != dims.sample_size * dims.input_dim) {
        throw std::invalid_argument("forward_window: window has " + std::to_string(window.size()) +
                                    " values, expected " + std::to_string(dims.sample_size * dims.input_dim));
    }
    if (!weights.matches(dims)) {
        throw std::invalid_argument("forward_window: weights do not match dimensions");
    }

    const std::size_t hidden = dims.hidden_units;
    const std::size_t in = dims.input_dim;
    cache.blocks.resize(dims.sample_size);

    for (std::size_t t = 0; t < dims.sample_size; ++t) {
        BlockState &b = cache.blocks[t];
        b.hidden_input.resize(dims.hidden_input_size());
        std::copy_n(window.begin() + static_cast<std::ptrdiff_t>(t * in), in, b.hidden_input.begin());
        if (t == 0) {
            std::fill_n(b.hidden_input.begin() + static_cast<std::ptrdiff_t>(in), hidden, 0.0);
        } else {
            const Vector &prev = cache.blocks[t - 1].hidden;
            std::copy(prev.begin(), prev.end(), b.hidden_input.begin() + static_cast<std::ptrdiff_t>(in));
        }
        b.hidden_input.back() = 1.0;

        b.input_gate.resize(hidden);
        b.forget_gate.resize(hidden);
        b.output_gate.resize(hidden);
        b.candidate.resize(hidden);
        matvec(weights.input_gate, b.hidden_input, b.input_gate);
        matvec(weights.forget_gate, b.hidden_input, b.forget_gate);
        matvec(weights.output_gate, b.hidden_input, b.output_gate);
        matvec(weights.candidate, b.hidden_input, b.candidate);

        b.cell.resize(hidden);
        b.hidden.resize(hidden);
        for (std::size_t j = 0; j < hidden; ++j) {
            const double i = sigmoid(b.input_gate[j]);
            const double f = sigmoid(b.forget_gate[j]);
            const double o = sigmoid(b.output_gate[j]);
            const double g = std::tanh(b.candidate[j]);
            const double prev_cell = t == 0 ? 0.0 : cache.blocks[t - 1].cell[j];
            b.input_gate[j] = i;
            b.forget_gate[j] = f;
            b.output_gate[j] = o;
            b.candidate[j] = g;
            b.cell[j] = i * g + f * prev_cell;
            b.hidden[j] = o * std::tanh(b.cell[j]);
        }
    }

    cache.prediction.resize(dims.label_size);
    matvec(weights.head, cache.blocks.back().hidden, cache.prediction);
    if (!all_finite(cache.prediction)) {
        throw std::domain_error("forward_window: non-finite prediction");
    }
}

double loss(std::span<const double> prediction, std::span<const double> label) {
    if (prediction.size() != label.size()) {
        throw std::invalid_argument("loss: prediction has " + std::to_string(prediction.size()) +
                                    " entries, label has " + std::to_string(label.size()));
    }
    if (prediction.empty()) {
        throw std::invalid_argument("loss: empty label");
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < label.size(); ++k) {
        const double e = prediction[k] - label[k];
        sum += e * e;
    }
    return sum / static_cast<double>(label.size());
}

BackwardResult backward_window(const LstmWeights &weights, const WindowCache &cache, std::span<const double> label) {
    BackwardResult result;
    backward_window_into(weights, cache, label, result);
    return result;
}

namespace {

void reset_to(Matrix &m, std::size_t rows, std::size_t cols) {
    if (m.rows() == rows && m.cols() == cols) {
        std::fill(m.values().begin(), m.values().end(), 0.0);
    } else {
        m = Matrix(rows, cols);
    }
}

} // namespace

void backward_window_into(const LstmWeights &weights, const WindowCache &cache, std::span<const double> label,
                          BackwardResult &result) {
    const std::size_t hidden = weights.head.cols();
    const std::size_t hin_size = weights.input_gate.cols();
    if (cache.blocks.empty() || cache.prediction.size() != weights.head.rows() || hin_size < hidden + 2 ||
        cache.blocks.front().hidden_input.size() != hin_size || cache.blocks.front().hidden.size() != hidden) {
        throw std::invalid_argument("backward_window: cache does not match weights");
    }
    if (label.size() != cache.prediction.size()) {
        throw std::invalid_argument("backward_window: label has " + std::to_string(label.size()) +
                                    " entries, prediction has " + std::to_string(cache.prediction.size()));
    }
    const std::size_t in = hin_size - hidden - 1;

    result.loss = loss(cache.prediction, label);
    LstmGradients &g = result.weight_grads;
    reset_to(g.input_gate, hidden, hin_size);
    reset_to(g.forget_gate, hidden, hin_size);
    reset_to(g.output_gate, hidden, hin_size);
    reset_to(g.candidate, hidden, hin_size);
    reset_to(g.head, weights.head.rows(), hidden);

    const std::size_t labels = label.size();
    Vector d_pred(labels);
    for (std::size_t k = 0; k < labels; ++k) {
        d_pred[k] = 2.0 * (cache.prediction[k] - label[k]) / static_cast<double>(labels);
    }
    outer_add(g.head, d_pred, cache.blocks.back().hidden);

    Vector d_hidden(hidden, 0.0);
    matvec_transposed_add(weights.head, d_pred, d_hidden);
    Vector d_cell_next(hidden, 0.0);

    Vector d_i(hidden), d_f(hidden), d_o(hidden), d_g(hidden);
    Vector d_hin(hin_size);
    result.input_grads.resize(cache.blocks.size());

    for (std::size_t t = cache.blocks.size(); t-- > 0;) {
        const BlockState &b = cache.blocks[t];
        for (std::size_t j = 0; j < hidden; ++j) {
            const double tanh_c = std::tanh(b.cell[j]);
            const double prev_c = t > 0 ? cache.blocks[t - 1].cell[j] : 0.0;
            const double d_c = d_cell_next[j] + d_hidden[j] * b.output_gate[j] * tanh_grad_from_output(tanh_c);
            // Gradients with respect to gate pre-activations.
            d_o[j] = d_hidden[j] * tanh_c * sigmoid_grad_from_output(b.output_gate[j]);
            d_i[j] = d_c * b.candidate[j] * sigmoid_grad_from_output(b.input_gate[j]);
            d_f[j] = d_c * prev_c * sigmoid_grad_from_output(b.forget_gate[j]);
            d_g[j] = d_c * b.input_gate[j] * tanh_grad_from_output(b.candidate[j]);
            d_cell_next[j] = d_c * b.forget_gate[j];
        }
        outer_add(g.input_gate, d_i, b.hidden_input);
        outer_add(g.forget_gate, d_f, b.hidden_input);
        outer_add(g.output_gate, d_o, b.hidden_input);
        outer_add(g.candidate, d_g, b.hidden_input);

        std::fill(d_hin.begin(), d_hin.end(), 0.0);
        matvec_transposed_add(weights.input_gate, d_i, d_hin);
        matvec_transposed_add(weights.forget_gate, d_f, d_hin);
        matvec_transposed_add(weights.output_gate, d_o, d_hin);
        matvec_transposed_add(weights.candidate, d_g, d_hin);

        result.input_grads[t].assign(d_hin.begin(), d_hin.begin() + static_cast<std::ptrdiff_t>(in));
        std::copy_n(d_hin.begin() + static_cast<std::ptrdiff_t>(in), hidden, d_hidden.begin());
    }

    for (const Vector &x : result.input_grads) {
        if (!all_finite(x)) {
            throw std::domain_error("backward_window: non-finite input gradient");
        }
    }
    for (const Matrix *m : g.matrices()) {
        if (!all_finite(m->values())) {
            throw std::domain_error("backward_window: non-finite weight gradient");
        }
    }
}

void apply_sgd(LstmWeights &weights, const LstmGradients &grads, double learning_rate) {
    if (!weights.same_shape(grads)) {
        throw std::invalid_argument("sgd_step: gradient shapes do not match weights");
    }
    auto w = weights.matrices();
    auto g = grads.matrices();
    for (std::size_t m = 0; m < w.size(); ++m) {
        auto wv = w[m]->values();
        auto gv = g[m]->values();
        for (std::size_t k = 0; k < wv.size(); ++k) {
            wv[k] -= learning_rate * gv[k];
        }
    }
}

LstmWeights sgd_step(LstmWeights weights, const LstmGradients &grads, double learning_rate) {
    apply_sgd(weights, grads, learning_rate);
    return weights;
}

Vector predict(const LstmWeights &weights, std::span<const double> window, const LstmDims &dims) {
    return forward_window(weights, window, dims).prediction;
}

} // namespace pastprop
