#include "pastprop/engine.hpp"

#include "pastprop/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pastprop {

std::string_view to_string(Variant v) noexcept {
    switch (v) {
    case Variant::Standard:
        return "standard";
    case Variant::EpochWise:
        return "epochwise";
    case Variant::InstanceWise:
        return "instancewise";
    case Variant::Selective:
        return "selective";
    }
    return "unknown";
}

Variant parse_variant(std::string_view name) {
    std::string key;
    for (char c : name) {
        if (c != '-' && c != '_') {
            key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    for (Variant v : {Variant::Standard, Variant::EpochWise, Variant::InstanceWise, Variant::Selective}) {
        if (key == to_string(v)) {
            return v;
        }
    }
    if (key == "lstm") {
        return Variant::Standard;
    }
    throw std::invalid_argument("unknown variant '" + std::string(name) + "'");
}

TopK TopK::fraction(double f) {
    if (!(f > 0.0 && f <= 1.0)) {
        throw std::invalid_argument("TopK::fraction must be in (0, 1]");
    }
    return TopK(Kind::Fraction, 0, f);
}

std::size_t TopK::resolve(std::size_t series_length) const noexcept {
    switch (kind_) {
    case Kind::All:
        return series_length;
    case Kind::Count:
        return std::min(count_, series_length);
    case Kind::Fraction:
        return std::max<std::size_t>(
            1, static_cast<std::size_t>(std::floor(fraction_ * static_cast<double>(series_length))));
    }
    return series_length;
}

std::string TopK::describe() const {
    switch (kind_) {
    case Kind::All:
        return "all";
    case Kind::Count:
        return std::to_string(count_);
    case Kind::Fraction:
        return format_double(fraction_ * 100.0) + "%";
    }
    return "all";
}

void PastpropConfig::validate() const {
    if (!(correction_rate >= 0.0) || !std::isfinite(correction_rate)) {
        throw std::invalid_argument("correction_rate must be a finite value >= 0");
    }
    if (!(correction_threshold >= 0.0)) {
        throw std::invalid_argument("correction_threshold must be >= 0");
    }
    if (epochs == 0) {
        throw std::invalid_argument("epochs must be >= 1");
    }
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("learning_rate must be a finite value >= 0");
    }
    if (batch_size == 0) {
        throw std::invalid_argument("batch_size must be >= 1");
    }
}

void CorrectionBuffer::reset() {
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
}

void accumulate_deltas(CorrectionBuffer &buffer, std::size_t window_start, std::span<const Vector> input_grads,
                       double correction_rate) {
    if (window_start + input_grads.size() > buffer.sums.size()) {
        throw std::out_of_range("accumulate_deltas: window [" + std::to_string(window_start) + ", " +
                                std::to_string(window_start + input_grads.size()) + ") exceeds series length " +
                                std::to_string(buffer.sums.size()));
    }
    for (std::size_t k = 0; k < input_grads.size(); ++k) {
        if (input_grads[k].size() != 1) {
            throw std::invalid_argument("accumulate_deltas: only univariate inputs can be corrected");
        }
        buffer.sums[window_start + k] += -correction_rate * input_grads[k][0];
        ++buffer.counts[window_start + k];
    }
}

Vector finalize_corrections(const CorrectionBuffer &buffer) {
    Vector out(buffer.sums.size(), 0.0);
    for (std::size_t t = 0; t < out.size(); ++t) {
        if (buffer.counts[t] > 0) {
            out[t] = buffer.sums[t] / static_cast<double>(buffer.counts[t]);
        }
    }
    return out;
}

Vector select_corrections(std::span<const double> corrections, double threshold, std::size_t neighborhood,
                          const TopK &top_k) {
    const std::size_t n = corrections.size();
    Vector out(n, 0.0);
    if (n == 0) {
        return out;
    }

    // Prefix sums of |c| give each neighborhood mean in O(1).
    Vector prefix(n + 1, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        prefix[t + 1] = prefix[t] + std::abs(corrections[t]);
    }
    std::vector<std::size_t> kept;
    Vector score(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t lo = t >= neighborhood ? t - neighborhood : 0;
        const std::size_t hi = std::min(n - 1, t + neighborhood);
        const double neighbor_mean = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
        score[t] = std::abs(corrections[t]) + neighbor_mean;
        if (score[t] > threshold) {
            kept.push_back(t);
        }
    }

    const std::size_t limit = top_k.resolve(n);
    if (kept.size() > limit) {
        std::partial_sort(kept.begin(), kept.begin() + static_cast<std::ptrdiff_t>(limit), kept.end(),
                          [&](std::size_t a, std::size_t b) {
                              return score[a] > score[b] || (score[a] == score[b] && a < b);
                          });
        kept.resize(limit);
    }
    for (std::size_t t : kept) {
        out[t] = corrections[t];
    }
    return out;
}

namespace {

double apply_corrections(Vector &series, std::span<const double> corrections, bool clamp) {
    double magnitude = 0.0;
    for (std::size_t t = 0; t < series.size(); ++t) {
        const double delta = corrections[t];
        if (delta == 0.0) {
            continue;
        }
        series[t] += delta;
        if (clamp) {
            series[t] = std::clamp(series[t], 0.0, 1.0);
        }
        magnitude += std::abs(delta);
    }
    return magnitude;
}

void add_into(LstmGradients &acc, const LstmGradients &g) {
    auto a = acc.matrices();
    auto b = g.matrices();
    for (std::size_t m = 0; m < a.size(); ++m) {
        auto av = a[m]->values();
        auto bv = b[m]->values();
        for (std::size_t k = 0; k < av.size(); ++k) {
            av[k] += bv[k];
        }
    }
}

TrainingOutcome run_training(std::span<const double> series, const PastpropConfig &config, const LstmDims &dims,
                             LstmWeights weights, const EpochObserver &observer) {
    config.validate();
    dims.validate();
    if (dims.input_dim != 1) {
        throw std::invalid_argument("train: only univariate series (input_dim 1) are supported");
    }
    if (!weights.matches(dims)) {
        throw std::invalid_argument("train: initial weights do not match dimensions");
    }
    if (series.size() <= dims.sample_size + dims.label_size) {
        throw std::invalid_argument("train: series of length " + std::to_string(series.size()) +
                                    " needs more than sample + label = " +
                                    std::to_string(dims.sample_size + dims.label_size) + " points");
    }
    if (!all_finite(series)) {
        throw std::invalid_argument("train: series contains non-finite values");
    }

    const Variant variant = config.variant;
    const double rate = config.correction_rate;
    Vector data(series.begin(), series.end());
    const WindowedDataset windows = make_windows(data, dims.sample_size, dims.label_size);
    const std::vector<std::size_t> coverage = windows.input_coverage();
    CorrectionBuffer buffer(data.size());

    TrainingOutcome outcome;
    outcome.loss_trace.reserve(config.epochs);
    outcome.correction_magnitude.reserve(config.epochs);

    std::optional<LstmGradients> batch;
    std::size_t in_batch = 0;
    Vector epoch_series;
    WindowCache cache;
    BackwardResult grads;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        if (observer) {
            epoch_series = data;
        }
        buffer.reset();
        double loss_sum = 0.0;
        double magnitude = 0.0;

        for (std::size_t k = 0; k < windows.size(); ++k) {
            forward_window_into(weights, windows.input(k), dims, cache);
            backward_window_into(weights, cache, windows.label(k), grads);
            loss_sum += grads.loss;

            if (config.batch_size == 1) {
                apply_sgd(weights, grads.weight_grads, config.learning_rate);
            } else {
                if (!batch) {
                    batch = grads.weight_grads;
                } else {
                    add_into(*batch, grads.weight_grads);
                }
                ++in_batch;
                if (in_batch == config.batch_size || k + 1 == windows.size()) {
                    apply_sgd(weights, *batch, config.learning_rate / static_cast<double>(in_batch));
                    batch.reset();
                    in_batch = 0;
                }
            }

            const std::size_t start = windows.start(k);
            switch (variant) {
            case Variant::Standard:
                break;
            case Variant::EpochWise:
            case Variant::Selective:
                accumulate_deltas(buffer, start, grads.input_grads, rate);
                break;
            case Variant::InstanceWise:
                for (std::size_t j = 0; j < grads.input_grads.size(); ++j) {
                    const std::size_t t = start + j;
                    const double delta = -rate * grads.input_grads[j][0] / static_cast<double>(coverage[t]);
                    if (delta == 0.0) {
                        continue;
                    }
                    data[t] += delta;
                    if (config.clamp_corrections) {
                        data[t] = std::clamp(data[t], 0.0, 1.0);
                    }
                    magnitude += std::abs(delta);
                }
                break;
            }
        }

        if (variant == Variant::EpochWise) {
            magnitude += apply_corrections(data, finalize_corrections(buffer), config.clamp_corrections);
        } else if (variant == Variant::Selective && epoch >= config.epoch_embargo) {
            const Vector selected = select_corrections(finalize_corrections(buffer), config.correction_threshold,
                                                       config.neighborhood_size, config.top_k);
            magnitude += apply_corrections(data, selected, config.clamp_corrections);
        }

        if (!all_finite(data)) {
            throw std::domain_error("train: corrections produced non-finite series values in epoch " +
                                    std::to_string(epoch + 1));
        }
        outcome.loss_trace.push_back(loss_sum / static_cast<double>(windows.size()));
        outcome.correction_magnitude.push_back(magnitude);
        if (observer) {
            observer(epoch, epoch_series, weights);
        }
    }

    outcome.weights = std::move(weights);
    outcome.corrected_series = std::move(data);
    return outcome;
}

TrainingOutcome train_as(Variant v, std::span<const double> series, PastpropConfig config, const LstmDims &dims,
                         LstmWeights initial_weights, const EpochObserver &observer) {
    config.variant = v;
    return run_training(series, config, dims, std::move(initial_weights), observer);
}

} // namespace

TrainingOutcome train(std::span<const double> series, const PastpropConfig &config, const LstmDims &dims,
                      LstmWeights initial_weights, const EpochObserver &observer) {
    return run_training(series, config, dims, std::move(initial_weights), observer);
}

TrainingOutcome train_standard(std::span<const double> series, PastpropConfig config, const LstmDims &dims,
                               LstmWeights initial_weights, const EpochObserver &observer) {
    return train_as(Variant::Standard, series, std::move(config), dims, std::move(initial_weights), observer);
}

TrainingOutcome train_epochwise(std::span<const double> series, PastpropConfig config, const LstmDims &dims,
                                LstmWeights initial_weights, const EpochObserver &observer) {
    return train_as(Variant::EpochWise, series, std::move(config), dims, std::move(initial_weights), observer);
}

TrainingOutcome train_instancewise(std::span<const double> series, PastpropConfig config, const LstmDims &dims,
                                   LstmWeights initial_weights, const EpochObserver &observer) {
    return train_as(Variant::InstanceWise, series, std::move(config), dims, std::move(initial_weights), observer);
}

TrainingOutcome train_selective(std::span<const double> series, PastpropConfig config, const LstmDims &dims,
                                LstmWeights initial_weights, const EpochObserver &observer) {
    return train_as(Variant::Selective, series, std::move(config), dims, std::move(initial_weights), observer);
}

} // namespace pastprop
