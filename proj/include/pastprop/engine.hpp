#pragma once

#include "pastprop/lstm.hpp"
#include "pastprop/numeric.hpp"

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pastprop {

enum class Variant { Standard, EpochWise, InstanceWise, Selective };

std::string_view to_string(Variant v) noexcept;
/// Accepts "standard", "epochwise", "instancewise", "selective" (also with '-' or '_').
Variant parse_variant(std::string_view name);

/// How many of the highest ranked deltas Selective keeps.
class TopK {
public:
    static TopK all() noexcept { return TopK(Kind::All, 0, 0.0); }
    static TopK count(std::size_t n) noexcept { return TopK(Kind::Count, n, 0.0); }
    static TopK fraction(double f);

    std::size_t resolve(std::size_t series_length) const noexcept;
    bool is_all() const noexcept { return kind_ == Kind::All; }
    std::string describe() const;

    bool operator==(const TopK &) const = default;

private:
    enum class Kind { All, Count, Fraction };
    TopK(Kind kind, std::size_t n, double f) : kind_(kind), count_(n), fraction_(f) {}

    Kind kind_;
    std::size_t count_;
    double fraction_;
};

struct PastpropConfig {
    Variant variant = Variant::Standard;
    double correction_rate = 1.0;

    // Selective only.
    double correction_threshold = 0.0;
    std::size_t neighborhood_size = 0;
    std::size_t epoch_embargo = 0;
    TopK top_k = TopK::fraction(0.1);

    std::size_t epochs = 50;
    double learning_rate = 0.001;
    std::size_t batch_size = 1;
    /// Clamp corrected values into [0, 1].
    bool clamp_corrections = false;

    void validate() const;
};

/// Per-time-step delta sums and the number of windows that contributed.
struct CorrectionBuffer {
    explicit CorrectionBuffer(std::size_t length) : sums(length, 0.0), counts(length, 0) {}

    void reset();

    Vector sums;
    std::vector<std::size_t> counts;
};

/// Adds -correction_rate * dLoss/dx for every input position of the window.
/// `input_grads` holds one single-entry gradient per window step.
void accumulate_deltas(CorrectionBuffer &buffer, std::size_t window_start, std::span<const Vector> input_grads,
                       double correction_rate);

/// Per-step mean of the accumulated deltas; zero where nothing was accumulated.
Vector finalize_corrections(const CorrectionBuffer &buffer);

/**
 * Keeps the corrections whose score exceeds `threshold`, at most top_k of
 * them, and zeroes the rest. The score of position t is |c[t]| plus the mean
 * of |c[j]| over the neighborhood [t - s, t + s] clipped to the series.
 * Ties are broken by lower index.
 */
Vector select_corrections(std::span<const double> corrections, double threshold, std::size_t neighborhood,
                          const TopK &top_k);

struct TrainingOutcome {
    LstmWeights weights;
    Vector corrected_series;
    /// Mean window loss per epoch, measured before each window's update.
    Vector loss_trace;
    /// Sum of |applied correction| per epoch.
    Vector correction_magnitude;
};

/// Called after every epoch with the zero-based epoch index, the series the
/// epoch trained on and the weights at the end of the epoch.
using EpochObserver =
    std::function<void(std::size_t epoch, std::span<const double> epoch_series, const LstmWeights &weights)>;

TrainingOutcome train(std::span<const double> series, const PastpropConfig &config, const LstmDims &dims,
                      LstmWeights initial_weights, const EpochObserver &observer = {});

TrainingOutcome train_standard(std::span<const double> series, PastpropConfig config, const LstmDims &dims,
                               LstmWeights initial_weights, const EpochObserver &observer = {});
TrainingOutcome train_epochwise(std::span<const double> series, PastpropConfig config, const LstmDims &dims,
                                LstmWeights initial_weights, const EpochObserver &observer = {});
TrainingOutcome train_instancewise(std::span<const double> series, PastpropConfig config, const LstmDims &dims,
                                   LstmWeights initial_weights, const EpochObserver &observer = {});
TrainingOutcome train_selective(std::span<const double> series, PastpropConfig config, const LstmDims &dims,
                                LstmWeights initial_weights, const EpochObserver &observer = {});

} // namespace pastprop
