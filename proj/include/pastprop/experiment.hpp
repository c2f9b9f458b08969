#pragma once

#include "pastprop/data.hpp"
#include "pastprop/engine.hpp"
#include "pastprop/evaluation.hpp"
#include "pastprop/lstm.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pastprop {

enum class TestProtocol {
    Rolling,   // each window reads true test values, labels advance by label_size
    Recursive  // predictions are fed back as inputs
};

TestProtocol parse_protocol(std::string_view name);
std::string_view to_string(TestProtocol p) noexcept;

struct MethodSpec {
    std::string name;
    PastpropConfig config;
};

struct ExperimentConfig {
    std::filesystem::path input;
    CsvLayout layout = CsvLayout::Row;
    /// Per-series test data (row layout, matched by id). Disables the fractional split.
    std::optional<std::filesystem::path> test_input;
    double train_fraction = 0.7;

    LstmDims dims;
    double init_low = -0.1;
    double init_high = 0.1;

    std::vector<MethodSpec> methods;
    std::optional<AnomalySpec> anomaly;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

    TestProtocol protocol = TestProtocol::Rolling;
    DistanceMetric distance = DistanceMetric::L2;

    std::filesystem::path output_dir;
    /// Where transfer looks for corrected series; defaults to output_dir/corrected.
    std::optional<std::filesystem::path> corrected_dir;

    void validate() const;
    std::filesystem::path resolved_corrected_dir() const;
};

/// Parses the declarative JSON config. Method entries inherit epochs,
/// learning_rate and batch_size from the "training" block.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path &path);
std::string config_to_json(const ExperimentConfig &config);

/// One series ready for training: normalized with training statistics, with
/// the optional anomaly injected into the training part.
struct PreparedSeries {
    std::string id;
    std::size_t length = 0;
    NormalizationParams normalization;
    Vector clean_train;
    Vector train;
    Vector test;
    std::optional<ZoneMask> zone;
};

PreparedSeries prepare_series(const TimeSeriesRecord &record, const std::optional<Vector> &external_test,
                              const ExperimentConfig &config);

struct Forecast {
    Vector predictions;
    Vector targets;
};

/// Forecasts the test range following `history`, which supplies the first
/// input window.
Forecast forecast_test(const LstmWeights &weights, const LstmDims &dims, std::span<const double> history,
                       std::span<const double> test, TestProtocol protocol);

struct ReportRow {
    std::string series_id;
    std::string method;
    Variant variant = Variant::Standard;
    std::uint64_t seed = 0;
    std::size_t series_length = 0;
    std::string initial_weights_checksum;
    std::optional<double> mse;
    std::optional<double> nmse;
    std::optional<double> reconstruction_ability;
    std::optional<double> outside_loss;
    Vector loss_trace;
    Vector correction_magnitude;
    std::optional<std::string> error;
    /// Not serialized into the report so reruns stay byte-identical.
    double wall_seconds = 0.0;
};

struct GainRow {
    std::string series_id;
    std::string method;
    std::uint64_t seed = 0;
    double lstm_mse = 0.0;
    double variant_mse = 0.0;
    double gain = 0.0;  // lstm_mse - variant_mse
};

struct ExperimentReport {
    std::vector<ReportRow> rows;
    std::vector<GainRow> gains;
    /// Failures that are not tied to a single cell, such as an unreadable test file.
    std::vector<std::string> errors;

    bool all_succeeded() const noexcept;
};

/**
 * Runs every method for every series and seed. Within a (series, seed) cell
 * all methods start from the same initial weights. When output_dir is set,
 * writes resolved_config.json, report.json, report.csv, gains.csv,
 * timings.csv, corrected/ and masks/.
 */
ExperimentReport run_experiment(const ExperimentConfig &config);

struct TransferRow {
    std::string series_id;
    std::string producer;
    std::uint64_t seed = 0;
    std::optional<double> baseline_mse;
    std::optional<double> transfer_mse;
    std::optional<double> gain;  // baseline_mse - transfer_mse
    std::optional<std::string> error;
};

struct TransferReport {
    std::vector<TransferRow> rows;
    std::vector<std::string> errors;

    bool all_succeeded() const noexcept;
};

/// Retrains a Standard LSTM on every corrected series written by a previous
/// run with the same config, using that run's initial weights, and compares
/// it with training on the uncorrected input.
TransferReport run_correction_transfer(const ExperimentConfig &config);

std::filesystem::path corrected_series_path(const std::filesystem::path &dir, const std::string &series_id,
                                            const std::string &method, std::uint64_t seed);

struct MethodSummary {
    std::string method;
    std::size_t cells = 0;
    std::size_t failures = 0;
    std::optional<double> mean_mse;
    std::optional<double> mean_nmse;
    std::optional<double> mean_reconstruction_ability;
    std::optional<double> mean_outside_loss;
    /// Pearson(series length, MSE) across successful cells.
    std::optional<double> length_mse_correlation;
    /// Pearson(Standard MSE, gain) across gain rows of this method.
    std::optional<double> lstm_mse_gain_correlation;
};

std::vector<MethodSummary> summarize(const ExperimentReport &report);

std::string report_to_json(const ExperimentReport &report);
ExperimentReport report_from_json(std::string_view json_text);
std::string report_to_csv(const ExperimentReport &report);
std::string gains_to_csv(const ExperimentReport &report);
std::string transfer_to_csv(const TransferReport &report);
std::string transfer_to_json(const TransferReport &report);
std::string summary_to_csv(const std::vector<MethodSummary> &summary);
std::string summary_to_json(const std::vector<MethodSummary> &summary);

} // namespace pastprop
