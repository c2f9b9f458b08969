#pragma once

#include "pastprop/numeric.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pastprop {

struct TimeSeriesRecord {
    std::string id;
    Vector values;
    std::optional<std::string> frequency;
};

enum class CsvLayout {
    Row,    // id,v1,v2,... one series per line; trailing empty cells allowed
    Column  // one value per line, optional header line used as the id
};

/// Parses series from a stream. `source` names the input in error messages.
/// Throws std::runtime_error on empty input, non-numeric or missing cells.
std::vector<TimeSeriesRecord> read_csv(std::istream &in, CsvLayout layout, const std::string &source = "<stream>");
std::vector<TimeSeriesRecord> load_csv(const std::filesystem::path &path, CsvLayout layout);

/// Min-max scaling parameters in original units.
struct NormalizationParams {
    double min = 0.0;
    double max = 1.0;

    double apply(double x) const noexcept { return (x - min) / (max - min); }
    double invert(double x) const noexcept { return x * (max - min) + min; }
    Vector apply(std::span<const double> xs) const;
    Vector invert(std::span<const double> xs) const;

    /// Throws std::invalid_argument for an empty or constant series.
    static NormalizationParams fit(std::span<const double> series);
};

/// Scales to [0, 1] using the series' own min and max.
std::pair<Vector, NormalizationParams> normalize(std::span<const double> series);
Vector denormalize(std::span<const double> series, const NormalizationParams &params);

struct SplitSpec {
    double train_fraction = 0.7;
    /// When set, the whole input is training data and this is the test part.
    std::optional<Vector> external_test;
};

struct TrainTestSplit {
    Vector train;
    Vector test;
};

/// Contiguous split with floor(n * train_fraction) training points. Throws
/// std::invalid_argument if either part is shorter than `min_part_length`.
TrainTestSplit split(std::span<const double> series, const SplitSpec &spec, std::size_t min_part_length = 1);

/**
 * Sliding windows over a series. Inputs cover [start, start + sample_size)
 * and labels the following label_size steps. The dataset holds views into
 * the series, so in-place edits of the underlying buffer are visible
 * through input() and label().
 */
class WindowedDataset {
public:
    WindowedDataset(std::span<const double> series, std::size_t sample_size, std::size_t label_size,
                    std::size_t stride = 1);

    std::size_t size() const noexcept { return starts_.size(); }
    std::size_t start(std::size_t k) const noexcept { return starts_[k]; }
    std::span<const double> input(std::size_t k) const noexcept { return series_.subspan(starts_[k], sample_size_); }
    std::span<const double> label(std::size_t k) const noexcept {
        return series_.subspan(starts_[k] + sample_size_, label_size_);
    }
    std::size_t sample_size() const noexcept { return sample_size_; }
    std::size_t label_size() const noexcept { return label_size_; }

    /// Number of windows that use each index as an input position.
    std::vector<std::size_t> input_coverage() const;

private:
    std::span<const double> series_;
    std::size_t sample_size_;
    std::size_t label_size_;
    std::vector<std::size_t> starts_;
};

WindowedDataset make_windows(std::span<const double> series, std::size_t sample_size, std::size_t label_size,
                             std::size_t stride = 1);

enum class AnomalyLevel { Zero = 0, Quarter = 25, Half = 50 };

/// Throws std::invalid_argument for values other than 0, 25 and 50.
AnomalyLevel anomaly_level_from_int(int level);

struct AnomalySpec {
    std::size_t start = 0;
    std::size_t length = 0;
    AnomalyLevel level = AnomalyLevel::Zero;
    std::size_t chunk_count = 4;
    std::uint64_t seed = 0;
};

using ZoneMask = std::vector<bool>;

struct AnomalousSeries {
    Vector series;
    ZoneMask mask;
};

/**
 * Replaces a zone of a normalized series with an artificial anomaly.
 *
 * Level 0 writes zeros. Levels 25 and 50 split the zone into chunk_count
 * chunks (the last one takes the remainder), draw a sign per chunk and move
 * every value v by sign * max(0.1, p * v).
 */
AnomalousSeries inject_anomaly(std::span<const double> series, const AnomalySpec &spec);

void write_series_row(std::ostream &out, const std::string &id, std::span<const double> values);
void write_mask_column(std::ostream &out, const ZoneMask &mask);
std::string format_double(double x);

} // namespace pastprop
