#include "pastprop/data.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace pastprop {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    std::string out(s.substr(first, last - first + 1));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
        out = out.substr(1, out.size() - 2);
    }
    return out;
}

std::vector<std::string> split_cells(const std::string &line) {
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        cells.push_back(trim(std::string_view(line).substr(pos, comma == std::string::npos ? comma : comma - pos)));
        if (comma == std::string::npos) {
            break;
        }
        pos = comma + 1;
    }
    return cells;
}

std::optional<double> parse_number(const std::string &cell) {
    if (cell.empty()) {
        return std::nullopt;
    }
    double value = 0.0;
    const char *begin = cell.data();
    const char *end = begin + cell.size();
    if (*begin == '+') {
        ++begin;
    }
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

[[noreturn]] void cell_error(const std::string &source, std::size_t line, std::size_t col, const std::string &cell) {
    throw std::runtime_error(source + ": non-numeric value '" + cell + "' at row " + std::to_string(line) +
                             ", column " + std::to_string(col));
}

std::vector<TimeSeriesRecord> read_rows(std::istream &in, const std::string &source) {
    std::vector<TimeSeriesRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split_cells(line);
        if (records.empty() && line_no == 1 && cells.size() > 1 &&
            std::none_of(cells.begin() + 1, cells.end(), [](const std::string &c) { return parse_number(c); })) {
            continue;  // header
        }
        std::size_t last = cells.size();
        while (last > 1 && cells[last - 1].empty()) {
            --last;
        }
        TimeSeriesRecord rec;
        rec.id = cells[0];
        for (std::size_t c = 1; c < last; ++c) {
            const auto v = parse_number(cells[c]);
            if (!v) {
                if (cells[c].empty()) {
                    throw std::runtime_error(source + ": missing value at row " + std::to_string(line_no) +
                                             ", column " + std::to_string(c + 1));
                }
                cell_error(source, line_no, c + 1, cells[c]);
            }
            rec.values.push_back(*v);
        }
        if (rec.values.empty()) {
            throw std::runtime_error(source + ": row " + std::to_string(line_no) + " has no values");
        }
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<TimeSeriesRecord> read_column(std::istream &in, const std::string &source) {
    TimeSeriesRecord rec;
    rec.id = source;
    std::string line;
    std::size_t line_no = 0;
    bool seen_content = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string cell = trim(line);
        if (cell.empty()) {
            continue;
        }
        const auto v = parse_number(cell);
        if (!v) {
            if (!seen_content) {
                rec.id = cell;
                seen_content = true;
                continue;
            }
            cell_error(source, line_no, 1, cell);
        }
        seen_content = true;
        rec.values.push_back(*v);
    }
    if (rec.values.empty()) {
        return {};
    }
    return {std::move(rec)};
}

} // namespace

std::vector<TimeSeriesRecord> read_csv(std::istream &in, CsvLayout layout, const std::string &source) {
    auto records = layout == CsvLayout::Row ? read_rows(in, source) : read_column(in, source);
    if (records.empty()) {
        throw std::runtime_error(source + ": no data");
    }
    return records;
}

std::vector<TimeSeriesRecord> load_csv(const std::filesystem::path &path, CsvLayout layout) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    auto records = read_csv(in, layout, path.string());
    if (layout == CsvLayout::Column && records.front().id == path.string()) {
        records.front().id = path.stem().string();
    }
    return records;
}

Vector NormalizationParams::apply(std::span<const double> xs) const {
    Vector out(xs.size());
    std::transform(xs.begin(), xs.end(), out.begin(), [this](double x) { return apply(x); });
    return out;
}

Vector NormalizationParams::invert(std::span<const double> xs) const {
    Vector out(xs.size());
    std::transform(xs.begin(), xs.end(), out.begin(), [this](double x) { return invert(x); });
    return out;
}

NormalizationParams NormalizationParams::fit(std::span<const double> series) {
    if (series.empty()) {
        throw std::invalid_argument("normalize: empty series");
    }
    const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
    if (!(*hi > *lo)) {
        throw std::invalid_argument("normalize: constant series (min == max == " + format_double(*lo) + ")");
    }
    return {*lo, *hi};
}

std::pair<Vector, NormalizationParams> normalize(std::span<const double> series) {
    const auto params = NormalizationParams::fit(series);
    return {params.apply(series), params};
}

Vector denormalize(std::span<const double> series, const NormalizationParams &params) {
    return params.invert(series);
}

TrainTestSplit split(std::span<const double> series, const SplitSpec &spec, std::size_t min_part_length) {
    TrainTestSplit out;
    if (spec.external_test) {
        out.train.assign(series.begin(), series.end());
        out.test = *spec.external_test;
    } else {
        if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
            throw std::invalid_argument("split: train_fraction must be in (0, 1)");
        }
        const auto n_train =
            static_cast<std::size_t>(std::floor(static_cast<double>(series.size()) * spec.train_fraction));
        out.train.assign(series.begin(), series.begin() + static_cast<std::ptrdiff_t>(n_train));
        out.test.assign(series.begin() + static_cast<std::ptrdiff_t>(n_train), series.end());
    }
    if (out.train.size() < min_part_length || out.test.size() < min_part_length) {
        throw std::invalid_argument("split: parts of length " + std::to_string(out.train.size()) + "/" +
                                    std::to_string(out.test.size()) + " are shorter than " +
                                    std::to_string(min_part_length));
    }
    return out;
}

WindowedDataset::WindowedDataset(std::span<const double> series, std::size_t sample_size, std::size_t label_size,
                                 std::size_t stride)
    : series_(series), sample_size_(sample_size), label_size_(label_size) {
    if (sample_size == 0 || label_size == 0 || stride == 0) {
        throw std::invalid_argument("make_windows: sample, label and stride must be >= 1");
    }
    if (series.size() < sample_size + label_size) {
        throw std::invalid_argument("make_windows: series of length " + std::to_string(series.size()) +
                                    " is shorter than sample + label = " + std::to_string(sample_size + label_size));
    }
    for (std::size_t s = 0; s + sample_size + label_size <= series.size(); s += stride) {
        starts_.push_back(s);
    }
}

std::vector<std::size_t> WindowedDataset::input_coverage() const {
    std::vector<std::size_t> counts(series_.size(), 0);
    for (std::size_t s : starts_) {
        for (std::size_t k = 0; k < sample_size_; ++k) {
            ++counts[s + k];
        }
    }
    return counts;
}

WindowedDataset make_windows(std::span<const double> series, std::size_t sample_size, std::size_t label_size,
                             std::size_t stride) {
    return WindowedDataset(series, sample_size, label_size, stride);
}

AnomalyLevel anomaly_level_from_int(int level) {
    switch (level) {
    case 0:
        return AnomalyLevel::Zero;
    case 25:
        return AnomalyLevel::Quarter;
    case 50:
        return AnomalyLevel::Half;
    default:
        throw std::invalid_argument("anomaly level must be 0, 25 or 50, got " + std::to_string(level));
    }
}

AnomalousSeries inject_anomaly(std::span<const double> series, const AnomalySpec &spec) {
    if (spec.length == 0 || spec.start + spec.length > series.size()) {
        throw std::invalid_argument("inject_anomaly: zone [" + std::to_string(spec.start) + ", " +
                                    std::to_string(spec.start + spec.length) + ") outside series of length " +
                                    std::to_string(series.size()));
    }
    const int percent = static_cast<int>(spec.level);
    anomaly_level_from_int(percent);

    AnomalousSeries out{Vector(series.begin(), series.end()), ZoneMask(series.size(), false)};
    for (std::size_t t = spec.start; t < spec.start + spec.length; ++t) {
        out.mask[t] = true;
    }
    if (spec.level == AnomalyLevel::Zero) {
        std::fill_n(out.series.begin() + static_cast<std::ptrdiff_t>(spec.start), spec.length, 0.0);
        return out;
    }

    if (spec.chunk_count == 0 || spec.chunk_count > spec.length) {
        throw std::invalid_argument("inject_anomaly: chunk_count must be in [1, zone length]");
    }
    const double fraction = percent / 100.0;
    const std::size_t chunk = spec.length / spec.chunk_count;
    SeededRng rng(spec.seed);
    for (std::size_t c = 0; c < spec.chunk_count; ++c) {
        const double sign = rng.coin() ? 1.0 : -1.0;
        const std::size_t begin = spec.start + c * chunk;
        const std::size_t end = c + 1 == spec.chunk_count ? spec.start + spec.length : begin + chunk;
        for (std::size_t t = begin; t < end; ++t) {
            const double v = series[t];
            out.series[t] = v + sign * std::max(0.1, fraction * v);
        }
    }
    return out;
}

std::string format_double(double x) {
    return fmt::format("{}", x);
}

void write_series_row(std::ostream &out, const std::string &id, std::span<const double> values) {
    out << id;
    for (double v : values) {
        out << ',' << format_double(v);
    }
    out << '\n';
}

void write_mask_column(std::ostream &out, const ZoneMask &mask) {
    out << "mask\n";
    for (bool m : mask) {
        out << (m ? 1 : 0) << '\n';
    }
}

} // namespace pastprop
