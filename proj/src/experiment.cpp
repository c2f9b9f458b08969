#include "pastprop/experiment.hpp"

#include "json.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace pastprop {

using nlohmann::json;

TestProtocol parse_protocol(std::string_view name) {
    if (name == "rolling") {
        return TestProtocol::Rolling;
    }
    if (name == "recursive") {
        return TestProtocol::Recursive;
    }
    throw std::invalid_argument("unknown test protocol '" + std::string(name) + "'");
}

std::string_view to_string(TestProtocol p) noexcept {
    return p == TestProtocol::Rolling ? "rolling" : "recursive";
}

bool ExperimentReport::all_succeeded() const noexcept {
    return errors.empty() && std::none_of(rows.begin(), rows.end(), [](const ReportRow &r) { return r.error; });
}

bool TransferReport::all_succeeded() const noexcept {
    return errors.empty() && std::none_of(rows.begin(), rows.end(), [](const TransferRow &r) { return r.error; });
}

void ExperimentConfig::validate() const {
    dims.validate();
    if (dims.input_dim != 1) {
        throw std::invalid_argument("config: only univariate inputs are supported");
    }
    if (methods.empty()) {
        throw std::invalid_argument("config: at least one method is required");
    }
    if (seeds.empty()) {
        throw std::invalid_argument("config: at least one seed is required");
    }
    if (!(init_low < init_high)) {
        throw std::invalid_argument("config: init_low must be below init_high");
    }
    if (!test_input && !(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("config: train_fraction must be in (0, 1)");
    }
    std::vector<std::string> names;
    for (const auto &m : methods) {
        if (m.name.empty()) {
            throw std::invalid_argument("config: method without a name");
        }
        if (std::find(names.begin(), names.end(), m.name) != names.end()) {
            throw std::invalid_argument("config: duplicate method name '" + m.name + "'");
        }
        names.push_back(m.name);
        m.config.validate();
    }
}

std::filesystem::path ExperimentConfig::resolved_corrected_dir() const {
    return corrected_dir ? *corrected_dir : output_dir / "corrected";
}

namespace {

TopK parse_top_k(const json &j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "all") {
            return TopK::all();
        }
        if (!s.empty() && s.back() == '%') {
            return TopK::fraction(std::stod(s.substr(0, s.size() - 1)) / 100.0);
        }
        throw std::invalid_argument("top_k: expected \"all\", a count or a percentage, got '" + s + "'");
    }
    if (j.is_number_unsigned()) {
        return TopK::count(j.get<std::size_t>());
    }
    throw std::invalid_argument("top_k: expected \"all\", a count or a percentage");
}

json top_k_to_json(const TopK &k) {
    const std::string d = k.describe();
    if (d == "all" || d.back() == '%') {
        return d;
    }
    return std::stoull(d);
}

CsvLayout parse_layout(const std::string &s) {
    if (s == "row") {
        return CsvLayout::Row;
    }
    if (s == "column") {
        return CsvLayout::Column;
    }
    throw std::invalid_argument("layout must be \"row\" or \"column\", got '" + s + "'");
}

std::vector<MethodSpec> default_methods(const PastpropConfig &base) {
    std::vector<MethodSpec> out;
    for (Variant v : {Variant::Standard, Variant::EpochWise, Variant::InstanceWise, Variant::Selective}) {
        PastpropConfig c = base;
        c.variant = v;
        out.push_back({std::string(to_string(v)), c});
    }
    return out;
}

template <typename T>
void read_if(const json &j, const char *key, T &out) {
    if (j.contains(key)) {
        out = j.at(key).get<T>();
    }
}

} // namespace

ExperimentConfig parse_config(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error &e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }

    ExperimentConfig cfg;
    try {
        if (j.contains("input")) {
            const auto &in = j.at("input");
            cfg.input = in.at("path").get<std::string>();
            if (in.contains("layout")) {
                cfg.layout = parse_layout(in.at("layout").get<std::string>());
            }
            if (in.contains("test_path")) {
                cfg.test_input = std::filesystem::path(in.at("test_path").get<std::string>());
            }
        }
        if (j.contains("split")) {
            read_if(j.at("split"), "train_fraction", cfg.train_fraction);
        }
        if (j.contains("model")) {
            const auto &m = j.at("model");
            read_if(m, "hidden_units", cfg.dims.hidden_units);
            read_if(m, "sample_size", cfg.dims.sample_size);
            read_if(m, "label_size", cfg.dims.label_size);
            read_if(m, "init_low", cfg.init_low);
            read_if(m, "init_high", cfg.init_high);
        }
        PastpropConfig base;
        if (j.contains("training")) {
            const auto &t = j.at("training");
            read_if(t, "epochs", base.epochs);
            read_if(t, "learning_rate", base.learning_rate);
            read_if(t, "batch_size", base.batch_size);
        }
        if (j.contains("methods")) {
            for (const auto &m : j.at("methods")) {
                MethodSpec spec{m.value("name", std::string()), base};
                spec.config.variant = parse_variant(m.at("variant").get<std::string>());
                if (spec.name.empty()) {
                    spec.name = std::string(to_string(spec.config.variant));
                }
                read_if(m, "correction_rate", spec.config.correction_rate);
                read_if(m, "correction_threshold", spec.config.correction_threshold);
                read_if(m, "neighborhood_size", spec.config.neighborhood_size);
                read_if(m, "epoch_embargo", spec.config.epoch_embargo);
                read_if(m, "epochs", spec.config.epochs);
                read_if(m, "learning_rate", spec.config.learning_rate);
                read_if(m, "batch_size", spec.config.batch_size);
                read_if(m, "clamp_corrections", spec.config.clamp_corrections);
                if (m.contains("top_k")) {
                    spec.config.top_k = parse_top_k(m.at("top_k"));
                }
                cfg.methods.push_back(std::move(spec));
            }
        } else {
            cfg.methods = default_methods(base);
        }
        if (j.contains("anomaly") && !j.at("anomaly").is_null()) {
            const auto &a = j.at("anomaly");
            AnomalySpec spec;
            spec.start = a.at("start").get<std::size_t>();
            spec.length = a.at("length").get<std::size_t>();
            spec.level = anomaly_level_from_int(a.at("level").get<int>());
            read_if(a, "chunks", spec.chunk_count);
            read_if(a, "seed", spec.seed);
            cfg.anomaly = spec;
        }
        if (j.contains("seeds")) {
            cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        }
        if (j.contains("test_protocol")) {
            cfg.protocol = parse_protocol(j.at("test_protocol").get<std::string>());
        }
        if (j.contains("distance")) {
            cfg.distance = parse_distance(j.at("distance").get<std::string>());
        }
        if (j.contains("output_dir")) {
            cfg.output_dir = j.at("output_dir").get<std::string>();
        }
        if (j.contains("corrected_dir")) {
            cfg.corrected_dir = std::filesystem::path(j.at("corrected_dir").get<std::string>());
        }
    } catch (const json::exception &e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    ExperimentConfig cfg = parse_config(ss.str());

    // Relative paths inside a config file are relative to the file itself.
    const std::filesystem::path base = path.parent_path();
    auto anchor = [&base](std::filesystem::path &p) {
        if (!p.empty() && p.is_relative()) {
            p = base / p;
        }
    };
    anchor(cfg.input);
    anchor(cfg.output_dir);
    if (cfg.test_input) {
        anchor(*cfg.test_input);
    }
    if (cfg.corrected_dir) {
        anchor(*cfg.corrected_dir);
    }
    return cfg;
}

std::string config_to_json(const ExperimentConfig &cfg) {
    json j;
    j["input"] = {{"path", cfg.input.string()}, {"layout", cfg.layout == CsvLayout::Row ? "row" : "column"}};
    if (cfg.test_input) {
        j["input"]["test_path"] = cfg.test_input->string();
    }
    j["split"] = {{"train_fraction", cfg.train_fraction}};
    j["model"] = {{"hidden_units", cfg.dims.hidden_units},
                  {"sample_size", cfg.dims.sample_size},
                  {"label_size", cfg.dims.label_size},
                  {"init_low", cfg.init_low},
                  {"init_high", cfg.init_high}};
    j["methods"] = json::array();
    for (const auto &m : cfg.methods) {
        const auto &c = m.config;
        j["methods"].push_back({{"name", m.name},
                                {"variant", std::string(to_string(c.variant))},
                                {"correction_rate", c.correction_rate},
                                {"correction_threshold", c.correction_threshold},
                                {"neighborhood_size", c.neighborhood_size},
                                {"epoch_embargo", c.epoch_embargo},
                                {"top_k", top_k_to_json(c.top_k)},
                                {"epochs", c.epochs},
                                {"learning_rate", c.learning_rate},
                                {"batch_size", c.batch_size},
                                {"clamp_corrections", c.clamp_corrections}});
    }
    if (cfg.anomaly) {
        j["anomaly"] = {{"start", cfg.anomaly->start},
                        {"length", cfg.anomaly->length},
                        {"level", static_cast<int>(cfg.anomaly->level)},
                        {"chunks", cfg.anomaly->chunk_count},
                        {"seed", cfg.anomaly->seed}};
    } else {
        j["anomaly"] = nullptr;
    }
    j["seeds"] = cfg.seeds;
    j["test_protocol"] = std::string(to_string(cfg.protocol));
    j["distance"] = std::string(to_string(cfg.distance));
    j["output_dir"] = cfg.output_dir.string();
    j["corrected_dir"] = cfg.resolved_corrected_dir().string();
    return j.dump(2) + "\n";
}

PreparedSeries prepare_series(const TimeSeriesRecord &record, const std::optional<Vector> &external_test,
                              const ExperimentConfig &config) {
    const std::size_t min_train = config.dims.sample_size + config.dims.label_size + 1;
    SplitSpec spec{config.train_fraction, external_test};
    TrainTestSplit parts = split(record.values, spec, 1);
    if (parts.train.size() < min_train) {
        throw std::invalid_argument("training part has " + std::to_string(parts.train.size()) +
                                    " points, needs at least " + std::to_string(min_train));
    }
    if (config.protocol == TestProtocol::Rolling && parts.test.size() < config.dims.label_size) {
        throw std::invalid_argument("test part is shorter than label_size");
    }

    PreparedSeries ps;
    ps.id = record.id;
    ps.length = parts.train.size() + parts.test.size();
    ps.normalization = NormalizationParams::fit(parts.train);
    ps.clean_train = ps.normalization.apply(parts.train);
    ps.test = ps.normalization.apply(parts.test);
    if (config.anomaly) {
        AnomalousSeries a = inject_anomaly(ps.clean_train, *config.anomaly);
        ps.train = std::move(a.series);
        ps.zone = std::move(a.mask);
    } else {
        ps.train = ps.clean_train;
    }
    return ps;
}

Forecast forecast_test(const LstmWeights &weights, const LstmDims &dims, std::span<const double> history,
                       std::span<const double> test, TestProtocol protocol) {
    const std::size_t sample = dims.sample_size;
    const std::size_t labels = dims.label_size;
    if (history.size() < sample) {
        throw std::invalid_argument("forecast: history shorter than sample_size");
    }
    Forecast fc;
    if (protocol == TestProtocol::Rolling) {
        Vector series(history.end() - static_cast<std::ptrdiff_t>(sample), history.end());
        series.insert(series.end(), test.begin(), test.end());
        for (std::size_t start = 0; start + sample + labels <= series.size(); start += labels) {
            const Vector pred = predict(weights, std::span<const double>(series).subspan(start, sample), dims);
            fc.predictions.insert(fc.predictions.end(), pred.begin(), pred.end());
            fc.targets.insert(fc.targets.end(), series.begin() + static_cast<std::ptrdiff_t>(start + sample),
                              series.begin() + static_cast<std::ptrdiff_t>(start + sample + labels));
        }
    } else {
        Vector buffer(history.end() - static_cast<std::ptrdiff_t>(sample), history.end());
        while (fc.predictions.size() < test.size()) {
            const Vector pred = predict(weights, std::span<const double>(buffer).last(sample), dims);
            fc.predictions.insert(fc.predictions.end(), pred.begin(), pred.end());
            buffer.insert(buffer.end(), pred.begin(), pred.end());
        }
        fc.predictions.resize(test.size());
        fc.targets.assign(test.begin(), test.end());
    }
    if (fc.predictions.empty()) {
        throw std::invalid_argument("forecast: test range produced no predictions");
    }
    return fc;
}

namespace {

std::string safe_name(const std::string &s) {
    std::string out;
    for (char c : s) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                        c == '_' || c == '.';
        out.push_back(ok ? c : '_');
    }
    return out;
}

} // namespace

std::filesystem::path corrected_series_path(const std::filesystem::path &dir, const std::string &series_id,
                                            const std::string &method, std::uint64_t seed) {
    return dir / fmt::format("{}__{}__seed{}.corrected.csv", safe_name(series_id), safe_name(method), seed);
}

namespace {

std::string checksum_hex(const LstmWeights &w) {
    return fmt::format("{:016x}", w.checksum());
}

void write_text(const std::filesystem::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << text;
}

std::map<std::string, Vector> load_test_map(const std::filesystem::path &path) {
    std::map<std::string, Vector> out;
    for (auto &r : load_csv(path, CsvLayout::Row)) {
        out.emplace(r.id, std::move(r.values));
    }
    return out;
}

const MethodSpec *standard_method(const ExperimentConfig &config) {
    for (const auto &m : config.methods) {
        if (m.config.variant == Variant::Standard) {
            return &m;
        }
    }
    return nullptr;
}

struct LoadedInputs {
    std::vector<TimeSeriesRecord> records;
    std::optional<std::map<std::string, Vector>> tests;
};

LoadedInputs load_inputs(const ExperimentConfig &config) {
    LoadedInputs in;
    in.records = load_csv(config.input, config.layout);
    if (config.test_input) {
        in.tests = load_test_map(*config.test_input);
    }
    return in;
}

std::optional<Vector> external_test_for(const LoadedInputs &in, const std::string &id) {
    if (!in.tests) {
        return std::nullopt;
    }
    const auto it = in.tests->find(id);
    if (it == in.tests->end()) {
        throw std::runtime_error("no test series with id '" + id + "'");
    }
    return it->second;
}

} // namespace

ExperimentReport run_experiment(const ExperimentConfig &config) {
    config.validate();
    const LoadedInputs inputs = load_inputs(config);

    const bool write = !config.output_dir.empty();
    const auto corrected_dir = config.resolved_corrected_dir();
    if (write) {
        std::filesystem::create_directories(config.output_dir);
        std::filesystem::create_directories(corrected_dir);
        write_text(config.output_dir / "resolved_config.json", config_to_json(config));
        if (config.anomaly) {
            std::filesystem::create_directories(config.output_dir / "masks");
        }
    }
    const MethodSpec *baseline = standard_method(config);

    ExperimentReport report;
    for (const TimeSeriesRecord &record : inputs.records) {
        PreparedSeries ps;
        try {
            ps = prepare_series(record, external_test_for(inputs, record.id), config);
        } catch (const std::exception &e) {
            for (std::uint64_t seed : config.seeds) {
                for (const auto &m : config.methods) {
                    ReportRow row;
                    row.series_id = record.id;
                    row.method = m.name;
                    row.variant = m.config.variant;
                    row.seed = seed;
                    row.series_length = record.values.size();
                    row.error = e.what();
                    report.rows.push_back(std::move(row));
                }
            }
            continue;
        }
        if (write && ps.zone) {
            std::ostringstream mask;
            write_mask_column(mask, *ps.zone);
            write_text(config.output_dir / "masks" / (safe_name(ps.id) + ".mask.csv"), mask.str());
        }

        for (std::uint64_t seed : config.seeds) {
            SeededRng rng(seed);
            const LstmWeights initial = init_weights(config.dims, rng, config.init_low, config.init_high);
            const std::string checksum = checksum_hex(initial);
            std::optional<double> lstm_mse;
            const std::size_t first_row = report.rows.size();

            for (const auto &m : config.methods) {
                ReportRow row;
                row.series_id = ps.id;
                row.method = m.name;
                row.variant = m.config.variant;
                row.seed = seed;
                row.series_length = ps.length;
                row.initial_weights_checksum = checksum;
                const auto t0 = std::chrono::steady_clock::now();
                try {
                    TrainingOutcome outcome = train(ps.train, m.config, config.dims, initial);
                    const Forecast fc = forecast_test(outcome.weights, config.dims, ps.train, ps.test, config.protocol);
                    row.mse = mse(fc.predictions, fc.targets);
                    try {
                        row.nmse = nmse(fc.predictions, fc.targets);
                    } catch (const std::domain_error &) {
                        // zero-mean targets leave nmse undefined
                    }
                    if (ps.zone) {
                        const auto rec = reconstruction_report(ps.clean_train, ps.train, outcome.corrected_series,
                                                               *ps.zone, config.distance);
                        row.reconstruction_ability = rec.reconstruction_ability;
                        row.outside_loss = rec.outside_loss;
                    }
                    row.loss_trace = std::move(outcome.loss_trace);
                    row.correction_magnitude = std::move(outcome.correction_magnitude);
                    if (write) {
                        std::ostringstream out;
                        write_series_row(out, ps.id, outcome.corrected_series);
                        write_text(corrected_series_path(corrected_dir, ps.id, m.name, seed), out.str());
                    }
                    if (&m == baseline) {
                        lstm_mse = row.mse;
                    }
                } catch (const std::exception &e) {
                    row.error = e.what();
                }
                row.wall_seconds =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                report.rows.push_back(std::move(row));
            }

            if (!lstm_mse) {
                continue;
            }
            for (std::size_t r = first_row; r < report.rows.size(); ++r) {
                const ReportRow &row = report.rows[r];
                if (row.variant == Variant::Standard || !row.mse) {
                    continue;
                }
                report.gains.push_back({ps.id, row.method, seed, *lstm_mse, *row.mse, *lstm_mse - *row.mse});
            }
        }
    }

    if (write) {
        write_text(config.output_dir / "report.json", report_to_json(report));
        write_text(config.output_dir / "report.csv", report_to_csv(report));
        write_text(config.output_dir / "gains.csv", gains_to_csv(report));
        std::ostringstream timings;
        timings << "id,method,seed,wall_seconds\n";
        for (const auto &row : report.rows) {
            timings << row.series_id << ',' << row.method << ',' << row.seed << ','
                    << fmt::format("{:.6f}", row.wall_seconds) << '\n';
        }
        write_text(config.output_dir / "timings.csv", timings.str());
    }
    return report;
}

TransferReport run_correction_transfer(const ExperimentConfig &config) {
    config.validate();
    const LoadedInputs inputs = load_inputs(config);
    const auto corrected_dir = config.resolved_corrected_dir();

    TransferReport report;
    for (const TimeSeriesRecord &record : inputs.records) {
        PreparedSeries ps;
        try {
            ps = prepare_series(record, external_test_for(inputs, record.id), config);
        } catch (const std::exception &e) {
            report.errors.push_back(record.id + ": " + e.what());
            continue;
        }
        for (std::uint64_t seed : config.seeds) {
            SeededRng rng(seed);
            const LstmWeights initial = init_weights(config.dims, rng, config.init_low, config.init_high);
            // Baselines keyed by the training schedule they were run with.
            std::map<std::tuple<std::size_t, double, std::size_t>, double> baselines;

            for (const auto &m : config.methods) {
                if (m.config.variant == Variant::Standard) {
                    continue;
                }
                TransferRow row{ps.id, m.name, seed, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
                try {
                    PastpropConfig standard = m.config;
                    standard.variant = Variant::Standard;
                    const auto key = std::make_tuple(standard.epochs, standard.learning_rate, standard.batch_size);
                    auto it = baselines.find(key);
                    if (it == baselines.end()) {
                        const auto outcome = train(ps.train, standard, config.dims, initial);
                        const auto fc = forecast_test(outcome.weights, config.dims, ps.train, ps.test, config.protocol);
                        it = baselines.emplace(key, mse(fc.predictions, fc.targets)).first;
                    }
                    row.baseline_mse = it->second;

                    const auto path = corrected_series_path(corrected_dir, ps.id, m.name, seed);
                    if (!std::filesystem::exists(path)) {
                        throw std::runtime_error("missing corrected series " + path.string());
                    }
                    const auto corrected = load_csv(path, CsvLayout::Row);
                    if (corrected.size() != 1 || corrected.front().values.size() != ps.train.size()) {
                        throw std::runtime_error(path.string() + " does not match the training series");
                    }
                    const auto outcome = train(corrected.front().values, standard, config.dims, initial);
                    const auto fc = forecast_test(outcome.weights, config.dims, ps.train, ps.test, config.protocol);
                    row.transfer_mse = mse(fc.predictions, fc.targets);
                    row.gain = *row.baseline_mse - *row.transfer_mse;
                } catch (const std::exception &e) {
                    row.error = e.what();
                }
                report.rows.push_back(std::move(row));
            }
        }
    }

    if (!config.output_dir.empty()) {
        std::filesystem::create_directories(config.output_dir);
        write_text(config.output_dir / "transfer.csv", transfer_to_csv(report));
        write_text(config.output_dir / "transfer.json", transfer_to_json(report));
    }
    return report;
}

namespace {

double mean_of(const Vector &v) {
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return s / static_cast<double>(v.size());
}

std::optional<double> mean_opt(const Vector &v) {
    return v.empty() ? std::nullopt : std::optional<double>(mean_of(v));
}

std::optional<double> pearson_opt(const Vector &xs, const Vector &ys) {
    try {
        return pearson(xs, ys);
    } catch (const std::exception &) {
        return std::nullopt;
    }
}

json opt_json(const std::optional<double> &v) {
    return v ? json(*v) : json(nullptr);
}

std::optional<double> opt_from(const json &j, const char *key) {
    if (!j.contains(key) || j.at(key).is_null()) {
        return std::nullopt;
    }
    return j.at(key).get<double>();
}

std::string opt_csv(const std::optional<double> &v) {
    return v ? format_double(*v) : std::string();
}

std::string csv_text(const std::string &s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out.push_back('"');
        }
        out.push_back(c == '\n' ? ' ' : c);
    }
    return out + "\"";
}

} // namespace

std::vector<MethodSummary> summarize(const ExperimentReport &report) {
    std::vector<MethodSummary> out;
    auto find = [&](const std::string &method) -> MethodSummary & {
        for (auto &s : out) {
            if (s.method == method) {
                return s;
            }
        }
        MethodSummary fresh;
        fresh.method = method;
        out.push_back(std::move(fresh));
        return out.back();
    };
    struct Acc {
        Vector mse, nmse, recon, outside, length;
    };
    std::map<std::string, Acc> acc;
    for (const auto &row : report.rows) {
        MethodSummary &s = find(row.method);
        ++s.cells;
        if (row.error) {
            ++s.failures;
            continue;
        }
        Acc &a = acc[row.method];
        if (row.mse) {
            a.mse.push_back(*row.mse);
            a.length.push_back(static_cast<double>(row.series_length));
        }
        if (row.nmse) {
            a.nmse.push_back(*row.nmse);
        }
        if (row.reconstruction_ability) {
            a.recon.push_back(*row.reconstruction_ability);
        }
        if (row.outside_loss) {
            a.outside.push_back(*row.outside_loss);
        }
    }
    for (auto &s : out) {
        const Acc &a = acc[s.method];
        s.mean_mse = mean_opt(a.mse);
        s.mean_nmse = mean_opt(a.nmse);
        s.mean_reconstruction_ability = mean_opt(a.recon);
        s.mean_outside_loss = mean_opt(a.outside);
        s.length_mse_correlation = pearson_opt(a.length, a.mse);
        Vector lstm, gain;
        for (const auto &g : report.gains) {
            if (g.method == s.method) {
                lstm.push_back(g.lstm_mse);
                gain.push_back(g.gain);
            }
        }
        s.lstm_mse_gain_correlation = pearson_opt(lstm, gain);
    }
    return out;
}

std::string report_to_json(const ExperimentReport &report) {
    json j;
    j["rows"] = json::array();
    for (const auto &r : report.rows) {
        j["rows"].push_back({{"id", r.series_id},
                             {"method", r.method},
                             {"variant", std::string(to_string(r.variant))},
                             {"seed", r.seed},
                             {"series_length", r.series_length},
                             {"initial_weights_checksum", r.initial_weights_checksum},
                             {"mse", opt_json(r.mse)},
                             {"nmse", opt_json(r.nmse)},
                             {"reconstruction_ability", opt_json(r.reconstruction_ability)},
                             {"outside_loss", opt_json(r.outside_loss)},
                             {"loss_trace", r.loss_trace},
                             {"correction_magnitude", r.correction_magnitude},
                             {"error", r.error ? json(*r.error) : json(nullptr)}});
    }
    j["gains"] = json::array();
    for (const auto &g : report.gains) {
        j["gains"].push_back({{"id", g.series_id},
                              {"method", g.method},
                              {"seed", g.seed},
                              {"lstm_mse", g.lstm_mse},
                              {"variant_mse", g.variant_mse},
                              {"gain", g.gain}});
    }
    j["errors"] = report.errors;
    return j.dump(2) + "\n";
}

ExperimentReport report_from_json(std::string_view json_text) {
    ExperimentReport report;
    try {
        const json j = json::parse(json_text);
        for (const auto &r : j.at("rows")) {
            ReportRow row;
            row.series_id = r.at("id").get<std::string>();
            row.method = r.at("method").get<std::string>();
            row.variant = parse_variant(r.at("variant").get<std::string>());
            row.seed = r.at("seed").get<std::uint64_t>();
            row.series_length = r.at("series_length").get<std::size_t>();
            row.initial_weights_checksum = r.value("initial_weights_checksum", std::string());
            row.mse = opt_from(r, "mse");
            row.nmse = opt_from(r, "nmse");
            row.reconstruction_ability = opt_from(r, "reconstruction_ability");
            row.outside_loss = opt_from(r, "outside_loss");
            if (r.contains("loss_trace")) {
                row.loss_trace = r.at("loss_trace").get<Vector>();
            }
            if (r.contains("correction_magnitude")) {
                row.correction_magnitude = r.at("correction_magnitude").get<Vector>();
            }
            if (r.contains("error") && !r.at("error").is_null()) {
                row.error = r.at("error").get<std::string>();
            }
            report.rows.push_back(std::move(row));
        }
        if (j.contains("gains")) {
            for (const auto &g : j.at("gains")) {
                report.gains.push_back({g.at("id").get<std::string>(), g.at("method").get<std::string>(),
                                        g.at("seed").get<std::uint64_t>(), g.at("lstm_mse").get<double>(),
                                        g.at("variant_mse").get<double>(), g.at("gain").get<double>()});
            }
        }
        if (j.contains("errors")) {
            report.errors = j.at("errors").get<std::vector<std::string>>();
        }
    } catch (const json::exception &e) {
        throw std::invalid_argument(std::string("report: ") + e.what());
    }
    return report;
}

std::string report_to_csv(const ExperimentReport &report) {
    std::ostringstream out;
    out << "id,method,variant,seed,mse,nmse,reconstruction_ability,outside_loss,series_length,"
           "initial_weights_checksum,error\n";
    for (const auto &r : report.rows) {
        out << csv_text(r.series_id) << ',' << csv_text(r.method) << ',' << to_string(r.variant) << ',' << r.seed
            << ',' << opt_csv(r.mse) << ',' << opt_csv(r.nmse) << ',' << opt_csv(r.reconstruction_ability) << ','
            << opt_csv(r.outside_loss) << ',' << r.series_length << ',' << r.initial_weights_checksum << ','
            << csv_text(r.error.value_or("")) << '\n';
    }
    return out.str();
}

std::string gains_to_csv(const ExperimentReport &report) {
    std::ostringstream out;
    out << "id,method,seed,lstm_mse,variant_mse,gain\n";
    for (const auto &g : report.gains) {
        out << csv_text(g.series_id) << ',' << csv_text(g.method) << ',' << g.seed << ',' << format_double(g.lstm_mse)
            << ',' << format_double(g.variant_mse) << ',' << format_double(g.gain) << '\n';
    }
    return out.str();
}

std::string transfer_to_csv(const TransferReport &report) {
    std::ostringstream out;
    out << "id,producer,seed,baseline_mse,transfer_mse,gain,error\n";
    for (const auto &r : report.rows) {
        out << csv_text(r.series_id) << ',' << csv_text(r.producer) << ',' << r.seed << ',' << opt_csv(r.baseline_mse)
            << ',' << opt_csv(r.transfer_mse) << ',' << opt_csv(r.gain) << ',' << csv_text(r.error.value_or(""))
            << '\n';
    }
    return out.str();
}

std::string transfer_to_json(const TransferReport &report) {
    json j;
    j["rows"] = json::array();
    for (const auto &r : report.rows) {
        j["rows"].push_back({{"id", r.series_id},
                             {"producer", r.producer},
                             {"seed", r.seed},
                             {"baseline_mse", opt_json(r.baseline_mse)},
                             {"transfer_mse", opt_json(r.transfer_mse)},
                             {"gain", opt_json(r.gain)},
                             {"error", r.error ? json(*r.error) : json(nullptr)}});
    }
    j["errors"] = report.errors;
    return j.dump(2) + "\n";
}

std::string summary_to_csv(const std::vector<MethodSummary> &summary) {
    std::ostringstream out;
    out << "method,cells,failures,mean_mse,mean_nmse,mean_reconstruction_ability,mean_outside_loss,"
           "length_mse_correlation,lstm_mse_gain_correlation\n";
    for (const auto &s : summary) {
        out << csv_text(s.method) << ',' << s.cells << ',' << s.failures << ',' << opt_csv(s.mean_mse) << ','
            << opt_csv(s.mean_nmse) << ',' << opt_csv(s.mean_reconstruction_ability) << ','
            << opt_csv(s.mean_outside_loss) << ',' << opt_csv(s.length_mse_correlation) << ','
            << opt_csv(s.lstm_mse_gain_correlation) << '\n';
    }
    return out.str();
}

std::string summary_to_json(const std::vector<MethodSummary> &summary) {
    json j = json::array();
    for (const auto &s : summary) {
        j.push_back({{"method", s.method},
                     {"cells", s.cells},
                     {"failures", s.failures},
                     {"mean_mse", opt_json(s.mean_mse)},
                     {"mean_nmse", opt_json(s.mean_nmse)},
                     {"mean_reconstruction_ability", opt_json(s.mean_reconstruction_ability)},
                     {"mean_outside_loss", opt_json(s.mean_outside_loss)},
                     {"length_mse_correlation", opt_json(s.length_mse_correlation)},
                     {"lstm_mse_gain_correlation", opt_json(s.lstm_mse_gain_correlation)}});
    }
    return j.dump(2) + "\n";
}

} // namespace pastprop
