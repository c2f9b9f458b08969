// Command line front end: run, inject, transfer, report.

#include "pastprop/data.hpp"
#include "pastprop/experiment.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace pastprop;

struct Overrides {
    std::string input;
    std::string layout;
    std::string test_input;
    std::string output;
    std::string corrected_dir;
    std::size_t epochs = 0;
    std::size_t hidden_units = 0;
    std::size_t sample_size = 0;
    std::size_t label_size = 0;
    double learning_rate = -1.0;
    double train_fraction = -1.0;
    std::vector<std::uint64_t> seeds;
    std::string protocol;
    std::string distance;
};

void add_override_flags(CLI::App *cmd, Overrides &o) {
    cmd->add_option("--input", o.input, "Input CSV");
    cmd->add_option("--layout", o.layout, "CSV layout")->check(CLI::IsMember({"row", "column"}));
    cmd->add_option("--test-input", o.test_input, "Per-series test CSV (row layout, matched by id)");
    cmd->add_option("--output", o.output, "Output directory");
    cmd->add_option("--corrected-dir", o.corrected_dir, "Directory of corrected series");
    cmd->add_option("--epochs", o.epochs, "Epochs for every method");
    cmd->add_option("--hidden-units", o.hidden_units, "LSTM hidden units");
    cmd->add_option("--sample-size", o.sample_size, "Input window length");
    cmd->add_option("--label-size", o.label_size, "Predicted steps per window");
    cmd->add_option("--learning-rate", o.learning_rate, "SGD learning rate for every method");
    cmd->add_option("--train-fraction", o.train_fraction, "Training share of each series");
    cmd->add_option("--seeds", o.seeds, "Weight initialization seeds")->delimiter(',');
    cmd->add_option("--protocol", o.protocol, "Test protocol")->check(CLI::IsMember({"rolling", "recursive"}));
    cmd->add_option("--distance", o.distance, "Reconstruction distance")->check(CLI::IsMember({"l2", "l1"}));
}

ExperimentConfig resolve(const std::string &config_path, const Overrides &o) {
    ExperimentConfig cfg = config_path.empty() ? parse_config("{}") : load_config(config_path);
    if (!o.input.empty()) {
        cfg.input = o.input;
    }
    if (!o.layout.empty()) {
        cfg.layout = o.layout == "row" ? CsvLayout::Row : CsvLayout::Column;
    }
    if (!o.test_input.empty()) {
        cfg.test_input = std::filesystem::path(o.test_input);
    }
    if (!o.output.empty()) {
        cfg.output_dir = o.output;
    }
    if (!o.corrected_dir.empty()) {
        cfg.corrected_dir = std::filesystem::path(o.corrected_dir);
    }
    if (o.hidden_units) {
        cfg.dims.hidden_units = o.hidden_units;
    }
    if (o.sample_size) {
        cfg.dims.sample_size = o.sample_size;
    }
    if (o.label_size) {
        cfg.dims.label_size = o.label_size;
    }
    for (auto &m : cfg.methods) {
        if (o.epochs) {
            m.config.epochs = o.epochs;
        }
        if (o.learning_rate >= 0.0) {
            m.config.learning_rate = o.learning_rate;
        }
    }
    if (o.train_fraction >= 0.0) {
        cfg.train_fraction = o.train_fraction;
    }
    if (!o.seeds.empty()) {
        cfg.seeds = o.seeds;
    }
    if (!o.protocol.empty()) {
        cfg.protocol = parse_protocol(o.protocol);
    }
    if (!o.distance.empty()) {
        cfg.distance = parse_distance(o.distance);
    }
    if (cfg.input.empty()) {
        throw std::invalid_argument("no input file given (config input.path or --input)");
    }
    cfg.validate();
    return cfg;
}

std::string read_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cmd_run(const std::string &config_path, const Overrides &o) {
    const ExperimentConfig cfg = resolve(config_path, o);
    const ExperimentReport report = run_experiment(cfg);
    std::cout << report_to_csv(report);
    for (const auto &row : report.rows) {
        if (row.error) {
            std::cerr << "error: " << row.series_id << " / " << row.method << " / seed " << row.seed << ": "
                      << *row.error << '\n';
        }
    }
    return report.all_succeeded() ? 0 : 1;
}

int cmd_transfer(const std::string &config_path, const Overrides &o) {
    const ExperimentConfig cfg = resolve(config_path, o);
    const TransferReport report = run_correction_transfer(cfg);
    std::cout << transfer_to_csv(report);
    for (const auto &e : report.errors) {
        std::cerr << "error: " << e << '\n';
    }
    return report.all_succeeded() ? 0 : 1;
}

struct InjectOptions {
    std::string input;
    std::string layout = "row";
    std::string output;
    std::size_t start = 0;
    std::size_t length = 0;
    int level = 0;
    std::size_t chunks = 4;
    std::uint64_t seed = 0;
    double train_fraction = 0.7;
};

int cmd_inject(const InjectOptions &o) {
    const auto records = load_csv(o.input, o.layout == "row" ? CsvLayout::Row : CsvLayout::Column);
    AnomalySpec spec{o.start, o.length, anomaly_level_from_int(o.level), o.chunks, o.seed};

    const std::filesystem::path out_path(o.output);
    if (out_path.has_parent_path()) {
        std::filesystem::create_directories(out_path.parent_path());
    }
    std::ofstream out(out_path);
    if (!out) {
        throw std::runtime_error("cannot write " + o.output);
    }
    int status = 0;
    for (const auto &rec : records) {
        try {
            // Scaling follows the experiment pipeline: training statistics only.
            const auto parts = split(rec.values, SplitSpec{o.train_fraction, std::nullopt});
            const auto params = NormalizationParams::fit(parts.train);
            const auto anomalous = inject_anomaly(params.apply(parts.train), spec);
            Vector values = params.invert(anomalous.series);
            values.insert(values.end(), parts.test.begin(), parts.test.end());
            write_series_row(out, rec.id, values);

            ZoneMask mask = anomalous.mask;
            mask.resize(values.size(), false);
            const auto mask_path =
                out_path.parent_path() / (out_path.stem().string() + "." + rec.id + ".mask.csv");
            std::ofstream mask_out(mask_path);
            write_mask_column(mask_out, mask);
        } catch (const std::exception &e) {
            std::cerr << "error: " << rec.id << ": " << e.what() << '\n';
            status = 1;
        }
    }
    return status;
}

int cmd_report(const std::vector<std::string> &inputs, const std::string &output) {
    ExperimentReport merged;
    for (const auto &path : inputs) {
        ExperimentReport r = report_from_json(read_file(path));
        merged.rows.insert(merged.rows.end(), r.rows.begin(), r.rows.end());
        merged.gains.insert(merged.gains.end(), r.gains.begin(), r.gains.end());
        merged.errors.insert(merged.errors.end(), r.errors.begin(), r.errors.end());
    }
    const auto summary = summarize(merged);
    const std::string csv = summary_to_csv(summary);
    std::cout << csv;
    if (!output.empty()) {
        std::filesystem::create_directories(output);
        std::ofstream(std::filesystem::path(output) / "summary.csv") << csv;
        std::ofstream(std::filesystem::path(output) / "summary.json") << summary_to_json(summary);
    }
    return merged.all_succeeded() ? 0 : 1;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Pastprop LSTM experiments"};
    app.require_subcommand(1);

    std::string run_config;
    Overrides run_overrides;
    auto *run = app.add_subcommand("run", "Train every method on every series and seed");
    run->add_option("-c,--config", run_config, "JSON experiment config");
    add_override_flags(run, run_overrides);

    std::string transfer_config;
    Overrides transfer_overrides;
    auto *transfer = app.add_subcommand("transfer", "Retrain a standard LSTM on previously corrected series");
    transfer->add_option("-c,--config", transfer_config, "JSON experiment config");
    add_override_flags(transfer, transfer_overrides);

    InjectOptions inject_opts;
    auto *inject = app.add_subcommand("inject", "Write a copy of a dataset with artificial anomalies");
    inject->add_option("--input", inject_opts.input, "Input CSV")->required();
    inject->add_option("--layout", inject_opts.layout, "CSV layout")->check(CLI::IsMember({"row", "column"}));
    inject->add_option("--output", inject_opts.output, "Output CSV (row layout)")->required();
    inject->add_option("--start", inject_opts.start, "Zone start index in the training part")->required();
    inject->add_option("--length", inject_opts.length, "Zone length")->required();
    inject->add_option("--level", inject_opts.level, "Magnitude level")->check(CLI::IsMember({0, 25, 50}));
    inject->add_option("--chunks", inject_opts.chunks, "Chunks for levels 25 and 50");
    inject->add_option("--seed", inject_opts.seed, "Chunk sign seed");
    inject->add_option("--train-fraction", inject_opts.train_fraction, "Training share used for scaling");

    std::vector<std::string> report_inputs;
    std::string report_output;
    auto *report = app.add_subcommand("report", "Aggregate report.json files per method");
    report->add_option("reports", report_inputs, "report.json files")->required();
    report->add_option("--output", report_output, "Directory for summary.csv and summary.json");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            return cmd_run(run_config, run_overrides);
        }
        if (*transfer) {
            return cmd_transfer(transfer_config, transfer_overrides);
        }
        if (*inject) {
            return cmd_inject(inject_opts);
        }
        if (*report) {
            return cmd_report(report_inputs, report_output);
        }
    } catch (const std::exception &e) {
        std::cerr << "pastprop: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
