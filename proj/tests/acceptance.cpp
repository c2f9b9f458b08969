// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include "pastprop/experiment.hpp"

#include "reference_lstm.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace pastprop;
namespace fs = std::filesystem;

struct Outcome {
    bool pass = false;
    std::string detail;
};

const LstmDims kOracleDims{1, 8, 5, 1};

struct OracleSample {
    LstmWeights weights;
    Vector window;
    Vector label;
};

OracleSample oracle_sample(std::uint64_t seed) {
    SeededRng rng(seed);
    OracleSample s{init_weights(kOracleDims, rng, -0.5, 0.5), {}, {}};
    for (std::size_t k = 0; k < kOracleDims.sample_size; ++k) {
        s.window.push_back(rng.next_unit());
    }
    s.label.push_back(rng.next_unit());
    return s;
}

constexpr double kFdStep = 1e-5;
constexpr std::uint64_t kOracleConfigs = 20;

Outcome weight_gradient_oracle() {
    std::size_t checked = 0, failed = 0;
    for (std::uint64_t seed = 0; seed < kOracleConfigs; ++seed) {
        OracleSample s = oracle_sample(1000 + seed);
        const BackwardResult r =
            backward_window(s.weights, forward_window(s.weights, s.window, kOracleDims), s.label);
        auto params = s.weights.matrices();
        auto grads = r.weight_grads.matrices();
        for (std::size_t m = 0; m < params.size(); ++m) {
            auto values = params[m]->values();
            for (std::size_t k = 0; k < values.size(); ++k) {
                const double saved = values[k];
                values[k] = saved + kFdStep;
                const double up = testing::reference_loss(s.weights, s.window, s.label, 1);
                values[k] = saved - kFdStep;
                const double down = testing::reference_loss(s.weights, s.window, s.label, 1);
                values[k] = saved;
                ++checked;
                if (!testing::gradients_agree(grads[m]->values()[k], (up - down) / (2 * kFdStep))) {
                    ++failed;
                }
            }
        }
    }
    return {failed == 0, fmt::format("{} configs, {} entries, {} mismatches", kOracleConfigs, checked, failed)};
}

Outcome input_gradient_oracle() {
    std::size_t checked = 0, failed = 0;
    for (std::uint64_t seed = 0; seed < kOracleConfigs; ++seed) {
        OracleSample s = oracle_sample(2000 + seed);
        const BackwardResult r =
            backward_window(s.weights, forward_window(s.weights, s.window, kOracleDims), s.label);
        for (std::size_t t = 0; t < s.window.size(); ++t) {
            const double saved = s.window[t];
            s.window[t] = saved + kFdStep;
            const double up = testing::reference_loss(s.weights, s.window, s.label, 1);
            s.window[t] = saved - kFdStep;
            const double down = testing::reference_loss(s.weights, s.window, s.label, 1);
            s.window[t] = saved;
            ++checked;
            if (r.input_grads[t].size() != 1 ||
                !testing::gradients_agree(r.input_grads[t][0], (up - down) / (2 * kFdStep))) {
                ++failed;
            }
        }
    }
    return {failed == 0, fmt::format("{} configs, {} entries, {} mismatches", kOracleConfigs, checked, failed)};
}

const LstmDims kTrainDims{1, 8, 5, 1};

Vector seasonal(std::size_t n, std::uint64_t noise_seed, double noise = 0.3) {
    SeededRng rng(noise_seed);
    Vector v(n);
    for (std::size_t t = 0; t < n; ++t) {
        v[t] = 10.0 + 4.0 * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 24.0) +
               noise * (rng.next_unit() - 0.5);
    }
    return v;
}

Vector unit_seasonal(std::size_t n, std::uint64_t noise_seed) {
    const Vector raw = seasonal(n, noise_seed);
    return NormalizationParams::fit(raw).apply(raw);
}

LstmWeights train_weights(std::uint64_t seed, const LstmDims &dims = kTrainDims) {
    SeededRng rng(seed);
    return init_weights(dims, rng);
}

PastpropConfig training_config(Variant v, std::size_t epochs, double rate) {
    PastpropConfig c;
    c.variant = v;
    c.epochs = epochs;
    c.learning_rate = 0.01;
    c.correction_rate = rate;
    return c;
}

bool same_outcome(const TrainingOutcome &a, const TrainingOutcome &b) {
    return a.weights == b.weights && a.corrected_series == b.corrected_series && a.loss_trace == b.loss_trace &&
           a.correction_magnitude == b.correction_magnitude;
}

Outcome first_epoch_equivalence() {
    const Vector series = unit_seasonal(80, 7);
    std::size_t equal = 0, diverged_later = 0, runs = 0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        std::vector<LstmWeights> first;
        std::vector<LstmWeights> last;
        for (Variant v : {Variant::Standard, Variant::EpochWise, Variant::Selective}) {
            PastpropConfig c = training_config(v, 3, 1.0);
            c.top_k = TopK::all();
            std::optional<LstmWeights> after_first;
            const auto out = train(series, c, kTrainDims, train_weights(seed),
                                   [&](std::size_t epoch, std::span<const double>, const LstmWeights &w) {
                                       if (epoch == 0) {
                                           after_first = w;
                                       }
                                   });
            first.push_back(*after_first);
            last.push_back(out.weights);
        }
        for (std::size_t k = 1; k < first.size(); ++k) {
            ++runs;
            equal += first[k] == first[0] ? 1 : 0;
            diverged_later += last[k] == last[0] ? 0 : 1;
        }
    }
    return {equal == runs, fmt::format("{}/{} runs identical after epoch 1 ({} diverge by epoch 3)", equal, runs,
                                       diverged_later)};
}

Outcome zero_rate_reduction() {
    const Vector series = unit_seasonal(60, 11);
    std::size_t equal = 0, runs = 0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto standard = train(series, training_config(Variant::Standard, 3, 0.0), kTrainDims, train_weights(seed));
        for (Variant v : {Variant::EpochWise, Variant::InstanceWise, Variant::Selective}) {
            PastpropConfig c = training_config(v, 3, 0.0);
            c.top_k = TopK::all();
            ++runs;
            equal += same_outcome(standard, train(series, c, kTrainDims, train_weights(seed))) ? 1 : 0;
        }
    }
    return {equal == runs, fmt::format("{}/{} variant x seed runs bitwise identical to Standard", equal, runs)};
}

Outcome selective_degeneration() {
    const Vector series = unit_seasonal(60, 13);
    const std::size_t epochs = 4;
    std::size_t ok = 0, runs = 0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        PastpropConfig permissive = training_config(Variant::Selective, epochs, 1.0);
        permissive.epoch_embargo = 0;
        permissive.correction_threshold = 0.0;
        permissive.neighborhood_size = 0;
        permissive.top_k = TopK::all();
        const auto epochwise = train(series, training_config(Variant::EpochWise, epochs, 1.0), kTrainDims,
                                     train_weights(seed));
        ++runs;
        ok += same_outcome(epochwise, train(series, permissive, kTrainDims, train_weights(seed))) ? 1 : 0;

        const auto standard = train(series, training_config(Variant::Standard, epochs, 1.0), kTrainDims,
                                    train_weights(seed));
        for (std::size_t embargo : {epochs, epochs + 5}) {
            PastpropConfig embargoed = permissive;
            embargoed.epoch_embargo = embargo;
            ++runs;
            ok += same_outcome(standard, train(series, embargoed, kTrainDims, train_weights(seed))) ? 1 : 0;
        }
    }
    return {ok == runs, fmt::format("{}/{} degenerate configurations bitwise identical", ok, runs)};
}

Outcome overlap_averaging() {
    bool pass = true;
    CorrectionBuffer buf(7);
    const std::vector<Vector> grads{{0.5}, {-1.25}, {2.0}, {0.75}, {-3.5}};
    for (std::size_t start = 0; start + 5 <= 7; ++start) {
        accumulate_deltas(buf, start, grads, 0.1);
    }
    pass = pass && buf.counts == std::vector<std::size_t>{1, 2, 3, 3, 3, 2, 1};
    const Vector c = finalize_corrections(buf);
    for (std::size_t t = 0; t < c.size(); ++t) {
        pass = pass && c[t] == buf.sums[t] / static_cast<double>(buf.counts[t]);
    }

    std::size_t independent = 0;
    const std::vector<double> deltas{0.125, -0.3, 1e-3, 7.0, -0.0625};
    for (double d : deltas) {
        CorrectionBuffer same(7);
        for (std::size_t start = 0; start + 5 <= 7; ++start) {
            accumulate_deltas(same, start, std::vector<Vector>(5, Vector{-d}), 1.0);
        }
        const Vector out = finalize_corrections(same);
        independent += std::all_of(out.begin(), out.end(), [d](double x) { return x == d; }) ? 1 : 0;
    }
    pass = pass && independent == deltas.size();
    return {pass, fmt::format("counts [1,2,3,3,3,2,1], exact division, {}/{} identical-delta cases overlap independent",
                              independent, deltas.size())};
}

Outcome anomaly_injector() {
    const Vector s = unit_seasonal(200, 17);
    std::size_t zone_ok = 0, outside_ok = 0, zone_total = 0, outside_total = 0;
    const AnomalySpec zero{40, 30, AnomalyLevel::Zero, 4, 5};
    const auto z = inject_anomaly(s, zero);
    for (std::size_t t = 0; t < s.size(); ++t) {
        const bool in_zone = t >= zero.start && t < zero.start + zero.length;
        if (in_zone) {
            ++zone_total;
            zone_ok += z.series[t] == 0.0 && z.mask[t] ? 1 : 0;
        } else {
            ++outside_total;
            outside_ok += std::bit_cast<std::uint64_t>(z.series[t]) == std::bit_cast<std::uint64_t>(s[t]) && !z.mask[t]
                              ? 1
                              : 0;
        }
    }

    std::size_t magnitude_ok = 0, magnitude_total = 0;
    for (auto [level, p] : {std::pair{AnomalyLevel::Quarter, 0.25}, std::pair{AnomalyLevel::Half, 0.5}}) {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const AnomalySpec spec{10, 150, level, 4, seed};
            const auto a = inject_anomaly(s, spec);
            for (std::size_t t = spec.start; t < spec.start + spec.length; ++t) {
                const double m = std::max(0.1, p * s[t]);
                ++magnitude_total;
                magnitude_ok += (a.series[t] == s[t] + m || a.series[t] == s[t] - m) ? 1 : 0;
            }
            for (std::size_t t = 0; t < s.size(); ++t) {
                if (t < spec.start || t >= spec.start + spec.length) {
                    ++outside_total;
                    outside_ok += a.series[t] == s[t] ? 1 : 0;
                }
            }
        }
    }
    const bool pass = zone_ok == zone_total && outside_ok == outside_total && magnitude_ok == magnitude_total;
    return {pass, fmt::format("level 0 zeros {}/{}, outside untouched {}/{}, levels 25/50 change == max(0.1, p*v) {}/{}",
                              zone_ok, zone_total, outside_ok, outside_total, magnitude_ok, magnitude_total)};
}

Outcome metric_oracles() {
    std::vector<std::pair<std::string, bool>> checks;
    auto near = [](double a, double b) { return std::abs(a - b) <= 1e-9; };
    const Vector a{0.3, -1.2, 4.5};
    checks.emplace_back("mse equal", near(mse(a, a), 0.0));
    checks.emplace_back("mse [2,2]/[0,0]", near(mse(Vector{2, 2}, Vector{0, 0}), 4.0));
    checks.emplace_back("mse [1,2,3]/[1,1,1]", near(mse(Vector{1, 2, 3}, Vector{1, 1, 1}), 5.0 / 3.0));
    checks.emplace_back("nmse mse 0", near(nmse(Vector{2, 3}, Vector{2, 3}), 0.0));
    checks.emplace_back("nmse mean 2 mse 4", near(nmse(Vector{4, 0}, Vector{2, 2}), 2.0));
    {
        const Vector p{1.5, 2.5, 0.5}, t{1.0, 2.0, 3.0};
        const double c = 3.0;
        Vector ps, ts;
        for (std::size_t k = 0; k < p.size(); ++k) {
            ps.push_back(c * p[k]);
            ts.push_back(c * t[k]);
        }
        checks.emplace_back("nmse scales by c", near(nmse(ps, ts), c * nmse(p, t)));
    }
    const Vector xs{1, 2, 3, 4.5};
    Vector neg;
    for (double x : xs) {
        neg.push_back(-x);
    }
    checks.emplace_back("pearson xs,xs", near(pearson(xs, xs), 1.0));
    checks.emplace_back("pearson xs,-xs", near(pearson(xs, neg), -1.0));
    checks.emplace_back("pearson [1,2,3],[1,2,4]",
                        near(pearson(Vector{1, 2, 3}, Vector{1, 2, 4}), 0.98198050606196571569743868437));

    const Vector original{0.2, 0.4, 0.6, 0.8, 0.5, 0.3};
    const Vector anomalous{0.2, 0.0, 0.0, 0.0, 0.5, 0.3};
    const ZoneMask zone{false, true, true, true, false, false};
    Vector midpoint = anomalous;
    for (std::size_t t = 1; t <= 3; ++t) {
        midpoint[t] = 0.5 * (original[t] + anomalous[t]);
    }
    checks.emplace_back("recon corrected == original", near(reconstruction_ability(original, anomalous, original, zone), 1.0));
    checks.emplace_back("recon corrected == anomalous",
                        near(reconstruction_ability(original, anomalous, anomalous, zone), 0.0));
    checks.emplace_back("recon midpoint", near(reconstruction_ability(original, anomalous, midpoint, zone), 0.5));
    checks.emplace_back("outside no change", near(outside_loss(original, midpoint, zone), 0.0));
    Vector shifted = midpoint;
    shifted[4] += 0.37;
    checks.emplace_back("outside single index", near(outside_loss(original, shifted, zone), 0.37));
    bool nonnegative = true;
    SeededRng rng(3);
    for (int k = 0; k < 100; ++k) {
        Vector noisy = original;
        for (double &x : noisy) {
            x += rng.uniform(-1.0, 1.0);
        }
        nonnegative = nonnegative && outside_loss(original, noisy, zone) >= 0.0;
    }
    checks.emplace_back("outside never negative", nonnegative);

    std::string failed;
    std::size_t passed = 0;
    for (const auto &[name, ok] : checks) {
        if (ok) {
            ++passed;
        } else {
            failed += " [" + name + "]";
        }
    }
    return {passed == checks.size(), fmt::format("{}/{} examples within 1e-9{}", passed, checks.size(), failed)};
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch_dir(const std::string &name) {
    const fs::path dir = fs::temp_directory_path() / ("pastprop_acceptance_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Shared by the behavioral criteria: a small model trained long enough to
// learn the seasonal shape, and a Selective configuration that starts
// correcting once the fit has settled and only keeps high-scoring deltas.
constexpr std::size_t kBehaviorHidden = 32;
constexpr std::size_t kBehaviorEpochs = 50;
constexpr double kBehaviorLearningRate = 0.01;

PastpropConfig behavior_selective() {
    PastpropConfig c = training_config(Variant::Selective, kBehaviorEpochs, 1.0);
    c.learning_rate = kBehaviorLearningRate;
    c.epoch_embargo = 40;
    c.neighborhood_size = 2;
    c.correction_threshold = 0.3;
    c.top_k = TopK::all();
    return c;
}

Outcome seasonal_anomaly_behavior() {
    const fs::path dir = scratch_dir("behavior");
    {
        std::ofstream out(dir / "seasonal.csv");
        write_series_row(out, "seasonal", seasonal(400, 2024));
    }
    ExperimentConfig cfg;
    cfg.input = dir / "seasonal.csv";
    cfg.dims = LstmDims{1, kBehaviorHidden, 5, 1};
    PastpropConfig standard = training_config(Variant::Standard, kBehaviorEpochs, 0.0);
    standard.learning_rate = kBehaviorLearningRate;
    cfg.methods = {{"lstm", standard}, {"selective", behavior_selective()}};
    cfg.anomaly = AnomalySpec{122, 6, AnomalyLevel::Zero, 4, 1};
    cfg.seeds = {1, 2, 3, 4, 5};
    cfg.output_dir = dir / "out";
    const ExperimentReport report = run_experiment(cfg);
    fs::remove_all(dir);
    if (!report.all_succeeded()) {
        return {false, "experiment reported failures"};
    }

    double lstm_mse = 0.0, sel_mse = 0.0, recon = 0.0, outside = 0.0;
    std::size_t lstm_n = 0, sel_n = 0;
    for (const ReportRow &r : report.rows) {
        if (r.method == "lstm") {
            lstm_mse += *r.mse;
            ++lstm_n;
        } else {
            sel_mse += *r.mse;
            recon += *r.reconstruction_ability;
            outside += *r.outside_loss;
            ++sel_n;
        }
    }
    if (lstm_n != 5 || sel_n != 5) {
        return {false, "expected 5 seeds per method"};
    }
    lstm_mse /= 5;
    sel_mse /= 5;
    recon /= 5;
    outside /= 5;
    const bool pass = recon > 0.0 && outside < 0.05 && sel_mse <= 1.1 * lstm_mse;
    return {pass, fmt::format("reconstruction_ability {:.4f} (> 0), outside_loss {:.4g} (< 0.05), test MSE "
                              "selective {:.5f} vs lstm {:.5f} (ratio {:.3f}, <= 1.1)",
                              recon, outside, sel_mse, lstm_mse, sel_mse / lstm_mse)};
}

Outcome severity_sweep() {
    const LstmDims dims{1, kBehaviorHidden, 5, 1};
    Vector lstm_mse, gain;
    for (std::size_t zones = 0; zones < 10; ++zones) {
        const Vector raw = seasonal(400, 100 + zones);
        const TrainTestSplit parts = split(raw, SplitSpec{});
        const NormalizationParams norm = NormalizationParams::fit(parts.train);
        const Vector test = norm.apply(parts.test);
        Vector train_part = norm.apply(parts.train);
        // Severity grows with the number of zeroed stretches; the spacing is
        // off the seasonal period so the model cannot learn them as a pattern.
        for (std::size_t z = 0; z < zones; ++z) {
            train_part = inject_anomaly(train_part, AnomalySpec{20 + 28 * z, 6, AnomalyLevel::Zero, 4, 1}).series;
        }
        double m_lstm = 0.0, m_sel = 0.0;
        for (std::uint64_t seed = 1; seed <= 2; ++seed) {
            PastpropConfig standard = training_config(Variant::Standard, kBehaviorEpochs, 0.0);
            standard.learning_rate = kBehaviorLearningRate;
            const auto a = train(train_part, standard, dims, train_weights(seed, dims));
            const auto b = train(train_part, behavior_selective(), dims, train_weights(seed, dims));
            const Forecast fa = forecast_test(a.weights, dims, train_part, test, TestProtocol::Rolling);
            const Forecast fb = forecast_test(b.weights, dims, train_part, test, TestProtocol::Rolling);
            m_lstm += mse(fa.predictions, fa.targets) / 2;
            m_sel += mse(fb.predictions, fb.targets) / 2;
        }
        lstm_mse.push_back(m_lstm);
        gain.push_back(m_lstm - m_sel);
    }
    const double r = pearson(lstm_mse, gain);
    const auto [lo, hi] = std::minmax_element(lstm_mse.begin(), lstm_mse.end());
    return {r > 0.0, fmt::format("{} series, lstm MSE {:.5f}..{:.5f}, pearson(lstm MSE, gain) = {:.4f} (> 0)",
                                 lstm_mse.size(), *lo, *hi, r)};
}

Outcome rerun_determinism() {
    const fs::path dir = scratch_dir("determinism");
    {
        std::ofstream out(dir / "series.csv");
        write_series_row(out, "a", seasonal(90, 1));
        write_series_row(out, "b", seasonal(70, 2, 1.0));
    }
    ExperimentConfig cfg = parse_config(R"({
        "model": {"hidden_units": 6},
        "training": {"epochs": 3, "learning_rate": 0.02},
        "methods": [
            {"name": "lstm", "variant": "standard"},
            {"name": "ew", "variant": "epochwise", "correction_rate": 0.5},
            {"name": "iw", "variant": "instancewise", "correction_rate": 0.5},
            {"name": "sel", "variant": "selective", "correction_rate": 0.5, "neighborhood_size": 1,
             "epoch_embargo": 1, "top_k": "20%"}
        ],
        "anomaly": {"start": 20, "length": 8, "level": 25, "seed": 9},
        "seeds": [1, 2]
    })");
    cfg.input = dir / "series.csv";
    const std::vector<std::string> files{"report.json", "report.csv", "gains.csv", "resolved_config.json"};
    std::vector<std::vector<std::string>> runs;
    cfg.output_dir = dir / "out";
    for (int run = 0; run < 2; ++run) {
        run_experiment(cfg);
        std::vector<std::string> contents;
        for (const auto &f : files) {
            contents.push_back(slurp(cfg.output_dir / f));
        }
        std::vector<fs::path> corrected;
        for (const auto &entry : fs::directory_iterator(cfg.output_dir / "corrected")) {
            corrected.push_back(entry.path().filename());
        }
        std::sort(corrected.begin(), corrected.end());
        for (const auto &f : corrected) {
            contents.push_back(f.string() + "\n" + slurp(cfg.output_dir / "corrected" / f));
        }
        runs.push_back(std::move(contents));
    }
    fs::remove_all(dir);
    const bool nonempty = std::all_of(runs[0].begin(), runs[0].end(), [](const std::string &s) { return !s.empty(); });
    const bool pass = nonempty && runs[0] == runs[1];
    return {pass, fmt::format("{} report and corrected-series files compared byte for byte", runs[0].size())};
}

struct Criterion {
    int number;
    const char *name;
    std::function<Outcome()> check;
    double time_limit_seconds;  // zero means no limit
};

} // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "gradient oracle (weights)", weight_gradient_oracle, 10.0},
        {2, "gradient oracle (inputs)", input_gradient_oracle, 10.0},
        {3, "first-epoch equivalence", first_epoch_equivalence, 0.0},
        {4, "zero-rate reduction", zero_rate_reduction, 0.0},
        {5, "selective degeneration", selective_degeneration, 0.0},
        {6, "overlap averaging", overlap_averaging, 0.0},
        {7, "anomaly injector", anomaly_injector, 0.0},
        {8, "metric oracles", metric_oracles, 0.0},
        {9, "seasonal anomaly behavior", seasonal_anomaly_behavior, 600.0},
        {10, "severity sweep direction", severity_sweep, 0.0},
        {11, "rerun determinism", rerun_determinism, 0.0},
    };

    int failures = 0;
    for (const Criterion &c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.check();
        } catch (const std::exception &e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.time_limit_seconds > 0.0 && seconds >= c.time_limit_seconds) {
            out.pass = false;
            out.detail += fmt::format("; exceeded {:.0f} s", c.time_limit_seconds);
        }
        failures += out.pass ? 0 : 1;
        std::printf("%s criterion %2d %s: %s [%.2f s]\n", out.pass ? "PASS" : "FAIL", c.number, c.name,
                    out.detail.c_str(), seconds);
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
