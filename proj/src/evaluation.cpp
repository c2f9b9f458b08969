#include "pastprop/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace pastprop {

DistanceMetric parse_distance(std::string_view name) {
    if (name == "l2" || name == "L2" || name == "euclidean") {
        return DistanceMetric::L2;
    }
    if (name == "l1" || name == "L1" || name == "manhattan") {
        return DistanceMetric::L1;
    }
    throw std::invalid_argument("unknown distance metric '" + std::string(name) + "'");
}

std::string_view to_string(DistanceMetric m) noexcept {
    return m == DistanceMetric::L2 ? "l2" : "l1";
}

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b, const char *what) {
    if (a.size() != b.size()) {
        throw std::invalid_argument(std::string(what) + ": length mismatch " + std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()));
    }
}

double mean(std::span<const double> xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

} // namespace

double mse(std::span<const double> predictions, std::span<const double> targets) {
    require_same_length(predictions, targets, "mse");
    if (targets.empty()) {
        throw std::invalid_argument("mse: empty input");
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < targets.size(); ++k) {
        const double e = predictions[k] - targets[k];
        sum += e * e;
    }
    return sum / static_cast<double>(targets.size());
}

double nmse(std::span<const double> predictions, std::span<const double> targets) {
    const double err = mse(predictions, targets);
    const double m = mean(targets);
    if (m == 0.0) {
        throw std::domain_error("nmse: targets have zero mean");
    }
    return err / m;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
    require_same_length(xs, ys, "pearson");
    if (xs.size() < 2) {
        throw std::invalid_argument("pearson: needs at least two points");
    }
    const double mx = mean(xs);
    const double my = mean(ys);
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double dx = xs[k] - mx;
        const double dy = ys[k] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw std::domain_error("pearson: zero variance");
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double masked_distance(std::span<const double> a, std::span<const double> b, const ZoneMask &mask, bool include,
                       DistanceMetric metric) {
    require_same_length(a, b, "distance");
    if (mask.size() != a.size()) {
        throw std::invalid_argument("distance: mask length " + std::to_string(mask.size()) + " vs series length " +
                                    std::to_string(a.size()));
    }
    double acc = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) {
        if (mask[t] != include) {
            continue;
        }
        const double d = a[t] - b[t];
        acc += metric == DistanceMetric::L2 ? d * d : std::abs(d);
    }
    return metric == DistanceMetric::L2 ? std::sqrt(acc) : acc;
}

double reconstruction_ability(std::span<const double> original, std::span<const double> anomalous,
                              std::span<const double> corrected, const ZoneMask &zone, DistanceMetric metric) {
    require_same_length(original, anomalous, "reconstruction_ability");
    if (std::find(zone.begin(), zone.end(), true) == zone.end()) {
        throw std::invalid_argument("reconstruction_ability: empty anomaly zone");
    }
    const double anomaly_distance = masked_distance(anomalous, original, zone, true, metric);
    if (anomaly_distance == 0.0) {
        throw std::domain_error("reconstruction_ability: anomalous series equals the original inside the zone");
    }
    return 1.0 - masked_distance(corrected, original, zone, true, metric) / anomaly_distance;
}

double outside_loss(std::span<const double> original, std::span<const double> corrected, const ZoneMask &zone,
                    DistanceMetric metric) {
    return masked_distance(corrected, original, zone, false, metric);
}

ReconstructionReport reconstruction_report(std::span<const double> original, std::span<const double> anomalous,
                                           std::span<const double> corrected, const ZoneMask &zone,
                                           DistanceMetric metric) {
    return {reconstruction_ability(original, anomalous, corrected, zone, metric),
            outside_loss(original, corrected, zone, metric)};
}

} // namespace pastprop
