#pragma once

#include "pastprop/data.hpp"
#include "pastprop/numeric.hpp"

#include <span>
#include <string_view>

namespace pastprop {

enum class DistanceMetric { L2, L1 };

DistanceMetric parse_distance(std::string_view name);
std::string_view to_string(DistanceMetric m) noexcept;

double mse(std::span<const double> predictions, std::span<const double> targets);

/// MSE divided by the mean of the targets. Throws if that mean is zero.
double nmse(std::span<const double> predictions, std::span<const double> targets);

/// Pearson product-moment correlation. Throws for fewer than two points or
/// zero variance in either input.
double pearson(std::span<const double> xs, std::span<const double> ys);

/// Distance between a and b over the indices where mask == include.
double masked_distance(std::span<const double> a, std::span<const double> b, const ZoneMask &mask, bool include,
                       DistanceMetric metric = DistanceMetric::L2);

/// 1 - dist(corrected, original) / dist(anomalous, original), both restricted
/// to the anomaly zone. 1 is a perfect restoration, 0 no change, negative
/// values mean the anomaly was amplified.
double reconstruction_ability(std::span<const double> original, std::span<const double> anomalous,
                              std::span<const double> corrected, const ZoneMask &zone,
                              DistanceMetric metric = DistanceMetric::L2);

/// Distance between corrected and original outside the anomaly zone.
double outside_loss(std::span<const double> original, std::span<const double> corrected, const ZoneMask &zone,
                    DistanceMetric metric = DistanceMetric::L2);

struct ReconstructionReport {
    double reconstruction_ability = 0.0;
    double outside_loss = 0.0;
};

ReconstructionReport reconstruction_report(std::span<const double> original, std::span<const double> anomalous,
                                           std::span<const double> corrected, const ZoneMask &zone,
                                           DistanceMetric metric = DistanceMetric::L2);

} // namespace pastprop
