#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "libra/scoring.hpp"

namespace libra::metrics {

inline constexpr std::size_t kDefaultBins = 64;
inline constexpr double kDefaultEpsilon = 1e-9;

struct Histogram {
    std::vector<double> edges;  // bins + 1 values
    std::vector<double> probs;
};

/// Equal-width bins over [lo, hi]; the top edge is closed. Counts become
/// (c/n + eps) renormalized. lo == hi collapses to one bin.
Histogram histogram(const std::vector<double>& values, double lo, double hi, std::size_t bins = kDefaultBins,
                    double epsilon = kDefaultEpsilon);

struct DistributionPair {
    std::vector<double> stereo_values;
    std::vector<double> anti_values;
    Histogram stereo;
    Histogram anti;
};

/// Stereo and anti likelihoods of the valid scores, binned on the shared
/// support [min, max] of their union.
DistributionPair build_distributions(const std::vector<scoring::TripletScore>& scores, std::size_t bins = kDefaultBins,
                                     double epsilon = kDefaultEpsilon);

/// Base-2 Jensen-Shannon divergence of two probability vectors of equal length.
double jsd(const std::vector<double>& p, const std::vector<double>& q);
/// Same, after checking that the bin edges agree.
double jsd(const Histogram& p, const Histogram& q);

double icat(double lms, double ss);
/// lms * (alpha * (1 - jsd) + (1 - alpha) * bbs); alpha defaults to bbs.
double eicat(double lms, double jsd, double bbs, std::optional<double> alpha = std::nullopt);

// ---------------------------------------------------------------------------
// Density export

inline constexpr std::size_t kGridPoints = 256;

struct Density {
    std::vector<double> x;
    std::vector<double> stereo;
    std::vector<double> anti;
    double bandwidth_stereo = 0;  // 0 marks a delta spike
    double bandwidth_anti = 0;
    std::vector<std::string> warnings;
};

/// 0.9 * min(sd, IQR / 1.34) * n^(-1/5), falling back to sd when the IQR is
/// zero. Returns 0 for zero variance.
double silverman_bandwidth(const std::vector<double>& values);

/// Linear-interpolated quantile (the common "type 7" definition).
double quantile(std::vector<double> values, double q);

std::vector<double> gaussian_kde(const std::vector<double>& samples, const std::vector<double>& grid, double bandwidth);

/// Gaussian KDE of the stereo and anti series on a shared 256-point grid
/// over their joint range. A zero-variance series becomes a unit-mass spike
/// at the grid point nearest its value.
Density export_density(const std::vector<scoring::TripletScore>& scores, std::optional<double> bandwidth = std::nullopt);

std::string density_csv(const Density& density);

// ---------------------------------------------------------------------------
// Report

struct MetricsReport {
    std::string model_id;
    std::string mode;
    double lms = 0, ss = 0, jsd = 0, bbs = 0, icat = 0, eicat = 0, alpha = 0;
    std::size_t n_triplets = 0;
    std::size_t n_invalid_kb = 0;
    std::size_t n_rejected = 0;
    std::size_t n_failed = 0;
    std::size_t bins = kDefaultBins;
};

struct ReportInputs {
    std::string model_id;
    scoring::LogprobMode mode = scoring::LogprobMode::mlm;
    std::optional<double> alpha;
    std::size_t bins = kDefaultBins;
    double epsilon = kDefaultEpsilon;
    std::size_t n_invalid_kb = 0;
    std::size_t n_rejected = 0;
};

/// Assembles the report and re-checks the EiCAT identity (InternalError on violation).
MetricsReport compose_report(const std::vector<scoring::TripletScore>& scores, double bbs, const ReportInputs& inputs);

/// Values on the 0-100 scale, two decimals.
std::string display(double unit_value);

Json to_json(const MetricsReport& r);
MetricsReport metrics_report_from_json(const Json& j);
std::string markdown_row(const MetricsReport& r, bool header = true);

}  // namespace libra::metrics
