#include "libra/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "libra/errors.hpp"

namespace libra::metrics {

namespace {

void check_unit(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(std::string(name) + " must lie in [0, 1], got " + std::to_string(v));
}

std::string format_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

Histogram histogram(const std::vector<double>& values, double lo, double hi, std::size_t bins, double epsilon) {
    if (values.empty()) throw ValidationError("cannot bin an empty series");
    if (bins == 0) throw ValidationError("bin count must be >= 1");
    if (!(epsilon >= 0)) throw ValidationError("smoothing epsilon must be >= 0");
    if (!(hi >= lo)) throw ValidationError("histogram support is empty");
    Histogram h;
    if (hi == lo) {
        h.edges = {lo, hi};
        h.probs = {1.0};
        return h;
    }
    h.edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i)
        h.edges[i] = i == bins ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
    std::vector<std::size_t> counts(bins, 0);
    for (double v : values) {
        if (!(v >= lo && v <= hi)) throw ValidationError("value outside histogram support");
        auto b = static_cast<std::size_t>(std::floor((v - lo) / (hi - lo) * static_cast<double>(bins)));
        if (b >= bins) b = bins - 1;
        ++counts[b];
    }
    const double n = static_cast<double>(values.size());
    const double total = 1.0 + epsilon * static_cast<double>(bins);
    h.probs.resize(bins);
    for (std::size_t i = 0; i < bins; ++i) h.probs[i] = (static_cast<double>(counts[i]) / n + epsilon) / total;
    return h;
}

DistributionPair build_distributions(const std::vector<scoring::TripletScore>& scores, std::size_t bins, double epsilon) {
    DistributionPair d;
    for (const auto& s : scores) {
        if (!s.valid) continue;
        d.stereo_values.push_back(s.l_stereo);
        d.anti_values.push_back(s.l_anti);
    }
    if (d.stereo_values.size() < 2)
        throw ValidationError("need at least 2 valid scores to build distributions, got " +
                              std::to_string(d.stereo_values.size()));
    double lo = d.stereo_values.front(), hi = lo;
    for (const auto* series : {&d.stereo_values, &d.anti_values})
        for (double v : *series) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    d.stereo = histogram(d.stereo_values, lo, hi, bins, epsilon);
    d.anti = histogram(d.anti_values, lo, hi, bins, epsilon);
    return d;
}

double jsd(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size() || p.empty()) throw ValidationError("JSD needs two distributions over the same bins");
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double a = p[i], b = q[i];
        if (a < 0 || b < 0) throw ValidationError("negative probability");
        const double m = 0.5 * (a + b);
        // Summing the two halves as a pair keeps jsd(p, q) == jsd(q, p) exactly.
        const double ta = a > 0 ? a * std::log2(a / m) : 0.0;
        const double tb = b > 0 ? b * std::log2(b / m) : 0.0;
        total += 0.5 * (ta + tb);
    }
    return std::clamp(total, 0.0, 1.0);
}

double jsd(const Histogram& p, const Histogram& q) {
    if (p.edges != q.edges) throw ValidationError("JSD inputs have different bin edges");
    return jsd(p.probs, q.probs);
}

double icat(double lms, double ss) {
    check_unit(lms, "lms");
    check_unit(ss, "ss");
    return lms * std::min(ss, 1.0 - ss) / 0.5;
}

double eicat(double lms, double jsd_value, double bbs, std::optional<double> alpha) {
    check_unit(lms, "lms");
    check_unit(jsd_value, "jsd");
    check_unit(bbs, "bbs");
    const double a = alpha.value_or(bbs);
    check_unit(a, "alpha");
    return lms * (a * (1.0 - jsd_value) + (1.0 - a) * bbs);
}

// ---------------------------------------------------------------------------
// Density

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw ValidationError("quantile of an empty series");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(values.size() - 1, lo + 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double silverman_bandwidth(const std::vector<double>& values) {
    const double sd = sample_sd(values);
    if (sd == 0.0) return 0.0;
    const double iqr = quantile(values, 0.75) - quantile(values, 0.25);
    const double spread = iqr > 0 ? std::min(sd, iqr / 1.34) : sd;
    return 0.9 * spread * std::pow(static_cast<double>(values.size()), -0.2);
}

std::vector<double> gaussian_kde(const std::vector<double>& samples, const std::vector<double>& grid, double bandwidth) {
    if (samples.empty()) throw ValidationError("KDE of an empty series");
    if (!(bandwidth > 0)) throw ValidationError("KDE bandwidth must be > 0");
    const double norm = 1.0 / (static_cast<double>(samples.size()) * bandwidth * std::sqrt(2.0 * std::numbers::pi));
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double s = 0;
        for (double x : samples) {
            const double z = (grid[i] - x) / bandwidth;
            s += std::exp(-0.5 * z * z);
        }
        out[i] = s * norm;
    }
    return out;
}

Density export_density(const std::vector<scoring::TripletScore>& scores, std::optional<double> bandwidth) {
    if (bandwidth && !(*bandwidth > 0)) throw ValidationError("bandwidth must be > 0");
    std::vector<double> stereo, anti;
    for (const auto& s : scores) {
        if (!s.valid) continue;
        stereo.push_back(s.l_stereo);
        anti.push_back(s.l_anti);
    }
    if (stereo.size() < 2) throw ValidationError("need at least 2 valid scores for a density plot");

    Density d;
    double lo = stereo.front(), hi = lo;
    for (const auto* series : {&stereo, &anti})
        for (double v : *series) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    const std::size_t n = kGridPoints;
    d.x.resize(n);
    if (hi == lo) {
        // Put the value on a grid point so the spike lands exactly there.
        const double step = 1.0 / static_cast<double>(n - 1);
        for (std::size_t i = 0; i < n; ++i) d.x[i] = lo + (static_cast<double>(i) - static_cast<double>(n / 2)) * step;
        d.x[n / 2] = lo;
    } else {
        for (std::size_t i = 0; i < n; ++i)
            d.x[i] = i + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }

    auto series_density = [&](const std::vector<double>& values, const char* name, double& bw) {
        bw = bandwidth.value_or(silverman_bandwidth(values));
        if (sample_sd(values) == 0.0 && !bandwidth) bw = 0.0;
        if (bw > 0) return gaussian_kde(values, d.x, bw);
        d.warnings.push_back(std::string(name) + " scores have zero variance; density is a spike");
        std::vector<double> out(n, 0.0);
        std::size_t nearest = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (std::abs(d.x[i] - values.front()) < std::abs(d.x[nearest] - values.front())) nearest = i;
        const double dx = (d.x.back() - d.x.front()) / static_cast<double>(n - 1);
        out[nearest] = 1.0 / dx;
        return out;
    };
    d.stereo = series_density(stereo, "stereo", d.bandwidth_stereo);
    d.anti = series_density(anti, "anti", d.bandwidth_anti);
    return d;
}

std::string density_csv(const Density& d) {
    std::string out = "x,density_stereo,density_anti\n";
    for (std::size_t i = 0; i < d.x.size(); ++i)
        out += format_g17(d.x[i]) + "," + format_g17(d.stereo[i]) + "," + format_g17(d.anti[i]) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Report

MetricsReport compose_report(const std::vector<scoring::TripletScore>& scores, double bbs, const ReportInputs& in) {
    const auto prefs = scoring::compute_preferences(scores);
    const auto dists = build_distributions(scores, in.bins, in.epsilon);
    MetricsReport r;
    r.model_id = in.model_id;
    r.mode = std::string(providers::to_string(in.mode));
    r.lms = prefs.lms;
    r.ss = prefs.ss;
    r.jsd = jsd(dists.stereo, dists.anti);
    r.bbs = bbs;
    r.alpha = in.alpha.value_or(bbs);
    r.icat = icat(r.lms, r.ss);
    r.eicat = eicat(r.lms, r.jsd, r.bbs, r.alpha);
    r.n_triplets = prefs.counts.n_total;
    r.n_invalid_kb = in.n_invalid_kb;
    r.n_rejected = in.n_rejected;
    r.n_failed = static_cast<std::size_t>(std::count_if(scores.begin(), scores.end(), [](const auto& s) { return !s.valid; }));
    r.bins = in.bins;
    const double identity = r.lms * (r.alpha * (1.0 - r.jsd) + (1.0 - r.alpha) * r.bbs);
    if (std::abs(identity - r.eicat) > 1e-9 || r.eicat < 0.0 || r.eicat > 1.0)
        throw InternalError("EiCAT identity violated");
    return r;
}

std::string display(double unit_value) {
    char buf[32];
    double v = unit_value * 100.0;
    if (v == 0.0) v = 0.0;  // no "-0.00"
    std::snprintf(buf, sizeof buf, "%.2f", v);
    std::string s = buf;
    if (s == "-0.00") s = "0.00";
    return s;
}

Json to_json(const MetricsReport& r) {
    return Json{{"model_id", r.model_id},
                {"mode", r.mode},
                {"lms", r.lms},
                {"ss", r.ss},
                {"jsd", r.jsd},
                {"bbs", r.bbs},
                {"icat", r.icat},
                {"eicat", r.eicat},
                {"alpha", r.alpha},
                {"n_triplets", r.n_triplets},
                {"n_invalid_kb", r.n_invalid_kb},
                {"n_rejected", r.n_rejected},
                {"n_failed", r.n_failed},
                {"bins", r.bins},
                {"display",
                 Json{{"lms", display(r.lms)},
                      {"ss", display(r.ss)},
                      {"jsd", display(r.jsd)},
                      {"bbs", display(r.bbs)},
                      {"icat", display(r.icat)},
                      {"eicat", display(r.eicat)}}}};
}

MetricsReport metrics_report_from_json(const Json& j) {
    MetricsReport r;
    r.model_id = j.at("model_id").get<std::string>();
    r.mode = j.at("mode").get<std::string>();
    r.lms = j.at("lms").get<double>();
    r.ss = j.at("ss").get<double>();
    r.jsd = j.at("jsd").get<double>();
    r.bbs = j.at("bbs").get<double>();
    r.icat = j.at("icat").get<double>();
    r.eicat = j.at("eicat").get<double>();
    r.alpha = j.at("alpha").get<double>();
    r.n_triplets = j.at("n_triplets").get<std::size_t>();
    r.n_invalid_kb = j.at("n_invalid_kb").get<std::size_t>();
    r.n_rejected = j.at("n_rejected").get<std::size_t>();
    r.n_failed = j.value("n_failed", std::size_t{0});
    r.bins = j.value("bins", kDefaultBins);
    return r;
}

std::string markdown_row(const MetricsReport& r, bool header) {
    std::string out;
    if (header) out += "| Model | lms | ss | JSD | bbs | iCAT | EiCAT |\n|---|---|---|---|---|---|---|\n";
    out += "| " + r.model_id + " | " + display(r.lms) + " | " + display(r.ss) + " | " + display(r.jsd) + " | " +
           display(r.bbs) + " | " + display(r.icat) + " | " + display(r.eicat) + " |\n";
    return out;
}

}  // namespace libra::metrics
