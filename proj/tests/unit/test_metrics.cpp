#include "support.hpp"

#include <cmath>
#include <random>

#include "libra/errors.hpp"
#include "libra/metrics.hpp"

using namespace libra;
using namespace libra::metrics;
using scoring::TripletScore;

namespace {

std::vector<TripletScore> paired(const std::vector<double>& stereo, const std::vector<double>& anti) {
    std::vector<TripletScore> out;
    for (std::size_t i = 0; i < stereo.size(); ++i) {
        TripletScore s;
        s.triplet_id = "t" + std::to_string(i);
        s.l_stereo = stereo[i];
        s.l_anti = anti[i];
        s.l_unrelated = std::min(stereo[i], anti[i]) - 1.0;
        s.valid = true;
        out.push_back(s);
    }
    return out;
}

bool close(double a, double b, double rel = 1e-9) { return std::abs(a - b) <= rel * std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("JSD properties") {
    const auto fx = test::fixture_json("jsd_oracle.json").at("two_bin");
    const auto p = fx.at("p").get<std::vector<double>>();
    const auto q = fx.at("q").get<std::vector<double>>();
    CHECK(std::abs(jsd(p, q) - fx.at("jsd").get<double>()) < 1e-12);
    CHECK(jsd({1.0, 0.0}, {0.0, 1.0}) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(jsd(p, p) == 0.0);
    CHECK_THROWS_AS(jsd({0.5, 0.5}, {1.0}), ValidationError);

    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> a(16), b(16);
        double sa = 0, sb = 0;
        for (int i = 0; i < 16; ++i) {
            a[i] = trial % 5 == 0 && i % 2 ? 0.0 : u(rng);
            b[i] = u(rng);
            sa += a[i];
            sb += b[i];
        }
        for (int i = 0; i < 16; ++i) {
            a[i] /= sa;
            b[i] /= sb;
        }
        const double ab = jsd(a, b), ba = jsd(b, a);
        CHECK(std::abs(ab - ba) <= 1e-12);
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
    }
}

TEST_CASE("histograms match the independent binning script") {
    const auto fx = test::fixture_json("jsd_oracle.json").at("hist_case");
    const auto scores = paired(fx.at("stereo").get<std::vector<double>>(), fx.at("anti").get<std::vector<double>>());
    const auto d = build_distributions(scores, fx.at("bins").get<std::size_t>(), fx.at("epsilon").get<double>());
    const auto ps = fx.at("probs_stereo").get<std::vector<double>>();
    const auto pa = fx.at("probs_anti").get<std::vector<double>>();
    REQUIRE(d.stereo.probs.size() == ps.size());
    for (std::size_t i = 0; i < ps.size(); ++i) {
        CHECK(close(d.stereo.probs[i], ps[i], 1e-12));
        CHECK(close(d.anti.probs[i], pa[i], 1e-12));
    }
    CHECK(std::abs(jsd(d.stereo, d.anti) - fx.at("jsd").get<double>()) < 1e-12);
}

TEST_CASE("histogram edge cases") {
    const auto same = build_distributions(paired({-1.0, -1.0}, {-1.0, -1.0}));
    CHECK(same.stereo.probs.size() == 1);
    CHECK(same.stereo.probs == same.anti.probs);
    CHECK(jsd(same.stereo, same.anti) == 0.0);

    const auto apart = build_distributions(paired({-1.0, -1.1}, {-5.0, -5.1}));
    double overlap = 0;
    for (std::size_t i = 0; i < apart.stereo.probs.size(); ++i)
        overlap += std::min(apart.stereo.probs[i], apart.anti.probs[i]);
    CHECK(overlap < 1e-6);
    CHECK(jsd(apart.stereo, apart.anti) > 0.999);

    const auto h = histogram({0.0, 1.0}, 0.0, 1.0, 4, 0.0);
    CHECK(h.probs == std::vector<double>{0.5, 0.0, 0.0, 0.5});
    CHECK(h.edges.size() == 5);
    CHECK_THROWS_AS(histogram({}, 0.0, 1.0), ValidationError);
    CHECK_THROWS_AS(jsd(histogram({0.0}, 0.0, 1.0, 4), histogram({0.0}, 0.0, 2.0, 4)), ValidationError);
}

TEST_CASE("iCAT and EiCAT") {
    CHECK(icat(1.0, 0.5) == doctest::Approx(1.0));
    CHECK(icat(2.0 / 3.0, 0.5) == doctest::Approx(2.0 / 3.0));
    CHECK(icat(1.0, 1.0) == 0.0);
    CHECK(display(eicat(0.7748, 0.0335, 0.0731)) == "10.72");
    CHECK(display(eicat(0.9673, 0.4727, 0.0411)) == "5.91");
    CHECK(eicat(1.0, 0.0, 1.0) == doctest::Approx(1.0));
    CHECK(eicat(1.0, 1.0, 1.0) == 0.0);
    CHECK(eicat(0.8, 0.3, 0.0) == 0.0);
    CHECK(eicat(0.8, 0.3, 0.5, 1.0) == doctest::Approx(0.8 * 0.7));
    CHECK(display(-0.0) == "0.00");
    CHECK(display(-1e-9) == "0.00");
    CHECK_THROWS_AS(eicat(1.2, 0.0, 0.0), ValidationError);
}

TEST_CASE("KDE matches direct Gaussian sums") {
    const auto fx = test::fixture_json("kde_oracle.json");
    const auto d = export_density(paired(fx.at("stereo").get<std::vector<double>>(), fx.at("anti").get<std::vector<double>>()));
    CHECK(close(d.bandwidth_stereo, fx.at("bandwidth_stereo").get<double>()));
    CHECK(close(d.bandwidth_anti, fx.at("bandwidth_anti").get<double>()));
    const auto x = fx.at("x").get<std::vector<double>>();
    const auto ds = fx.at("density_stereo").get<std::vector<double>>();
    const auto da = fx.at("density_anti").get<std::vector<double>>();
    REQUIRE(d.x.size() == kGridPoints);
    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(close(d.x[i], x[i], 1e-12));
        CHECK(close(d.stereo[i], ds[i]));
        CHECK(close(d.anti[i], da[i]));
    }
    CHECK(density_csv(d).rfind("x,density_stereo,density_anti\n", 0) == 0);
}

TEST_CASE("KDE edge cases") {
    const auto spike = export_density(paired({-2.0, -2.0}, {-1.0, -3.0}));
    CHECK(spike.bandwidth_stereo == 0.0);
    CHECK_FALSE(spike.warnings.empty());
    std::size_t nonzero = 0;
    for (double v : spike.stereo)
        if (v > 0) ++nonzero;
    CHECK(nonzero == 1);

    const auto sym = export_density(paired({-1.0, 1.0, -0.5, 0.5}, {-1.0, 1.0, -0.25, 0.25}));
    for (std::size_t i = 0; i < sym.x.size(); ++i) {
        CHECK(std::abs(sym.stereo[i] - sym.stereo[sym.x.size() - 1 - i]) < 1e-9);
        CHECK(std::abs(sym.x[i] + sym.x[sym.x.size() - 1 - i]) < 1e-12);
    }
    CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.25) == doctest::Approx(1.75));
    CHECK(silverman_bandwidth({3.0, 3.0, 3.0}) == 0.0);
}

TEST_CASE("golden report") {
    const auto golden = test::fixture_json("golden_report.json");
    const auto scores = scoring::read_scores(test::fixture("golden_scores.jsonl"), true);
    ReportInputs in;
    in.model_id = "unigram";
    const auto r = compose_report(scores, golden.at("bbs").get<double>(), in);
    const auto j = to_json(r);
    for (const auto* key : {"lms", "ss", "jsd", "bbs", "icat", "eicat", "alpha"})
        CHECK(std::abs(j.at(key).get<double>() - golden.at(key).get<double>()) < 1e-12);
    for (const auto* key : {"n_triplets", "n_failed", "bins"}) CHECK(j.at(key) == golden.at(key));
    CHECK(j.at("display") == golden.at("display"));
    CHECK(metrics_report_from_json(j).eicat == r.eicat);
    CHECK(markdown_row(r).find("| unigram | 91.75 | 67.53 | 20.77 | 60.00 | 59.59 | 65.64 |") != std::string::npos);

    CHECK_THROWS_AS(compose_report({}, 0.5, in), ValidationError);
    const auto collapsed = compose_report(scores, 0.0, in);
    CHECK(collapsed.eicat == 0.0);
    CHECK(display(collapsed.eicat) == "0.00");
}
