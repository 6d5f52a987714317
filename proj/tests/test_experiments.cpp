#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "mimo_radar/experiments.hpp"

using namespace mimo_radar;

namespace {

ExperimentSpec small_spec(CurveKind curve) {
    ExperimentSpec s;
    s.scene = reference_mimo_scene(2, 2);
    s.curve = curve;
    s.snr_db = {0.0, 10.0};
    s.pfa_grid = {0.01, 0.1, 1.0};
    s.trials = 200;
    s.seed = 5;
    s.threads = 1;
    s.search.nodes_x = s.search.nodes_y = 9;
    return s;
}

}  // namespace

TEST(FitLogSlope, ExactPowerLaw) {
    std::vector<double> x, y;
    for (int i = 0; i <= 10; ++i) {
        x.push_back(2.0 * i);
        y.push_back(0.3 * std::pow(10.0, -3.0 * (2.0 * i) / 10.0));
    }
    const auto f = fit_log_slope(x, y, 0.0, 1.0);
    EXPECT_NEAR(f.slope, 3.0, 1e-12);
    EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
    EXPECT_EQ(f.points_used, 11u);
}

TEST(FitLogSlope, RobustToTenPercentNoise) {
    std::mt19937_64 eng(2);
    std::uniform_real_distribution<double> jitter(0.9, 1.1);
    std::vector<double> x, y;
    for (int i = 0; i <= 20; ++i) {
        x.push_back(1.0 * i);
        y.push_back(std::pow(10.0, -2.0 * i / 10.0) * jitter(eng));
    }
    EXPECT_NEAR(fit_log_slope(x, y, 0.0, 1.0).slope, 2.0, 0.1);
}

TEST(FitLogSlope, ConstantCurveHasZeroSlope) {
    const std::vector<double> x{0.0, 5.0, 10.0, 15.0}, y{0.2, 0.2, 0.2, 0.2};
    EXPECT_NEAR(fit_log_slope(x, y, 0.0, 1.0).slope, 0.0, 1e-12);
}

TEST(FitLogSlope, RangeFilterAndDegenerateInputs) {
    const std::vector<double> x{0.0, 10.0, 20.0, 30.0, 40.0}, y{0.9, 0.1, 0.01, 0.001, 0.0};
    const auto f = fit_log_slope(x, y, 1e-3, 0.5);
    EXPECT_EQ(f.points_used, 3u);
    EXPECT_NEAR(f.slope, 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(f.snr_lo_db, 10.0);
    EXPECT_DOUBLE_EQ(f.snr_hi_db, 30.0);
    EXPECT_THROW(fit_log_slope(x, y, 0.05, 0.5), RuntimeFailure);
    EXPECT_THROW(fit_log_slope({0.0}, {0.1, 0.2}, 0.0, 1.0), DimensionError);
}

TEST(NormalizedDelayError, MatchesDefinition) {
    RealMatrix a(1, 2), b(1, 2);
    a << 1.1e-4, 2.0e-4;
    b << 1.0e-4, 2.2e-4;
    const double want = (0.1 * 0.1 + (0.2 / 2.2) * (0.2 / 2.2)) / 2.0;
    EXPECT_NEAR(detail::normalized_delay_error(DelayVector(a), DelayVector(b)), want, 1e-15);
}

TEST(ParallelMap, OrderAndExceptionPropagation) {
    const auto v = parallel_map<std::size_t>(100, 4, [](std::size_t i) { return i * i; });
    for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(v[i], i * i);
    EXPECT_THROW(parallel_map<int>(10, 3,
                                   [](std::size_t i) -> int {
                                       if (i == 7) throw std::runtime_error("boom");
                                       return 0;
                                   }),
                 std::runtime_error);
}

TEST(ExperimentSpec, InvalidCombinationsRejected) {
    auto s = small_spec(CurveKind::Pmd);
    s.trials = 0;
    EXPECT_THROW(run_curve(s), ConfigError);
    s = small_spec(CurveKind::Pmd);
    s.estimator = EstimatorKind::MimoPoint;
    EXPECT_THROW(s.validate(), ConfigError);
    s = small_spec(CurveKind::Pmd);
    s.snr_db = {10.0, 0.0};
    EXPECT_THROW(s.validate(), ConfigError);
    s = small_spec(CurveKind::Roc);
    s.pfa_grid = {0.5, 0.1};
    EXPECT_THROW(s.validate(), ConfigError);
    s = small_spec(CurveKind::Pmd);
    s.detector = DetectorKind::PaExtended;
    EXPECT_THROW(s.validate(), ConfigError);
}

TEST(RunCurve, DeterministicAcrossRunsAndThreadCounts) {
    auto s = small_spec(CurveKind::Pmd);
    s.keep_raw = true;
    const auto a = run_curve(s);
    const auto b = run_curve(s);
    s.threads = 3;
    const auto c = run_curve(s);
    ASSERT_EQ(a.points.size(), 2u);
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        EXPECT_EQ(a.points[i].raw, b.points[i].raw);
        EXPECT_EQ(a.points[i].raw, c.points[i].raw);
        EXPECT_EQ(a.points[i].y, c.points[i].y);
    }
}

TEST(RunCurve, SplitTrialRangesConcatenate) {
    auto s = small_spec(CurveKind::MseDelay);
    s.snr_db = {5.0};
    s.trials = 20;
    s.keep_raw = true;
    const auto whole = run_curve(s);
    s.trials = 12;
    const auto first = run_curve(s);
    s.trial_offset = 12;
    s.trials = 8;
    const auto second = run_curve(s);
    std::vector<double> joined = first.points[0].raw;
    joined.insert(joined.end(), second.points[0].raw.begin(), second.points[0].raw.end());
    EXPECT_EQ(joined, whole.points[0].raw);
}

TEST(RunCurve, MissProbabilityApproachesOneMinusPfaAtVanishingSnr) {
    auto s = small_spec(CurveKind::Pmd);
    s.snr_db = {-60.0};
    s.pfa = 0.1;
    s.trials = 4000;
    const auto p = run_curve(s).points[0];
    const double sd = std::sqrt(0.1 * 0.9 / 4000.0);
    EXPECT_NEAR(p.y, 0.9, 4.0 * sd);
}

TEST(RunCurve, RocAtUnitLevelDetectsEverything) {
    auto s = small_spec(CurveKind::Roc);
    s.snr_fixed_db = -20.0;
    const auto r = run_curve(s);
    EXPECT_EQ(r.points.back().x, 1.0);
    EXPECT_EQ(r.points.back().y, 1.0);
    for (std::size_t i = 1; i < r.points.size(); ++i) EXPECT_GE(r.points[i].y, r.points[i - 1].y);
}

TEST(RunCurve, FalseAlarmRateMatchesLevel) {
    auto s = small_spec(CurveKind::FalseAlarm);
    s.pfa_grid = {0.05};
    s.trials = 8000;
    const auto p = run_curve(s).points[0];
    EXPECT_NEAR(p.y, 0.05, 3.0 * std::sqrt(0.05 * 0.95 / 8000.0));
}

TEST(RunCurve, HighSnrDelayErrorBelowOneSamplePeriod) {
    auto s = small_spec(CurveKind::MseDelay);
    s.snr_db = {30.0};
    s.trials = 10;
    const auto p = run_curve(s).points[0];
    const auto tau = true_delays(s.scene);
    const double ts = s.bank.duration / s.bank.samples_per_pulse;
    EXPECT_LE(p.y, (ts / tau.min()) * (ts / tau.min()));
}

TEST(RunCurve, LocalizationAtHighSnrIsAccurate) {
    auto s = small_spec(CurveKind::MsePosition);
    s.scene = reference_mimo_scene(4, 8);
    s.snr_db = {20.0};
    s.trials = 8;
    const auto p = run_curve(s).points[0];
    EXPECT_EQ(p.n_trials + p.failures, 8u);
    EXPECT_LT(p.y, 0.05);
}

TEST(Lemma6, SingleComponentSlopeNearOne) {
    Lemma6Spec spec;
    spec.m = 1;
    spec.rho_grid = lemma6_default_grid(1);
    spec.trials = 300000;
    spec.threads = 1;
    const auto r = verify_lemma6(spec);
    EXPECT_GE(r.fit.points_used, 3u);
    EXPECT_NEAR(r.fit.slope, 1.0, 0.15);
    for (std::size_t i = 1; i < r.probabilities.size(); ++i) EXPECT_LE(r.probabilities[i], r.probabilities[i - 1]);
}

TEST(Lemma6, DefaultGridIsLogSpaced) {
    const auto g = lemma6_default_grid(2, 5);
    ASSERT_EQ(g.size(), 5u);
    EXPECT_DOUBLE_EQ(g.front(), 3.0);
    EXPECT_NEAR(g.back(), 50.0, 1e-12);
    for (std::size_t i = 2; i < g.size(); ++i) EXPECT_NEAR(g[i] / g[i - 1], g[1] / g[0], 1e-12);
}

TEST(Lemma3, AlignedPhasesAttainTheBound) {
    for (std::size_t n : {2u, 5u, 10u}) {
        const auto r = verify_lemma3(n, 5000, 9);
        EXPECT_NEAR(r.aligned, r.sum_abs, 1e-12);
        EXPECT_LE(r.best_random, r.aligned + 1e-12);
    }
}
