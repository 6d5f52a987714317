#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mimo_radar/estimation.hpp"

using namespace mimo_radar;

namespace {

constexpr double kT = 1e-5;
constexpr double kTs = 1e-6;

WaveformBank bank_for(const SceneConfig& s) {
    const auto tau = true_delays(s);
    return WaveformBank::centered(s.nt(), kT, kTs, 40, tau.min() - 2e-5, tau.max() + 2e-5);
}

SceneConfig single_leg() {
    SceneConfig s;
    s.tx = {Vec3(1000.0, 0.0, 0.0)};
    s.rx = {Vec3(0.0, 1000.0, 0.0)};
    s.target = Vec3(20000.0, 15000.0, 0.0);
    return s;
}

SceneConfig one_tx_three_rx() {
    SceneConfig s;
    s.tx = {Vec3(1000.0, 0.0, 0.0)};
    s.rx = {Vec3(0.0, 1000.0, 0.0), Vec3(0.0, 2000.0, 0.0), Vec3(0.0, 3000.0, 0.0)};
    s.target = Vec3(20000.0, 15000.0, 0.0);
    return s;
}

SnapshotMatrix random_snapshot(const WaveformBank& bank, std::size_t nr, std::uint64_t seed) {
    SnapshotMatrix snap;
    snap.r = ComplexMatrix(static_cast<Eigen::Index>(bank.num_samples()), static_cast<Eigen::Index>(nr));
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    for (Eigen::Index i = 0; i < snap.r.size(); ++i) snap.r.data()[i] = Complex(g(eng), g(eng));
    return snap;
}

// Extended-target MAP criterion straight from its definition, by direct summation.
double reference_map_objective(const SnapshotMatrix& snap, const WaveformBank& bank, const SceneConfig& s,
                               const DelayVector& tau, double energy) {
    double total = 0.0;
    for (std::size_t m = 0; m < s.nt(); ++m)
        for (std::size_t n = 0; n < s.nr(); ++n) {
            Complex acc{0.0, 0.0};
            for (std::size_t k = 0; k < bank.num_samples(); ++k)
                acc += snap.r(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n)) * std::conj(bank.sample(m, k, tau(m, n)));
            const double ct = s.c * tau(m, n);
            total += std::norm(acc) / (1.0 / kTs + static_cast<double>(s.nt()) / energy * std::pow(ct, 2.0 * s.path_loss_exp));
        }
    return total;
}

// Every grid node other than the truth must move some path delay by at least one sample period.
bool truth_is_isolated(const CandidateTable& table, const DelayVector& truth, std::size_t truth_index) {
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (i == truth_index) continue;
        const double d = (table.geometry(i).tau.matrix() - truth.matrix()).cwiseAbs().maxCoeff();
        if (d < kTs) return false;
    }
    return true;
}

}  // namespace

TEST(MatchedFilter, NoiseFreeSingleLegAtTruth) {
    const auto s = single_leg();
    const auto bank = bank_for(s);
    const auto tau = true_delays(s);
    SynthOptions opts;
    opts.add_noise = false;
    opts.h_override = ComplexMatrix::Ones(1, 1);
    const auto snap = synth_extended(s, bank, tau, {5.0}, {1, 0}, opts).first;
    const double e = snap.meta.energy;
    const auto mf = matched_filter(snap, bank, s, tau, e);
    const double want = std::sqrt(e) * std::pow(s.c * tau(0, 0), -2.0) / kTs;
    EXPECT_NEAR(std::abs(mf.b(0, 0) - want) / want, 0.0, 1e-9);
    EXPECT_NEAR(mf.l(0, 0), e / kTs + std::pow(s.c * tau(0, 0), 4.0), 1e-9 * mf.l(0, 0));
}

TEST(MatchedFilter, ZeroSnapshotAndZeroEnergy) {
    const auto s = reference_mimo_scene(2, 3);
    const auto bank = bank_for(s);
    SnapshotMatrix snap;
    snap.r = ComplexMatrix::Zero(40, 3);
    const auto tau = true_delays(s);
    const auto mf = matched_filter(snap, bank, s, tau, 0.0);
    EXPECT_EQ(mf.b.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(mf.a.cwiseAbs().maxCoeff(), 0.0);
    for (std::size_t m = 0; m < 2; ++m)
        for (std::size_t n = 0; n < 3; ++n)
            EXPECT_NEAR(mf.l(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)) / std::pow(s.c * tau(m, n), 4.0), 1.0, 1e-14);
}

TEST(MatchedFilter, FastCorrelatorMatchesDirectSummation) {
    const auto s = reference_mimo_scene(3, 4);
    const auto bank = bank_for(s);
    const auto snap = random_snapshot(bank, 4, 5);
    const Correlator corr(snap, bank, 3);
    for (double shift : {0.0, 3.3e-7, -2.2e-6, 7.1e-6}) {
        RealMatrix tm = true_delays(s).matrix();
        tm.array() += shift;
        const DelayVector tau(tm);
        const auto slow = matched_filter(snap, bank, s, tau, 2.0);
        const auto fast = matched_filter_fast(corr, make_geometry(s, bank, tau), s, bank, 2.0);
        const double scale = slow.y.cwiseAbs().maxCoeff();
        EXPECT_LE((slow.y - fast.y).cwiseAbs().maxCoeff(), 1e-9 * scale);
        EXPECT_LE((slow.y_pa - fast.y_pa).cwiseAbs().maxCoeff(), 1e-9 * scale);
        EXPECT_LE((slow.l - fast.l).cwiseAbs().maxCoeff(), 1e-12 * slow.l.maxCoeff());
    }
}

TEST(MatchedFilter, DimensionMismatchThrows) {
    const auto s = reference_mimo_scene(2, 2);
    const auto bank = bank_for(s);
    const auto snap = random_snapshot(bank, 3, 1);
    EXPECT_THROW(matched_filter(snap, bank, s, true_delays(s), 1.0), DimensionError);
}

TEST(Objective, MapMatchesDirectFormula) {
    const auto s = reference_mimo_scene(2, 3);
    const auto bank = bank_for(s);
    const auto snap = random_snapshot(bank, 3, 8);
    const auto tau = true_delays(s);
    const double e = energy_for({3.0}, s, bank, tau.mean());
    const auto mf = matched_filter(snap, bank, s, tau, e);
    const double want = reference_map_objective(snap, bank, s, tau, e);
    EXPECT_NEAR(objective(EstimatorKind::MimoExtendedMap, mf, bank) / want, 1.0, 1e-10);
}

TEST(Objective, ZeroSnapshotValues) {
    const auto s = reference_mimo_scene(2, 2);
    const auto bank = bank_for(s);
    SnapshotMatrix snap;
    snap.r = ComplexMatrix::Zero(40, 2);
    const auto tau = true_delays(s);
    const double e = energy_for({10.0}, s, bank, tau.mean());
    const auto mf = matched_filter(snap, bank, s, tau, e);
    EXPECT_EQ(objective(EstimatorKind::MimoExtendedMap, mf, bank), 0.0);
    double logs = 0.0;
    for (std::size_t m = 0; m < 2; ++m)
        for (std::size_t n = 0; n < 2; ++n) logs += std::log(e * std::pow(s.c * tau(m, n), -4.0) / (kTs * 2.0) + 1.0);
    const double ave = objective(EstimatorKind::MimoExtendedAve, mf, bank);
    EXPECT_LT(ave, 0.0);
    EXPECT_NEAR(ave, -logs, 1e-12 * logs);
}

TEST(Objective, GlobalPhaseInvariance) {
    const auto s = reference_mimo_scene(2, 2);
    const auto bank = bank_for(s);
    auto snap = random_snapshot(bank, 2, 11);
    const auto tau = true_delays(s);
    const double e = energy_for({1.0}, s, bank, tau.mean());
    const auto mf = matched_filter(snap, bank, s, tau, e);
    auto rotated = snap;
    rotated.r *= std::polar(1.0, 1.234);
    const auto mf2 = matched_filter(rotated, bank, s, tau, e);
    for (auto kind : {EstimatorKind::MimoExtendedMap, EstimatorKind::MimoExtendedAve, EstimatorKind::MimoPoint,
                      EstimatorKind::PaExtendedMap, EstimatorKind::PaExtendedAve, EstimatorKind::PaPoint}) {
        const double a = objective(kind, mf, bank), b = objective(kind, mf2, bank);
        EXPECT_NEAR(a, b, 1e-9 * std::abs(a) + 1e-12) << to_string(kind);
    }
}

TEST(Objective, SingleLegMapAndPointShareMaximum) {
    // One path: the point criterion reduces to |y|^2 and the MAP weight is nearly constant at large E.
    // |y| is flat within a sample period, so the maximizers may differ inside a plateau but not in value.
    const auto s = single_leg();
    const auto bank = bank_for(s);
    const auto tau = true_delays(s);
    const auto snap = synth_extended(s, bank, tau, {2.0}, {3, 4}).first;
    const double e = 1e12 * snap.meta.energy;
    double vmap = -1.0, point_at_map = 0.0, vpoint = -1.0;
    for (std::size_t i = 0; i < 100; ++i) {
        RealMatrix t(1, 1);
        t << tau(0, 0) - 5e-6 + 1e-7 * static_cast<double>(i);
        const auto mf = matched_filter(snap, bank, s, DelayVector(t), e);
        const double a = objective(EstimatorKind::MimoExtendedMap, mf, bank);
        const double b = objective(EstimatorKind::MimoPoint, mf, bank);
        EXPECT_NEAR(b, std::norm(mf.y(0, 0)), 1e-12 * b);
        if (a > vmap) vmap = a, point_at_map = b;
        vpoint = std::max(vpoint, b);
    }
    EXPECT_NEAR(point_at_map / vpoint, 1.0, 1e-9);
}

TEST(Objective, LikelihoodDecompositionHolds) {
    // -log f(R | tau, h) - K N_r log(pi) = sum ||r||^2 + h^H A h - h^H a - a^H h for orthogonal paths.
    const auto s = one_tx_three_rx();
    const auto bank = bank_for(s);
    const auto tau = true_delays(s);
    std::mt19937_64 eng(3);
    ComplexNormal cn(1.0);
    for (int rep = 0; rep < 5; ++rep) {
        const auto snap = random_snapshot(bank, 3, 100 + static_cast<std::uint64_t>(rep));
        ComplexMatrix h(1, 3);
        for (Eigen::Index i = 0; i < 3; ++i) h(0, i) = 1e3 * cn(eng);
        const double e = energy_for({1.0}, s, bank, tau.mean());
        const auto mf = matched_filter(snap, bank, s, tau, e);
        double neg_log = 0.0;
        for (Eigen::Index n = 0; n < 3; ++n)
            for (std::size_t k = 0; k < 40; ++k) {
                const double t = tau(0, static_cast<std::size_t>(n));
                const Complex x = std::sqrt(e) * std::pow(s.c * t, -2.0) * h(0, n) * bank.sample(0, k, t);
                neg_log += std::norm(snap.r(static_cast<Eigen::Index>(k), n) - x);
            }
        double rhs = snap.r.squaredNorm();
        for (Eigen::Index n = 0; n < 3; ++n) {
            const double big_a = e / kTs * std::pow(s.c * tau(0, static_cast<std::size_t>(n)), -4.0);
            rhs += big_a * std::norm(h(0, n)) - 2.0 * (std::conj(h(0, n)) * mf.a(0, n)).real();
        }
        EXPECT_NEAR(neg_log / rhs, 1.0, 1e-9);
    }
}

TEST(EstimateH, ElementwiseSolveMatchesDenseSolver) {
    const auto s = reference_mimo_scene(2, 3);
    const auto bank = bank_for(s);
    const auto snap = random_snapshot(bank, 3, 21);
    const auto tau = true_delays(s);
    const double e = energy_for({0.5}, s, bank, tau.mean());
    const auto mf = matched_filter(snap, bank, s, tau, e);
    const auto h = estimate_h_map(mf, bank);
    Eigen::MatrixXcd big_b = Eigen::MatrixXcd::Identity(6, 6);
    Eigen::VectorXcd a(6);
    for (Eigen::Index m = 0; m < 2; ++m)
        for (Eigen::Index n = 0; n < 3; ++n) {
            big_b(m * 3 + n, m * 3 + n) += e / (kTs * 2.0) * std::pow(s.c * tau(static_cast<std::size_t>(m), static_cast<std::size_t>(n)), -4.0);
            a(m * 3 + n) = mf.a(m, n);
        }
    const Eigen::VectorXcd dense = big_b.fullPivLu().solve(a);
    for (Eigen::Index m = 0; m < 2; ++m)
        for (Eigen::Index n = 0; n < 3; ++n) EXPECT_NEAR(std::abs(h(m, n) - dense(m * 3 + n)), 0.0, 1e-12 * std::abs(dense(m * 3 + n)));
}

TEST(EstimateH, ZeroAndLargeEnergyLimits) {
    const auto s = reference_mimo_scene(2, 2);
    const auto bank = bank_for(s);
    const auto tau = true_delays(s);
    SnapshotMatrix zero;
    zero.r = ComplexMatrix::Zero(40, 2);
    EXPECT_EQ(estimate_h_map(matched_filter(zero, bank, s, tau, 1.0), bank).cwiseAbs().maxCoeff(), 0.0);
    const auto snap = random_snapshot(bank, 2, 4);
    const double e = 1e12 * energy_for({1.0}, s, bank, tau.mean());
    const auto mf = matched_filter(snap, bank, s, tau, e);
    const auto h = estimate_h_map(mf, bank);
    for (Eigen::Index m = 0; m < 2; ++m)
        for (Eigen::Index n = 0; n < 2; ++n) {
            const double big_a = e / (kTs * 2.0) * std::pow(s.c * tau(static_cast<std::size_t>(m), static_cast<std::size_t>(n)), -4.0);
            EXPECT_NEAR(std::abs(h(m, n) - mf.a(m, n) / big_a) / std::abs(mf.a(m, n) / big_a), 0.0, 1e-6);
        }
}

TEST(EstimateZeta, NoiseFreeRecoveryAndLinearity) {
    const auto s = single_leg();
    const auto bank = bank_for(s);
    const auto tau = true_delays(s);
    SynthOptions opts;
    opts.add_noise = false;
    opts.zeta_override = Complex(1.0, 0.0);
    auto snap = synth_point(s, bank, tau, {4.0}, {1, 0}, opts).first;
    const double e = snap.meta.energy;
    EXPECT_NEAR(std::abs(estimate_zeta(matched_filter(snap, bank, s, tau, e), bank) - 1.0), 0.0, 1e-9);
    auto doubled = snap;
    doubled.r *= 2.0;
    EXPECT_NEAR(std::abs(estimate_zeta(matched_filter(doubled, bank, s, tau, e), bank) - 2.0), 0.0, 1e-9);
    SnapshotMatrix zero;
    zero.r = ComplexMatrix::Zero(40, 1);
    EXPECT_EQ(estimate_zeta(matched_filter(zero, bank, s, tau, e), bank), Complex(0.0, 0.0));
}

TEST(PhaseAlignment, AlignedSumEqualsSumOfModuli) {
    std::mt19937_64 eng(5);
    ComplexNormal cn(1.0);
    std::uniform_real_distribution<double> ph(0.0, kTwoPi);
    for (Eigen::Index n : {2, 5, 10}) {
        Eigen::VectorXcd g(n);
        for (Eigen::Index i = 0; i < n; ++i) g(i) = cn(eng);
        const double aligned = phase_rotated_sum(g, aligned_phases(g));
        EXPECT_NEAR(aligned, g.cwiseAbs().sum(), 1e-12);
        Eigen::VectorXd phi(n);
        for (int d = 0; d < 2000; ++d) {
            for (Eigen::Index i = 0; i < n; ++i) phi(i) = ph(eng);
            EXPECT_LE(phase_rotated_sum(g, phi), aligned + 1e-12);
        }
    }
}

class EstimatorRecovery : public ::testing::TestWithParam<EstimatorKind> {};

TEST_P(EstimatorRecovery, NoiseFreeOnGridTargetIsRecoveredExactly) {
    const EstimatorKind kind = GetParam();
    const bool pa = is_phased_array(kind);
    const auto s = pa ? reference_phased_array_scene(2, 2) : reference_mimo_scene(2, 2);
    const auto bank = bank_for(s);
    const auto tau = true_delays(s);
    SearchSpec spec;
    spec.nodes_x = spec.nodes_y = 5;  // 1 km spacing: every other node moves some path by several samples
    spec.refine = false;
    const CandidateTable table(s, bank, spec);
    const std::size_t center = 12;
    ASSERT_TRUE(table.geometry(center).tau == tau);
    ASSERT_TRUE(truth_is_isolated(table, tau, center));
    SynthOptions opts;
    opts.add_noise = false;
    opts.h_override = ComplexMatrix::Ones(2, 2);
    opts.zeta_override = Complex(1.0, 0.0);
    opts.h_scalar_override = Complex(1.0, 0.0);
    opts.phased_array_target = kind == EstimatorKind::PaPoint ? PhasedArrayTarget::Point : PhasedArrayTarget::Extended;
    SnapshotMatrix snap;
    if (pa) snap = synth_phased_array(s, bank, tau, {100.0}, {1, 0}, opts).first;
    else if (kind == EstimatorKind::MimoPoint) snap = synth_point(s, bank, tau, {100.0}, {1, 0}, opts).first;
    else snap = synth_extended(s, bank, tau, {100.0}, {1, 0}, opts).first;
    const auto est = estimate(kind, snap, table, snap.meta.energy);
    EXPECT_EQ(est.grid_index, center);
    EXPECT_TRUE(est.tau_hat == tau);
    EXPECT_TRUE(std::isfinite(est.objective));
    EXPECT_TRUE(is_feasible(est.tau_hat, s));
}

INSTANTIATE_TEST_SUITE_P(AllKinds, EstimatorRecovery,
                         ::testing::Values(EstimatorKind::MimoExtendedMap, EstimatorKind::MimoExtendedAve,
                                           EstimatorKind::MimoPoint, EstimatorKind::PaExtendedMap,
                                           EstimatorKind::PaExtendedAve, EstimatorKind::PaPoint),
                         [](const auto& info) { return to_string(info.param); });

TEST(Estimate, OffGridTargetWithinOneCellWidth) {
    const auto s = reference_mimo_scene(2, 2);
    const auto bank = bank_for(s);
    const auto tau = true_delays(s);
    SearchSpec spec;
    spec.nodes_x = spec.nodes_y = 9;
    spec.center = s.target + Vec3(250.0, -250.0, 0.0);  // truth halfway between nodes
    const CandidateTable table(s, bank, spec);
    ASSERT_GE(table.cell_delay_width(), kTs);
    SynthOptions opts;
    opts.add_noise = false;
    opts.h_override = ComplexMatrix::Ones(2, 2);
    const auto snap = synth_extended(s, bank, tau, {100.0}, {1, 0}, opts).first;
    const auto est = estimate(EstimatorKind::MimoExtendedMap, snap, table, snap.meta.energy);
    EXPECT_LE((est.tau_hat.matrix() - tau.matrix()).cwiseAbs().maxCoeff(), table.cell_delay_width());
    EXPECT_TRUE(is_feasible(est.tau_hat, s));
    EXPECT_GE(est.objective, est.grid_objective);
}

TEST(Estimate, TiesResolveToLowestIndex) {
    const auto s = reference_mimo_scene(2, 2);
    const auto bank = bank_for(s);
    SnapshotMatrix zero;
    zero.r = ComplexMatrix::Zero(40, 2);
    SearchSpec spec;
    spec.nodes_x = spec.nodes_y = 7;
    spec.refine = false;
    const auto est = estimate(EstimatorKind::MimoExtendedMap, zero, s, bank, 1.0, spec);
    EXPECT_EQ(est.grid_index, 0u);
}

TEST(Estimate, GlobalPhaseLeavesEstimateUnchanged) {
    const auto s = reference_mimo_scene(2, 2);
    const auto bank = bank_for(s);
    const auto tau = true_delays(s);
    SearchSpec spec;
    spec.nodes_x = spec.nodes_y = 11;
    const CandidateTable table(s, bank, spec);
    auto snap = synth_extended(s, bank, tau, {3.0}, {2, 9}).first;
    auto rotated = snap;
    rotated.r *= std::polar(1.0, -2.1);
    for (auto kind : {EstimatorKind::MimoExtendedMap, EstimatorKind::MimoExtendedAve, EstimatorKind::MimoPoint}) {
        const auto a = estimate(kind, snap, table, snap.meta.energy);
        const auto b = estimate(kind, rotated, table, snap.meta.energy);
        EXPECT_LE((a.tau_hat.matrix() - b.tau_hat.matrix()).cwiseAbs().maxCoeff(), 1e-15) << to_string(kind);
    }
}

TEST(Estimate, AuxiliaryOutputsPerKind) {
    const auto s = reference_mimo_scene(2, 2);
    const auto bank = bank_for(s);
    const auto tau = true_delays(s);
    SearchSpec spec;
    spec.nodes_x = spec.nodes_y = 5;
    spec.keep_trace = true;
    const CandidateTable table(s, bank, spec);
    const auto snap = synth_point(s, bank, tau, {10.0}, {4, 4}).first;
    const auto point = estimate(EstimatorKind::MimoPoint, snap, table, snap.meta.energy);
    EXPECT_TRUE(point.zeta_hat.has_value());
    ASSERT_TRUE(point.oscillation_width.has_value());
    EXPECT_GT(*point.oscillation_width, 0.0);
    EXPECT_LE(*point.oscillation_width, 4.0 / s.carrier_hz);
    EXPECT_GE(point.trace.size(), table.size());
    const auto ext = estimate(EstimatorKind::MimoExtendedMap, snap, table, snap.meta.energy);
    EXPECT_TRUE(ext.h_hat.has_value());
    EXPECT_FALSE(ext.oscillation_width.has_value());
    EXPECT_EQ(ext.evaluations >= table.size(), true);
}

TEST(Estimate, EmptySearchRegionRejected) {
    SceneConfig s;
    s.tx = {Vec3(0.0, 0.0, 0.0)};
    s.rx = {Vec3(0.0, 0.0, 0.0)};
    s.target = Vec3(20000.0, 0.0, 0.0);
    const auto bank = bank_for(s);
    SearchSpec spec;
    spec.center = Vec3(0.0, 0.0, 0.0);
    spec.nodes_x = spec.nodes_y = 1;
    EXPECT_THROW(CandidateTable(s, bank, spec), ConfigError);
}

TEST(EstimatorKind, NamesRoundTrip) {
    for (auto kind : {EstimatorKind::MimoExtendedMap, EstimatorKind::MimoExtendedAve, EstimatorKind::MimoPoint,
                      EstimatorKind::PaExtendedMap, EstimatorKind::PaExtendedAve, EstimatorKind::PaPoint})
        EXPECT_EQ(estimator_from_string(to_string(kind)), kind);
    EXPECT_THROW(estimator_from_string("nope"), ConfigError);
}
