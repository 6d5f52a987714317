#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mimo_radar/scene.hpp"

using namespace mimo_radar;

namespace {

SceneConfig one_by_one(const Vec3& tx, const Vec3& rx, const Vec3& target) {
    SceneConfig s;
    s.tx = {tx};
    s.rx = {rx};
    s.target = target;
    return s;
}

SceneConfig random_scene(std::mt19937_64& eng, std::size_t nt, std::size_t nr) {
    std::uniform_real_distribution<double> u(-5000.0, 5000.0);
    SceneConfig s;
    for (std::size_t m = 0; m < nt; ++m) s.tx.emplace_back(u(eng), u(eng), u(eng));
    for (std::size_t n = 0; n < nr; ++n) s.rx.emplace_back(u(eng), u(eng), u(eng));
    s.target = Vec3(u(eng) + 20000.0, u(eng), u(eng));
    return s;
}

}  // namespace

TEST(TrueDelays, SymmetricMidpointTarget) {
    const auto s = one_by_one({1000.0, 0.0, 0.0}, {-1000.0, 0.0, 0.0}, {0.0, 0.0, 0.0});
    EXPECT_NEAR(true_delays(s)(0, 0), 2000.0 / 299792458.0, 1e-18);
}

TEST(TrueDelays, ReferenceGeometrySingleLeg) {
    const auto s = one_by_one({1000.0, 0.0, 0.0}, {0.0, 1000.0, 0.0}, {20000.0, 15000.0, 0.0});
    const double d = std::hypot(19000.0, 15000.0) + std::hypot(20000.0, 14000.0);
    const double tau = true_delays(s)(0, 0);
    EXPECT_DOUBLE_EQ(tau, d / 299792458.0);
    EXPECT_NEAR(tau, 1.621807e-4, 1e-10);  // 48.62055 km of path
}

TEST(TrueDelays, DecompositionReconstructsExactly) {
    const auto s = reference_mimo_scene(4, 8);
    const auto tau = true_delays(s);
    ASSERT_TRUE(tau.split().has_value());
    const auto& sp = *tau.split();
    for (std::size_t m = 0; m < 4; ++m) {
        EXPECT_DOUBLE_EQ(sp.t(static_cast<Eigen::Index>(m)), (s.target - s.tx[m]).norm() / s.c);
        for (std::size_t n = 0; n < 8; ++n)
            EXPECT_EQ(tau(m, n), sp.t(static_cast<Eigen::Index>(m)) + sp.t_prime(static_cast<Eigen::Index>(n)));
    }
}

TEST(TrueDelays, RadialMotionIncreasesEveryDelay) {
    auto s = reference_mimo_scene(2, 2);
    const auto before = true_delays(s);
    s.target *= 1.1;
    const auto after = true_delays(s);
    for (std::size_t m = 0; m < 2; ++m)
        for (std::size_t n = 0; n < 2; ++n) EXPECT_GT(after(m, n), before(m, n));
}

TEST(TrueDelays, RigidMotionInvariance) {
    const auto s = reference_mimo_scene(3, 4);
    const Eigen::Matrix3d rot = Eigen::AngleAxisd(0.7, Vec3(1.0, 2.0, -0.5).normalized()).toRotationMatrix();
    const auto moved = rigid_transform(s, rot, Vec3(-3000.0, 12345.0, 77.0));
    const auto a = true_delays(s), b = true_delays(moved);
    for (std::size_t m = 0; m < 3; ++m)
        for (std::size_t n = 0; n < 4; ++n) EXPECT_NEAR(b(m, n) / a(m, n), 1.0, 1e-12);
}

TEST(SceneConfig, InvalidConfigurationsRejected) {
    auto s = reference_mimo_scene(2, 2);
    s.target = s.tx[0];
    EXPECT_THROW(true_delays(s), ConfigError);
    s = reference_mimo_scene(2, 2);
    s.c = 0.0;
    EXPECT_THROW(s.validate(), ConfigError);
    s = reference_mimo_scene(2, 2);
    s.rx.clear();
    EXPECT_THROW(s.validate(), ConfigError);
    s = reference_mimo_scene(2, 2);
    s.path_loss_exp = -1.0;
    EXPECT_THROW(s.validate(), ConfigError);
}

TEST(DelayVector, RejectsNonPositiveEntries) {
    RealMatrix m(1, 2);
    m << 1e-4, 0.0;
    EXPECT_THROW(DelayVector{m}, ConfigError);
}

TEST(Feasibility, PhysicalDelaysAreFeasibleAtZeroTolerance) {
    std::mt19937_64 eng(42);
    for (int i = 0; i < 1000; ++i) {
        const auto s = random_scene(eng, 1 + static_cast<std::size_t>(i % 4), 1 + static_cast<std::size_t>((i / 4) % 5));
        ASSERT_TRUE(is_feasible(true_delays(s), s, 0.0)) << "scene " << i;
    }
}

TEST(Feasibility, LargePerturbationIsInfeasible) {
    const auto s = reference_mimo_scene(2, 3);
    RealMatrix tau = true_delays(s).matrix();
    tau(1, 2) += 10.0 * s.max_baseline() / s.c;
    EXPECT_FALSE(is_feasible(DelayVector(tau), s));
}

TEST(Feasibility, SingleLegIsAlwaysFeasible) {
    const auto s = one_by_one({0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {5.0, 5.0, 0.0});
    RealMatrix tau(1, 1);
    tau << 123.0;
    EXPECT_TRUE(is_feasible(DelayVector(tau), s, 0.0));
}

TEST(Feasibility, DimensionMismatchThrows) {
    const auto s = reference_mimo_scene(2, 2);
    EXPECT_THROW(is_feasible(true_delays(reference_mimo_scene(2, 3)), s), DimensionError);
}

TEST(ProjectFeasible, SeparableInputReproduced) {
    const auto s = reference_mimo_scene(3, 5);
    const RealMatrix tau = true_delays(s).matrix();
    const auto p = project_feasible(tau, s);
    EXPECT_LE((p.matrix() - tau).cwiseAbs().maxCoeff(), 1e-18);
    EXPECT_TRUE(is_feasible(p, s));
    // idempotent
    const auto q = project_feasible(p.matrix(), s);
    EXPECT_LE((q.matrix() - p.matrix()).cwiseAbs().maxCoeff(), 1e-18);
}

TEST(ProjectFeasible, OneByOneIsIdentity) {
    const auto s = reference_mimo_scene(1, 1);
    RealMatrix tau(1, 1);
    tau << 3.3e-4;
    EXPECT_DOUBLE_EQ(project_feasible(tau, s)(0, 0), 3.3e-4);
}

TEST(ProjectFeasible, NoisyResidualMatchesLeastSquaresExpectation) {
    // The separable fit leaves (N_t - 1)(N_r - 1) noise degrees of freedom.
    const auto s = reference_mimo_scene(3, 4);
    const RealMatrix tau = true_delays(s).matrix();
    std::mt19937_64 eng(9);
    std::normal_distribution<double> noise(0.0, 1e-8);
    double mean_res = 0.0;
    const int reps = 4000;
    for (int r = 0; r < reps; ++r) {
        RealMatrix raw = tau;
        for (Eigen::Index i = 0; i < raw.size(); ++i) raw.data()[i] += noise(eng);
        const auto p = project_feasible(raw, s);
        mean_res += (p.matrix() - raw).squaredNorm();
    }
    mean_res /= reps;
    const double expected = 2.0 * 3.0 * 1e-16;
    EXPECT_NEAR(mean_res / expected, 1.0, 0.05);
    EXPECT_LE(mean_res, 12.0 * 1e-16);
}

TEST(ProjectFeasible, NonPositiveRejected) {
    const auto s = reference_mimo_scene(1, 2);
    RealMatrix tau(1, 2);
    tau << 1e-4, -1e-4;
    EXPECT_THROW(project_feasible(tau, s), ConfigError);
}

TEST(SceneHash, SensitiveToGeometry) {
    auto a = reference_mimo_scene(2, 2);
    auto b = a;
    EXPECT_EQ(scene_hash(a), scene_hash(b));
    b.target.x() += 1e-6;
    EXPECT_NE(scene_hash(a), scene_hash(b));
}
