#ifndef MIMO_RADAR_SCENE_HPP
#define MIMO_RADAR_SCENE_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "mimo_radar/core.hpp"

namespace mimo_radar {

/// Antenna and target geometry, SI units throughout (meters, seconds, Hz).
struct SceneConfig {
    std::vector<Vec3> tx;
    std::vector<Vec3> rx;
    Vec3 target{0.0, 0.0, 0.0};
    double carrier_hz = 5e6;
    double path_loss_exp = 2.0;
    double c = kSpeedOfLight;
    int num_scatterers = 10;

    std::size_t nt() const { return tx.size(); }
    std::size_t nr() const { return rx.size(); }
    std::size_t legs() const { return tx.size() * rx.size(); }

    void validate() const {
        require(!tx.empty(), "scene: at least one transmit antenna required");
        require(!rx.empty(), "scene: at least one receive antenna required");
        require(num_scatterers >= 1, "scene: num_scatterers must be >= 1");
        require(std::isfinite(c) && c > 0.0, "scene: speed of light must be positive");
        require(std::isfinite(carrier_hz) && carrier_hz > 0.0, "scene: carrier frequency must be positive");
        require(std::isfinite(path_loss_exp) && path_loss_exp >= 0.0, "scene: path-loss exponent must be >= 0");
        require(target.allFinite(), "scene: target position must be finite");
        for (const auto& p : tx) {
            require(p.allFinite(), "scene: transmit position must be finite");
            require((p - target).norm() > 0.0, "scene: target coincides with a transmit antenna");
        }
        for (const auto& p : rx) {
            require(p.allFinite(), "scene: receive position must be finite");
            require((p - target).norm() > 0.0, "scene: target coincides with a receive antenna");
        }
    }

    double max_baseline() const {
        double best = 0.0;
        for (const auto& a : tx)
            for (const auto& b : tx) best = std::max(best, (a - b).norm());
        for (const auto& a : rx)
            for (const auto& b : rx) best = std::max(best, (a - b).norm());
        return best;
    }
};

/// End-to-end delays tau[m][n] (seconds) with an optional split tau = t_m + t'_n.
class DelayVector {
public:
    struct Decomposition {
        Eigen::VectorXd t;
        Eigen::VectorXd t_prime;
    };

    DelayVector() = default;

    explicit DelayVector(RealMatrix tau, std::optional<Decomposition> split = std::nullopt)
        : tau_(std::move(tau)), split_(std::move(split)) {
        if (tau_.size() == 0) throw DimensionError("delay vector: empty");
        for (Eigen::Index i = 0; i < tau_.size(); ++i) {
            const double v = tau_.data()[i];
            if (!std::isfinite(v) || v <= 0.0) throw ConfigError("delay vector: entries must be positive and finite");
        }
        if (split_) {
            if (split_->t.size() != tau_.rows() || split_->t_prime.size() != tau_.cols())
                throw DimensionError("delay vector: decomposition shape mismatch");
        }
    }

    static DelayVector from_split(const Eigen::VectorXd& t, const Eigen::VectorXd& t_prime) {
        RealMatrix tau(t.size(), t_prime.size());
        for (Eigen::Index m = 0; m < t.size(); ++m)
            for (Eigen::Index n = 0; n < t_prime.size(); ++n) tau(m, n) = t(m) + t_prime(n);
        return DelayVector(std::move(tau), Decomposition{t, t_prime});
    }

    std::size_t nt() const { return static_cast<std::size_t>(tau_.rows()); }
    std::size_t nr() const { return static_cast<std::size_t>(tau_.cols()); }
    double operator()(std::size_t m, std::size_t n) const {
        return tau_(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    }
    const RealMatrix& matrix() const { return tau_; }
    const std::optional<Decomposition>& split() const { return split_; }

    double mean() const { return tau_.mean(); }
    double min() const { return tau_.minCoeff(); }
    double max() const { return tau_.maxCoeff(); }

    /// Row-major (m, n) flattening, the ordering used by localization.
    Eigen::VectorXd flatten() const {
        Eigen::VectorXd out(tau_.size());
        for (Eigen::Index m = 0; m < tau_.rows(); ++m)
            for (Eigen::Index n = 0; n < tau_.cols(); ++n) out(m * tau_.cols() + n) = tau_(m, n);
        return out;
    }

    bool operator==(const DelayVector& other) const { return tau_ == other.tau_; }

private:
    RealMatrix tau_;
    std::optional<Decomposition> split_;
};

inline void check_dims(const DelayVector& tau, const SceneConfig& scene) {
    if (tau.nt() != scene.nt() || tau.nr() != scene.nr())
        throw DimensionError("delay vector shape does not match scene antenna counts");
}

/// Bistatic delays of a point X through every (tx m, rx n) pair.
inline DelayVector delays_at(const Vec3& x, const SceneConfig& scene) {
    Eigen::VectorXd t(scene.nt());
    Eigen::VectorXd tp(scene.nr());
    for (std::size_t m = 0; m < scene.nt(); ++m) t(m) = (x - scene.tx[m]).norm() / scene.c;
    for (std::size_t n = 0; n < scene.nr(); ++n) tp(n) = (x - scene.rx[n]).norm() / scene.c;
    return DelayVector::from_split(t, tp);
}

inline DelayVector true_delays(const SceneConfig& scene) {
    scene.validate();
    return delays_at(scene.target, scene);
}

/// Triangle-inequality membership test for the necessary feasible-delay conditions.
inline bool is_feasible(const DelayVector& tau, const SceneConfig& scene, double tol = 1e-12) {
    check_dims(tau, scene);
    const std::size_t nt = scene.nt(), nr = scene.nr();
    for (std::size_t m = 0; m < nt; ++m)
        for (std::size_t i = m + 1; i < nt; ++i) {
            const double lim = (scene.tx[m] - scene.tx[i]).norm() / scene.c + tol;
            for (std::size_t n = 0; n < nr; ++n)
                if (std::abs(tau(m, n) - tau(i, n)) > lim) return false;
        }
    for (std::size_t n = 0; n < nr; ++n)
        for (std::size_t j = n + 1; j < nr; ++j) {
            const double lim = (scene.rx[n] - scene.rx[j]).norm() / scene.c + tol;
            for (std::size_t m = 0; m < nt; ++m)
                if (std::abs(tau(m, n) - tau(m, j)) > lim) return false;
        }
    return true;
}

/// Least-squares separable fit tau_raw ~ t_m + t'_n, gauge split evenly between t and t'.
inline DelayVector project_feasible(const RealMatrix& tau_raw, const SceneConfig& scene) {
    if (static_cast<std::size_t>(tau_raw.rows()) != scene.nt() ||
        static_cast<std::size_t>(tau_raw.cols()) != scene.nr())
        throw DimensionError("project_feasible: shape does not match scene");
    if (!(tau_raw.array() > 0.0).all() || !tau_raw.allFinite())
        throw ConfigError("project_feasible: entries must be positive");
    const Eigen::VectorXd row_mean = tau_raw.rowwise().mean();
    const Eigen::VectorXd col_mean = tau_raw.colwise().mean().transpose();
    const double grand = tau_raw.mean();
    const Eigen::VectorXd t = row_mean.array() - 0.5 * grand;
    const Eigen::VectorXd tp = col_mean.array() - 0.5 * grand;
    return DelayVector::from_split(t, tp);
}

/// Apply x -> R x + shift to every position of a scene.
inline SceneConfig rigid_transform(const SceneConfig& scene, const Eigen::Matrix3d& rotation, const Vec3& shift) {
    SceneConfig out = scene;
    for (auto& p : out.tx) p = rotation * p + shift;
    for (auto& p : out.rx) p = rotation * p + shift;
    out.target = rotation * scene.target + shift;
    return out;
}

/// Widely spaced layout: tx at (m, 0, 0) km, rx at (0, n, 0) km, target (20, 15, 0) km.
inline SceneConfig reference_mimo_scene(std::size_t nt, std::size_t nr) {
    SceneConfig s;
    for (std::size_t m = 1; m <= nt; ++m) s.tx.emplace_back(1000.0 * static_cast<double>(m), 0.0, 0.0);
    for (std::size_t n = 1; n <= nr; ++n) s.rx.emplace_back(0.0, 1000.0 * static_cast<double>(n), 0.0);
    s.target = Vec3(20000.0, 15000.0, 0.0);
    return s;
}

/// Co-located clusters around (1, 0, 0) km (tx) and (0, 1, 0) km (rx), `spacing_m` apart along the cluster axis.
inline SceneConfig reference_phased_array_scene(std::size_t nt, std::size_t nr, double spacing_m = 1.0) {
    SceneConfig s;
    for (std::size_t m = 0; m < nt; ++m) s.tx.emplace_back(1000.0 + spacing_m * static_cast<double>(m), 0.0, 0.0);
    for (std::size_t n = 0; n < nr; ++n) s.rx.emplace_back(0.0, 1000.0 + spacing_m * static_cast<double>(n), 0.0);
    s.target = Vec3(20000.0, 15000.0, 0.0);
    return s;
}

/// Order-sensitive FNV-1a over the scene's numeric content, used for snapshot metadata.
inline std::uint64_t scene_hash(const SceneConfig& scene) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](double v) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof(double));
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 1099511628211ULL;
        }
    };
    for (const auto& p : scene.tx) mix(p.x()), mix(p.y()), mix(p.z());
    for (const auto& p : scene.rx) mix(p.x()), mix(p.y()), mix(p.z());
    mix(scene.target.x()), mix(scene.target.y()), mix(scene.target.z());
    mix(scene.carrier_hz), mix(scene.path_loss_exp), mix(scene.c), mix(static_cast<double>(scene.num_scatterers));
    return h;
}

}  // namespace mimo_radar

#endif
