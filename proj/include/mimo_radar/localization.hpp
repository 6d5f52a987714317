#ifndef MIMO_RADAR_LOCALIZATION_HPP
#define MIMO_RADAR_LOCALIZATION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "mimo_radar/core.hpp"
#include "mimo_radar/scene.hpp"

namespace mimo_radar {

namespace detail {
inline void check_not_on_antenna(const Vec3& x, const SceneConfig& scene) {
    for (const auto& p : scene.tx)
        if ((x - p).norm() == 0.0) throw ConfigError("localization: point coincides with a transmit antenna");
    for (const auto& p : scene.rx)
        if ((x - p).norm() == 0.0) throw ConfigError("localization: point coincides with a receive antenna");
}
}  // namespace detail

/// Bistatic delays of X flattened row-major over (m, n).
inline Eigen::VectorXd phi(const Vec3& x, const SceneConfig& scene) {
    detail::check_not_on_antenna(x, scene);
    return delays_at(x, scene).flatten();
}

/// d phi / d X, one row per (m, n) in seconds per meter.
inline Eigen::MatrixXd jacobian(const Vec3& x, const SceneConfig& scene) {
    detail::check_not_on_antenna(x, scene);
    Eigen::MatrixXd h(static_cast<Eigen::Index>(scene.legs()), 3);
    Eigen::Index row = 0;
    for (const auto& t : scene.tx)
        for (const auto& r : scene.rx)
            h.row(row++) = (((x - t).normalized() + (x - r).normalized()) / scene.c).transpose();
    return h;
}

struct LocalizationResult {
    Vec3 x_hat{0.0, 0.0, 0.0};
    std::size_t iterations = 0;
    double residual_norm = 0.0;  // seconds
    bool converged = false;
    bool diverged = false;
    bool rank_deficient = false;
    Eigen::Index rank = 0;
};

struct LocalizeOptions {
    std::size_t max_iter = 50;
    double tol_meters = 1e-3;
};

/// Linearized least squares: solve H X_{i+1} = tau_hat - (phi(X_i) - H X_i) in meters via column-pivoted QR.
///
/// Coordinates whose Jacobian column vanishes (for example height when every antenna and the
/// iterate share one plane) are held fixed; remaining rank loss is flagged, not thrown.
inline LocalizationResult localize(const DelayVector& tau_hat, const SceneConfig& scene, const Vec3& initial_guess,
                                   const LocalizeOptions& opts = {}) {
    check_dims(tau_hat, scene);
    require(opts.max_iter >= 1, "localize: max_iter must be >= 1");
    require(opts.tol_meters > 0.0, "localize: tolerance must be positive");
    const Eigen::VectorXd target = tau_hat.flatten() * scene.c;
    LocalizationResult res;
    Vec3 x = initial_guess;
    double prev_step = std::numeric_limits<double>::infinity();
    int growth = 0;
    for (std::size_t it = 0; it < opts.max_iter; ++it) {
        const Eigen::MatrixXd h = jacobian(x, scene) * scene.c;
        const Eigen::VectorXd y = target - (phi(x, scene) * scene.c - h * x);
        std::vector<Eigen::Index> cols;
        for (Eigen::Index j = 0; j < 3; ++j)
            if (h.col(j).norm() > 1e-12 * h.norm()) cols.push_back(j);
        Eigen::MatrixXd hr(h.rows(), static_cast<Eigen::Index>(cols.size()));
        Eigen::VectorXd rhs = y;
        for (std::size_t j = 0; j < cols.size(); ++j) hr.col(static_cast<Eigen::Index>(j)) = h.col(cols[j]);
        for (Eigen::Index j = 0; j < 3; ++j)
            if (std::find(cols.begin(), cols.end(), j) == cols.end()) rhs -= h.col(j) * x(j);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(hr);
        qr.setThreshold(1e-10);
        res.rank = qr.rank();
        if (cols.empty() || qr.rank() < hr.cols()) {
            res.rank_deficient = true;
            res.x_hat = x;
            res.iterations = it;
            res.residual_norm = (tau_hat.flatten() - phi(x, scene)).norm();
            return res;
        }
        const Eigen::VectorXd sol = qr.solve(rhs);
        Vec3 next = x;
        for (std::size_t j = 0; j < cols.size(); ++j) next(cols[j]) = sol(static_cast<Eigen::Index>(j));
        const double step = (next - x).norm();
        x = next;
        res.iterations = it + 1;
        if (!x.allFinite()) {
            res.diverged = true;
            break;
        }
        if (step < opts.tol_meters) {
            res.converged = true;
            break;
        }
        growth = step > prev_step ? growth + 1 : 0;
        prev_step = step;
        if (growth >= 3) {
            res.diverged = true;
            break;
        }
    }
    res.x_hat = x;
    bool on_antenna = false;
    for (const auto& p : scene.tx) on_antenna = on_antenna || (x - p).norm() == 0.0;
    for (const auto& p : scene.rx) on_antenna = on_antenna || (x - p).norm() == 0.0;
    res.residual_norm = (x.allFinite() && !on_antenna) ? (tau_hat.flatten() - phi(x, scene)).norm()
                                                       : std::numeric_limits<double>::infinity();
    return res;
}

}  // namespace mimo_radar

#endif
