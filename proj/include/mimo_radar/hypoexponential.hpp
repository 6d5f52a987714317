#ifndef MIMO_RADAR_HYPOEXPONENTIAL_HPP
#define MIMO_RADAR_HYPOEXPONENTIAL_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "mimo_radar/core.hpp"

namespace mimo_radar {

/// Law of a sum of independent exponential variables with the given rates.
///
/// Evaluation picks one of three routes. Well-separated rates use the partial-fraction closed form.
/// Clustered rates, where that form cancels catastrophically, use uniformization of the
/// underlying phase-type chain, a series of nonnegative terms. Very long horizons fall back to the
/// matrix exponential of the bidiagonal generator.
class Hypoexponential {
public:
    enum class Method { Single, PartialFractions, Uniformization };

    explicit Hypoexponential(std::vector<double> rates) : rates_(std::move(rates)) {
        require(!rates_.empty(), "hypoexponential: at least one rate required");
        for (double r : rates_) require(std::isfinite(r) && r > 0.0, "hypoexponential: rates must be positive");
        std::sort(rates_.begin(), rates_.end());
        max_rate_ = rates_.back();
        choose_method();
    }

    const std::vector<double>& rates() const { return rates_; }
    Method method() const { return method_; }

    double mean() const {
        double m = 0.0;
        for (double r : rates_) m += 1.0 / r;
        return m;
    }

    double cdf(double x) const {
        if (!(x > 0.0)) return 0.0;
        if (std::isinf(x)) return 1.0;
        switch (method_) {
            case Method::Single:
                return -std::expm1(-rates_[0] * x);
            case Method::PartialFractions:
                return std::clamp(1.0 - pf_survival(x), 0.0, 1.0);
            default:
                return uniformized(x).second;
        }
    }

    double survival(double x) const {
        if (!(x > 0.0)) return 1.0;
        if (std::isinf(x)) return 0.0;
        switch (method_) {
            case Method::Single:
                return std::exp(-rates_[0] * x);
            case Method::PartialFractions:
                return std::clamp(pf_survival(x), 0.0, 1.0);
            default:
                return uniformized(x).first;
        }
    }

    /// Smallest x with cdf(x) = p, by bracketed bisection to 1e-12 relative width.
    double quantile(double p) const {
        require(p > 0.0 && p < 1.0, "hypoexponential: quantile level must lie in (0, 1)");
        if (method_ == Method::Single) return -std::log1p(-p) / rates_[0];
        // Far tail: match the survival function instead of the cdf to keep relative precision.
        const bool upper = p > 0.5;
        const double target = upper ? 1.0 - p : p;
        const auto below = [&](double x) { return upper ? survival(x) > target : cdf(x) < target; };
        double lo = 0.0, hi = mean();
        while (below(hi)) {
            lo = hi;
            hi *= 2.0;
            if (!std::isfinite(hi)) throw RuntimeFailure("hypoexponential: quantile bracket overflow");
        }
        for (int it = 0; it < 400 && hi - lo > 1e-12 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (below(mid)) lo = mid;
            else hi = mid;
        }
        return hi;
    }

    /// Threshold exceeded with probability pfa.
    double upper_quantile(double pfa) const {
        require(pfa > 0.0 && pfa <= 1.0, "pfa must lie in (0, 1]");
        if (pfa == 1.0) return 0.0;
        return quantile(1.0 - pfa);
    }

private:
    void choose_method() {
        if (rates_.size() == 1) {
            method_ = Method::Single;
            return;
        }
        double min_gap = std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i < rates_.size(); ++i)
            min_gap = std::min(min_gap, (rates_[i] - rates_[i - 1]) / rates_[i]);
        if (min_gap >= 1e-6) {
            coeffs_.resize(rates_.size());
            double total = 0.0;
            for (std::size_t i = 0; i < rates_.size(); ++i) {
                double c = 1.0;
                for (std::size_t j = 0; j < rates_.size(); ++j)
                    if (j != i) c *= rates_[j] / (rates_[j] - rates_[i]);
                coeffs_[i] = c;
                total += std::abs(c);
            }
            if (std::isfinite(total) && total < 1e4) {
                method_ = Method::PartialFractions;
                return;
            }
        }
        method_ = Method::Uniformization;
    }

    double pf_survival(double x) const {
        double s = 0.0;
        for (std::size_t i = 0; i < rates_.size(); ++i) s += coeffs_[i] * std::exp(-rates_[i] * x);
        return s;
    }

    // Returns (survival, cdf). Chain: stage i leaves at rate_i to stage i+1, last stage absorbs.
    std::pair<double, double> uniformized(double x) const {
        const std::size_t n = rates_.size();
        const double lambda_t = max_rate_ * x;
        if (lambda_t > 2e5) return expm_route(x);
        // P = I + Q / max_rate restricted to transient stages.
        std::vector<double> stay(n), move(n);
        for (std::size_t i = 0; i < n; ++i) {
            move[i] = rates_[i] / max_rate_;
            stay[i] = 1.0 - move[i];
        }
        std::vector<double> v(n, 1.0), u(n, 0.0), nv(n), nu(n);  // v: still transient, u: absorbed
        const double log_lt = std::log(lambda_t);
        const auto k_max = static_cast<std::size_t>(lambda_t + 12.0 * std::sqrt(lambda_t) + 60.0);
        double surv = 0.0, absorbed = 0.0;
        for (std::size_t k = 0; k <= k_max; ++k) {
            const double w = std::exp(-lambda_t + static_cast<double>(k) * log_lt - std::lgamma(static_cast<double>(k) + 1.0));
            surv += w * v[0];
            absorbed += w * u[0];
            for (std::size_t i = 0; i < n; ++i) {
                const bool last = i + 1 == n;
                nv[i] = stay[i] * v[i] + (last ? 0.0 : move[i] * v[i + 1]);
                nu[i] = stay[i] * u[i] + (last ? move[i] : move[i] * u[i + 1]);
            }
            std::swap(v, nv);
            std::swap(u, nu);
        }
        return {std::clamp(surv, 0.0, 1.0), std::clamp(absorbed, 0.0, 1.0)};
    }

    std::pair<double, double> expm_route(double x) const {
        const auto n = static_cast<Eigen::Index>(rates_.size());
        Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            q(i, i) = -rates_[static_cast<std::size_t>(i)] * x;
            if (i + 1 < n) q(i, i + 1) = rates_[static_cast<std::size_t>(i)] * x;
        }
        const Eigen::MatrixXd e = q.exp();
        const double surv = std::clamp(e.row(0).sum(), 0.0, 1.0);
        return {surv, 1.0 - surv};
    }

    std::vector<double> rates_;
    std::vector<double> coeffs_;
    double max_rate_ = 0.0;
    Method method_ = Method::Single;
};

}  // namespace mimo_radar

#endif
