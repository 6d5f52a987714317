#ifndef MIMO_RADAR_DETECTION_HPP
#define MIMO_RADAR_DETECTION_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "mimo_radar/core.hpp"
#include "mimo_radar/estimation.hpp"
#include "mimo_radar/hypoexponential.hpp"
#include "mimo_radar/scene.hpp"
#include "mimo_radar/waveform.hpp"

namespace mimo_radar {

enum class DetectorKind { MimoExtended, MimoPoint, PaExtended, PaPoint };

inline std::string to_string(DetectorKind k) {
    switch (k) {
        case DetectorKind::MimoExtended: return "mimo_extended";
        case DetectorKind::MimoPoint: return "mimo_point";
        case DetectorKind::PaExtended: return "pa_extended";
        case DetectorKind::PaPoint: return "pa_point";
    }
    return "unknown";
}

inline DetectorKind detector_from_string(const std::string& s) {
    for (auto k : {DetectorKind::MimoExtended, DetectorKind::MimoPoint, DetectorKind::PaExtended, DetectorKind::PaPoint})
        if (to_string(k) == s) return k;
    throw ConfigError("unknown detector kind: " + s);
}

/// Detector that consumes a given estimator's output; both extended-target estimators share one detector.
inline DetectorKind detector_for(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::MimoExtendedMap:
        case EstimatorKind::MimoExtendedAve: return DetectorKind::MimoExtended;
        case EstimatorKind::MimoPoint: return DetectorKind::MimoPoint;
        case EstimatorKind::PaExtendedMap:
        case EstimatorKind::PaExtendedAve: return DetectorKind::PaExtended;
        case EstimatorKind::PaPoint: return DetectorKind::PaPoint;
    }
    return DetectorKind::MimoExtended;
}

/// Which null law backs the threshold.
/// Orthogonal: the closed forms that assume sum_k s_m s_i^* = delta_mi / T_s.
/// Exact: the same laws with the bank's actual gram values at the candidate delays.
enum class NullModel { Exact, Orthogonal };

/// Statistic from raw correlations y (and y_pa for the co-located array) at candidate geometry g.
inline double statistic_from(DetectorKind kind, const CandidateGeometry& g, const ComplexMatrix& y,
                             const Eigen::VectorXcd& y_pa, double energy, double ts) {
    switch (kind) {
        case DetectorKind::MimoExtended: {
            const double el = energy / (ts * static_cast<double>(g.nt));
            double s = 0.0;
            for (std::size_t m = 0; m < g.nt; ++m)
                for (std::size_t n = 0; n < g.nr; ++n)
                    s += std::norm(y(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n))) /
                         (el + g.cell(m, n).loss_sq);
            return s;
        }
        case DetectorKind::MimoPoint: {
            Complex acc{0.0, 0.0};
            for (std::size_t m = 0; m < g.nt; ++m)
                for (std::size_t n = 0; n < g.nr; ++n) {
                    const auto& c = g.cell(m, n);
                    acc += c.carrier * c.tau_pow * y(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
                }
            return std::norm(acc);
        }
        case DetectorKind::PaExtended:
            return std::norm(g.steer.dot(y_pa));
        case DetectorKind::PaPoint:
            return std::norm(g.steer_point.dot(y_pa));
    }
    return 0.0;
}

/// Detector statistic at the filter bank's candidate; the extended MIMO form uses |b|^2 / l.
inline double statistic(DetectorKind kind, const MatchedFilterBank& mf) {
    if (kind == DetectorKind::MimoExtended) {
        double s = 0.0;
        for (Eigen::Index m = 0; m < mf.b.rows(); ++m)
            for (Eigen::Index n = 0; n < mf.b.cols(); ++n) s += std::norm(mf.b(m, n)) / mf.l(m, n);
        return s;
    }
    return statistic_from(kind, mf.geom, mf.y, mf.y_pa, mf.energy, 1.0);
}

/// Null distribution of a detector statistic at a fixed candidate: either a hypoexponential
/// (sum of independent exponentials), or degenerate at zero when no signal subspace is observed.
class NullLaw {
public:
    NullLaw() = default;
    explicit NullLaw(std::vector<double> means) {
        std::vector<double> rates;
        double top = 0.0;
        for (double m : means) top = std::max(top, m);
        for (double m : means)
            if (m > 1e-12 * top && m > 0.0) rates.push_back(1.0 / m);
        if (!rates.empty()) law_.emplace(std::move(rates));
    }

    bool degenerate() const { return !law_.has_value(); }
    const Hypoexponential& law() const { return *law_; }
    double mean() const { return law_ ? law_->mean() : 0.0; }
    double survival(double x) const { return law_ ? law_->survival(x) : (x < 0.0 ? 1.0 : 0.0); }
    double cdf(double x) const { return law_ ? law_->cdf(x) : (x < 0.0 ? 0.0 : 1.0); }

    double threshold(double pfa) const {
        require(pfa > 0.0 && pfa <= 1.0, "threshold: pfa must lie in (0, 1]");
        return law_ ? law_->upper_quantile(pfa) : 0.0;
    }

private:
    std::optional<Hypoexponential> law_;
};

namespace detail {

// Unit-noise variance of sum_n sum_m w_{mn} y_{mn}, with y_{mn} = sum_k r_n[k] conj(s_m[k; tau_mn]).
inline double combined_variance(const WaveformBank& bank, const CandidateGeometry& g,
                                const std::function<Complex(std::size_t, std::size_t)>& weight) {
    double var = 0.0;
    const std::size_t k_len = bank.num_samples();
    std::vector<Complex> v(k_len);
    for (std::size_t n = 0; n < g.nr; ++n) {
        std::fill(v.begin(), v.end(), Complex{0.0, 0.0});
        for (std::size_t m = 0; m < g.nt; ++m) {
            const Complex w = weight(m, n);
            const auto& c = g.cell(m, n);
            for (std::size_t k = c.lo; k < c.hi; ++k) v[k] += w * std::conj(bank.sample(m, k, c.tau));
        }
        for (const auto& x : v) var += std::norm(x);
    }
    return var;
}

}  // namespace detail

/// Null law of the statistic at candidate tau for energy E (E enters only the extended MIMO weights).
inline NullLaw null_law(DetectorKind kind, const DelayVector& tau, const SceneConfig& scene, const WaveformBank& bank,
                        double energy, NullModel model = NullModel::Exact) {
    require(std::isfinite(energy) && energy >= 0.0, "null_law: energy must be nonnegative");
    const CandidateGeometry g = make_geometry(scene, bank, tau);
    const double ts = bank.sample_period();
    const double nt = static_cast<double>(g.nt);
    switch (kind) {
        case DetectorKind::MimoExtended: {
            std::vector<double> means;
            const double el = energy / (ts * nt);
            if (model == NullModel::Orthogonal) {
                for (const auto& c : g.cells) means.push_back(1.0 / (ts * (el + c.loss_sq)));
                return NullLaw(std::move(means));
            }
            // Per receiver, b_n has covariance G_n; the weighted quadratic form has exponential
            // components with means equal to the eigenvalues of W^{1/2} G_n W^{1/2}.
            for (std::size_t n = 0; n < g.nr; ++n) {
                ComplexMatrix m(static_cast<Eigen::Index>(g.nt), static_cast<Eigen::Index>(g.nt));
                for (std::size_t i = 0; i < g.nt; ++i)
                    for (std::size_t j = 0; j < g.nt; ++j) {
                        const double wi = 1.0 / std::sqrt(el + g.cell(i, n).loss_sq);
                        const double wj = 1.0 / std::sqrt(el + g.cell(j, n).loss_sq);
                        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                            wi * wj * bank.gram(g.cell(i, n).tau, g.cell(j, n).tau, i, j);
                    }
                Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m, Eigen::EigenvaluesOnly);
                for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) means.push_back(es.eigenvalues()(i));
            }
            return NullLaw(std::move(means));
        }
        case DetectorKind::MimoPoint: {
            if (model == NullModel::Orthogonal) {
                double s = 0.0;
                for (const auto& c : g.cells) s += c.tau_pow * c.tau_pow;
                return NullLaw({s / ts});
            }
            return NullLaw({detail::combined_variance(bank, g, [&g](std::size_t m, std::size_t n) {
                const auto& c = g.cell(m, n);
                return c.carrier * c.tau_pow;
            })});
        }
        case DetectorKind::PaExtended:
        case DetectorKind::PaPoint: {
            const double steer = kind == DetectorKind::PaExtended ? g.steer_energy : g.steer_point_energy;
            if (model == NullModel::Orthogonal) return NullLaw({steer / ts});
            double e = 0.0;
            for (std::size_t k = g.lo11; k < g.hi11; ++k) e += std::norm(bank.sample(0, k, g.tau(0, 0)));
            return NullLaw({e * steer});
        }
    }
    return NullLaw();
}

inline double threshold(DetectorKind kind, const DelayVector& tau_hat, const SceneConfig& scene,
                        const WaveformBank& bank, double energy, double pfa, NullModel model = NullModel::Exact) {
    require(pfa > 0.0 && pfa <= 1.0, "threshold: pfa must lie in (0, 1]");
    return null_law(kind, tau_hat, scene, bank, energy, model).threshold(pfa);
}

enum class Hypothesis { H0, H1 };

struct DetectionOutcome {
    double statistic = 0.0;
    double threshold = 0.0;
    Hypothesis decision = Hypothesis::H0;
    double pfa_target = 0.0;
    DetectorKind kind = DetectorKind::MimoExtended;
};

inline Hypothesis decide(double stat, double theta) { return stat > theta ? Hypothesis::H1 : Hypothesis::H0; }

/// Statistic and threshold at the estimate's tau, compared with a strict inequality.
inline DetectionOutcome detect(DetectorKind kind, EstimatorKind produced_by, const SnapshotMatrix& snap,
                               const EstimateResult& est, const SceneConfig& scene, const WaveformBank& bank,
                               double energy, double pfa, NullModel model = NullModel::Exact) {
    if (detector_for(produced_by) != kind)
        throw ConfigError("detect: estimator " + to_string(produced_by) + " does not feed detector " + to_string(kind));
    const MatchedFilterBank mf = matched_filter(snap, bank, scene, est.tau_hat, energy);
    DetectionOutcome out;
    out.kind = kind;
    out.pfa_target = pfa;
    out.statistic = statistic(kind, mf);
    out.threshold = threshold(kind, est.tau_hat, scene, bank, energy, pfa, model);
    out.decision = decide(out.statistic, out.threshold);
    return out;
}

}  // namespace mimo_radar

#endif
