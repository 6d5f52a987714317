#ifndef MIMO_RADAR_ESTIMATION_HPP
#define MIMO_RADAR_ESTIMATION_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "mimo_radar/core.hpp"
#include "mimo_radar/scene.hpp"
#include "mimo_radar/synth.hpp"
#include "mimo_radar/waveform.hpp"

namespace mimo_radar {

enum class EstimatorKind { MimoExtendedMap, MimoExtendedAve, MimoPoint, PaExtendedMap, PaExtendedAve, PaPoint };

inline bool is_phased_array(EstimatorKind k) {
    return k == EstimatorKind::PaExtendedMap || k == EstimatorKind::PaExtendedAve || k == EstimatorKind::PaPoint;
}
inline bool is_point(EstimatorKind k) { return k == EstimatorKind::MimoPoint || k == EstimatorKind::PaPoint; }

inline std::string to_string(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::MimoExtendedMap: return "mimo_extended_map";
        case EstimatorKind::MimoExtendedAve: return "mimo_extended_ave";
        case EstimatorKind::MimoPoint: return "mimo_point";
        case EstimatorKind::PaExtendedMap: return "pa_extended_map";
        case EstimatorKind::PaExtendedAve: return "pa_extended_ave";
        case EstimatorKind::PaPoint: return "pa_point";
    }
    return "unknown";
}

inline EstimatorKind estimator_from_string(const std::string& s) {
    for (auto k : {EstimatorKind::MimoExtendedMap, EstimatorKind::MimoExtendedAve, EstimatorKind::MimoPoint,
                   EstimatorKind::PaExtendedMap, EstimatorKind::PaExtendedAve, EstimatorKind::PaPoint})
        if (to_string(k) == s) return k;
    throw ConfigError("unknown estimator kind: " + s);
}

/// Per-path quantities at one candidate that depend only on geometry, not on the data.
struct CellGeometry {
    double tau = 0.0;
    std::size_t lo = 0, hi = 0;  // pulse support in the receive window
    Complex delay_phasor;        // completes a prefix-sum correlation at this delay
    double gain = 0.0;           // (c tau)^{-beta}
    double gain_sq = 0.0;        // (c tau)^{-2 beta}
    double loss_sq = 0.0;        // (c tau)^{2 beta}
    double tau_pow = 0.0;        // tau^{-beta}, without c
    Complex carrier;             // exp(j 2 pi f_c tau)
};

struct CandidateGeometry {
    DelayVector tau;
    std::vector<CellGeometry> cells;  // row-major (m, n)
    std::size_t nt = 0, nr = 0;
    // Phased-array pieces: common waveform at tau_11 and steering sums.
    std::size_t lo11 = 0, hi11 = 0;
    Complex phasor11;
    Eigen::VectorXcd steer, steer_point;
    double steer_energy = 0.0, steer_point_energy = 0.0;

    const CellGeometry& cell(std::size_t m, std::size_t n) const { return cells[m * nr + n]; }
};

inline CandidateGeometry make_geometry(const SceneConfig& scene, const WaveformBank& bank, const DelayVector& tau) {
    check_dims(tau, scene);
    if (scene.nt() > bank.num_waveforms()) throw DimensionError("more transmitters than waveforms in the bank");
    CandidateGeometry g;
    g.tau = tau;
    g.nt = tau.nt();
    g.nr = tau.nr();
    g.cells.resize(g.nt * g.nr);
    const double beta = scene.path_loss_exp;
    for (std::size_t m = 0; m < g.nt; ++m)
        for (std::size_t n = 0; n < g.nr; ++n) {
            CellGeometry& c = g.cells[m * g.nr + n];
            c.tau = tau(m, n);
            std::tie(c.lo, c.hi) = bank.support(c.tau);
            c.delay_phasor = bank.delay_phasor(m, c.tau);
            const double log_ct = std::log(scene.c * c.tau);
            c.gain = std::exp(-beta * log_ct);
            c.gain_sq = std::exp(-2.0 * beta * log_ct);
            c.loss_sq = std::exp(2.0 * beta * log_ct);
            c.tau_pow = std::exp(-beta * std::log(c.tau));
            c.carrier = WaveformBank::carrier_phasor(scene.carrier_hz, c.tau);
        }
    std::tie(g.lo11, g.hi11) = bank.support(tau(0, 0));
    g.phasor11 = bank.delay_phasor(0, tau(0, 0));
    g.steer = steering_sums(scene, tau, false);
    g.steer_point = steering_sums(scene, tau, true);
    g.steer_energy = g.steer.squaredNorm();
    g.steer_point_energy = g.steer_point.squaredNorm();
    return g;
}

/// Matched-filter outputs at one candidate.
///
/// y(m, n) = sum_k r_n[k] s_m^*[k; tau_mn] is the raw correlation; b = conj(y) is the detector form,
/// a = sqrt(E/N_t) (c tau)^{-beta} y the estimator form, l = E/(T_s N_t) + (c tau)^{2 beta}.
/// y_pa(n) correlates every receiver with the common waveform s_1 at tau_11.
struct MatchedFilterBank {
    CandidateGeometry geom;
    double energy = 0.0;
    ComplexMatrix y, b, a;
    RealMatrix l;
    Eigen::VectorXcd y_pa;

    const DelayVector& candidate() const { return geom.tau; }
};

namespace detail {

inline void finish_filter(MatchedFilterBank& mf, const SceneConfig& scene, const WaveformBank& bank) {
    const auto nt = static_cast<Eigen::Index>(mf.geom.nt), nr = static_cast<Eigen::Index>(mf.geom.nr);
    mf.b = mf.y.conjugate();
    mf.a.resize(nt, nr);
    mf.l.resize(nt, nr);
    const double amp = std::sqrt(mf.energy / static_cast<double>(nt));
    const double el = mf.energy / (bank.sample_period() * static_cast<double>(nt));
    for (Eigen::Index m = 0; m < nt; ++m)
        for (Eigen::Index n = 0; n < nr; ++n) {
            const auto& c = mf.geom.cell(static_cast<std::size_t>(m), static_cast<std::size_t>(n));
            mf.a(m, n) = amp * c.gain * mf.y(m, n);
            mf.l(m, n) = el + c.loss_sq;
        }
    (void)scene;
}

}  // namespace detail

/// Direct summation over samples; the reference path the fast correlator is checked against.
inline MatchedFilterBank matched_filter(const SnapshotMatrix& snap, const WaveformBank& bank, const SceneConfig& scene,
                                       const DelayVector& candidate, double energy) {
    require(std::isfinite(energy) && energy >= 0.0, "matched_filter: energy must be nonnegative");
    if (snap.num_samples() != bank.num_samples()) throw DimensionError("matched_filter: snapshot length != bank K");
    if (snap.num_receivers() != scene.nr()) throw DimensionError("matched_filter: snapshot receivers != scene N_r");
    MatchedFilterBank mf;
    mf.geom = make_geometry(scene, bank, candidate);
    mf.energy = energy;
    const auto nt = static_cast<Eigen::Index>(scene.nt()), nr = static_cast<Eigen::Index>(scene.nr());
    mf.y = ComplexMatrix::Zero(nt, nr);
    mf.y_pa = Eigen::VectorXcd::Zero(nr);
    for (Eigen::Index n = 0; n < nr; ++n) {
        for (Eigen::Index m = 0; m < nt; ++m) {
            const double t = candidate(static_cast<std::size_t>(m), static_cast<std::size_t>(n));
            Complex acc{0.0, 0.0};
            for (std::size_t k = 0; k < bank.num_samples(); ++k)
                acc += snap.r(static_cast<Eigen::Index>(k), n) * std::conj(bank.sample(static_cast<std::size_t>(m), k, t));
            mf.y(m, n) = acc;
        }
        Complex acc{0.0, 0.0};
        for (std::size_t k = 0; k < bank.num_samples(); ++k)
            acc += snap.r(static_cast<Eigen::Index>(k), n) * std::conj(bank.sample(0, k, candidate(0, 0)));
        mf.y_pa(n) = acc;
    }
    detail::finish_filter(mf, scene, bank);
    return mf;
}

/// Prefix sums of r_n[k] times the delay-free conjugate basis; any correlation y(m, n; tau) then costs O(1).
class Correlator {
public:
    Correlator(const SnapshotMatrix& snap, const WaveformBank& bank, std::size_t nt)
        : k_(bank.num_samples()), nr_(snap.num_receivers()), nt_(nt) {
        if (snap.num_samples() != k_) throw DimensionError("correlator: snapshot length != bank K");
        if (nt_ > bank.num_waveforms()) throw DimensionError("correlator: more transmitters than waveforms");
        prefix_.assign(nt_ * nr_ * (k_ + 1), Complex{0.0, 0.0});
        for (std::size_t w = 0; w < nt_; ++w)
            for (std::size_t n = 0; n < nr_; ++n) {
                Complex* p = &prefix_[(w * nr_ + n) * (k_ + 1)];
                for (std::size_t k = 0; k < k_; ++k)
                    p[k + 1] = p[k] + snap.r(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n)) * bank.basis(w, k);
            }
    }

    Complex correlate(std::size_t w, std::size_t n, std::size_t lo, std::size_t hi, const Complex& phasor) const {
        const Complex* p = &prefix_[(w * nr_ + n) * (k_ + 1)];
        return phasor * (p[hi] - p[lo]);
    }

    std::size_t num_receivers() const { return nr_; }

private:
    std::size_t k_, nr_, nt_;
    std::vector<Complex> prefix_;
};

inline void correlate_into(const Correlator& corr, const CandidateGeometry& g, ComplexMatrix& y, Eigen::VectorXcd& y_pa) {
    y.resize(static_cast<Eigen::Index>(g.nt), static_cast<Eigen::Index>(g.nr));
    y_pa.resize(static_cast<Eigen::Index>(g.nr));
    for (std::size_t m = 0; m < g.nt; ++m)
        for (std::size_t n = 0; n < g.nr; ++n) {
            const auto& c = g.cell(m, n);
            y(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)) = corr.correlate(m, n, c.lo, c.hi, c.delay_phasor);
        }
    for (std::size_t n = 0; n < g.nr; ++n)
        y_pa(static_cast<Eigen::Index>(n)) = corr.correlate(0, n, g.lo11, g.hi11, g.phasor11);
}

inline MatchedFilterBank matched_filter_fast(const Correlator& corr, const CandidateGeometry& g, const SceneConfig& scene,
                                             const WaveformBank& bank, double energy) {
    MatchedFilterBank mf;
    mf.geom = g;
    mf.energy = energy;
    correlate_into(corr, g, mf.y, mf.y_pa);
    detail::finish_filter(mf, scene, bank);
    return mf;
}

struct ObjectiveOptions {
    double pa_log_coeff = 1.0;  // weight on the log term of the averaged phased-array criterion
};

/// Criterion value from raw correlations; larger is better for every kind.
inline double objective_from(EstimatorKind kind, const CandidateGeometry& g, const ComplexMatrix& y,
                             const Eigen::VectorXcd& y_pa, double energy, double ts, const ObjectiveOptions& opts = {}) {
    const double nt = static_cast<double>(g.nt);
    switch (kind) {
        case EstimatorKind::MimoExtendedMap:
        case EstimatorKind::MimoExtendedAve: {
            // |y|^2 / (1/T_s + N_t (c tau)^{2b} / E), rewritten so that E = 0 is well defined.
            double quad = 0.0, logs = 0.0;
            for (std::size_t m = 0; m < g.nt; ++m)
                for (std::size_t n = 0; n < g.nr; ++n) {
                    const auto& c = g.cell(m, n);
                    const double p = std::norm(y(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)));
                    quad += p * energy / (energy / ts + nt * c.loss_sq);
                    if (kind == EstimatorKind::MimoExtendedAve) logs += std::log1p(energy / (ts * nt) * c.gain_sq);
                }
            return quad - logs;
        }
        case EstimatorKind::MimoPoint: {
            Complex acc{0.0, 0.0};
            double norm = 0.0;
            for (std::size_t m = 0; m < g.nt; ++m)
                for (std::size_t n = 0; n < g.nr; ++n) {
                    const auto& c = g.cell(m, n);
                    acc += c.carrier * c.gain * y(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
                    norm += c.gain_sq;
                }
            return std::norm(acc) / norm;
        }
        case EstimatorKind::PaExtendedMap:
        case EstimatorKind::PaExtendedAve: {
            const double num = std::norm(g.steer.dot(y_pa));  // dot conjugates the first argument
            double val = num * energy / (energy / ts * g.steer_energy + nt);
            if (kind == EstimatorKind::PaExtendedAve)
                val -= opts.pa_log_coeff * std::log1p(energy / (ts * nt) * g.steer_energy);
            return val;
        }
        case EstimatorKind::PaPoint: {
            const double num = std::norm(g.steer_point.dot(y_pa));
            return num / (g.steer_point_energy / ts);
        }
    }
    return 0.0;
}

inline double objective(EstimatorKind kind, const MatchedFilterBank& mf, const WaveformBank& bank,
                        const ObjectiveOptions& opts = {}) {
    return objective_from(kind, mf.geom, mf.y, mf.y_pa, mf.energy, bank.sample_period(), opts);
}

/// MAP channel estimate h = B^{-1} a with diagonal B = A + I, A = E/(T_s N_t) (c tau)^{-2b}.
inline ComplexMatrix estimate_h_map(const MatchedFilterBank& mf, const WaveformBank& bank) {
    ComplexMatrix h(mf.a.rows(), mf.a.cols());
    const double el = mf.energy / (bank.sample_period() * static_cast<double>(mf.geom.nt));
    for (Eigen::Index m = 0; m < h.rows(); ++m)
        for (Eigen::Index n = 0; n < h.cols(); ++n) {
            const double big_a = el * mf.geom.cell(static_cast<std::size_t>(m), static_cast<std::size_t>(n)).gain_sq;
            h(m, n) = mf.a(m, n) / (big_a + 1.0);
        }
    return h;
}

/// Point reflectivity estimate (multistatic); zero energy yields zero by convention.
inline Complex estimate_zeta(const MatchedFilterBank& mf, const WaveformBank& bank) {
    if (mf.energy <= 0.0) return {0.0, 0.0};
    Complex num{0.0, 0.0};
    double den = 0.0;
    for (std::size_t m = 0; m < mf.geom.nt; ++m)
        for (std::size_t n = 0; n < mf.geom.nr; ++n) {
            const auto& c = mf.geom.cell(m, n);
            num += c.gain * c.carrier * mf.y(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
            den += c.gain_sq;
        }
    return num / (den * std::sqrt(mf.energy / static_cast<double>(mf.geom.nt)) / bank.sample_period());
}

/// Point reflectivity estimate for the co-located array.
inline Complex estimate_zeta_phased_array(const MatchedFilterBank& mf, const WaveformBank& bank) {
    if (mf.energy <= 0.0 || mf.geom.steer_point_energy <= 0.0) return {0.0, 0.0};
    const Complex num = mf.geom.steer_point.dot(mf.y_pa);
    return num / (mf.geom.steer_point_energy * std::sqrt(mf.energy / static_cast<double>(mf.geom.nt)) /
                  bank.sample_period());
}

/// Common-gain MAP estimate for the co-located array with an extended target.
inline Complex estimate_h_phased_array(const MatchedFilterBank& mf, const WaveformBank& bank) {
    const double nt = static_cast<double>(mf.geom.nt);
    const Complex num = std::sqrt(mf.energy / nt) * mf.geom.steer.dot(mf.y_pa);
    return num / (mf.energy / (bank.sample_period() * nt) * mf.geom.steer_energy + 1.0);
}

/// Largest |sum_i e^{j phi_i} g_i| over free phases: rotate every term onto the direction of g_1.
inline Eigen::VectorXd aligned_phases(const Eigen::VectorXcd& g) {
    Eigen::VectorXd phi(g.size());
    const double ref = g.size() > 0 ? std::arg(g(0)) : 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i) phi(i) = ref - std::arg(g(i));
    return phi;
}

inline double phase_rotated_sum(const Eigen::VectorXcd& g, const Eigen::VectorXd& phi) {
    Complex acc{0.0, 0.0};
    for (Eigen::Index i = 0; i < g.size(); ++i) acc += unit_phasor(phi(i)) * g(i);
    return std::abs(acc);
}

/// Location grid plus local refinement in the (t, t') parametrization.
struct SearchSpec {
    std::optional<Vec3> center;  // defaults to the scene's target position
    double half_width_x = 2000.0, half_width_y = 2000.0, half_width_z = 0.0;  // meters
    std::size_t nodes_x = 41, nodes_y = 41, nodes_z = 1;
    bool refine = true;
    double min_step_fraction = 0.01;  // refinement stops below this fraction of T_s
    std::size_t max_sweeps_per_step = 64;
    bool keep_trace = false;
    ObjectiveOptions objective;
};

struct TraceEntry {
    DelayVector tau;
    double objective = 0.0;
};

struct EstimateResult {
    DelayVector tau_hat;
    double objective = 0.0;
    std::optional<ComplexMatrix> h_hat;
    std::optional<Complex> h_scalar_hat;
    std::optional<Complex> zeta_hat;
    std::size_t grid_index = 0;
    Vec3 grid_location{0.0, 0.0, 0.0};
    double grid_objective = 0.0;
    std::optional<double> oscillation_width;  // half-maximum width along a common delay shift, point kinds
    std::size_t evaluations = 0;
    std::vector<TraceEntry> trace;
};

/// Feasible candidates generated by a location grid, reusable across snapshots of one configuration.
class CandidateTable {
public:
    CandidateTable(const SceneConfig& scene, const WaveformBank& bank, const SearchSpec& spec)
        : scene_(scene), bank_(bank), spec_(spec) {
        scene_.validate();
        require(spec.nodes_x >= 1 && spec.nodes_y >= 1 && spec.nodes_z >= 1, "search: node counts must be >= 1");
        require(spec.half_width_x >= 0.0 && spec.half_width_y >= 0.0 && spec.half_width_z >= 0.0,
                "search: half widths must be >= 0");
        require(spec.min_step_fraction > 0.0, "search: min_step_fraction must be positive");
        const Vec3 center = spec.center.value_or(scene.target);
        const auto axis = [](double c, double hw, std::size_t n, std::size_t i) {
            return n == 1 ? c : c - hw + 2.0 * hw * static_cast<double>(i) / static_cast<double>(n - 1);
        };
        for (std::size_t iz = 0; iz < spec.nodes_z; ++iz)
            for (std::size_t iy = 0; iy < spec.nodes_y; ++iy)
                for (std::size_t ix = 0; ix < spec.nodes_x; ++ix) {
                    const Vec3 x(axis(center.x(), spec.half_width_x, spec.nodes_x, ix),
                                 axis(center.y(), spec.half_width_y, spec.nodes_y, iy),
                                 axis(center.z(), spec.half_width_z, spec.nodes_z, iz));
                    DelayVector tau;
                    try {
                        tau = delays_at(x, scene_);
                    } catch (const ConfigError&) {
                        continue;  // node sits on a colocated tx/rx pair
                    }
                    locations_.push_back(x);
                    node_ids_.push_back(iz * spec.nodes_x * spec.nodes_y + iy * spec.nodes_x + ix);
                    geoms_.push_back(make_geometry(scene_, bank_, tau));
                }
        if (geoms_.empty()) throw ConfigError("search: empty search region");
        cell_width_ = compute_cell_width(center);
    }

    std::size_t size() const { return geoms_.size(); }
    const CandidateGeometry& geometry(std::size_t i) const { return geoms_[i]; }
    const Vec3& location(std::size_t i) const { return locations_[i]; }
    std::size_t node_id(std::size_t i) const { return node_ids_[i]; }
    const SceneConfig& scene() const { return scene_; }
    const WaveformBank& bank() const { return bank_; }
    const SearchSpec& spec() const { return spec_; }
    /// Largest per-path delay change between neighbouring grid nodes at the center.
    double cell_delay_width() const { return cell_width_; }

private:
    double compute_cell_width(const Vec3& center) const {
        const auto step = [](double hw, std::size_t n) { return n > 1 ? 2.0 * hw / static_cast<double>(n - 1) : 0.0; };
        const Vec3 d(step(spec_.half_width_x, spec_.nodes_x), step(spec_.half_width_y, spec_.nodes_y),
                     step(spec_.half_width_z, spec_.nodes_z));
        const DelayVector t0 = delays_at(center, scene_);
        double width = 0.0;
        for (int axis = 0; axis < 3; ++axis) {
            if (d(axis) == 0.0) continue;
            Vec3 x = center;
            x(axis) += d(axis);
            const DelayVector t1 = delays_at(x, scene_);
            width = std::max(width, (t1.matrix() - t0.matrix()).cwiseAbs().maxCoeff());
        }
        return width > 0.0 ? width : bank_.sample_period();
    }

    SceneConfig scene_;
    WaveformBank bank_;
    SearchSpec spec_;
    std::vector<Vec3> locations_;
    std::vector<std::size_t> node_ids_;
    std::vector<CandidateGeometry> geoms_;
    double cell_width_ = 0.0;
};

namespace detail {

struct Evaluator {
    EstimatorKind kind;
    const Correlator& corr;
    const SceneConfig& scene;
    const WaveformBank& bank;
    double energy;
    ObjectiveOptions opts;
    std::size_t count = 0;
    ComplexMatrix y;
    Eigen::VectorXcd y_pa;

    double operator()(const CandidateGeometry& g) {
        ++count;
        correlate_into(corr, g, y, y_pa);
        return objective_from(kind, g, y, y_pa, energy, bank.sample_period(), opts);
    }
};

inline DelayVector split_tau(const Eigen::VectorXd& t, const Eigen::VectorXd& tp) { return DelayVector::from_split(t, tp); }

inline bool all_positive(const Eigen::VectorXd& t, const Eigen::VectorXd& tp) {
    for (Eigen::Index m = 0; m < t.size(); ++m)
        for (Eigen::Index n = 0; n < tp.size(); ++n)
            if (!(t(m) + tp(n) > 0.0)) return false;
    return true;
}

}  // namespace detail

/// Grid search over the table, then coordinate ascent on (t, t') with step halving.
inline EstimateResult estimate(EstimatorKind kind, const SnapshotMatrix& snap, const CandidateTable& table, double energy) {
    const SceneConfig& scene = table.scene();
    const WaveformBank& bank = table.bank();
    const SearchSpec& spec = table.spec();
    require(std::isfinite(energy) && energy >= 0.0, "estimate: energy must be nonnegative");
    if (snap.num_receivers() != scene.nr()) throw DimensionError("estimate: snapshot receivers != scene N_r");
    const Correlator corr(snap, bank, scene.nt());
    detail::Evaluator eval{kind, corr, scene, bank, energy, spec.objective, 0, {}, {}};

    EstimateResult res;
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < table.size(); ++i) {
        const double v = eval(table.geometry(i));
        if (spec.keep_trace) res.trace.push_back({table.geometry(i).tau, v});
        if (v > best) {
            best = v;
            best_i = i;
        }
    }
    if (!std::isfinite(best)) throw RuntimeFailure("estimate: objective is not finite on the grid");
    res.grid_index = best_i;
    res.grid_location = table.location(best_i);
    res.grid_objective = best;

    const DelayVector& start = table.geometry(best_i).tau;
    Eigen::VectorXd t = start.split()->t, tp = start.split()->t_prime;
    CandidateGeometry best_geom = table.geometry(best_i);

    if (spec.refine) {
        const double floor = spec.min_step_fraction * bank.sample_period();
        const std::size_t nt = scene.nt(), nr = scene.nr();
        // Move set: each t_m, each t'_n, and a common shift of every delay.
        const std::size_t moves = nt + nr + 1;
        for (double step = table.cell_delay_width(); step >= floor; step *= 0.5) {
            for (std::size_t sweep = 0; sweep < spec.max_sweeps_per_step; ++sweep) {
                bool improved = false;
                for (std::size_t mv = 0; mv < moves; ++mv)
                    for (double sign : {-1.0, 1.0}) {
                        Eigen::VectorXd t2 = t, tp2 = tp;
                        if (mv < nt) t2(static_cast<Eigen::Index>(mv)) += sign * step;
                        else if (mv < nt + nr) tp2(static_cast<Eigen::Index>(mv - nt)) += sign * step;
                        else t2.array() += sign * step;
                        if (!detail::all_positive(t2, tp2)) continue;
                        const DelayVector cand = detail::split_tau(t2, tp2);
                        if (!is_feasible(cand, scene)) continue;
                        CandidateGeometry g = make_geometry(scene, bank, cand);
                        const double v = eval(g);
                        if (spec.keep_trace) res.trace.push_back({cand, v});
                        if (v > best) {
                            best = v;
                            t = std::move(t2);
                            tp = std::move(tp2);
                            best_geom = std::move(g);
                            improved = true;
                        }
                    }
                if (!improved) break;
            }
        }
    }

    res.tau_hat = best_geom.tau;
    res.objective = best;
    const MatchedFilterBank mf = matched_filter_fast(corr, best_geom, scene, bank, energy);
    switch (kind) {
        case EstimatorKind::MimoExtendedMap:
        case EstimatorKind::MimoExtendedAve:
            res.h_hat = estimate_h_map(mf, bank);
            break;
        case EstimatorKind::MimoPoint:
            res.zeta_hat = estimate_zeta(mf, bank);
            break;
        case EstimatorKind::PaExtendedMap:
        case EstimatorKind::PaExtendedAve:
            res.h_scalar_hat = estimate_h_phased_array(mf, bank);
            break;
        case EstimatorKind::PaPoint:
            res.zeta_hat = estimate_zeta_phased_array(mf, bank);
            break;
    }

    if (is_point(kind) && best > 0.0) {
        // Walk a common delay shift away from the optimum until the criterion halves on each side.
        const double dstep = 0.01 / scene.carrier_hz;
        const double reach = 2.0 / scene.carrier_hz;
        double width = 0.0;
        for (double sign : {-1.0, 1.0}) {
            double d = dstep;
            for (; d <= reach; d += dstep) {
                Eigen::VectorXd t2 = t;
                t2.array() += sign * d;
                if (!detail::all_positive(t2, tp)) break;
                if (eval(make_geometry(scene, bank, detail::split_tau(t2, tp))) < 0.5 * best) break;
            }
            width += std::min(d, reach);
        }
        res.oscillation_width = width;
    }
    res.evaluations = eval.count;
    return res;
}

/// Convenience overload that builds the candidate table on the fly.
inline EstimateResult estimate(EstimatorKind kind, const SnapshotMatrix& snap, const SceneConfig& scene,
                               const WaveformBank& bank, double energy, const SearchSpec& spec) {
    const CandidateTable table(scene, bank, spec);
    return estimate(kind, snap, table, energy);
}

}  // namespace mimo_radar

#endif
