#ifndef MIMO_RADAR_EXPERIMENTS_HPP
#define MIMO_RADAR_EXPERIMENTS_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "mimo_radar/core.hpp"
#include "mimo_radar/detection.hpp"
#include "mimo_radar/estimation.hpp"
#include "mimo_radar/localization.hpp"
#include "mimo_radar/rng.hpp"
#include "mimo_radar/scene.hpp"
#include "mimo_radar/synth.hpp"
#include "mimo_radar/waveform.hpp"

namespace mimo_radar {

enum class Scenario { MimoExtended, MimoPoint, PhasedArray };
enum class CurveKind { MseDelay, MsePosition, Pmd, Roc, FalseAlarm };

inline std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::MimoExtended: return "mimo_extended";
        case Scenario::MimoPoint: return "mimo_point";
        case Scenario::PhasedArray: return "phased_array";
    }
    return "unknown";
}

inline std::string to_string(CurveKind k) {
    switch (k) {
        case CurveKind::MseDelay: return "mse_delay";
        case CurveKind::MsePosition: return "mse_position";
        case CurveKind::Pmd: return "pmd";
        case CurveKind::Roc: return "roc";
        case CurveKind::FalseAlarm: return "false_alarm";
    }
    return "unknown";
}

/// Receive-side discretization. The window is centered on the scene's delays unless pinned.
struct BankSpec {
    double duration = 1e-5;          // T, seconds
    double samples_per_pulse = 10.0;  // T / T_s
    std::size_t num_samples = 40;     // K
    std::optional<double> window_start;
};

inline WaveformBank make_bank(const BankSpec& spec, const SceneConfig& scene) {
    require(spec.samples_per_pulse > 0.0, "bank: samples_per_pulse must be positive");
    require(spec.num_samples >= 1, "bank: num_samples must be >= 1");
    const double ts = spec.duration / spec.samples_per_pulse;
    if (spec.window_start) return WaveformBank(scene.nt(), spec.duration, ts, spec.num_samples, *spec.window_start);
    const DelayVector tau = true_delays(scene);
    return WaveformBank::centered(scene.nt(), spec.duration, ts, spec.num_samples, tau.min(), tau.max());
}

struct ExperimentSpec {
    Scenario scenario = Scenario::MimoExtended;
    EstimatorKind estimator = EstimatorKind::MimoExtendedMap;
    std::optional<DetectorKind> detector;  // defaults to the estimator's detector
    CurveKind curve = CurveKind::Pmd;
    std::vector<double> snr_db;
    double pfa = 1e-2;
    std::vector<double> pfa_grid;
    double snr_fixed_db = 0.0;
    std::size_t trials = 1000;
    std::size_t trial_offset = 0;
    std::uint64_t seed = 1;
    bool genie_delays = true;
    SceneConfig scene;
    BankSpec bank;
    SearchSpec search;
    SynthOptions channel;
    SnrConvention snr_convention = SnrConvention::Received;
    NullModel null_model = NullModel::Exact;
    LocalizeOptions localize;
    std::size_t threads = 0;  // 0: environment variable MIMO_RADAR_THREADS, then hardware concurrency
    bool keep_raw = false;

    DetectorKind detector_kind() const { return detector.value_or(detector_for(estimator)); }

    void validate() const {
        scene.validate();
        require(trials >= 1, "spec: trials must be >= 1");
        const bool pa = is_phased_array(estimator);
        if (scenario == Scenario::PhasedArray && !pa) throw ConfigError("spec: phased_array scenario needs a pa_* estimator");
        if (scenario == Scenario::MimoPoint && estimator != EstimatorKind::MimoPoint)
            throw ConfigError("spec: mimo_point scenario needs the mimo_point estimator");
        if (scenario == Scenario::MimoExtended && estimator != EstimatorKind::MimoExtendedMap &&
            estimator != EstimatorKind::MimoExtendedAve)
            throw ConfigError("spec: mimo_extended scenario needs mimo_extended_map or mimo_extended_ave");
        if (detector_for(estimator) != detector_kind())
            throw ConfigError("spec: detector " + to_string(detector_kind()) + " does not match estimator " +
                              to_string(estimator));
        require(pfa > 0.0 && pfa <= 1.0, "spec: pfa must lie in (0, 1]");
        switch (curve) {
            case CurveKind::MseDelay:
            case CurveKind::MsePosition:
            case CurveKind::Pmd:
                require(!snr_db.empty(), "spec: snr_db grid must be non-empty");
                for (std::size_t i = 1; i < snr_db.size(); ++i)
                    require(snr_db[i] > snr_db[i - 1], "spec: snr_db must be strictly increasing");
                break;
            case CurveKind::Roc:
            case CurveKind::FalseAlarm:
                require(!pfa_grid.empty(), "spec: pfa_grid must be non-empty");
                for (std::size_t i = 0; i < pfa_grid.size(); ++i) {
                    require(pfa_grid[i] > 0.0 && pfa_grid[i] <= 1.0, "spec: pfa_grid entries must lie in (0, 1]");
                    if (i > 0) require(pfa_grid[i] > pfa_grid[i - 1], "spec: pfa_grid must be strictly increasing");
                }
                break;
        }
    }
};

struct CurvePoint {
    double x = 0.0;
    double y = 0.0;
    double std_error = 0.0;
    std::size_t n_trials = 0;
    std::size_t failures = 0;  // trials excluded from y (localization divergence or rank loss)
    std::vector<double> raw;   // per-trial values when requested
};

struct CurveResult {
    CurveKind kind = CurveKind::Pmd;
    std::vector<CurvePoint> points;
};

inline std::size_t resolve_threads(std::size_t requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("MIMO_RADAR_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<std::size_t>(v);
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Evaluates fn(i) for i in [0, n) on a bounded pool; results land by index so reductions are order-fixed.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, std::size_t threads, Fn&& fn) {
    std::vector<T> out(n);
    const std::size_t workers = std::min(resolve_threads(threads), std::max<std::size_t>(n, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                try {
                    out[i] = fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next.store(n);
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return out;
}

using ProgressFn = std::function<void(const std::string&)>;

namespace detail {

struct Setup {
    WaveformBank bank;
    DelayVector tau;
    SynthOptions synth;
    std::optional<CandidateTable> table;
    std::optional<CandidateGeometry> truth;
};

inline Setup make_setup(const ExperimentSpec& spec, bool need_table) {
    spec.validate();
    Setup s{make_bank(spec.bank, spec.scene), true_delays(spec.scene), spec.channel, std::nullopt, std::nullopt};
    s.truth = make_geometry(spec.scene, s.bank, s.tau);
    if (spec.estimator == EstimatorKind::PaPoint) s.synth.phased_array_target = PhasedArrayTarget::Point;
    if (is_phased_array(spec.estimator) && spec.estimator != EstimatorKind::PaPoint)
        s.synth.phased_array_target = PhasedArrayTarget::Extended;
    if (need_table) s.table.emplace(spec.scene, s.bank, spec.search);
    return s;
}

inline SnapshotMatrix synth_h1(const ExperimentSpec& spec, const Setup& s, double snr, std::uint64_t trial) {
    const SnrSpec snr_spec{snr, spec.snr_convention};
    const StreamKey key{spec.seed, trial};
    switch (spec.scenario) {
        case Scenario::MimoExtended: return synth_extended(spec.scene, s.bank, s.tau, snr_spec, key, s.synth).first;
        case Scenario::MimoPoint: return synth_point(spec.scene, s.bank, s.tau, snr_spec, key, s.synth).first;
        case Scenario::PhasedArray: return synth_phased_array(spec.scene, s.bank, s.tau, snr_spec, key, s.synth).first;
    }
    throw ConfigError("unknown scenario");
}

inline double energy_of(const ExperimentSpec& spec, const Setup& s, double snr) {
    return scene_energy(SnrSpec{snr, spec.snr_convention}, spec.scene, s.bank, s.tau);
}

inline double normalized_delay_error(const DelayVector& est, const DelayVector& truth) {
    const RealMatrix rel = (est.matrix() - truth.matrix()).cwiseQuotient(truth.matrix());
    return rel.squaredNorm() / static_cast<double>(rel.size());
}

// Statistic at tau and a flag telling whether the detector fires at the requested level.
struct Fired {
    double stat = 0.0;
    double pvalue = 1.0;
};

inline Fired detect_at(const ExperimentSpec& spec, const Setup& s, const SnapshotMatrix& snap, const DelayVector& tau,
                       double energy, const NullLaw* law) {
    const Correlator corr(snap, s.bank, spec.scene.nt());
    std::optional<CandidateGeometry> local;
    if (!(s.truth && s.truth->tau == tau)) local = make_geometry(spec.scene, s.bank, tau);
    const CandidateGeometry& g = local ? *local : *s.truth;
    ComplexMatrix y;
    Eigen::VectorXcd y_pa;
    correlate_into(corr, g, y, y_pa);
    Fired f;
    f.stat = statistic_from(spec.detector_kind(), g, y, y_pa, energy, s.bank.sample_period());
    if (law) f.pvalue = law->survival(f.stat);
    else f.pvalue = null_law(spec.detector_kind(), tau, spec.scene, s.bank, energy, spec.null_model).survival(f.stat);
    return f;
}

inline CurvePoint summarize(double x, const std::vector<double>& vals, bool keep_raw,
                            const std::vector<char>* valid = nullptr) {
    CurvePoint p;
    p.x = x;
    double sum = 0.0, sum_sq = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        if (valid && !(*valid)[i]) {
            ++p.failures;
            continue;
        }
        sum += vals[i];
        sum_sq += vals[i] * vals[i];
        ++n;
    }
    p.n_trials = n;
    if (n > 0) {
        p.y = sum / static_cast<double>(n);
        const double var = n > 1 ? std::max(0.0, (sum_sq - static_cast<double>(n) * p.y * p.y) / static_cast<double>(n - 1)) : 0.0;
        p.std_error = std::sqrt(var / static_cast<double>(n));
    } else {
        p.y = std::numeric_limits<double>::quiet_NaN();
    }
    if (keep_raw) p.raw = vals;
    return p;
}

}  // namespace detail

/// Average normalized delay MSE (1/(N_t N_r)) sum |(tau_hat - tau)/tau|^2 per SNR point.
inline CurveResult run_mse_curve(const ExperimentSpec& spec, const ProgressFn& progress = {}) {
    const detail::Setup s = detail::make_setup(spec, true);
    CurveResult out;
    out.kind = CurveKind::MseDelay;
    for (double db : spec.snr_db) {
        const double snr = db_to_linear(db);
        const double energy = detail::energy_of(spec, s, snr);
        const auto vals = parallel_map<double>(spec.trials, spec.threads, [&](std::size_t i) {
            const auto snap = detail::synth_h1(spec, s, snr, spec.trial_offset + i);
            const auto est = estimate(spec.estimator, snap, *s.table, energy);
            return detail::normalized_delay_error(est.tau_hat, s.tau);
        });
        out.points.push_back(detail::summarize(db, vals, spec.keep_raw));
        if (progress) progress("mse snr_db=" + std::to_string(db) + " done");
    }
    return out;
}

/// Normalized position MSE |X_hat - X_0|^2 / |X_0|^2 after estimation and Gauss-Newton from the best grid node.
inline CurveResult run_localization_curve(const ExperimentSpec& spec, const ProgressFn& progress = {}) {
    const detail::Setup s = detail::make_setup(spec, true);
    CurveResult out;
    out.kind = CurveKind::MsePosition;
    const double norm0 = spec.scene.target.squaredNorm();
    require(norm0 > 0.0, "localization curve: target at the origin makes the normalization undefined");
    for (double db : spec.snr_db) {
        const double snr = db_to_linear(db);
        const double energy = detail::energy_of(spec, s, snr);
        struct Rec {
            double v = 0.0;
            char ok = 0;
        };
        const auto recs = parallel_map<Rec>(spec.trials, spec.threads, [&](std::size_t i) {
            const auto snap = detail::synth_h1(spec, s, snr, spec.trial_offset + i);
            const auto est = estimate(spec.estimator, snap, *s.table, energy);
            const auto loc = localize(est.tau_hat, spec.scene, est.grid_location, spec.localize);
            Rec r;
            r.ok = (!loc.diverged && !loc.rank_deficient && loc.x_hat.allFinite()) ? 1 : 0;
            r.v = r.ok ? (loc.x_hat - spec.scene.target).squaredNorm() / norm0 : 0.0;
            return r;
        });
        std::vector<double> vals(recs.size());
        std::vector<char> ok(recs.size());
        for (std::size_t i = 0; i < recs.size(); ++i) vals[i] = recs[i].v, ok[i] = recs[i].ok;
        out.points.push_back(detail::summarize(db, vals, spec.keep_raw, &ok));
        if (progress) progress("localization snr_db=" + std::to_string(db) + " done");
    }
    return out;
}

/// Fraction of target-present trials declared H0, per SNR point.
inline CurveResult run_pmd_curve(const ExperimentSpec& spec, const ProgressFn& progress = {}) {
    const detail::Setup s = detail::make_setup(spec, !spec.genie_delays);
    CurveResult out;
    out.kind = CurveKind::Pmd;
    for (double db : spec.snr_db) {
        const double snr = db_to_linear(db);
        const double energy = detail::energy_of(spec, s, snr);
        std::optional<NullLaw> law;
        double theta = 0.0;
        if (spec.genie_delays) {
            law = null_law(spec.detector_kind(), s.tau, spec.scene, s.bank, energy, spec.null_model);
            theta = law->threshold(spec.pfa);
        }
        const auto vals = parallel_map<double>(spec.trials, spec.threads, [&](std::size_t i) {
            const auto snap = detail::synth_h1(spec, s, snr, spec.trial_offset + i);
            if (spec.genie_delays) {
                const auto f = detail::detect_at(spec, s, snap, s.tau, energy, &*law);
                return decide(f.stat, theta) == Hypothesis::H0 ? 1.0 : 0.0;
            }
            const auto est = estimate(spec.estimator, snap, *s.table, energy);
            const auto f = detail::detect_at(spec, s, snap, est.tau_hat, energy, nullptr);
            return f.pvalue < spec.pfa ? 0.0 : 1.0;
        });
        out.points.push_back(detail::summarize(db, vals, spec.keep_raw));
        if (progress) progress("pmd snr_db=" + std::to_string(db) + " done");
    }
    return out;
}

/// Detection probability against false-alarm level at snr_fixed_db.
inline CurveResult run_roc(const ExperimentSpec& spec, const ProgressFn& progress = {}) {
    const detail::Setup s = detail::make_setup(spec, !spec.genie_delays);
    const double snr = db_to_linear(spec.snr_fixed_db);
    const double energy = detail::energy_of(spec, s, snr);
    std::optional<NullLaw> law;
    std::vector<double> thetas;
    if (spec.genie_delays) {
        law = null_law(spec.detector_kind(), s.tau, spec.scene, s.bank, energy, spec.null_model);
        for (double p : spec.pfa_grid) thetas.push_back(law->threshold(p));
    }
    // One statistic (or p-value) per trial, compared against every level.
    const auto fired = parallel_map<detail::Fired>(spec.trials, spec.threads, [&](std::size_t i) {
        const auto snap = detail::synth_h1(spec, s, snr, spec.trial_offset + i);
        if (spec.genie_delays) return detail::detect_at(spec, s, snap, s.tau, energy, &*law);
        const auto est = estimate(spec.estimator, snap, *s.table, energy);
        return detail::detect_at(spec, s, snap, est.tau_hat, energy, nullptr);
    });
    CurveResult out;
    out.kind = CurveKind::Roc;
    for (std::size_t j = 0; j < spec.pfa_grid.size(); ++j) {
        std::vector<double> vals(fired.size());
        for (std::size_t i = 0; i < fired.size(); ++i)
            vals[i] = spec.genie_delays ? (decide(fired[i].stat, thetas[j]) == Hypothesis::H1 ? 1.0 : 0.0)
                                        : (fired[i].pvalue < spec.pfa_grid[j] ? 1.0 : 0.0);
        out.points.push_back(detail::summarize(spec.pfa_grid[j], vals, spec.keep_raw));
    }
    if (progress) progress("roc done");
    return out;
}

/// Empirical false-alarm rate on target-absent snapshots, at the true delays (genie) or end to end.
inline CurveResult run_false_alarm(const ExperimentSpec& spec, const ProgressFn& progress = {}) {
    const detail::Setup s = detail::make_setup(spec, !spec.genie_delays);
    const double snr = db_to_linear(spec.snr_fixed_db);
    const double energy = detail::energy_of(spec, s, snr);
    std::optional<NullLaw> law;
    std::vector<double> thetas;
    if (spec.genie_delays) {
        law = null_law(spec.detector_kind(), s.tau, spec.scene, s.bank, energy, spec.null_model);
        for (double p : spec.pfa_grid) thetas.push_back(law->threshold(p));
    }
    const auto fired = parallel_map<detail::Fired>(spec.trials, spec.threads, [&](std::size_t i) {
        const auto snap = synth_null(s.bank, spec.scene.nr(), StreamKey{spec.seed, spec.trial_offset + i});
        if (spec.genie_delays) return detail::detect_at(spec, s, snap, s.tau, energy, &*law);
        const auto est = estimate(spec.estimator, snap, *s.table, energy);
        return detail::detect_at(spec, s, snap, est.tau_hat, energy, nullptr);
    });
    CurveResult out;
    out.kind = CurveKind::FalseAlarm;
    for (std::size_t j = 0; j < spec.pfa_grid.size(); ++j) {
        std::vector<double> vals(fired.size());
        for (std::size_t i = 0; i < fired.size(); ++i)
            vals[i] = spec.genie_delays ? (decide(fired[i].stat, thetas[j]) == Hypothesis::H1 ? 1.0 : 0.0)
                                        : (fired[i].pvalue < spec.pfa_grid[j] ? 1.0 : 0.0);
        out.points.push_back(detail::summarize(spec.pfa_grid[j], vals, spec.keep_raw));
    }
    if (progress) progress("false-alarm calibration done");
    return out;
}

inline CurveResult run_curve(const ExperimentSpec& spec, const ProgressFn& progress = {}) {
    switch (spec.curve) {
        case CurveKind::MseDelay: return run_mse_curve(spec, progress);
        case CurveKind::MsePosition: return run_localization_curve(spec, progress);
        case CurveKind::Pmd: return run_pmd_curve(spec, progress);
        case CurveKind::Roc: return run_roc(spec, progress);
        case CurveKind::FalseAlarm: return run_false_alarm(spec, progress);
    }
    throw ConfigError("unknown curve kind");
}

struct DiversityFit {
    double slope = 0.0;
    double snr_lo_db = 0.0, snr_hi_db = 0.0;  // x-range of the points actually used
    double r_squared = 0.0;
    std::size_t points_used = 0;
};

/// Least-squares fit of log10(y) against x/10 (x in dB) over points with y in [lo, hi]; slope reported positive for decay.
inline DiversityFit fit_log_slope(const std::vector<double>& x_db, const std::vector<double>& y, double lo, double hi) {
    if (x_db.size() != y.size()) throw DimensionError("fit: x and y lengths differ");
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] >= lo && y[i] <= hi && y[i] > 0.0) {
            xs.push_back(x_db[i] / 10.0);
            ys.push_back(std::log10(y[i]));
        }
    if (xs.size() < 3) throw RuntimeFailure("fit: fewer than 3 points inside the fit range");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx <= 0.0) throw RuntimeFailure("fit: points share one x value");
    DiversityFit f;
    const double b = sxy / sxx;
    f.slope = -b;
    f.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    f.snr_lo_db = 10.0 * *std::min_element(xs.begin(), xs.end());
    f.snr_hi_db = 10.0 * *std::max_element(xs.begin(), xs.end());
    f.points_used = xs.size();
    return f;
}

/// Diversity slope of a P_md curve; the default lower bound keeps at least ~10 misses per point.
inline DiversityFit fit_diversity(const CurveResult& curve, std::optional<double> lo = std::nullopt, double hi = 0.5) {
    std::vector<double> x, y;
    std::size_t n_min = std::numeric_limits<std::size_t>::max();
    for (const auto& p : curve.points) {
        x.push_back(p.x);
        y.push_back(p.y);
        n_min = std::min(n_min, p.n_trials);
    }
    const double lower = lo.value_or(n_min > 0 ? 10.0 / static_cast<double>(n_min) : 0.0);
    return fit_log_slope(x, y, lower, hi);
}

struct Lemma6Spec {
    std::size_t m = 1;
    std::vector<double> rho_grid;
    double sigma = 0.1;
    double sigma_mu = 1.0;
    double gamma = 1.0;
    std::size_t trials = 1000000;
    std::uint64_t seed = 7;
    std::size_t min_hits = 100;
    std::size_t threads = 0;
};

/// Log-spaced rho grid over the range where Pr(sum Y^2 < gamma) is small yet still well sampled at 1e6 draws.
inline std::vector<double> lemma6_default_grid(std::size_t m, std::size_t count = 8) {
    double lo = 10.0, hi = 1000.0;
    if (m == 2) lo = 3.0, hi = 50.0;
    else if (m == 3) lo = 2.0, hi = 12.0;
    else if (m >= 4) lo = 1.5, hi = 6.0;
    std::vector<double> g(count);
    for (std::size_t i = 0; i < count; ++i)
        g[i] = lo * std::pow(hi / lo, count > 1 ? static_cast<double>(i) / static_cast<double>(count - 1) : 0.0);
    return g;
}

struct Lemma6Result {
    DiversityFit fit;
    std::vector<double> probabilities;  // one per rho
    std::vector<std::size_t> hits;
};

/// Direct simulation of Pr(sum_m Y_m^2 < gamma), Y_m ~ N(rho mu_m, sigma^2), mu_m ~ N(0, sigma_mu^2),
/// with common draws across the rho grid; slope of log Pr against log rho over points with enough hits.
inline Lemma6Result verify_lemma6(const Lemma6Spec& spec) {
    require(spec.m >= 1, "lemma6: M must be >= 1");
    require(!spec.rho_grid.empty(), "lemma6: rho grid must be non-empty");
    require(spec.trials >= 1, "lemma6: trials must be >= 1");
    require(spec.sigma >= 0.0 && spec.sigma_mu >= 0.0 && spec.gamma > 0.0, "lemma6: invalid scale parameters");
    const std::size_t nrho = spec.rho_grid.size();
    constexpr std::size_t kChunk = 4096;
    const std::size_t chunks = (spec.trials + kChunk - 1) / kChunk;
    const auto counts = parallel_map<std::vector<std::size_t>>(chunks, spec.threads, [&](std::size_t c) {
        std::vector<std::size_t> hit(nrho, 0);
        auto eng = make_stream(spec.seed, c, StreamRole::Auxiliary);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<double> mu(spec.m), e(spec.m);
        const std::size_t end = std::min(spec.trials, (c + 1) * kChunk);
        for (std::size_t t = c * kChunk; t < end; ++t) {
            for (std::size_t i = 0; i < spec.m; ++i) {
                mu[i] = spec.sigma_mu * normal(eng);
                e[i] = spec.sigma * normal(eng);
            }
            for (std::size_t r = 0; r < nrho; ++r) {
                double s = 0.0;
                for (std::size_t i = 0; i < spec.m; ++i) {
                    const double y = spec.rho_grid[r] * mu[i] + e[i];
                    s += y * y;
                }
                if (s < spec.gamma) ++hit[r];
            }
        }
        return hit;
    });
    Lemma6Result res;
    res.hits.assign(nrho, 0);
    for (const auto& h : counts)
        for (std::size_t r = 0; r < nrho; ++r) res.hits[r] += h[r];
    std::vector<double> lx, ly;
    for (std::size_t r = 0; r < nrho; ++r) {
        const double p = static_cast<double>(res.hits[r]) / static_cast<double>(spec.trials);
        res.probabilities.push_back(p);
        if (res.hits[r] >= spec.min_hits && spec.rho_grid[r] > 0.0) {
            lx.push_back(10.0 * std::log10(spec.rho_grid[r]));  // dB so that fit_log_slope sees log10(rho)
            ly.push_back(p);
        }
    }
    res.fit = fit_log_slope(lx, ly, 0.0, 1.0);
    return res;
}

struct Lemma3Check {
    double aligned = 0.0;     // |sum e^{j phi_i} g_i| at the aligned phases
    double sum_abs = 0.0;     // sum |g_i|
    double best_random = 0.0;  // best over random phase draws
};

/// Phase alignment versus random phases for N random complex terms.
inline Lemma3Check verify_lemma3(std::size_t n, std::size_t draws, std::uint64_t seed) {
    require(n >= 1, "lemma3: N must be >= 1");
    auto eng = make_stream(seed, n, StreamRole::Auxiliary);
    ComplexNormal cn(1.0);
    Eigen::VectorXcd g(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = cn(eng);
    Lemma3Check out;
    out.aligned = phase_rotated_sum(g, aligned_phases(g));
    for (Eigen::Index i = 0; i < g.size(); ++i) out.sum_abs += std::abs(g(i));
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    Eigen::VectorXd phi(g.size());
    for (std::size_t d = 0; d < draws; ++d) {
        phi(0) = 0.0;
        for (Eigen::Index i = 1; i < g.size(); ++i) phi(i) = phase(eng);
        out.best_random = std::max(out.best_random, phase_rotated_sum(g, phi));
    }
    return out;
}

}  // namespace mimo_radar

#endif
