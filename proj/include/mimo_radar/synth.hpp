#ifndef MIMO_RADAR_SYNTH_HPP
#define MIMO_RADAR_SYNTH_HPP

#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "mimo_radar/core.hpp"
#include "mimo_radar/rng.hpp"
#include "mimo_radar/scene.hpp"
#include "mimo_radar/waveform.hpp"

namespace mimo_radar {

enum class SnrConvention { Received, Transmit };

/// Linear SNR plus the convention that maps it to the transmitted energy E.
struct SnrSpec {
    double snr = 1.0;
    SnrConvention convention = SnrConvention::Received;
};

/// Received convention: E (c tau_ref)^{-2 beta} / (N_t T_s) = snr. Transmit convention: E / T = snr.
inline double energy_for(const SnrSpec& spec, const SceneConfig& scene, const WaveformBank& bank,
                         double reference_delay) {
    require(std::isfinite(spec.snr) && spec.snr > 0.0, "snr must be positive");
    if (spec.convention == SnrConvention::Transmit) return spec.snr * bank.duration();
    require(reference_delay > 0.0, "reference delay must be positive");
    return spec.snr * static_cast<double>(scene.nt()) * bank.sample_period() *
           safe_pow(scene.c * reference_delay, 2.0 * scene.path_loss_exp);
}

enum class ChannelKind { Extended, Point, PhasedArray };
enum class ExtendedLaw { Direct, Scatterers };
enum class ZetaLaw { UnitRandomPhase, Fixed, Rayleigh };
enum class PhasedArrayTarget { Extended, Point };

struct ChannelRealization {
    ChannelKind kind = ChannelKind::Extended;
    ComplexMatrix h;            // per-path gains h_{m,n} (derived for point and phased-array models)
    Complex zeta{0.0, 0.0};     // point reflectivity
    Complex h_scalar{0.0, 0.0};  // common phased-array gain
    std::optional<Eigen::VectorXcd> scatterer_gains;
};

struct SnapshotMeta {
    std::uint64_t scene_hash = 0;
    double snr = 0.0;
    double energy = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t trial = 0;
    bool target_present = false;
    std::optional<DelayVector> true_delays;
};

/// Received samples r(k, n) = r_n[k], K rows by N_r columns.
struct SnapshotMatrix {
    ComplexMatrix r;
    SnapshotMeta meta;

    std::size_t num_samples() const { return static_cast<std::size_t>(r.rows()); }
    std::size_t num_receivers() const { return static_cast<std::size_t>(r.cols()); }
};

struct StreamKey {
    std::uint64_t seed = 0;
    std::uint64_t trial = 0;
};

struct SynthOptions {
    bool add_noise = true;
    ExtendedLaw extended_law = ExtendedLaw::Direct;
    ZetaLaw zeta_law = ZetaLaw::UnitRandomPhase;
    PhasedArrayTarget phased_array_target = PhasedArrayTarget::Extended;
    double scatterer_extent_m = 50.0;  // side of the cube scatterers are scattered in
    std::optional<ComplexMatrix> h_override;
    std::optional<Complex> zeta_override;
    std::optional<Complex> h_scalar_override;
};

/// Phased-array steering sums. Extended: S_n = sum_m (c tau_mn)^{-b} s_m e^{j2pi f_c (tau_11 - tau_mn)};
/// point: the same with (tau_11 - 2 tau_mn). Waveform weights are all one.
inline Eigen::VectorXcd steering_sums(const SceneConfig& scene, const DelayVector& tau, bool point) {
    Eigen::VectorXcd s = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(tau.nr()));
    const double t11 = tau(0, 0);
    for (std::size_t n = 0; n < tau.nr(); ++n)
        for (std::size_t m = 0; m < tau.nt(); ++m) {
            const double gain = safe_pow(scene.c * tau(m, n), -scene.path_loss_exp);
            const Complex rot = point ? WaveformBank::carrier_phasor(scene.carrier_hz, t11 - 2.0 * tau(m, n))
                                      : WaveformBank::carrier_phasor(scene.carrier_hz, t11 - tau(m, n));
            s(static_cast<Eigen::Index>(n)) += gain * rot;
        }
    return s;
}

namespace detail {

inline void check_synth_inputs(const SceneConfig& scene, const WaveformBank& bank, const DelayVector& tau,
                               const SnrSpec& snr) {
    scene.validate();
    check_dims(tau, scene);
    if (scene.nt() > bank.num_waveforms()) throw DimensionError("synth: more transmitters than waveforms");
    require(std::isfinite(snr.snr) && snr.snr > 0.0, "synth: snr must be positive");
    require(is_feasible(tau, scene), "synth: delay vector is infeasible for the scene");
}

inline SnapshotMatrix blank_snapshot(const WaveformBank& bank, std::size_t nr, const StreamKey& key, bool add_noise,
                                     StreamRole role) {
    SnapshotMatrix snap;
    snap.r = ComplexMatrix::Zero(static_cast<Eigen::Index>(bank.num_samples()), static_cast<Eigen::Index>(nr));
    if (add_noise) {
        auto eng = make_stream(key.seed, key.trial, role);
        ComplexNormal cn(1.0);
        for (Eigen::Index n = 0; n < snap.r.cols(); ++n)
            for (Eigen::Index k = 0; k < snap.r.rows(); ++k) snap.r(k, n) = cn(eng);
    }
    snap.meta.seed = key.seed;
    snap.meta.trial = key.trial;
    return snap;
}

inline void fill_meta(SnapshotMatrix& snap, const SceneConfig& scene, const SnrSpec& snr, double energy,
                      const DelayVector& tau) {
    snap.meta.scene_hash = scene_hash(scene);
    snap.meta.snr = snr.snr;
    snap.meta.energy = energy;
    snap.meta.target_present = true;
    snap.meta.true_delays = tau;
}

inline Complex draw_zeta(ZetaLaw law, std::mt19937_64& eng) {
    switch (law) {
        case ZetaLaw::Fixed:
            return {1.0, 0.0};
        case ZetaLaw::Rayleigh:
            return ComplexNormal(1.0)(eng);
        case ZetaLaw::UnitRandomPhase:
        default: {
            std::uniform_real_distribution<double> phase(0.0, kTwoPi);
            return unit_phasor(phase(eng));
        }
    }
}

}  // namespace detail

/// Energy referenced to the mean true delay of the scene.
inline double scene_energy(const SnrSpec& snr, const SceneConfig& scene, const WaveformBank& bank,
                           const DelayVector& tau) {
    return energy_for(snr, scene, bank, tau.mean());
}

/// Extended target: r_n[k] = sqrt(E/N_t) sum_m (c tau_mn)^{-b} h_mn s_m[k; tau_mn] + z_n[k].
inline std::pair<SnapshotMatrix, ChannelRealization> synth_extended(const SceneConfig& scene,
                                                                    const WaveformBank& bank,
                                                                    const DelayVector& tau, const SnrSpec& snr,
                                                                    const StreamKey& key,
                                                                    const SynthOptions& opts = {}) {
    detail::check_synth_inputs(scene, bank, tau, snr);
    const double energy = scene_energy(snr, scene, bank, tau);
    const auto nt = static_cast<Eigen::Index>(scene.nt());
    const auto nr = static_cast<Eigen::Index>(scene.nr());

    ChannelRealization ch;
    ch.kind = ChannelKind::Extended;
    if (opts.h_override) {
        if (opts.h_override->rows() != nt || opts.h_override->cols() != nr)
            throw DimensionError("synth_extended: h override shape mismatch");
        ch.h = *opts.h_override;
    } else {
        auto eng = make_stream(key.seed, key.trial, StreamRole::Channel);
        ch.h = ComplexMatrix(nt, nr);
        if (opts.extended_law == ExtendedLaw::Direct) {
            ComplexNormal cn(1.0);
            for (Eigen::Index m = 0; m < nt; ++m)
                for (Eigen::Index n = 0; n < nr; ++n) ch.h(m, n) = cn(eng);
        } else {
            const int p_count = scene.num_scatterers;
            ComplexNormal cn(1.0 / static_cast<double>(p_count));
            std::uniform_real_distribution<double> offset(-0.5 * opts.scatterer_extent_m, 0.5 * opts.scatterer_extent_m);
            Eigen::VectorXcd gains(p_count);
            ch.h.setZero();
            for (int p = 0; p < p_count; ++p) {
                gains(p) = cn(eng);
                const double dx = offset(eng), dy = offset(eng), dz = offset(eng);
                const Vec3 xp = scene.target + Vec3(dx, dy, dz);
                const DelayVector taup = delays_at(xp, scene);
                for (Eigen::Index m = 0; m < nt; ++m)
                    for (Eigen::Index n = 0; n < nr; ++n)
                        ch.h(m, n) += gains(p) * WaveformBank::carrier_phasor(
                                                     -scene.carrier_hz, taup(static_cast<std::size_t>(m),
                                                                             static_cast<std::size_t>(n)));
            }
            ch.scatterer_gains = gains;
        }
    }

    auto snap = detail::blank_snapshot(bank, scene.nr(), key, opts.add_noise, StreamRole::Noise);
    const double amp = std::sqrt(energy / static_cast<double>(nt));
    for (Eigen::Index n = 0; n < nr; ++n)
        for (Eigen::Index m = 0; m < nt; ++m) {
            const double t = tau(static_cast<std::size_t>(m), static_cast<std::size_t>(n));
            const Complex coef = amp * safe_pow(scene.c * t, -scene.path_loss_exp) * ch.h(m, n);
            const auto [lo, hi] = bank.support(t);
            for (std::size_t k = lo; k < hi; ++k)
                snap.r(static_cast<Eigen::Index>(k), n) += coef * bank.sample(static_cast<std::size_t>(m), k, t);
        }
    detail::fill_meta(snap, scene, snr, energy, tau);
    return {std::move(snap), std::move(ch)};
}

/// Point target: single reflectivity zeta with explicit carrier phase exp(-j 2 pi f_c tau_mn) per path.
inline std::pair<SnapshotMatrix, ChannelRealization> synth_point(const SceneConfig& scene, const WaveformBank& bank,
                                                                 const DelayVector& tau, const SnrSpec& snr,
                                                                 const StreamKey& key,
                                                                 const SynthOptions& opts = {}) {
    detail::check_synth_inputs(scene, bank, tau, snr);
    const double energy = scene_energy(snr, scene, bank, tau);
    const auto nt = static_cast<Eigen::Index>(scene.nt());
    const auto nr = static_cast<Eigen::Index>(scene.nr());

    ChannelRealization ch;
    ch.kind = ChannelKind::Point;
    if (opts.zeta_override) {
        ch.zeta = *opts.zeta_override;
    } else {
        auto eng = make_stream(key.seed, key.trial, StreamRole::Channel);
        ch.zeta = detail::draw_zeta(opts.zeta_law, eng);
    }
    ch.h = ComplexMatrix(nt, nr);
    for (Eigen::Index m = 0; m < nt; ++m)
        for (Eigen::Index n = 0; n < nr; ++n)
            ch.h(m, n) = ch.zeta * WaveformBank::carrier_phasor(
                                       -scene.carrier_hz, tau(static_cast<std::size_t>(m), static_cast<std::size_t>(n)));

    auto snap = detail::blank_snapshot(bank, scene.nr(), key, opts.add_noise, StreamRole::Noise);
    const double amp = std::sqrt(energy / static_cast<double>(nt));
    for (Eigen::Index n = 0; n < nr; ++n)
        for (Eigen::Index m = 0; m < nt; ++m) {
            const double t = tau(static_cast<std::size_t>(m), static_cast<std::size_t>(n));
            const Complex coef = amp * ch.zeta * safe_pow(scene.c * t, -scene.path_loss_exp);
            const auto [lo, hi] = bank.support(t);
            for (std::size_t k = lo; k < hi; ++k)
                snap.r(static_cast<Eigen::Index>(k), n) +=
                    coef * bank.rotated_sample(static_cast<std::size_t>(m), k, t, scene.carrier_hz);
        }
    detail::fill_meta(snap, scene, snr, energy, tau);
    return {std::move(snap), std::move(ch)};
}

/// Phased array: one common waveform s = s_1 delayed by tau_11, steered by S_n (extended, common gain h)
/// or by the point steering sum (reflectivity zeta with per-path carrier phase).
inline std::pair<SnapshotMatrix, ChannelRealization> synth_phased_array(const SceneConfig& scene,
                                                                        const WaveformBank& bank,
                                                                        const DelayVector& tau,
                                                                        const SnrSpec& snr, const StreamKey& key,
                                                                        const SynthOptions& opts = {}) {
    detail::check_synth_inputs(scene, bank, tau, snr);
    const double energy = scene_energy(snr, scene, bank, tau);
    const auto nt = static_cast<Eigen::Index>(scene.nt());
    const auto nr = static_cast<Eigen::Index>(scene.nr());
    const bool point = opts.phased_array_target == PhasedArrayTarget::Point;

    ChannelRealization ch;
    ch.kind = ChannelKind::PhasedArray;
    Complex gain;
    {
        auto eng = make_stream(key.seed, key.trial, StreamRole::Channel);
        if (point) {
            ch.zeta = opts.zeta_override ? *opts.zeta_override : detail::draw_zeta(opts.zeta_law, eng);
            gain = ch.zeta;
        } else {
            ch.h_scalar = opts.h_scalar_override ? *opts.h_scalar_override : ComplexNormal(1.0)(eng);
            gain = ch.h_scalar;
        }
    }
    ch.h = ComplexMatrix(nt, nr);
    for (Eigen::Index m = 0; m < nt; ++m)
        for (Eigen::Index n = 0; n < nr; ++n)
            ch.h(m, n) = point ? gain * WaveformBank::carrier_phasor(-scene.carrier_hz,
                                                                     tau(static_cast<std::size_t>(m),
                                                                         static_cast<std::size_t>(n)))
                               : gain;

    const Eigen::VectorXcd steer = steering_sums(scene, tau, point);
    auto snap = detail::blank_snapshot(bank, scene.nr(), key, opts.add_noise, StreamRole::Noise);
    const double amp = std::sqrt(energy / static_cast<double>(nt));
    const double t11 = tau(0, 0);
    const auto [lo, hi] = bank.support(t11);
    for (Eigen::Index n = 0; n < nr; ++n) {
        const Complex coef = amp * gain * steer(n);
        for (std::size_t k = lo; k < hi; ++k) snap.r(static_cast<Eigen::Index>(k), n) += coef * bank.sample(0, k, t11);
    }
    detail::fill_meta(snap, scene, snr, energy, tau);
    return {std::move(snap), std::move(ch)};
}

/// Target-absent snapshot: unit-variance circular complex Gaussian noise.
inline SnapshotMatrix synth_null(const WaveformBank& bank, std::size_t nr, const StreamKey& key) {
    require(nr >= 1, "synth_null: at least one receiver required");
    auto snap = detail::blank_snapshot(bank, nr, key, true, StreamRole::NullNoise);
    snap.meta.target_present = false;
    return snap;
}

}  // namespace mimo_radar

#endif
