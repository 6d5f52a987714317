#ifndef MIMO_RADAR_WAVEFORM_HPP
#define MIMO_RADAR_WAVEFORM_HPP

#include <algorithm>
#include <cstddef>
#include <utility>
#include <vector>

#include "mimo_radar/core.hpp"
#include "mimo_radar/scene.hpp"

namespace mimo_radar {

/// Rectangular-windowed complex exponentials s_w(t) = T^{-1/2} exp(j 2 pi (w+1) t / T) on [0, T),
/// sampled by the receiver at t_k = window_start + (k+1) T_s for k = 0..K-1.
///
/// Waveform index w is zero-based and carries frequency (w+1)/T. The receive window offset lets
/// pulses that arrive after long propagation delays land inside the K-sample record.
class WaveformBank {
public:
    WaveformBank(std::size_t num_waveforms, double duration, double sample_period, std::size_t num_samples,
                 double window_start = 0.0)
        : nt_(num_waveforms), duration_(duration), ts_(sample_period), k_(num_samples), t0_(window_start) {
        require(nt_ >= 1, "bank: at least one waveform required");
        require(std::isfinite(duration_) && duration_ > 0.0, "bank: duration must be positive");
        require(std::isfinite(ts_) && ts_ > 0.0, "bank: sample period must be positive");
        require(std::isfinite(t0_), "bank: window start must be finite");
        basis_.resize(nt_ * k_);
        for (std::size_t w = 0; w < nt_; ++w)
            for (std::size_t k = 0; k < k_; ++k) {
                const double cycles = static_cast<double>(w + 1) * sample_time(k) / duration_;
                basis_[w * k_ + k] = unit_phasor(-kTwoPi * (cycles - std::floor(cycles)));
            }
    }

    /// Places the window so that pulses arriving anywhere in [tau_lo, tau_hi] sit centered in the record.
    static WaveformBank centered(std::size_t num_waveforms, double duration, double sample_period,
                                 std::size_t num_samples, double tau_lo, double tau_hi) {
        const double occupancy_mid = 0.5 * (tau_lo + tau_hi + duration);
        const double window_mid_offset = 0.5 * static_cast<double>(num_samples + 1) * sample_period;
        return WaveformBank(num_waveforms, duration, sample_period, num_samples, occupancy_mid - window_mid_offset);
    }

    std::size_t num_waveforms() const { return nt_; }
    std::size_t num_samples() const { return k_; }
    double duration() const { return duration_; }
    double sample_period() const { return ts_; }
    double window_start() const { return t0_; }
    double samples_per_pulse() const { return duration_ / ts_; }
    double sample_time(std::size_t k) const { return t0_ + static_cast<double>(k + 1) * ts_; }

    bool in_support(std::size_t k, double tau) const { return inside(sample_time(k) - tau); }

    /// s_w[k; tau] = s_w(t_k - tau), exact from the closed form.
    Complex sample(std::size_t w, std::size_t k, double tau) const {
        if (w >= nt_ || k >= k_) throw DimensionError("bank: sample index out of range");
        const double u = sample_time(k) - tau;
        if (!inside(u)) return {0.0, 0.0};
        return unit_phasor(kTwoPi * static_cast<double>(w + 1) * u / duration_) / std::sqrt(duration_);
    }

    /// Sample with the explicit carrier rotation exp(-j 2 pi f_c tau) of the point-scatterer model.
    Complex rotated_sample(std::size_t w, std::size_t k, double tau, double carrier_hz) const {
        return sample(w, k, tau) * carrier_phasor(-carrier_hz, tau);
    }

    /// Half-open index range [lo, hi) of samples inside the pulse delayed by tau.
    std::pair<std::size_t, std::size_t> support(double tau) const {
        const auto clamp = [this](double v) {
            return static_cast<std::size_t>(std::clamp(v, 0.0, static_cast<double>(k_)));
        };
        std::size_t lo = clamp(std::ceil((tau - t0_) / ts_ - 1.0));
        while (lo > 0 && !before_start(sample_time(lo - 1) - tau)) --lo;
        while (lo < k_ && before_start(sample_time(lo) - tau)) ++lo;
        std::size_t hi = std::max(lo, clamp(std::ceil((tau + duration_ - t0_) / ts_ - 1.0)));
        while (hi > lo && past_end(sample_time(hi - 1) - tau)) --hi;
        while (hi < k_ && !past_end(sample_time(hi) - tau)) ++hi;
        return {lo, hi};
    }

    /// exp(-j 2 pi (w+1) t_k / T), the delay-free conjugate basis used by fast correlators.
    Complex basis(std::size_t w, std::size_t k) const { return basis_[w * k_ + k]; }

    /// Factor T^{-1/2} exp(j 2 pi (w+1) tau / T) that completes a basis correlation at delay tau.
    Complex delay_phasor(std::size_t w, double tau) const {
        const double cycles = static_cast<double>(w + 1) * tau / duration_;
        return unit_phasor(kTwoPi * (cycles - std::floor(cycles))) / std::sqrt(duration_);
    }

    /// sum_k s_m[k; tau_a] conj(s_n[k; tau_b]).
    Complex gram(double tau_a, double tau_b, std::size_t m, std::size_t n) const {
        Complex acc{0.0, 0.0};
        for (std::size_t k = 0; k < k_; ++k) acc += sample(m, k, tau_a) * std::conj(sample(n, k, tau_b));
        return acc;
    }

    static Complex carrier_phasor(double freq, double tau) {
        const double cycles = freq * tau;
        return unit_phasor(kTwoPi * (cycles - std::floor(cycles)));
    }

private:
    // Pulse edges are snapped within a billionth of T_s so that delays on the sample grid
    // give exactly T/T_s samples regardless of rounding in t_k - tau.
    double edge_tol() const { return 1e-9 * ts_; }
    bool before_start(double u) const { return u < -edge_tol(); }
    bool past_end(double u) const { return u >= duration_ - edge_tol(); }
    bool inside(double u) const { return !before_start(u) && !past_end(u); }

    std::size_t nt_;
    double duration_;
    double ts_;
    std::size_t k_;
    double t0_;
    std::vector<Complex> basis_;
};

struct OrthogonalityReport {
    double worst_cross = 0.0;      // max over m != m', n of |gram| * T_s at the receiver's delays
    double worst_energy_dev = 0.0;  // max over (m, n) of |sum_k |s|^2 * T_s - 1|
};

/// Cross-gram and discrete-energy check of the bank at the delays a scene actually produces.
inline OrthogonalityReport orthogonality_report(const WaveformBank& bank, const DelayVector& tau) {
    if (tau.nt() > bank.num_waveforms()) throw DimensionError("orthogonality_report: more transmitters than waveforms");
    OrthogonalityReport rep;
    const double ts = bank.sample_period();
    for (std::size_t n = 0; n < tau.nr(); ++n)
        for (std::size_t m = 0; m < tau.nt(); ++m) {
            rep.worst_energy_dev =
                std::max(rep.worst_energy_dev, std::abs(bank.gram(tau(m, n), tau(m, n), m, m).real() * ts - 1.0));
            for (std::size_t i = 0; i < tau.nt(); ++i)
                if (i != m) rep.worst_cross = std::max(rep.worst_cross, std::abs(bank.gram(tau(m, n), tau(i, n), m, i)) * ts);
        }
    return rep;
}

/// N_t x N_t gram matrix sum_k s_m s_i^* at the delays seen by receiver n, for CSV dumps.
inline ComplexMatrix gram_matrix(const WaveformBank& bank, const DelayVector& tau, std::size_t n) {
    ComplexMatrix g(tau.nt(), tau.nt());
    for (std::size_t m = 0; m < tau.nt(); ++m)
        for (std::size_t i = 0; i < tau.nt(); ++i)
            g(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(i)) = bank.gram(tau(m, n), tau(i, n), m, i);
    return g;
}

}  // namespace mimo_radar

#endif
