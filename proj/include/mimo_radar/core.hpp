#ifndef MIMO_RADAR_CORE_HPP
#define MIMO_RADAR_CORE_HPP

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mimo_radar {

using Complex = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using ComplexMatrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;

inline constexpr double kSpeedOfLight = 2.99792458e8;  // m/s
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr const char* kLibraryVersion = "1.0.0";

/// Raised when a configuration or a precondition on inputs is violated.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when array shapes of cooperating objects disagree.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised for failures discovered while computing (not while validating).
class RuntimeFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw ConfigError(what);
}

inline Complex unit_phasor(double radians) { return {std::cos(radians), std::sin(radians)}; }

// x^p for x > 0 computed as exp(p log x); keeps (c tau)^{2 beta} finite for meter-scale c tau.
inline double safe_pow(double x, double p) { return std::exp(p * std::log(x)); }

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace mimo_radar

#endif
