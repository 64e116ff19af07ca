#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace stmcirc {

inline constexpr double kAlpha = 2.0 * std::numbers::pi / 3.0;  // 120 deg spatial step
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Static description of one resonant junction and its ports.
///
/// Z0 is the differential port impedance of the assembled circulator. A
/// standard 50 ohm single-ended system presents 2*50 = 100 ohm differential
/// sources to the voltage-mode junction pair, so the reference design uses
/// Z0 = 100.
struct CircuitParams {
    double L0 = 0.0;  // tank inductance, H
    double C0 = 0.0;  // static tank capacitance, F
    double Q0 = std::numeric_limits<double>::infinity();  // unloaded tank Q
    double Z0 = 0.0;  // differential port impedance, ohm

    void validate() const {
        if (!(L0 > 0.0)) throw std::invalid_argument("CircuitParams: L0 must be > 0");
        if (!(C0 > 0.0)) throw std::invalid_argument("CircuitParams: C0 must be > 0");
        if (!(Q0 > 0.0)) throw std::invalid_argument("CircuitParams: Q0 must be > 0");
        if (!(Z0 > 0.0)) throw std::invalid_argument("CircuitParams: Z0 must be > 0");
    }

    bool lossless() const { return std::isinf(Q0); }
};

struct DerivedParams {
    double omega0 = 0.0;  // rad/s
    double R0 = 0.0;      // parallel tank resistance Q0*w0*L0, ohm
    double Qr = 0.0;      // port-loaded quality factor w0*(3 Z0/2)*C0
    double Ql = 0.0;      // total loaded Q, parallel combination of Q0 and Qr
};

inline DerivedParams derive(const CircuitParams& cp) {
    cp.validate();
    DerivedParams d;
    d.omega0 = 1.0 / std::sqrt(cp.L0 * cp.C0);
    d.R0 = cp.lossless() ? std::numeric_limits<double>::infinity() : cp.Q0 * d.omega0 * cp.L0;
    d.Qr = d.omega0 * (3.0 * cp.Z0 / 2.0) * cp.C0;
    d.Ql = cp.lossless() ? d.Qr : 1.0 / (1.0 / cp.Q0 + 1.0 / d.Qr);
    return d;
}

enum class Direction { clockwise, counterclockwise };

inline std::string to_string(Direction d) {
    return d == Direction::clockwise ? "cw" : "ccw";
}

/// Spatiotemporal bias description: all three tanks of a junction are
/// modulated at omega_m with phases progressing by 120 deg around the ring.
struct ModulationParams {
    double omega_m = 0.0;   // rad/s
    double dc_ratio = 0.0;  // dC/C0, in [0,1)
    double theta = 0.0;     // global phase offset, rad
    Direction direction = Direction::clockwise;

    void validate() const {
        if (!(omega_m > 0.0)) throw std::invalid_argument("ModulationParams: omega_m must be > 0");
        if (!(dc_ratio >= 0.0 && dc_ratio < 1.0))
            throw std::invalid_argument("ModulationParams: dc_ratio must be in [0,1)");
        if (!std::isfinite(theta)) throw std::invalid_argument("ModulationParams: theta must be finite");
    }

    /// Modulation phase of tank n (0-based within a junction).
    double phase(int n) const {
        const double s = direction == Direction::clockwise ? 1.0 : -1.0;
        return s * kAlpha * n + theta;
    }
};

}  // namespace stmcirc
