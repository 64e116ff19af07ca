#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "stmcirc/core.hpp"
#include "stmcirc/sparams.hpp"

namespace stmcirc {

struct PoleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Rotating-mode response of the differential voltage-mode junction pair at
/// excitation frequency omega (port 1 driven, clockwise bias).
///
/// vd_plus / vd_minus are V_{d,+-}(w)/V_{s1}(w); vc_minus_up is the common
/// amplitude generated at w + w_m, vc_plus_down the one at w - w_m. For a
/// counterclockwise bias the two rotation senses exchange roles and the
/// returned pairs are swapped accordingly.
struct ModeResponseVM {
    cplx vd_plus{}, vd_minus{};
    cplx vc_minus_up{}, vc_plus_down{};
    double omega = 0.0;
};

namespace detail {

struct VmFactors {
    cplx pd, pc_up, pc_dn;     // resonance factors at w and w +- wm
    double k_up, k_dn;         // coupling (dc/2) w (w +- wm)
    cplx d_up, d_dn;           // denominators
};

inline VmFactors vm_factors(double w, const CircuitParams& cp, const ModulationParams& mp) {
    const DerivedParams d = derive(cp);
    const double w0 = d.omega0;
    const double gd = w0 / d.Ql;
    const double gc = cp.lossless() ? 0.0 : 1.0 / (d.R0 * cp.C0);

    VmFactors f;
    f.pd = cplx(w0 * w0 - w * w, w * gd);
    const double wu = w + mp.omega_m, wd = w - mp.omega_m;
    f.pc_up = cplx(w0 * w0 - wu * wu, wu * gc);
    f.pc_dn = cplx(w0 * w0 - wd * wd, wd * gc);
    f.k_up = 0.5 * mp.dc_ratio * w * wu;
    f.k_dn = 0.5 * mp.dc_ratio * w * wd;
    f.d_up = f.pd * f.pc_up - f.k_up * f.k_up;
    f.d_dn = f.pd * f.pc_dn - f.k_dn * f.k_dn;

    const double scale = std::abs(f.pd * f.pc_up) + f.k_up * f.k_up +
                         std::abs(f.pd * f.pc_dn) + f.k_dn * f.k_dn;
    if (std::abs(f.d_up) < 1e-12 * scale || std::abs(f.d_dn) < 1e-12 * scale)
        throw PoleError("voltage-mode response has a pole at this frequency");
    return f;
}

/// Clockwise-bias mode solution; the sideband resonance factor is cancelled
/// analytically when the modulation is off, where it is a removable factor.
struct VmCw {
    cplx vd_p, vd_m, vc_up, vc_dn;
};

inline VmCw vm_solution_cw(double omega, const CircuitParams& cp, const ModulationParams& mp) {
    const auto f = vm_factors(omega, cp, mp);
    const cplx j(0.0, 1.0);
    const cplx e6 = std::polar(1.0, std::numbers::pi / 6.0);
    const cplx denom_scale = 3.0 * std::sqrt(3.0) * cp.Z0 * cp.C0;

    VmCw s;
    if (mp.dc_ratio == 0.0) {
        s.vd_p = -j * omega * e6 / (denom_scale * f.pd);
        s.vd_m = -j * omega * std::conj(e6) / (denom_scale * f.pd);
        s.vc_up = 0.0;
        s.vc_dn = 0.0;
        return s;
    }
    s.vd_p = -j * omega * e6 * f.pc_up / (denom_scale * f.d_up);
    s.vd_m = -j * omega * std::conj(e6) * f.pc_dn / (denom_scale * f.d_dn);
    // Trapped common amplitudes of the exact charge-law circuit. The coupling
    // into the sideband at w +- wm goes as (dC/2C0)(w +- wm)^2; only the
    // coupling product enters D+-, so the port response is unaffected.
    const double wu = omega + mp.omega_m, wd = omega - mp.omega_m;
    s.vc_up = 0.5 * mp.dc_ratio * wu * wu * s.vd_p / f.pc_up;
    s.vc_dn = 0.5 * mp.dc_ratio * wd * wd * s.vd_m / f.pc_dn;
    return s;
}

}  // namespace detail

inline ModeResponseVM vm_modes(double omega, const CircuitParams& cp, const ModulationParams& mp) {
    cp.validate();
    mp.validate();
    const auto s = detail::vm_solution_cw(omega, cp, mp);

    ModeResponseVM r;
    r.omega = omega;
    if (mp.direction == Direction::clockwise) {
        r.vd_plus = s.vd_p;
        r.vd_minus = s.vd_m;
    } else {
        // reversed spatial progression exchanges the two rotation senses
        r.vd_plus = s.vd_m;
        r.vd_minus = s.vd_p;
    }
    r.vc_minus_up = s.vc_up;
    r.vc_plus_down = s.vc_dn;
    return r;
}

namespace detail {

/// Column 1 of the S-matrix (excitation at port 1) from the clockwise modes.
inline void vm_column1(const VmCw& m, cplx& s11, cplx& s21, cplx& s31) {
    const cplx j(0.0, 1.0);
    const double s3 = std::sqrt(3.0);
    const cplx sum = m.vd_p + m.vd_m;
    const cplx dif = m.vd_p - m.vd_m;
    s11 = 2.0 * (-1.0 / 6.0 - sum + j / s3 * dif);
    s21 = 2.0 * (1.0 / 3.0 + sum + j / s3 * dif);
    s31 = 2.0 * (1.0 / 3.0 - 2.0 * j / s3 * dif);
}

inline Mat3 rotate_to_full(cplx s11, cplx s21, cplx s31) {
    Mat3 s;
    s(0, 0) = s(1, 1) = s(2, 2) = s11;
    s(1, 0) = s(2, 1) = s(0, 2) = s21;
    s(2, 0) = s(0, 1) = s(1, 2) = s31;
    return s;
}

}  // namespace detail

inline Mat3 vm_smatrix(double omega, const CircuitParams& cp, const ModulationParams& mp) {
    cp.validate();
    mp.validate();
    const auto m = detail::vm_solution_cw(omega, cp, mp);
    cplx s11, s21, s31;
    detail::vm_column1(m, s11, s21, s31);
    // a reversed bias mirrors the circulator: ports 2 and 3 exchange roles
    if (mp.direction == Direction::counterclockwise) std::swap(s21, s31);
    return detail::rotate_to_full(s11, s21, s31);
}

inline SParameterSet vm_sparams(std::span<const double> omega_grid, const CircuitParams& cp,
                                const ModulationParams& mp) {
    if (omega_grid.empty()) throw std::invalid_argument("vm_sparams: empty grid");
    SParameterSet sp;
    sp.frequencies.assign(omega_grid.begin(), omega_grid.end());
    sp.matrices.reserve(omega_grid.size());
    for (double w : omega_grid) sp.matrices.push_back(vm_smatrix(w, cp, mp));
    sp.validate();
    return sp;
}

}  // namespace stmcirc
