#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "stmcirc/core.hpp"
#include "stmcirc/sparams.hpp"
#include "stmcirc/voltage_mode.hpp"

namespace stmcirc {

/// Rotating-mode response of the differential current-mode (bandpass/wye)
/// junction pair. ic_plus/ic_minus are I_{c,+-}(w)/V_{s1}(w) in siemens;
/// id_minus_up / id_plus_down are the trapped differential currents at
/// w + w_m and w - w_m. sigma and rho are the first-harmonic elastance
/// expansion coefficients of 1/C(t).
struct ModeResponseCM {
    cplx ic_plus{}, ic_minus{};
    cplx id_minus_up{}, id_plus_down{};
    double sigma = 1.0;
    double rho = 0.0;
    double omega = 0.0;
};

inline double elastance_sigma(double dc_ratio) {
    if (!(dc_ratio >= 0.0 && dc_ratio < 1.0))
        throw std::invalid_argument("elastance_sigma: dc_ratio must be in [0,1)");
    return 1.0 / std::sqrt(1.0 - dc_ratio * dc_ratio);
}

inline double elastance_rho(double dc_ratio) {
    if (!(dc_ratio >= 0.0 && dc_ratio < 1.0))
        throw std::invalid_argument("elastance_rho: dc_ratio must be in [0,1)");
    if (dc_ratio == 0.0) return 0.0;
    return (2.0 / dc_ratio) * (1.0 - elastance_sigma(dc_ratio));
}

namespace detail {

struct CmFactors {
    cplx n_up, n_dn;   // series-tank factors at w +- wm
    cplx dc_fac;       // port-loaded factor at w
    cplx d_up, d_dn;   // denominators
    double lambda = 0.0;
    double sigma = 1.0, rho = 0.0;
};

inline CmFactors cm_factors(double w, const CircuitParams& cp, const ModulationParams& mp) {
    const DerivedParams d = derive(cp);
    const double w0 = d.omega0;
    const double g0 = cp.lossless() ? 0.0 : w0 / cp.Q0;  // Rs/L0 with Rs = w0 L0/Q0
    const double gload = g0 + 2.0 * cp.Z0 / cp.L0;

    CmFactors f;
    f.sigma = elastance_sigma(mp.dc_ratio);
    f.rho = elastance_rho(mp.dc_ratio);
    f.lambda = 0.5 * f.rho * w0 * w0;  // rho/(2 L0 C0)
    const double sw2 = f.sigma * w0 * w0;
    const double wu = w + mp.omega_m, wd = w - mp.omega_m;
    f.n_up = cplx(wu * wu - sw2, -wu * g0);
    f.n_dn = cplx(wd * wd - sw2, -wd * g0);
    f.dc_fac = cplx(sw2 - w * w, w * gload);
    f.d_up = f.lambda * f.lambda + f.dc_fac * f.n_up;
    f.d_dn = f.lambda * f.lambda + f.dc_fac * f.n_dn;

    const double scale = f.lambda * f.lambda +
                         std::abs(f.dc_fac) * (std::abs(f.n_up) + std::abs(f.n_dn));
    if (std::abs(f.d_up) < 1e-14 * scale || std::abs(f.d_dn) < 1e-14 * scale)
        throw PoleError("current-mode response has a pole at this frequency");
    return f;
}

}  // namespace detail

namespace detail {

struct CmCw {
    cplx ic_p, ic_m, id_up, id_dn;
    double sigma = 1.0, rho = 0.0;
};

inline CmCw cm_solution_cw(double omega, const CircuitParams& cp, const ModulationParams& mp) {
    const auto f = cm_factors(omega, cp, mp);
    const cplx j(0.0, 1.0);
    CmCw s;
    s.sigma = f.sigma;
    s.rho = f.rho;
    s.ic_p = j * omega / (3.0 * cp.L0) * f.n_up / f.d_up;
    s.ic_m = j * omega / (3.0 * cp.L0) * f.n_dn / f.d_dn;
    const double w0sq = 1.0 / (cp.L0 * cp.C0);
    s.id_up = j * omega * f.rho * w0sq / (6.0 * cp.L0) / f.d_up;
    s.id_dn = j * omega * f.rho * w0sq / (6.0 * cp.L0) / f.d_dn;
    return s;
}

}  // namespace detail

inline ModeResponseCM cm_modes(double omega, const CircuitParams& cp, const ModulationParams& mp) {
    cp.validate();
    mp.validate();
    const auto s = detail::cm_solution_cw(omega, cp, mp);

    ModeResponseCM r;
    r.omega = omega;
    r.sigma = s.sigma;
    r.rho = s.rho;
    if (mp.direction == Direction::clockwise) {
        r.ic_plus = s.ic_p;
        r.ic_minus = s.ic_m;
    } else {
        r.ic_plus = s.ic_m;
        r.ic_minus = s.ic_p;
    }
    r.id_minus_up = s.id_up;
    r.id_plus_down = s.id_dn;
    return r;
}

namespace detail {

inline void cm_column1(const CmCw& m, double z0, cplx& s11, cplx& s21, cplx& s31) {
    const cplx j(0.0, 1.0);
    const double s3 = std::sqrt(3.0);
    const cplx sum = m.ic_p + m.ic_m;
    const cplx dif = m.ic_p - m.ic_m;
    s11 = 1.0 - 4.0 * z0 * sum;
    s21 = 2.0 * z0 * (sum - j * s3 * dif);
    s31 = 2.0 * z0 * (sum + j * s3 * dif);
}

}  // namespace detail

inline Mat3 cm_smatrix(double omega, const CircuitParams& cp, const ModulationParams& mp) {
    cp.validate();
    mp.validate();
    const auto m = detail::cm_solution_cw(omega, cp, mp);
    cplx s11, s21, s31;
    detail::cm_column1(m, cp.Z0, s11, s21, s31);
    if (mp.direction == Direction::counterclockwise) std::swap(s21, s31);
    return detail::rotate_to_full(s11, s21, s31);
}

inline SParameterSet cm_sparams(std::span<const double> omega_grid, const CircuitParams& cp,
                                const ModulationParams& mp) {
    if (omega_grid.empty()) throw std::invalid_argument("cm_sparams: empty grid");
    SParameterSet sp;
    sp.frequencies.assign(omega_grid.begin(), omega_grid.end());
    sp.matrices.reserve(omega_grid.size());
    for (double w : omega_grid) sp.matrices.push_back(cm_smatrix(w, cp, mp));
    sp.validate();
    return sp;
}

}  // namespace stmcirc
