#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stmcirc/core.hpp"
#include "stmcirc/current_mode.hpp"
#include "stmcirc/sparams.hpp"
#include "stmcirc/voltage_mode.hpp"

namespace stmcirc {

struct DesignError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class DesignTopology { voltage, current };

/// Modulation parameters that put the transmission null exactly on port 3 at
/// omega_rf. The closed-form conditions are exact for a lossless junction;
/// with finite Q0 they leave a small residual that the local polish removes.
struct DesignPoint {
    double omega_m = 0.0;
    double dc_ratio = 0.0;
    double omega_rf = 0.0;
    double omega0 = 0.0;
    double eq19_residual = 0.0;   // normalized closed-form residual at the seed root
    double eq20_mismatch = 0.0;   // relative +/- disagreement of the dc_ratio equation
    double s31_mag = 0.0;         // |S31(omega_rf)| at the returned point
    DesignTopology topology = DesignTopology::voltage;
};

namespace detail {

/// Closed-form isolation condition, normalized to omega_rf and written in
/// polynomial form so the bracketing scan sees no spurious poles:
///   P+ K+ (1-y)^2 - P- K- (1+y)^2, with y = wm/wrf,
///   P+- = (1 +- y)^2 - W0^2, K+- = 1 +- sqrt(3) W0 / Ql - W0^2.
inline double iso_ratio_residual(double y, double W0, double Ql) {
    const double s3 = std::sqrt(3.0);
    const double pp = (1.0 + y) * (1.0 + y) - W0 * W0;
    const double pm = (1.0 - y) * (1.0 - y) - W0 * W0;
    const double kp = 1.0 + s3 * W0 / Ql - W0 * W0;
    const double km = 1.0 - s3 * W0 / Ql - W0 * W0;
    return pp * kp * (1.0 - y) * (1.0 - y) - pm * km * (1.0 + y) * (1.0 + y);
}

/// (dC/2C0)^2 from the matched-isolation amplitude condition, one sign branch.
inline double iso_dc_half_sq(double y, double W0, double Ql, int sign) {
    const double s3 = std::sqrt(3.0);
    const double s = sign >= 0 ? 1.0 : -1.0;
    const double p = (1.0 + s * y) * (1.0 + s * y) - W0 * W0;
    const double k = 1.0 + s * s3 * W0 / Ql - W0 * W0;
    return p * k / ((1.0 + s * y) * (1.0 + s * y));
}

inline cplx s31_at(DesignTopology topo, double omega, const CircuitParams& cp,
                   const ModulationParams& mp) {
    if (topo == DesignTopology::voltage) return vm_smatrix(omega, cp, mp)(2, 0);
    return cm_smatrix(omega, cp, mp)(2, 0);
}

/// Newton iteration on the complex transmission null S31(wrf; wm, dc) = 0.
inline bool polish_null(DesignTopology topo, double omega_rf, const CircuitParams& cp,
                        ModulationParams& mp) {
    for (int it = 0; it < 60; ++it) {
        const cplx f = s31_at(topo, omega_rf, cp, mp);
        if (std::abs(f) < 1e-13) return true;
        const double hw = 1e-7 * omega_rf;
        const double hd = 1e-8;
        ModulationParams m1 = mp, m2 = mp;
        m1.omega_m += hw;
        m2.dc_ratio = std::min(mp.dc_ratio + hd, 0.999999);
        const cplx fw = (s31_at(topo, omega_rf, cp, m1) - f) / hw;
        const cplx fd = (s31_at(topo, omega_rf, cp, m2) - f) / (m2.dc_ratio - mp.dc_ratio);
        const double det = fw.real() * fd.imag() - fw.imag() * fd.real();
        if (det == 0.0) return false;
        const double dw = (-f.real() * fd.imag() + f.imag() * fd.real()) / det;
        const double dd = (-fw.real() * f.imag() + fw.imag() * f.real()) / det;
        mp.omega_m += dw;
        mp.dc_ratio += dd;
        if (!(mp.omega_m > 0.0) || !(mp.dc_ratio > 0.0) || !(mp.dc_ratio < 1.0)) return false;
    }
    return std::abs(s31_at(topo, omega_rf, cp, mp)) < 1e-10;
}

}  // namespace detail

inline DesignPoint solve_isolation(double omega_rf, const CircuitParams& cp,
                                   DesignTopology topo = DesignTopology::voltage) {
    cp.validate();
    if (!(omega_rf > 0.0)) throw std::invalid_argument("solve_isolation: omega_rf must be > 0");
    const DerivedParams d = derive(cp);
    const double W0 = d.omega0 / omega_rf;

    DesignPoint pt;
    pt.omega_rf = omega_rf;
    pt.omega0 = d.omega0;
    pt.topology = topo;

    if (topo == DesignTopology::voltage) {
        // bracketed scan for the smallest positive root, then bisection
        const int n_scan = 8192;
        const double y_lo = 1e-6, y_hi = 0.95;
        double prev_y = y_lo;
        double prev_r = detail::iso_ratio_residual(prev_y, W0, d.Ql);
        bool found = false;
        for (int i = 1; i <= n_scan && !found; ++i) {
            const double y = y_lo + (y_hi - y_lo) * i / n_scan;
            const double r = detail::iso_ratio_residual(y, W0, d.Ql);
            if ((prev_r < 0.0) != (r < 0.0)) {
                double a = prev_y, b = y, fa = prev_r;
                while ((b - a) / b > 1e-12) {
                    const double m = 0.5 * (a + b);
                    const double fm = detail::iso_ratio_residual(m, W0, d.Ql);
                    if ((fm < 0.0) == (fa < 0.0)) { a = m; fa = fm; }
                    else b = m;
                }
                const double y_root = 0.5 * (a + b);
                const double q2p = detail::iso_dc_half_sq(y_root, W0, d.Ql, +1);
                const double q2m = detail::iso_dc_half_sq(y_root, W0, d.Ql, -1);
                if (q2p > 0.0 && q2m > 0.0) {
                    const double dcp = 2.0 * std::sqrt(q2p);
                    if (dcp < 1.0) {
                        pt.omega_m = y_root * omega_rf;
                        pt.dc_ratio = dcp;
                        pt.eq19_residual = detail::iso_ratio_residual(y_root, W0, d.Ql);
                        pt.eq20_mismatch = std::abs(q2p - q2m) / std::max(q2p, q2m);
                        found = true;
                    }
                }
            }
            prev_y = y;
            prev_r = r;
        }
        if (!found)
            throw DesignError("solve_isolation: no isolation point in (0, omega_rf) for this circuit");
    } else {
        // no printed closed form for the current-mode null; coarse scan + polish
        double best = std::numeric_limits<double>::infinity();
        for (int iy = 1; iy <= 120; ++iy) {
            for (int id = 1; id <= 97; ++id) {
                ModulationParams mp;
                mp.omega_m = 0.005 * omega_rf * iy;
                mp.dc_ratio = 0.01 * id;
                if (mp.omega_m >= 0.6 * omega_rf) continue;
                const double mag = std::abs(detail::s31_at(topo, omega_rf, cp, mp));
                if (mag < best) {
                    best = mag;
                    pt.omega_m = mp.omega_m;
                    pt.dc_ratio = mp.dc_ratio;
                }
            }
        }
        if (!std::isfinite(best)) throw DesignError("solve_isolation: current-mode scan failed");
    }

    ModulationParams mp;
    mp.omega_m = pt.omega_m;
    mp.dc_ratio = pt.dc_ratio;
    const double seed_mag = std::abs(detail::s31_at(topo, omega_rf, cp, mp));
    if (seed_mag > 1e-13 && !detail::polish_null(topo, omega_rf, cp, mp))
        throw DesignError("solve_isolation: null refinement did not converge");
    pt.omega_m = mp.omega_m;
    pt.dc_ratio = mp.dc_ratio;
    pt.s31_mag = std::abs(detail::s31_at(topo, omega_rf, cp, mp));
    if (pt.s31_mag > 1e-3)
        throw DesignError("solve_isolation: residual |S31| above 1e-3 at the solution");
    return pt;
}

/// Deterministic tank tuning: scan then ternary-refine omega0 to maximize the
/// isolation -20 log10 |S31(omega_rf)| with the modulation pair held fixed.
inline double tune_omega0(double omega_rf, double q0, double z0, double l0, double omega_m,
                          double dc_ratio, DesignTopology topo = DesignTopology::voltage,
                          double lo = 0.85, double hi = 1.35) {
    ModulationParams mp;
    mp.omega_m = omega_m;
    mp.dc_ratio = dc_ratio;
    auto ix_of = [&](double x) {
        CircuitParams cp;
        cp.L0 = l0;
        cp.Q0 = q0;
        cp.Z0 = z0;
        const double w0 = omega_rf * x;
        cp.C0 = 1.0 / (w0 * w0 * l0);
        return -mag_db(detail::s31_at(topo, omega_rf, cp, mp));  // negated: minimize
    };
    const int n = 301;
    int ibest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double x = lo + (hi - lo) * i / (n - 1);
        const double v = ix_of(x);
        if (v < best) { best = v; ibest = i; }
    }
    double a = lo + (hi - lo) * std::max(0, ibest - 1) / (n - 1);
    double b = lo + (hi - lo) * std::min(n - 1, ibest + 1) / (n - 1);
    for (int it = 0; it < 200; ++it) {
        const double m1 = a + (b - a) / 3.0;
        const double m2 = b - (b - a) / 3.0;
        if (ix_of(m1) > ix_of(m2)) a = m1;
        else b = m2;
    }
    return omega_rf * 0.5 * (a + b);
}

/// Canonical published configuration: 1 GHz design, Q0 = 70, 4.3 nH tanks,
/// dC/C0 = 0.5, fm = 100 MHz. The differential ports present twice the 50 ohm
/// single-ended system impedance. omega0 comes from the tuning rule above.
inline std::pair<CircuitParams, ModulationParams> reference_design() {
    const double frf = 1e9;
    const double omega_rf = kTwoPi * frf;
    ModulationParams mp;
    mp.omega_m = kTwoPi * 0.1 * frf;
    mp.dc_ratio = 0.5;

    CircuitParams cp;
    cp.L0 = 4.3e-9;
    cp.Q0 = 70.0;
    cp.Z0 = 100.0;
    const double w0 = tune_omega0(omega_rf, cp.Q0, cp.Z0, cp.L0, mp.omega_m, mp.dc_ratio);
    cp.C0 = 1.0 / (w0 * w0 * cp.L0);
    return {cp, mp};
}

/// Uniformly spaced frequency grid of n points spanning +-span around center.
inline std::vector<double> band_grid(double center, double span, int n) {
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        g[static_cast<std::size_t>(i)] = center * (1.0 - span + 2.0 * span * i / (n - 1));
    return g;
}

enum class Omega0Mode { fixed, retuned_per_cell };

/// Fixed omega0 reproduces the published chart layout, where the three
/// single-frequency optima are near-coincident points; per-cell retuning
/// turns the isolation optimum into a ridge and is kept as an option.
struct ChartSpec {
    std::vector<double> fm_over_f0;  // modulation frequency axis
    std::vector<double> dc_ratio;    // capacitance ratio axis
    Omega0Mode omega0_mode = Omega0Mode::fixed;
    int band_points = 401;
    double band_span = 0.10;
    MetricThresholds thresholds{};
};

struct ChartGrid {
    std::vector<double> fm_over_f0;
    std::vector<double> dc_ratio;
    std::vector<MetricSet> cells;       // row-major, fm outer, dc inner
    std::vector<double> omega0;         // per cell
    std::size_t p1 = 0, p2 = 0, p3 = 0, p4 = 0;  // cell indices of the optima
    bool p4_defined = false;

    const MetricSet& at(std::size_t i_fm, std::size_t i_dc) const {
        return cells[i_fm * dc_ratio.size() + i_dc];
    }
};

/// Metric map over the modulation-parameter plane (design-chart data).
/// p1 = best return loss, p2 = best insertion loss, p3 = best isolation,
/// p4 = widest bandwidth; ties resolve to the lowest fm, then lowest dc.
inline ChartGrid chart(const ChartSpec& spec, double omega_rf, const CircuitParams& cp_template,
                       DesignTopology topo = DesignTopology::voltage) {
    if (spec.fm_over_f0.empty() || spec.dc_ratio.empty())
        throw std::invalid_argument("chart: empty grid");
    ChartGrid g;
    g.fm_over_f0 = spec.fm_over_f0;
    g.dc_ratio = spec.dc_ratio;
    g.cells.reserve(spec.fm_over_f0.size() * spec.dc_ratio.size());

    for (double fm : spec.fm_over_f0) {
        for (double dc : spec.dc_ratio) {
            ModulationParams mp;
            mp.omega_m = fm * omega_rf;
            mp.dc_ratio = dc;
            CircuitParams cp = cp_template;
            if (spec.omega0_mode == Omega0Mode::retuned_per_cell) {
                const double w0 =
                    tune_omega0(omega_rf, cp.Q0, cp.Z0, cp.L0, mp.omega_m, mp.dc_ratio, topo);
                cp.C0 = 1.0 / (w0 * w0 * cp.L0);
            }
            const auto grid = band_grid(omega_rf, spec.band_span, spec.band_points);
            const SParameterSet sp = topo == DesignTopology::voltage ? vm_sparams(grid, cp, mp)
                                                                     : cm_sparams(grid, cp, mp);
            // chart cells report the response at omega_rf itself
            g.cells.push_back(metrics(sp, spec.thresholds, omega_rf));
            g.omega0.push_back(1.0 / std::sqrt(cp.L0 * cp.C0));
        }
    }

    auto better = [&](std::size_t a, std::size_t b, auto key, bool maximize) {
        const double ka = key(g.cells[a]), kb = key(g.cells[b]);
        if (ka != kb) return maximize ? ka > kb : ka < kb;
        return a < b;  // row-major order encodes the (lowest fm, lowest dc) tie-break
    };
    auto pick = [&](auto key, bool maximize, bool require_bw) {
        std::size_t best = g.cells.size();
        for (std::size_t i = 0; i < g.cells.size(); ++i) {
            if (require_bw && !g.cells[i].bw_defined) continue;
            if (best == g.cells.size() || better(i, best, key, maximize)) best = i;
        }
        return best;
    };
    g.p1 = pick([](const MetricSet& m) { return m.rl_db; }, true, false);
    g.p2 = pick([](const MetricSet& m) { return m.il_db; }, false, false);
    g.p3 = pick([](const MetricSet& m) { return m.ix_db; }, true, false);
    const std::size_t p4 = pick([](const MetricSet& m) { return m.bw_fractional; }, true, true);
    if (p4 < g.cells.size()) {
        g.p4 = p4;
        g.p4_defined = true;
    }
    return g;
}

}  // namespace stmcirc
