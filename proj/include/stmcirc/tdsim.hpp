#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stmcirc/core.hpp"
#include "stmcirc/fft.hpp"
#include "stmcirc/sparams.hpp"

namespace stmcirc {

enum class Topology { se_delta, se_wye, diff_voltage, diff_current };

inline std::string to_string(Topology t) {
    switch (t) {
        case Topology::se_delta: return "se-delta";
        case Topology::se_wye: return "se-wye";
        case Topology::diff_voltage: return "diff-voltage";
        case Topology::diff_current: return "diff-current";
    }
    return "?";
}

struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Best rational approximation p/q (q <= qmax) to omega_rf/omega_m; the drive
/// is snapped onto the commensurate grid so one common period exists exactly.
struct Commensurate {
    long p = 1;
    int q = 1;
    double omega_snapped = 0.0;
    double rel_shift = 0.0;  // (snapped - requested)/requested
};

inline Commensurate snap_commensurate(double omega_rf, double omega_m, int qmax = 64) {
    if (!(omega_rf > 0.0) || !(omega_m > 0.0))
        throw std::invalid_argument("snap_commensurate: frequencies must be positive");
    const double ratio = omega_rf / omega_m;
    Commensurate best;
    double best_err = std::numeric_limits<double>::infinity();
    for (int q = 1; q <= qmax; ++q) {
        const long p = std::max<long>(1, std::lround(ratio * q));
        const double err = std::abs(ratio - static_cast<double>(p) / q);
        if (err < best_err * (1.0 - 1e-12)) {
            best_err = err;
            best.p = p;
            best.q = q;
        }
    }
    best.omega_snapped = omega_m * static_cast<double>(best.p) / best.q;
    best.rel_shift = (best.omega_snapped - omega_rf) / omega_rf;
    return best;
}

namespace td {

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4) adaptive integrator over raw state arrays (dim <= 12).
// ---------------------------------------------------------------------------

inline constexpr int kMaxDim = 12;

struct Rk45Options {
    double rtol = 1e-11;
    double atol_factor = 1e-13;  // multiplied by per-component scales
    double h_init_frac = 1e-3;   // of the integration span
    std::uint64_t max_steps = 400000000ULL;
};

template <typename Deriv>
class Rk45 {
  public:
    Rk45(Deriv f, int dim, std::array<double, kMaxDim> scales, const Rk45Options& opt)
        : f_(f), dim_(dim), scales_(scales), opt_(opt) {}

    /// Advance state x from t0 to t1 (t1 > t0).
    void integrate(double& t, double t1, double* x) {
        if (h_ <= 0.0) h_ = (t1 - t) * opt_.h_init_frac;
        while (t < t1) {
            double h = std::min(h_, t1 - t);
            step(t, h, x);
        }
    }

  private:
    void step(double& t, double h, double* x) {
        double k[7][kMaxDim];
        double ytmp[kMaxDim], y5[kMaxDim];

        for (;;) {
            f_(t, x, k[0]);
            stage(x, k, h, 1, ytmp, {1.0 / 5});
            f_(t + h / 5, ytmp, k[1]);
            stage(x, k, h, 2, ytmp, {3.0 / 40, 9.0 / 40});
            f_(t + 3 * h / 10, ytmp, k[2]);
            stage(x, k, h, 3, ytmp, {44.0 / 45, -56.0 / 15, 32.0 / 9});
            f_(t + 4 * h / 5, ytmp, k[3]);
            stage(x, k, h, 4, ytmp, {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729});
            f_(t + 8 * h / 9, ytmp, k[4]);
            stage(x, k, h, 5, ytmp,
                  {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656});
            f_(t + h, ytmp, k[5]);
            static constexpr double b[6] = {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192,
                                            -2187.0 / 6784, 11.0 / 84};
            for (int i = 0; i < dim_; ++i) {
                double s = 0.0;
                for (int j = 0; j < 6; ++j) s += b[j] * k[j][i];
                y5[i] = x[i] + h * s;
            }
            f_(t + h, y5, k[6]);

            static constexpr double e[7] = {71.0 / 57600, 0.0, -71.0 / 16695, 71.0 / 1920,
                                            -17253.0 / 339200, 22.0 / 525, -1.0 / 40};
            double err = 0.0;
            for (int i = 0; i < dim_; ++i) {
                double s = 0.0;
                for (int j = 0; j < 7; ++j) s += e[j] * k[j][i];
                const double sc = opt_.atol_factor * scales_[static_cast<std::size_t>(i)] +
                                  opt_.rtol * std::max(std::abs(x[i]), std::abs(y5[i]));
                const double r = h * s / sc;
                err += r * r;
            }
            err = std::sqrt(err / dim_);

            if (++steps_ > opt_.max_steps)
                throw ConvergenceError("rk45: step budget exceeded");

            if (err <= 1.0 || h <= 1e-18 * std::abs(t + h)) {
                t += h;
                for (int i = 0; i < dim_; ++i) x[i] = y5[i];
                const double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
                h_ = h * std::clamp(fac, 0.2, 5.0);
                return;
            }
            h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
        }
    }

    void stage(const double* x, double k[7][kMaxDim], double h, int n, double* out,
               std::initializer_list<double> a) {
        for (int i = 0; i < dim_; ++i) {
            double s = 0.0;
            int j = 0;
            for (double aj : a) s += aj * k[j++][i];
            out[i] = x[i] + h * s;
        }
        (void)n;
    }

    Deriv f_;
    int dim_;
    std::array<double, kMaxDim> scales_;
    Rk45Options opt_;
    double h_ = 0.0;
    std::uint64_t steps_ = 0;
};

// ---------------------------------------------------------------------------
// Junction primitives.
// ---------------------------------------------------------------------------

/// One bandstop/delta ring: parallel (L0, C_n(t), R0) tanks between the three
/// ring nodes, tank n spanning nodes (n, n-1). States are capacitor charges
/// q_n = C_n v_n and inductor currents.
struct DeltaJunction {
    double C0 = 0.0, dC = 0.0, sign = 1.0, omega_m = 0.0;
    std::array<double, 3> phase{};
    double L0 = 0.0, g0 = 0.0;  // g0 = 1/R0, zero when lossless

    void caps(double t, double* c, double* cdot) const {
        for (int n = 0; n < 3; ++n) {
            const double u = omega_m * t + phase[static_cast<std::size_t>(n)];
            c[n] = C0 + sign * dC * std::cos(u);
            cdot[n] = -sign * dC * omega_m * std::sin(u);
        }
    }

    /// Ring-node voltage offsets from the tank voltages (sum of offsets = 0).
    static void node_offsets(const double* v, double* du) {
        du[0] = (v[0] - v[1]) / 3.0;
        du[1] = du[0] + v[1];
        du[2] = du[0] - v[0];
    }

    /// d(charge)/dt given injected node currents; the circulating ring current
    /// is eliminated so that d/dt sum(q_n / C_n) = 0 holds exactly.
    void charge_rates(const double* v, const double* il, const double* inj, const double* c,
                      const double* cdot, double* dq) const {
        const double ip[3] = {0.0, -inj[0], -inj[0] - inj[1]};
        double num = 0.0, den = 0.0;
        double base[3];
        for (int n = 0; n < 3; ++n) {
            base[n] = ip[n] - il[n] - g0 * v[n];
            num += v[n] * cdot[n] / c[n] - base[n] / c[n];
            den += 1.0 / c[n];
        }
        const double circ = num / den;
        for (int n = 0; n < 3; ++n) dq[n] = base[n] + circ;
    }
};

/// One bandpass/wye star: series (L0, C_n(t), Rs) tanks from the port nodes to
/// a floating star node. States are capacitor charges and tank currents.
struct WyeJunction {
    double C0 = 0.0, dC = 0.0, sign = 1.0, omega_m = 0.0;
    std::array<double, 3> phase{};
    double L0 = 0.0, rs = 0.0;

    void caps(double t, double* c, double* cdot = nullptr) const {
        for (int n = 0; n < 3; ++n) {
            const double u = omega_m * t + phase[static_cast<std::size_t>(n)];
            c[n] = C0 + sign * dC * std::cos(u);
            if (cdot) cdot[n] = -sign * dC * omega_m * std::sin(u);
        }
    }

    /// d(current)/dt given the port-node voltages; the star voltage is
    /// eliminated so that d/dt sum(i_n) = 0 holds exactly.
    void current_rates(const double* u, const double* il, const double* vc, double* dil) const {
        double vstar = 0.0;
        for (int n = 0; n < 3; ++n) vstar += (u[n] - rs * il[n] - vc[n]) / 3.0;
        for (int n = 0; n < 3; ++n) dil[n] = (u[n] - vstar - rs * il[n] - vc[n]) / L0;
    }
};

}  // namespace td

// ---------------------------------------------------------------------------
// Assembled model.
// ---------------------------------------------------------------------------

struct PortProbe {
    std::array<double, 3> w{};   // port voltages
    std::array<double, 3> is{};  // source currents into the network
    std::array<double, 6> tank_v{};  // capacitor voltages
    std::array<double, 6> tank_i{};  // inductor / tank currents
    std::array<double, 6> tank_cdot{};
    int n_tanks = 3;
};

/// First-order LPTV state-space model of one of the four circulator
/// topologies, in the exact charge/flux formulation.
class StateSpaceModel {
  public:
    StateSpaceModel(Topology topology, const CircuitParams& cp, const ModulationParams& mp,
                    int excitation_port, bool composed = false)
        : topology_(topology), cp_(cp), mp_(mp), port_(excitation_port), composed_(composed) {
        cp.validate();
        mp.validate();
        if (excitation_port < 0 || excitation_port > 2)
            throw std::invalid_argument("StateSpaceModel: excitation_port must be 0..2");
        const DerivedParams d = derive(cp);
        omega0_ = d.omega0;
        ql_ = d.Ql;

        const double g0 = cp.lossless() ? 0.0 : 1.0 / d.R0;
        const double rs = cp.lossless() ? 0.0 : omega0_ * cp.L0 / cp.Q0;
        // The delta ring as wired below runs opposite to the port numbering,
        // so its spatial phase progression is negated; that keeps "clockwise"
        // meaning circulation 1->2->3 in all four topologies.
        std::array<double, 3> ph_wye{mp.phase(0), mp.phase(1), mp.phase(2)};
        std::array<double, 3> ph_delta{};
        std::array<double, 3> ph_wye_anti{}, ph_delta_anti{};
        for (int n = 0; n < 3; ++n) {
            const std::size_t i = static_cast<std::size_t>(n);
            ph_delta[i] = 2.0 * mp.theta - ph_wye[i];
            ph_wye_anti[i] = ph_wye[i] + std::numbers::pi;
            ph_delta_anti[i] = ph_delta[i] + std::numbers::pi;
        }

        const double dC = mp.dc_ratio * cp.C0;
        delta_[0] = {cp.C0, dC, +1.0, mp.omega_m, ph_delta, cp.L0, g0};
        // The monolithic differential build realizes the anti-phase bias as a
        // sign flip; the composed build uses theta + 180 deg on a plain
        // upper-style junction. The two must be physically identical.
        if (composed_)
            delta_[1] = {cp.C0, dC, +1.0, mp.omega_m, ph_delta_anti, cp.L0, g0};
        else
            delta_[1] = {cp.C0, dC, -1.0, mp.omega_m, ph_delta, cp.L0, g0};
        wye_[0] = {cp.C0, dC, +1.0, mp.omega_m, ph_wye, cp.L0, rs};
        if (composed_)
            wye_[1] = {cp.C0, dC, +1.0, mp.omega_m, ph_wye_anti, cp.L0, rs};
        else
            wye_[1] = {cp.C0, dC, -1.0, mp.omega_m, ph_wye, cp.L0, rs};

        switch (topology) {
            case Topology::se_delta:
            case Topology::se_wye: dim_ = 6; tanks_ = 3; break;
            case Topology::diff_voltage:
            case Topology::diff_current: dim_ = 12; tanks_ = 6; break;
        }
    }

    Topology topology() const { return topology_; }
    const CircuitParams& circuit() const { return cp_; }
    const ModulationParams& modulation() const { return mp_; }
    int excitation_port() const { return port_; }
    int dim() const { return dim_; }
    int tanks() const { return tanks_; }
    double omega0() const { return omega0_; }
    double loaded_q() const { return ql_; }

    std::array<double, td::kMaxDim> state_scales(double amplitude) const {
        std::array<double, td::kMaxDim> s{};
        const double qs = cp_.C0 * amplitude;
        const double is = amplitude / (omega0_ * cp_.L0);
        const int half = dim_ / 2;
        for (int i = 0; i < half; ++i) s[static_cast<std::size_t>(i)] = qs;
        for (int i = half; i < dim_; ++i) s[static_cast<std::size_t>(i)] = is;
        return s;
    }

    void deriv(double t, const double* x, double* dx, double omega, double amplitude) const {
        double vs[3] = {0.0, 0.0, 0.0};
        vs[port_] = amplitude * std::cos(omega * t);
        deriv_vs(t, x, dx, vs);
    }

    PortProbe probe(double t, const double* x, double omega, double amplitude) const {
        double vs[3] = {0.0, 0.0, 0.0};
        vs[port_] = amplitude * std::cos(omega * t);
        return probe_vs(t, x, vs);
    }

    void deriv_vs(double t, const double* x, double* dx, const double* vs) const {
        switch (topology_) {
            case Topology::se_delta: {
                double c[3], cdot[3], v[3], u[3], inj[3];
                delta_[0].caps(t, c, cdot);
                for (int n = 0; n < 3; ++n) v[n] = x[n] / c[n];
                node_voltages_se(v, vs, u);
                for (int n = 0; n < 3; ++n) inj[n] = (vs[n] - u[n]) / cp_.Z0;
                delta_[0].charge_rates(v, x + 3, inj, c, cdot, dx);
                for (int n = 0; n < 3; ++n) dx[3 + n] = v[n] / cp_.L0;
                break;
            }
            case Topology::diff_voltage: {
                double cu[3], cdu[3], cl[3], cdl[3], vu[3], vl[3], g[3], w[3], is[3];
                delta_[0].caps(t, cu, cdu);
                delta_[1].caps(t, cl, cdl);
                for (int n = 0; n < 3; ++n) {
                    vu[n] = x[n] / cu[n];
                    vl[n] = x[3 + n] / cl[n];
                    g[n] = vu[n] - vl[n];
                }
                node_voltages_se(g, vs, w);
                for (int n = 0; n < 3; ++n) is[n] = (vs[n] - w[n]) / cp_.Z0;
                double inj_l[3] = {-is[0], -is[1], -is[2]};
                delta_[0].charge_rates(vu, x + 6, is, cu, cdu, dx);
                delta_[1].charge_rates(vl, x + 9, inj_l, cl, cdl, dx + 3);
                for (int n = 0; n < 3; ++n) {
                    dx[6 + n] = vu[n] / cp_.L0;
                    dx[9 + n] = vl[n] / cp_.L0;
                }
                break;
            }
            case Topology::se_wye: {
                double c[3], vc[3], u[3];
                wye_[0].caps(t, c);
                for (int n = 0; n < 3; ++n) {
                    vc[n] = x[n] / c[n];
                    u[n] = vs[n] - cp_.Z0 * x[3 + n];
                }
                wye_[0].current_rates(u, x + 3, vc, dx + 3);
                for (int n = 0; n < 3; ++n) dx[n] = x[3 + n];
                break;
            }
            case Topology::diff_current: {
                double cu[3], cl[3], vcu[3], vcl[3], u[3];
                wye_[0].caps(t, cu);
                wye_[1].caps(t, cl);
                const double* ilu = x + 6;
                const double* ill = x + 9;
                for (int n = 0; n < 3; ++n) {
                    vcu[n] = x[n] / cu[n];
                    vcl[n] = x[3 + n] / cl[n];
                    u[n] = vs[n] - cp_.Z0 * (ilu[n] + ill[n]);
                }
                wye_[0].current_rates(u, ilu, vcu, dx + 6);
                wye_[1].current_rates(u, ill, vcl, dx + 9);
                for (int n = 0; n < 3; ++n) {
                    dx[n] = ilu[n];
                    dx[3 + n] = ill[n];
                }
                break;
            }
        }
    }

    PortProbe probe_vs(double t, const double* x, const double* vs) const {
        PortProbe pr;
        pr.n_tanks = tanks_;
        switch (topology_) {
            case Topology::se_delta: {
                double c[3], cdot[3], v[3], u[3];
                delta_[0].caps(t, c, cdot);
                for (int n = 0; n < 3; ++n) v[n] = x[n] / c[n];
                node_voltages_se(v, vs, u);
                for (int n = 0; n < 3; ++n) {
                    pr.w[static_cast<std::size_t>(n)] = u[n];
                    pr.is[static_cast<std::size_t>(n)] = (vs[n] - u[n]) / cp_.Z0;
                    pr.tank_v[static_cast<std::size_t>(n)] = v[n];
                    pr.tank_i[static_cast<std::size_t>(n)] = x[3 + n];
                    pr.tank_cdot[static_cast<std::size_t>(n)] = cdot[n];
                }
                break;
            }
            case Topology::diff_voltage: {
                double cu[3], cdu[3], cl[3], cdl[3], vu[3], vl[3], g[3], w[3];
                delta_[0].caps(t, cu, cdu);
                delta_[1].caps(t, cl, cdl);
                for (int n = 0; n < 3; ++n) {
                    vu[n] = x[n] / cu[n];
                    vl[n] = x[3 + n] / cl[n];
                    g[n] = vu[n] - vl[n];
                }
                node_voltages_se(g, vs, w);
                for (int n = 0; n < 3; ++n) {
                    pr.w[static_cast<std::size_t>(n)] = w[n];
                    pr.is[static_cast<std::size_t>(n)] = (vs[n] - w[n]) / cp_.Z0;
                    pr.tank_v[static_cast<std::size_t>(n)] = vu[n];
                    pr.tank_v[static_cast<std::size_t>(3 + n)] = vl[n];
                    pr.tank_i[static_cast<std::size_t>(n)] = x[6 + n];
                    pr.tank_i[static_cast<std::size_t>(3 + n)] = x[9 + n];
                    pr.tank_cdot[static_cast<std::size_t>(n)] = cdu[n];
                    pr.tank_cdot[static_cast<std::size_t>(3 + n)] = cdl[n];
                }
                break;
            }
            case Topology::se_wye: {
                double c[3], cdot[3];
                wye_[0].caps(t, c, cdot);
                for (int n = 0; n < 3; ++n) {
                    const double u = vs[n] - cp_.Z0 * x[3 + n];
                    pr.w[static_cast<std::size_t>(n)] = u;
                    pr.is[static_cast<std::size_t>(n)] = x[3 + n];
                    pr.tank_v[static_cast<std::size_t>(n)] = x[n] / c[n];
                    pr.tank_i[static_cast<std::size_t>(n)] = x[3 + n];
                    pr.tank_cdot[static_cast<std::size_t>(n)] = cdot[n];
                }
                break;
            }
            case Topology::diff_current: {
                double cu[3], cdu[3], cl[3], cdl[3];
                wye_[0].caps(t, cu, cdu);
                wye_[1].caps(t, cl, cdl);
                for (int n = 0; n < 3; ++n) {
                    const double isn = x[6 + n] + x[9 + n];
                    pr.w[static_cast<std::size_t>(n)] = vs[n] - cp_.Z0 * isn;
                    pr.is[static_cast<std::size_t>(n)] = isn;
                    pr.tank_v[static_cast<std::size_t>(n)] = x[n] / cu[n];
                    pr.tank_v[static_cast<std::size_t>(3 + n)] = x[3 + n] / cl[n];
                    pr.tank_i[static_cast<std::size_t>(n)] = x[6 + n];
                    pr.tank_i[static_cast<std::size_t>(3 + n)] = x[9 + n];
                    pr.tank_cdot[static_cast<std::size_t>(n)] = cdu[n];
                    pr.tank_cdot[static_cast<std::size_t>(3 + n)] = cdl[n];
                }
                break;
            }
        }
        return pr;
    }

  private:
    /// Ring-node voltages of a delta junction on Thevenin ports: offsets come
    /// from the tank voltages and the common level from sum(u) = sum(vs).
    static void node_voltages_se(const double* v, const double* vs, double* u) {
        double du[3];
        td::DeltaJunction::node_offsets(v, du);
        const double ubar = (vs[0] + vs[1] + vs[2]) / 3.0;
        for (int n = 0; n < 3; ++n) u[n] = ubar + du[n];
    }

    Topology topology_;
    CircuitParams cp_;
    ModulationParams mp_;
    int port_;
    bool composed_;
    int dim_ = 6;
    int tanks_ = 3;
    double omega0_ = 0.0, ql_ = 0.0;
    std::array<td::DeltaJunction, 2> delta_{};
    std::array<td::WyeJunction, 2> wye_{};
};

inline StateSpaceModel assemble(Topology topology, const CircuitParams& cp,
                                const ModulationParams& mp, int excitation_port) {
    return StateSpaceModel(topology, cp, mp, excitation_port);
}

/// Differential voltage-mode model built from two single-ended delta
/// junctions with a 180 deg modulation phase difference joined by ideal
/// differential ports. Physically identical to assemble(diff_voltage, ...).
inline StateSpaceModel compose_diff_voltage(const CircuitParams& cp, const ModulationParams& mp,
                                            int excitation_port) {
    return StateSpaceModel(Topology::diff_voltage, cp, mp, excitation_port, true);
}

// ---------------------------------------------------------------------------
// Steady state, spectra, S-parameters.
// ---------------------------------------------------------------------------

struct TdOptions {
    int samples = 4096;              // per common period, power of two
    double settle_factor = 12.0;     // periods ~ settle_factor*Ql*wm/w0 + offset
    double settle_offset = 20.0;
    double residual_threshold = 1e-9;
    int max_rounds = 4;
    int qmax = 64;
    td::Rk45Options rk{};
};

struct SteadyState {
    double omega = 0.0;      // snapped drive frequency
    long p = 1;
    int q = 1;
    double period = 0.0;     // common period 2 pi q / wm
    int samples = 0;
    int settle_periods = 0;
    double residual = 0.0;   // relative L2 difference of the last two periods
    double amplitude = 1.0;
    int excitation_port = 0;
    int n_tanks = 3;

    std::vector<double> t;
    std::array<std::vector<double>, 3> port_v, port_i;
    std::array<std::vector<double>, 6> tank_v, tank_i, tank_cdot;
    std::vector<double> drive;  // source voltage waveform at the driven port
};

inline SteadyState steady_state(const StateSpaceModel& model, double omega_rf, double amplitude,
                                const TdOptions& opt = {}) {
    const auto snap = snap_commensurate(omega_rf, model.modulation().omega_m, opt.qmax);
    const double w = snap.omega_snapped;
    const double period = kTwoPi * snap.q / model.modulation().omega_m;
    const int M = opt.samples;
    if (M <= 0 || (M & (M - 1)) != 0)
        throw std::invalid_argument("steady_state: samples must be a power of two");

    const double ratio = model.modulation().omega_m / model.omega0();
    const int settle0 = static_cast<int>(
        std::ceil(opt.settle_factor * model.loaded_q() * ratio + opt.settle_offset));

    auto f = [&model, w, amplitude](double t, const double* x, double* dx) {
        model.deriv(t, x, dx, w, amplitude);
    };
    td::Rk45<decltype(f)> rk(f, model.dim(), model.state_scales(amplitude), opt.rk);

    double x[td::kMaxDim] = {0.0};
    double t = 0.0;
    rk.integrate(t, settle0 * period, x);
    int settled = settle0;

    auto sample_period = [&](std::vector<std::array<double, td::kMaxDim>>& states) {
        states.resize(static_cast<std::size_t>(M));
        const double t0 = t;
        for (int k = 0; k < M; ++k) {
            const double tk = t0 + period * k / M;
            if (tk > t) rk.integrate(t, tk, x);
            auto& row = states[static_cast<std::size_t>(k)];
            for (int i = 0; i < model.dim(); ++i) row[static_cast<std::size_t>(i)] = x[i];
        }
        rk.integrate(t, t0 + period, x);
    };

    std::vector<std::array<double, td::kMaxDim>> prev, cur;
    sample_period(prev);
    double residual = std::numeric_limits<double>::infinity();
    int round = 0;
    for (;;) {
        sample_period(cur);
        settled += 1;
        double num = 0.0, den = 0.0;
        for (int k = 0; k < M; ++k)
            for (int i = 0; i < model.dim(); ++i) {
                const double a = cur[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
                const double b = prev[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
                num += (a - b) * (a - b);
                den += a * a;
            }
        residual = den > 0.0 ? std::sqrt(num / den) : 0.0;
        if (residual < opt.residual_threshold) break;
        if (++round >= opt.max_rounds) {
            // one more settle block before each retry round
            throw ConvergenceError("steady_state: transient residual " + std::to_string(residual) +
                                   " above threshold after " + std::to_string(settled) +
                                   " periods");
        }
        std::swap(prev, cur);
        rk.integrate(t, t + settle0 * period, x);
        settled += settle0;
        sample_period(prev);
        settled += 1;
    }

    SteadyState ss;
    ss.omega = w;
    ss.p = snap.p;
    ss.q = snap.q;
    ss.period = period;
    ss.samples = M;
    ss.settle_periods = settled;
    ss.residual = residual;
    ss.amplitude = amplitude;
    ss.excitation_port = model.excitation_port();
    ss.n_tanks = model.tanks();
    ss.t.resize(static_cast<std::size_t>(M));
    for (auto& v : ss.port_v) v.resize(static_cast<std::size_t>(M));
    for (auto& v : ss.port_i) v.resize(static_cast<std::size_t>(M));
    for (int n = 0; n < model.tanks(); ++n) {
        ss.tank_v[static_cast<std::size_t>(n)].resize(static_cast<std::size_t>(M));
        ss.tank_i[static_cast<std::size_t>(n)].resize(static_cast<std::size_t>(M));
        ss.tank_cdot[static_cast<std::size_t>(n)].resize(static_cast<std::size_t>(M));
    }
    ss.drive.resize(static_cast<std::size_t>(M));

    // The sampled window starts one period before the current time.
    const double t0 = t - period;
    for (int k = 0; k < M; ++k) {
        const double tk = t0 + period * k / M;
        const auto& row = cur[static_cast<std::size_t>(k)];
        const PortProbe pr = model.probe(tk, row.data(), w, amplitude);
        ss.t[static_cast<std::size_t>(k)] = tk;
        for (int n = 0; n < 3; ++n) {
            ss.port_v[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)] =
                pr.w[static_cast<std::size_t>(n)];
            ss.port_i[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)] =
                pr.is[static_cast<std::size_t>(n)];
        }
        for (int n = 0; n < model.tanks(); ++n) {
            ss.tank_v[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)] =
                pr.tank_v[static_cast<std::size_t>(n)];
            ss.tank_i[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)] =
                pr.tank_i[static_cast<std::size_t>(n)];
            ss.tank_cdot[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)] =
                pr.tank_cdot[static_cast<std::size_t>(n)];
        }
        ss.drive[static_cast<std::size_t>(k)] = amplitude * std::cos(w * tk);
    }
    return ss;
}

/// Harmonic content of the outgoing port waves, normalized to the incident
/// wave, at frequencies w + k wm for |k| <= kmax.
struct PortSpectrum {
    double omega = 0.0;
    double omega_m = 0.0;
    long p = 1;
    int q = 1;
    int kmax = 8;
    double incident_mag = 0.0;
    std::array<std::vector<cplx>, 3> amp;  // index k + kmax
    double floor_dbc = -300.0;             // max off-harmonic bin
};

inline PortSpectrum port_spectrum_of(const SteadyState& ss, const ModulationParams& mp,
                                     int kmax = 8) {
    PortSpectrum out;
    out.omega = ss.omega;
    out.omega_m = mp.omega_m;
    out.p = ss.p;
    out.q = ss.q;
    out.kmax = kmax;

    const int M = ss.samples;
    // incident wave a(t) = vs(t)/2 at the driven port
    std::vector<double> a(static_cast<std::size_t>(M));
    for (int k = 0; k < M; ++k) a[static_cast<std::size_t>(k)] = 0.5 * ss.drive[static_cast<std::size_t>(k)];
    const auto abins = harmonic_amplitudes(a);
    const cplx aref = amplitude_at(abins, ss.p);
    out.incident_mag = std::abs(aref);

    std::vector<long> signal_bins;
    for (int k = -kmax; k <= kmax; ++k) signal_bins.push_back(std::labs(ss.p + k * ss.q));

    double floor_amp = 0.0;
    for (int port = 0; port < 3; ++port) {
        std::vector<double> b = ss.port_v[static_cast<std::size_t>(port)];
        if (port == ss.excitation_port)
            for (int k = 0; k < M; ++k) b[static_cast<std::size_t>(k)] -= a[static_cast<std::size_t>(k)];
        const auto bins = harmonic_amplitudes(b);
        auto& dst = out.amp[static_cast<std::size_t>(port)];
        dst.resize(static_cast<std::size_t>(2 * kmax + 1));
        for (int k = -kmax; k <= kmax; ++k)
            dst[static_cast<std::size_t>(k + kmax)] = amplitude_at(bins, ss.p + k * ss.q) / aref;
        for (long l = 0; l < M / 2; ++l) {
            bool is_signal = false;
            for (long sb : signal_bins)
                if (l == sb) { is_signal = true; break; }
            if (!is_signal) floor_amp = std::max(floor_amp, std::abs(bins[static_cast<std::size_t>(l)]));
        }
    }
    out.floor_dbc = 20.0 * std::log10(std::max(floor_amp / std::abs(aref), 1e-300));
    return out;
}

inline PortSpectrum port_spectrum(const StateSpaceModel& model, double omega_rf, double amplitude,
                                  const TdOptions& opt = {}, int kmax = 8) {
    return port_spectrum_of(steady_state(model, omega_rf, amplitude, opt), model.modulation(), kmax);
}

/// Full 3x3 S-matrix per grid frequency from time-domain runs, one run per
/// excitation port; no symmetry shortcut is used.
inline SParameterSet sparams_td(Topology topology, const CircuitParams& cp,
                                const ModulationParams& mp, std::span<const double> omega_grid,
                                const TdOptions& opt = {}) {
    if (omega_grid.empty()) throw std::invalid_argument("sparams_td: empty grid");
    SParameterSet sp;
    for (double wreq : omega_grid) {
        Mat3 s;
        double wsnap = 0.0;
        for (int exc = 0; exc < 3; ++exc) {
            const StateSpaceModel model = assemble(topology, cp, mp, exc);
            const SteadyState ss = steady_state(model, wreq, 1.0, opt);
            wsnap = ss.omega;
            const auto spec = port_spectrum_of(ss, mp, 1);
            for (int out = 0; out < 3; ++out)
                s(static_cast<std::size_t>(out), static_cast<std::size_t>(exc)) =
                    spec.amp[static_cast<std::size_t>(out)][1];  // k = 0 bin
        }
        if (!sp.frequencies.empty() && wsnap <= sp.frequencies.back()) continue;
        sp.frequencies.push_back(wsnap);
        sp.matrices.push_back(s);
    }
    sp.validate();
    return sp;
}

/// Largest in-phase-mode fraction over the steady-state window, one value per
/// junction: max|mean of tank values| / max|tank value|. Delta junctions use
/// tank voltages, wye junctions tank currents.
inline std::vector<double> inphase_residual(Topology topology, const SteadyState& ss) {
    const bool wye = topology == Topology::se_wye || topology == Topology::diff_current;
    const auto& sig = wye ? ss.tank_i : ss.tank_v;
    const int njunc = ss.n_tanks / 3;
    std::vector<double> out;
    for (int j = 0; j < njunc; ++j) {
        double max_mode = 0.0, max_tank = 0.0;
        for (int k = 0; k < ss.samples; ++k) {
            double mean = 0.0;
            for (int n = 0; n < 3; ++n) {
                const double v = sig[static_cast<std::size_t>(3 * j + n)][static_cast<std::size_t>(k)];
                mean += v / 3.0;
                max_tank = std::max(max_tank, std::abs(v));
            }
            max_mode = std::max(max_mode, std::abs(mean));
        }
        out.push_back(max_tank > 0.0 ? max_mode / max_tank : 0.0);
    }
    return out;
}

struct PowerBalance {
    double source = 0.0;      // mean vs * is at the driven port
    double pump = 0.0;        // parametric work done by the modulation
    double ports = 0.0;       // sum of Z0 <is^2> over ports
    double dissipated = 0.0;  // tank losses
    double rel_error = 0.0;
};

inline PowerBalance power_balance(Topology topology, const CircuitParams& cp,
                                  const SteadyState& ss) {
    PowerBalance pb;
    const int M = ss.samples;
    auto mean = [M](auto&& f) {
        double s = 0.0;
        for (int k = 0; k < M; ++k) s += f(k);
        return s / M;
    };
    pb.source = mean([&](int k) {
        return ss.drive[static_cast<std::size_t>(k)] *
               ss.port_i[static_cast<std::size_t>(ss.excitation_port)][static_cast<std::size_t>(k)];
    });
    for (int n = 0; n < 3; ++n)
        pb.ports += cp.Z0 * mean([&](int k) {
            const double i = ss.port_i[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
            return i * i;
        });
    // power delivered by the pump: a capacitor swallows <v i> = <Cdot v^2>/2
    // beyond the stored-energy rate, so the modulation injects the negative
    for (int n = 0; n < ss.n_tanks; ++n)
        pb.pump -= 0.5 * mean([&](int k) {
            const double v = ss.tank_v[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
            const double cd =
                ss.tank_cdot[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
            return cd * v * v;
        });
    if (!cp.lossless()) {
        const DerivedParams d = derive(cp);
        const bool wye = topology == Topology::se_wye || topology == Topology::diff_current;
        const double rs = d.omega0 * cp.L0 / cp.Q0;
        for (int n = 0; n < ss.n_tanks; ++n) {
            if (wye)
                pb.dissipated += rs * mean([&](int k) {
                    const double i = ss.tank_i[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
                    return i * i;
                });
            else
                pb.dissipated += mean([&](int k) {
                    const double v = ss.tank_v[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
                    return v * v;
                }) / d.R0;
        }
    }
    pb.rel_error = std::abs(pb.source + pb.pump - pb.ports - pb.dissipated) /
                   std::max(std::abs(pb.source), 1e-300);
    return pb;
}

}  // namespace stmcirc
