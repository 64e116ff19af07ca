#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "stmcirc/design.hpp"
#include "stmcirc/junction_basis.hpp"
#include "stmcirc/tdsim.hpp"
#include "stmcirc/voltage_mode.hpp"

using namespace stmcirc;
using Catch::Approx;

namespace {

CircuitParams make_cp(double w0_over_wrf, double q0, double z0, double wrf = kTwoPi * 1e9) {
    CircuitParams cp;
    cp.L0 = 4.3e-9;
    cp.Q0 = q0;
    cp.Z0 = z0;
    const double w0 = w0_over_wrf * wrf;
    cp.C0 = 1.0 / (w0 * w0 * cp.L0);
    return cp;
}

ModulationParams make_mp(double fm_frac, double dc, double wrf = kTwoPi * 1e9) {
    ModulationParams mp;
    mp.omega_m = fm_frac * wrf;
    mp.dc_ratio = dc;
    return mp;
}

TdOptions fast_opts() {
    TdOptions o;
    o.samples = 1024;
    return o;
}

}  // namespace

TEST_CASE("commensurate snapping", "[tdsim][snap]") {
    const double wm = kTwoPi * 1e8;
    auto s = snap_commensurate(kTwoPi * 1e9, wm);
    CHECK(s.p == 10);
    CHECK(s.q == 1);
    CHECK(s.omega_snapped == Approx(kTwoPi * 1e9).epsilon(1e-14));

    s = snap_commensurate(kTwoPi * 1.026e9, wm);
    CHECK(s.q <= 64);
    CHECK(std::abs(s.rel_shift) < 2e-4);
    // snapping an already snapped frequency is exact
    const auto s2 = snap_commensurate(s.omega_snapped, wm);
    CHECK(s2.p * s.q == s.p * s2.q);
    CHECK(s2.omega_snapped == Approx(s.omega_snapped).epsilon(1e-14));
}

TEST_CASE("state dimensions per topology", "[tdsim]") {
    const CircuitParams cp = make_cp(1.0, 70.0, 100.0);
    const ModulationParams mp = make_mp(0.1, 0.5);
    CHECK(assemble(Topology::se_delta, cp, mp, 0).dim() == 6);
    CHECK(assemble(Topology::se_wye, cp, mp, 0).dim() == 6);
    CHECK(assemble(Topology::diff_voltage, cp, mp, 0).dim() == 12);
    CHECK(assemble(Topology::diff_current, cp, mp, 0).dim() == 12);
    CHECK_THROWS_AS(assemble(Topology::se_delta, cp, mp, 3), std::invalid_argument);
    ModulationParams bad = mp;
    bad.dc_ratio = 1.0;
    CHECK_THROWS_AS(assemble(Topology::se_delta, cp, bad, 0), std::invalid_argument);
}

TEST_CASE("time-invariant limit matches the closed form to solver precision",
          "[tdsim][oracle]") {
    const CircuitParams cp = make_cp(1.05, 70.0, 100.0);
    const ModulationParams mp = make_mp(0.1, 0.0);
    const double grid[] = {kTwoPi * 0.9e9, kTwoPi * 1.0e9, kTwoPi * 1.1e9};
    const SParameterSet td = sparams_td(Topology::diff_voltage, cp, mp, grid, fast_opts());
    const SParameterSet an = vm_sparams(td.frequencies, cp, mp);
    for (std::size_t i = 0; i < td.size(); ++i)
        CHECK(max_abs_diff(td.matrices[i], an.matrices[i]) < 1e-9);
}

TEST_CASE("unmodulated drive leaves a pure sinusoid", "[tdsim]") {
    const CircuitParams cp = make_cp(1.0, 70.0, 100.0);
    const ModulationParams mp = make_mp(0.1, 0.0);
    const auto model = assemble(Topology::diff_voltage, cp, mp, 0);
    const auto spec = port_spectrum(model, kTwoPi * 1.0e9, 1.0, fast_opts());
    for (int port = 0; port < 3; ++port)
        for (int k = -spec.kmax; k <= spec.kmax; ++k)
            if (k != 0)
                CHECK(std::abs(spec.amp[static_cast<std::size_t>(port)]
                                       [static_cast<std::size_t>(k + spec.kmax)]) < 1e-10);
    CHECK(spec.floor_dbc < -200.0);
}

TEST_CASE("steady state converges with ports loading a lossless junction", "[tdsim]") {
    CircuitParams cp = make_cp(0.99, 70.0, 100.0);
    cp.Q0 = std::numeric_limits<double>::infinity();
    const ModulationParams mp = make_mp(0.1, 0.5);
    const auto model = assemble(Topology::diff_voltage, cp, mp, 0);
    const SteadyState ss = steady_state(model, kTwoPi * 1.0e9, 1.0, fast_opts());
    CHECK(ss.residual < 1e-9);
}

TEST_CASE("superposition: doubling the drive doubles every sample", "[tdsim]") {
    const CircuitParams cp = make_cp(0.99, 70.0, 100.0);
    const ModulationParams mp = make_mp(0.1, 0.5);
    const auto model = assemble(Topology::diff_voltage, cp, mp, 0);
    TdOptions o = fast_opts();
    const SteadyState a = steady_state(model, kTwoPi * 1.0e9, 1.0, o);
    const SteadyState b = steady_state(model, kTwoPi * 1.0e9, 2.0, o);
    double worst = 0.0;
    for (int n = 0; n < 3; ++n)
        for (int k = 0; k < a.samples; ++k)
            worst = std::max(worst,
                             std::abs(2.0 * a.port_v[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)] -
                                      b.port_v[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)]));
    CHECK(worst < 1e-8);
}

TEST_CASE("power balance in steady state", "[tdsim]") {
    const ModulationParams mp = make_mp(0.1, 0.5);
    {
        const CircuitParams cp = make_cp(0.99, 70.0, 100.0);
        const auto model = assemble(Topology::diff_voltage, cp, mp, 0);
        const SteadyState ss = steady_state(model, kTwoPi * 1.0e9, 1.0, fast_opts());
        const PowerBalance pb = power_balance(Topology::diff_voltage, cp, ss);
        CHECK(pb.rel_error < 1e-8);
    }
    {
        CircuitParams cp = make_cp(0.99, 70.0, 100.0);
        cp.Q0 = std::numeric_limits<double>::infinity();
        const auto model = assemble(Topology::diff_voltage, cp, mp, 0);
        const SteadyState ss = steady_state(model, kTwoPi * 1.0e9, 1.0, fast_opts());
        const PowerBalance pb = power_balance(Topology::diff_voltage, cp, ss);
        CHECK(pb.rel_error < 1e-10);
    }
    {
        CircuitParams cp = make_cp(1.02, 70.0, 50.0);
        const auto model = assemble(Topology::diff_current, cp, mp, 0);
        const SteadyState ss = steady_state(model, kTwoPi * 1.0e9, 1.0, fast_opts());
        const PowerBalance pb = power_balance(Topology::diff_current, cp, ss);
        CHECK(pb.rel_error < 1e-8);
    }
}

TEST_CASE("in-phase mode stays structurally suppressed", "[tdsim]") {
    const ModulationParams mp = make_mp(0.1, 0.5);
    {
        const CircuitParams cp = make_cp(0.99, 70.0, 100.0);
        const auto model = assemble(Topology::diff_voltage, cp, mp, 0);
        const SteadyState ss = steady_state(model, kTwoPi * 1.0e9, 1.0, fast_opts());
        for (double r : inphase_residual(Topology::diff_voltage, ss)) CHECK(r < 1e-9);
    }
    {
        const CircuitParams cp = make_cp(1.0, 70.0, 50.0);
        const auto model = assemble(Topology::se_wye, cp, mp, 0);
        const SteadyState ss = steady_state(model, kTwoPi * 1.0e9, 1.0, fast_opts());
        for (double r : inphase_residual(Topology::se_wye, ss)) CHECK(r < 1e-9);
    }
}

TEST_CASE("modulated oracle agrees with the closed form at the reference point",
          "[tdsim][oracle]") {
    const auto [cp, mp] = reference_design();
    const double grid[] = {kTwoPi * 1.0e9};
    const SParameterSet td = sparams_td(Topology::diff_voltage, cp, mp, grid, fast_opts());
    const SParameterSet an = vm_sparams(td.frequencies, cp, mp);
    CHECK(max_abs_diff(td.matrices[0], an.matrices[0]) < 1e-3);
}

TEST_CASE("differential ports are free of intermodulation products", "[tdsim][pseudolti]") {
    const auto [cp, mp] = reference_design();
    const auto model = assemble(Topology::diff_voltage, cp, mp, 0);
    const auto spec = port_spectrum(model, kTwoPi * 1.0e9, 1.0, fast_opts());
    for (int port = 0; port < 3; ++port)
        for (int k = -spec.kmax; k <= spec.kmax; ++k)
            if (k != 0)
                CHECK(20.0 * std::log10(std::max(
                          std::abs(spec.amp[static_cast<std::size_t>(port)]
                                           [static_cast<std::size_t>(k + spec.kmax)]),
                          1e-300)) < -120.0);
}

TEST_CASE("single-ended junction leaks strong sidebands", "[tdsim]") {
    CircuitParams cp = make_cp(1.02, 70.0, 50.0);
    const ModulationParams mp = make_mp(0.1, 0.4);
    const auto model = assemble(Topology::se_delta, cp, mp, 0);
    const auto spec = port_spectrum(model, kTwoPi * 1.0e9, 1.0, fast_opts());
    double strongest = -300.0;
    for (int port = 0; port < 3; ++port)
        for (int k : {-1, 1})
            strongest = std::max(strongest,
                                 20.0 * std::log10(std::abs(
                                     spec.amp[static_cast<std::size_t>(port)]
                                             [static_cast<std::size_t>(k + spec.kmax)])));
    CHECK(strongest > -40.0);  // single-ended sidebands are tens of dB, not numeric floor
}

TEST_CASE("global modulation phase rotates only the sidebands", "[tdsim][phaselaw]") {
    CircuitParams cp = make_cp(1.02, 70.0, 50.0);
    ModulationParams mp0 = make_mp(0.1, 0.4);
    const double theta = 0.8;
    ModulationParams mp1 = mp0;
    mp1.theta = theta;

    const auto s0 = port_spectrum(assemble(Topology::se_delta, cp, mp0, 0), kTwoPi * 1.0e9, 1.0,
                                  fast_opts());
    const auto s1 = port_spectrum(assemble(Topology::se_delta, cp, mp1, 0), kTwoPi * 1.0e9, 1.0,
                                  fast_opts());
    for (int port = 0; port < 3; ++port) {
        const auto& a0 = s0.amp[static_cast<std::size_t>(port)];
        const auto& a1 = s1.amp[static_cast<std::size_t>(port)];
        const std::size_t kc = static_cast<std::size_t>(s0.kmax);
        CHECK(std::abs(a1[kc] - a0[kc]) < 1e-9);
        // under the e^{+j w t} convention the up-converted sideband gains
        // e^{+j theta} and the down-converted one e^{-j theta}
        CHECK(std::abs(a1[kc + 1] - a0[kc + 1] * std::polar(1.0, theta)) < 1e-6);
        CHECK(std::abs(a1[kc - 1] - a0[kc - 1] * std::polar(1.0, -theta)) < 1e-6);
    }
}

TEST_CASE("anti-phase composition of two single-ended rings equals the differential model",
          "[tdsim][composition]") {
    const auto [cp, mp] = reference_design();
    const auto mono = assemble(Topology::diff_voltage, cp, mp, 0);
    const auto comp = compose_diff_voltage(cp, mp, 0);
    TdOptions o = fast_opts();
    const SteadyState sm = steady_state(mono, kTwoPi * 1.0e9, 1.0, o);
    const SteadyState sc = steady_state(comp, kTwoPi * 1.0e9, 1.0, o);
    double worst = 0.0;
    for (int n = 0; n < 3; ++n)
        for (int k = 0; k < sm.samples; ++k)
            worst = std::max(worst,
                             std::abs(sm.port_v[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)] -
                                      sc.port_v[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)]));
    CHECK(worst < 1e-9);
}

TEST_CASE("internal tank spectra hold only the mode frequencies", "[tdsim][modes]") {
    const auto [cp, mp] = reference_design();
    const auto model = assemble(Topology::diff_voltage, cp, mp, 0);
    const SteadyState ss = steady_state(model, kTwoPi * 1.0e9, 1.0, fast_opts());

    // project tank voltages onto the rotating modes of the differential and
    // common combinations, then look at their spectra
    const int M = ss.samples;
    std::vector<cplx> vd_p(static_cast<std::size_t>(M)), vc_p(static_cast<std::size_t>(M));
    std::vector<cplx> vd_m(static_cast<std::size_t>(M)), vc_m(static_cast<std::size_t>(M));
    for (int k = 0; k < M; ++k) {
        Vec3 vd, vc;
        for (int n = 0; n < 3; ++n) {
            const double vu = ss.tank_v[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
            const double vl = ss.tank_v[static_cast<std::size_t>(n + 3)][static_cast<std::size_t>(k)];
            vd[static_cast<std::size_t>(n)] = 0.5 * (vu - vl);
            vc[static_cast<std::size_t>(n)] = 0.5 * (vu + vl);
        }
        const Vec3 md = to_modes(vd);
        const Vec3 mc = to_modes(vc);
        vd_p[static_cast<std::size_t>(k)] = md[1];
        vd_m[static_cast<std::size_t>(k)] = md[2];
        vc_p[static_cast<std::size_t>(k)] = mc[1];
        vc_m[static_cast<std::size_t>(k)] = mc[2];
    }
    // complex amplitude of e^{+j l w1 t} in the projected series; real tank
    // waveforms put half the mode amplitude in the positive-frequency bin
    auto dft = [&](const std::vector<cplx>& x, long l) {
        cplx acc = 0.0;
        for (int k = 0; k < M; ++k)
            acc += x[static_cast<std::size_t>(k)] *
                   std::polar(1.0, -kTwoPi * static_cast<double>(l) * k / M);
        return 2.0 * acc / static_cast<double>(M);
    };
    const double a_ref = 0.5;  // incident amplitude for unit drive

    // differential rotating modes live exclusively at the drive frequency
    CHECK(std::abs(dft(vd_p, ss.p)) + std::abs(dft(vd_m, ss.p)) > 0.01);
    for (int k : {-2, -1, 1, 2}) {
        CHECK(std::abs(dft(vd_p, ss.p + k * ss.q)) / a_ref < 1e-6);
        CHECK(std::abs(dft(vd_m, ss.p + k * ss.q)) / a_ref < 1e-6);
    }
    // common modes live exclusively at the two first-order sideband offsets;
    // exactly one rotating sense holds each sideband
    const double up0 = std::abs(dft(vc_p, ss.p + ss.q));
    const double up1 = std::abs(dft(vc_m, ss.p + ss.q));
    const double dn0 = std::abs(dft(vc_p, ss.p - ss.q));
    const double dn1 = std::abs(dft(vc_m, ss.p - ss.q));
    CHECK(std::max(up0, up1) / a_ref > 1e-3);
    CHECK(std::min(up0, up1) / a_ref < 1e-6);
    CHECK(std::max(dn0, dn1) / a_ref > 1e-3);
    CHECK(std::min(dn0, dn1) / a_ref < 1e-6);
    for (int k : {-2, 0, 2}) {
        CHECK(std::abs(dft(vc_p, ss.p + k * ss.q)) / a_ref < 1e-6);
        CHECK(std::abs(dft(vc_m, ss.p + k * ss.q)) / a_ref < 1e-6);
    }

    // the sideband amplitudes match the closed-form common-mode solution
    const ModeResponseVM mr = vm_modes(ss.omega, cp, mp);
    CHECK(std::max(up0, up1) == Approx(std::abs(mr.vc_minus_up)).epsilon(1e-3));
    CHECK(std::max(dn0, dn1) == Approx(std::abs(mr.vc_plus_down)).epsilon(1e-3));
}

TEST_CASE("divergence diagnostics trip when the residual cannot settle", "[tdsim]") {
    const CircuitParams cp = make_cp(0.99, 70.0, 100.0);
    const ModulationParams mp = make_mp(0.1, 0.5);
    const auto model = assemble(Topology::diff_voltage, cp, mp, 0);
    TdOptions o = fast_opts();
    o.settle_factor = 0.0;
    o.settle_offset = 1.0;  // one period cannot reach steady state
    o.max_rounds = 1;
    o.residual_threshold = 1e-12;
    CHECK_THROWS_AS(steady_state(model, kTwoPi * 1.0e9, 1.0, o), ConvergenceError);
}
