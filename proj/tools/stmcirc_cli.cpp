// Command-line front end: design, evaluate, sweep, inspect spectra, verify.
// All frequencies on the command line are in Hz; internals use rad/s.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stmcirc/design.hpp"
#include "stmcirc/io.hpp"
#include "stmcirc/junction_basis.hpp"
#include "stmcirc/tdsim.hpp"
#include "stmcirc/touchstone.hpp"
#include "stmcirc/version.hpp"

using json = nlohmann::ordered_json;
using namespace stmcirc;

namespace {

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof buf, "%FT%TZ", std::gmtime(&t));
    return buf;
}

struct CircuitFlags {
    double frf_hz = 1e9;
    double q0 = 70.0;
    double z0 = 100.0;
    double l0 = 4.3e-9;
    double f0_hz = 0.0;  // 0: tune per the documented rule
    double fm_hz = 1e8;
    double dc = 0.5;
    double theta = 0.0;
    std::string dir = "cw";
    std::string topology = "voltage";

    void add_circuit(CLI::App* cmd) {
        cmd->add_option("--frf", frf_hz, "operating frequency, Hz")->required();
        cmd->add_option("--q0", q0, "unloaded tank quality factor (inf for lossless)");
        cmd->add_option("--z0", z0, "port impedance, ohm (differential for voltage mode)");
        cmd->add_option("--l0", l0, "tank inductance, H");
        cmd->add_option("--f0", f0_hz, "tank resonance, Hz (default: tuned for best isolation)");
    }
    void add_modulation(CLI::App* cmd) {
        cmd->add_option("--fm", fm_hz, "modulation frequency, Hz");
        cmd->add_option("--dc", dc, "capacitance modulation ratio dC/C0");
        cmd->add_option("--theta", theta, "global modulation phase, rad");
        cmd->add_option("--dir", dir, "bias direction: cw or ccw")
            ->check(CLI::IsMember({"cw", "ccw"}));
    }

    DesignTopology design_topology() const {
        return topology == "current" ? DesignTopology::current : DesignTopology::voltage;
    }

    ModulationParams modulation() const {
        ModulationParams mp;
        mp.omega_m = kTwoPi * fm_hz;
        mp.dc_ratio = dc;
        mp.theta = theta;
        mp.direction = dir == "ccw" ? Direction::counterclockwise : Direction::clockwise;
        return mp;
    }

    /// Resolve the circuit; when --f0 is absent the tank is tuned to maximize
    /// isolation at frf with the given modulation pair.
    CircuitParams circuit(double* tuned_f0 = nullptr) const {
        CircuitParams cp;
        cp.L0 = l0;
        cp.Q0 = q0;
        cp.Z0 = z0;
        double w0;
        if (f0_hz > 0.0) {
            w0 = kTwoPi * f0_hz;
        } else {
            w0 = tune_omega0(kTwoPi * frf_hz, q0, z0, l0, kTwoPi * fm_hz, dc,
                             design_topology());
        }
        if (tuned_f0) *tuned_f0 = w0 / kTwoPi;
        cp.C0 = 1.0 / (w0 * w0 * l0);
        return cp;
    }

    json to_json(double resolved_f0_hz) const {
        return json{{"frf_hz", frf_hz}, {"q0", q0},           {"z0_ohm", z0},
                    {"l0_h", l0},       {"f0_hz", resolved_f0_hz}, {"fm_hz", fm_hz},
                    {"dc_ratio", dc},   {"theta_rad", theta}, {"direction", dir},
                    {"topology", topology}};
    }
};

void write_manifest(const std::string& out_dir, const std::string& command, const json& params,
                    const std::vector<std::string>& outputs) {
    json m;
    m["command"] = command;
    m["toolkit_version"] = kVersion;
    m["timestamp"] = iso_timestamp();
    m["parameters"] = params;
    m["outputs"] = outputs;
    write_file_atomic(out_dir + "/manifest.json", m.dump(2) + "\n");
}

std::string sparams_csv(const SParameterSet& sp) {
    std::string csv =
        "frequency_hz,re_s11,im_s11,re_s21,im_s21,re_s31,im_s31,re_s12,im_s12,re_s22,im_s22,"
        "re_s32,im_s32,re_s13,im_s13,re_s23,im_s23,re_s33,im_s33,il_db,rl_db,ix_db\n";
    for (std::size_t i = 0; i < sp.size(); ++i) {
        const Mat3& s = sp.matrices[i];
        csv += format_sig17(sp.frequencies[i] / kTwoPi);
        for (std::size_t col = 0; col < 3; ++col)
            for (std::size_t row = 0; row < 3; ++row) {
                csv += ',';
                csv += format_sig17(s(row, col).real());
                csv += ',';
                csv += format_sig17(s(row, col).imag());
            }
        csv += ',';
        csv += format_sig17(mag_db(s(1, 0)));
        csv += ',';
        csv += format_sig17(mag_db(s(0, 0)));
        csv += ',';
        csv += format_sig17(mag_db(s(2, 0)));
        csv += '\n';
    }
    return csv;
}

json metrics_json(const MetricSet& m) {
    return json{{"center_frequency_hz", m.center_frequency / kTwoPi},
                {"il_db", m.il_db},
                {"rl_db", m.rl_db},
                {"ix_db", m.ix_db},
                {"bw_fractional", m.bw_fractional},
                {"bw_defined", m.bw_defined}};
}

json error_json(const std::string& what) { return json{{"error", what}}; }

Topology parse_topology(const std::string& s) {
    if (s == "se-delta") return Topology::se_delta;
    if (s == "se-wye") return Topology::se_wye;
    if (s == "diff-voltage") return Topology::diff_voltage;
    if (s == "diff-current") return Topology::diff_current;
    throw CLI::ValidationError("--topology", "unknown topology " + s);
}

// ---------------------------------------------------------------------------

int cmd_design(const CircuitFlags& cf, const std::string& out_dir) {
    double f0 = 0.0;
    const CircuitParams cp = cf.circuit(&f0);
    const DesignPoint pt = solve_isolation(kTwoPi * cf.frf_hz, cp, cf.design_topology());

    json j;
    j["fm_hz"] = pt.omega_m / kTwoPi;
    j["dc_ratio"] = pt.dc_ratio;
    j["frf_hz"] = pt.omega_rf / kTwoPi;
    j["f0_hz"] = pt.omega0 / kTwoPi;
    j["eq19_residual"] = pt.eq19_residual;
    j["eq20_mismatch"] = pt.eq20_mismatch;
    j["s31_mag"] = pt.s31_mag;
    j["topology"] = cf.topology;
    write_file_atomic(out_dir + "/design.json", j.dump(2) + "\n");
    write_manifest(out_dir, "design", cf.to_json(f0), {"design.json"});

    std::printf("fm = %.9g Hz\ndc_ratio = %.12g\n|S31(frf)| = %.3g\n", pt.omega_m / kTwoPi,
                pt.dc_ratio, pt.s31_mag);
    return 0;
}

int cmd_sparams(const CircuitFlags& cf, double fstart, double fstop, int n,
                const std::string& engine, const std::string& out_dir) {
    double f0 = 0.0;
    const CircuitParams cp = cf.circuit(&f0);
    const ModulationParams mp = cf.modulation();

    std::vector<double> grid;
    for (int i = 0; i < n; ++i)
        grid.push_back(kTwoPi * (n == 1 ? fstart : fstart + (fstop - fstart) * i / (n - 1)));

    SParameterSet sp;
    if (engine == "analytic") {
        sp = cf.topology == "current" ? cm_sparams(grid, cp, mp) : vm_sparams(grid, cp, mp);
    } else {
        const Topology topo =
            cf.topology == "current" ? Topology::diff_current : Topology::diff_voltage;
        sp = sparams_td(topo, cp, mp, grid);
    }

    write_file_atomic(out_dir + "/sparams.csv", sparams_csv(sp));
    write_touchstone(out_dir + "/sparams.s3p", sp, 50.0);
    const MetricSet m = metrics(sp);
    write_file_atomic(out_dir + "/metrics.json", metrics_json(m).dump(2) + "\n");

    json params = cf.to_json(f0);
    params["fstart_hz"] = fstart;
    params["fstop_hz"] = fstop;
    params["points"] = n;
    params["engine"] = engine;
    if (engine == "td") {
        json snapped = json::array();
        for (double w : sp.frequencies) snapped.push_back(w / kTwoPi);
        params["snapped_frequencies_hz"] = snapped;
    }
    write_manifest(out_dir, "sparams", params,
                   {"sparams.csv", "sparams.s3p", "metrics.json"});
    std::printf("%zu points -> %s/sparams.csv (IL %.3f dB, RL %.2f dB, IX %.2f dB at center)\n",
                sp.size(), out_dir.c_str(), m.il_db, m.rl_db, m.ix_db);
    return 0;
}

int cmd_sweep(const CircuitFlags& cf, double fm_min, double fm_max, int fm_n, double dc_min,
              double dc_max, int dc_n, const std::string& omega0_mode,
              const std::string& out_dir) {
    CircuitParams cp_template;
    cp_template.L0 = cf.l0;
    cp_template.Q0 = cf.q0;
    cp_template.Z0 = cf.z0;
    // default tank tuning: best isolation at frf for the published operating
    // pair (fm/frf = 0.1, dC/C0 = 0.5)
    const double w0_fixed =
        cf.f0_hz > 0.0 ? kTwoPi * cf.f0_hz
                       : tune_omega0(kTwoPi * cf.frf_hz, cf.q0, cf.z0, cf.l0,
                                     kTwoPi * 0.1 * cf.frf_hz, 0.5, cf.design_topology());
    cp_template.C0 = 1.0 / (w0_fixed * w0_fixed * cf.l0);

    ChartSpec spec;
    for (int i = 0; i < fm_n; ++i)
        spec.fm_over_f0.push_back(fm_n == 1 ? fm_min : fm_min + (fm_max - fm_min) * i / (fm_n - 1));
    for (int i = 0; i < dc_n; ++i)
        spec.dc_ratio.push_back(dc_n == 1 ? dc_min : dc_min + (dc_max - dc_min) * i / (dc_n - 1));
    spec.omega0_mode =
        omega0_mode == "fixed" ? Omega0Mode::fixed : Omega0Mode::retuned_per_cell;

    const ChartGrid g = chart(spec, kTwoPi * cf.frf_hz, cp_template, cf.design_topology());

    std::string csv = "fm_over_f0,dc_ratio,il_db,rl_db,ix_db,bw_frac\n";
    std::size_t idx = 0;
    for (double fm : g.fm_over_f0)
        for (double dc : g.dc_ratio) {
            const MetricSet& m = g.cells[idx++];
            csv += format_sig17(fm);
            csv += ',';
            csv += format_sig17(dc);
            csv += ',';
            csv += format_sig17(m.il_db);
            csv += ',';
            csv += format_sig17(m.rl_db);
            csv += ',';
            csv += format_sig17(m.ix_db);
            csv += ',';
            csv += format_sig17(m.bw_defined ? m.bw_fractional : 0.0);
            csv += '\n';
        }
    write_file_atomic(out_dir + "/sweep.csv", csv);

    auto optimum = [&](std::size_t i) {
        return json{{"fm_over_f0", g.fm_over_f0[i / g.dc_ratio.size()]},
                    {"dc_ratio", g.dc_ratio[i % g.dc_ratio.size()]},
                    {"il_db", g.cells[i].il_db},
                    {"rl_db", g.cells[i].rl_db},
                    {"ix_db", g.cells[i].ix_db},
                    {"bw_frac", g.cells[i].bw_fractional}};
    };
    json opt;
    opt["p1_best_rl"] = optimum(g.p1);
    opt["p2_best_il"] = optimum(g.p2);
    opt["p3_best_ix"] = optimum(g.p3);
    if (g.p4_defined) opt["p4_best_bw"] = optimum(g.p4);
    write_file_atomic(out_dir + "/optima.json", opt.dump(2) + "\n");

    json params = cf.to_json(cf.f0_hz);
    params["fm_min"] = fm_min;
    params["fm_max"] = fm_max;
    params["fm_n"] = fm_n;
    params["dc_min"] = dc_min;
    params["dc_max"] = dc_max;
    params["dc_n"] = dc_n;
    params["omega0_mode"] = omega0_mode;
    params["f0_resolved_hz"] = w0_fixed / kTwoPi;
    write_manifest(out_dir, "sweep", params, {"sweep.csv", "optima.json"});
    std::printf("%zu cells -> %s/sweep.csv\n", g.cells.size(), out_dir.c_str());
    return 0;
}

int cmd_spectrum(const CircuitFlags& cf, const std::string& topology, int port, double amplitude,
                 const std::string& out_dir) {
    double f0 = 0.0;
    const CircuitParams cp = cf.circuit(&f0);
    const ModulationParams mp = cf.modulation();
    const Topology topo = parse_topology(topology);

    const auto model = assemble(topo, cp, mp, port);
    const PortSpectrum spec = port_spectrum(model, kTwoPi * cf.frf_hz, amplitude);

    std::string csv = "port,k,freq_hz,amplitude_dbc,phase_rad\n";
    for (int p = 0; p < 3; ++p)
        for (int k = -spec.kmax; k <= spec.kmax; ++k) {
            const cplx a = spec.amp[static_cast<std::size_t>(p)]
                                   [static_cast<std::size_t>(k + spec.kmax)];
            const double f = (spec.omega + k * spec.omega_m) / kTwoPi;
            csv += std::to_string(p + 1);
            csv += ',';
            csv += std::to_string(k);
            csv += ',';
            csv += format_sig17(f);
            csv += ',';
            csv += format_sig17(20.0 * std::log10(std::max(std::abs(a), 1e-300)));
            csv += ',';
            csv += format_sig17(std::arg(a));
            csv += '\n';
        }
    write_file_atomic(out_dir + "/spectrum.csv", csv);

    json params = cf.to_json(f0);
    params["topology"] = topology;
    params["port"] = port + 1;
    params["amplitude_v"] = amplitude;
    params["snapped_frf_hz"] = spec.omega / kTwoPi;
    params["floor_dbc"] = spec.floor_dbc;
    write_manifest(out_dir, "spectrum", params, {"spectrum.csv"});
    std::printf("spectrum -> %s/spectrum.csv (floor %.1f dBc)\n", out_dir.c_str(), spec.floor_dbc);
    return 0;
}

// Bundled invariant checks; exits 0 iff all pass.
int cmd_verify(const std::string& out_dir) {
    json checks = json::array();
    bool all_pass = true;
    auto record = [&](const std::string& name, double measured, double tol) {
        const bool pass = measured <= tol;
        all_pass = all_pass && pass;
        checks.push_back(
            {{"name", name}, {"measured", measured}, {"tolerance", tol}, {"pass", pass}});
        std::printf("%-42s %-4s (measured %.3g, tol %.3g)\n", name.c_str(),
                    pass ? "PASS" : "FAIL", measured, tol);
    };

    const auto [cp_ref, mp_ref] = reference_design();
    const double wrf = kTwoPi * 1e9;

    {  // connection-operator identities
        const JunctionBasis b = basis();
        double worst = max_abs_diff(b.H, b.G * b.G);
        worst = std::max(worst, max_abs_diff(b.E, transpose(b.G) * b.G));
        Mat3 h_ref;
        h_ref(1, 1) = 3.0 * std::polar(1.0, -std::numbers::pi / 3.0);
        h_ref(2, 2) = 3.0 * std::polar(1.0, std::numbers::pi / 3.0);
        worst = std::max(worst, max_abs_diff(b.H_modes(), h_ref));
        record("matrix-identities", worst, 1e-12);
    }
    {  // reciprocity without modulation
        ModulationParams off = mp_ref;
        off.dc_ratio = 0.0;
        double worst = 0.0;
        for (double f : {0.9e9, 1.0e9, 1.1e9}) {
            const Mat3 sv = vm_smatrix(kTwoPi * f, cp_ref, off);
            worst = std::max(worst, max_abs_diff(sv, transpose(sv)));
            const Mat3 sc = cm_smatrix(kTwoPi * f, cp_ref, off);
            worst = std::max(worst, max_abs_diff(sc, transpose(sc)));
        }
        record("reciprocity-at-zero-modulation", worst, 1e-9);
    }
    {  // direction reversal
        ModulationParams ccw = mp_ref;
        ccw.direction = Direction::counterclockwise;
        double worst = 0.0;
        for (double f : {0.93e9, 1.0e9, 1.07e9})
            worst = std::max(worst, max_abs_diff(vm_smatrix(kTwoPi * f, cp_ref, mp_ref),
                                                 transpose(vm_smatrix(kTwoPi * f, cp_ref, ccw))));
        record("direction-reversal-transposition", worst, 1e-12);
    }
    {  // lossless unitarity
        CircuitParams ll = cp_ref;
        ll.Q0 = std::numeric_limits<double>::infinity();
        double worst = 0.0;
        for (double f : {0.95e9, 1.0e9, 1.05e9}) {
            const Mat3 s = vm_smatrix(kTwoPi * f, ll, mp_ref);
            for (std::size_t c = 0; c < 3; ++c) {
                double nn = 0.0;
                for (std::size_t r = 0; r < 3; ++r) nn += std::norm(s(r, c));
                worst = std::max(worst, std::abs(std::sqrt(nn) - 1.0));
            }
        }
        record("lossless-column-unitarity", worst, 1e-6);
    }

    TdOptions opt;
    opt.samples = 1024;
    {  // oracle equivalence, one frequency per differential topology
        const double grid[] = {wrf};
        const SParameterSet tdv =
            sparams_td(Topology::diff_voltage, cp_ref, mp_ref, grid, opt);
        const SParameterSet anv = vm_sparams(tdv.frequencies, cp_ref, mp_ref);
        record("oracle-equivalence-voltage", max_abs_diff(tdv.matrices[0], anv.matrices[0]), 1e-3);

        CircuitParams cpc = cp_ref;
        cpc.Z0 = 50.0;
        const SParameterSet tdc =
            sparams_td(Topology::diff_current, cpc, mp_ref, grid, opt);
        const SParameterSet anc = cm_sparams(tdc.frequencies, cpc, mp_ref);
        record("oracle-equivalence-current", max_abs_diff(tdc.matrices[0], anc.matrices[0]), 2e-2);
    }
    {  // threefold symmetry measured on independently computed oracle columns
        const double grid[] = {wrf};
        const SParameterSet td = sparams_td(Topology::diff_voltage, cp_ref, mp_ref, grid, opt);
        const Mat3& s = td.matrices[0];
        double worst = std::abs(s(1, 1) - s(0, 0));
        worst = std::max(worst, std::abs(s(2, 2) - s(0, 0)));
        worst = std::max(worst, std::abs(s(2, 1) - s(1, 0)));
        worst = std::max(worst, std::abs(s(0, 2) - s(1, 0)));
        worst = std::max(worst, std::abs(s(0, 1) - s(2, 0)));
        worst = std::max(worst, std::abs(s(1, 2) - s(2, 0)));
        record("threefold-symmetry-td", worst, 1e-9);
    }
    {  // pseudo-LTI port spectra: every voltage-mode product and the odd
       // current-mode products vanish; even current-mode products carry the
       // second elastance harmonic and are checked against its b^2 weight
        double worst_vm = -300.0, worst_cm_odd = -300.0, worst_cm_even = 0.0;
        for (Topology topo : {Topology::diff_voltage, Topology::diff_current}) {
            CircuitParams cp = cp_ref;
            if (topo == Topology::diff_current) cp.Z0 = 50.0;
            const auto spec = port_spectrum(assemble(topo, cp, mp_ref, 0), wrf, 1.0, opt);
            for (int p = 0; p < 3; ++p)
                for (int k = -spec.kmax; k <= spec.kmax; ++k) {
                    if (k == 0) continue;
                    const double amp =
                        std::abs(spec.amp[static_cast<std::size_t>(p)]
                                         [static_cast<std::size_t>(k + spec.kmax)]);
                    const double dbc = 20.0 * std::log10(std::max(amp, 1e-300));
                    if (topo == Topology::diff_voltage) worst_vm = std::max(worst_vm, dbc);
                    else if (k % 2 != 0) worst_cm_odd = std::max(worst_cm_odd, dbc);
                    else worst_cm_even = std::max(worst_cm_even, amp);
                }
        }
        record("pseudo-lti-voltage-spurs-dbc", worst_vm, -120.0);
        record("pseudo-lti-current-odd-spurs-dbc", worst_cm_odd, -100.0);
        const double b = (1.0 - std::sqrt(1.0 - mp_ref.dc_ratio * mp_ref.dc_ratio)) /
                         mp_ref.dc_ratio;
        record("pseudo-lti-current-even-vs-b2", worst_cm_even, 2.0 * b * b);
    }
    {  // phase law on the single-ended ring
        CircuitParams cp = cp_ref;
        cp.Z0 = 50.0;
        ModulationParams m0 = mp_ref;
        m0.dc_ratio = 0.4;
        ModulationParams m1 = m0;
        m1.theta = 1.1;
        const auto s0 = port_spectrum(assemble(Topology::se_delta, cp, m0, 0), wrf, 1.0, opt);
        const auto s1 = port_spectrum(assemble(Topology::se_delta, cp, m1, 0), wrf, 1.0, opt);
        double worst = 0.0;
        const std::size_t kc = static_cast<std::size_t>(s0.kmax);
        for (int p = 0; p < 3; ++p) {
            const auto& a0 = s0.amp[static_cast<std::size_t>(p)];
            const auto& a1 = s1.amp[static_cast<std::size_t>(p)];
            worst = std::max(worst, std::abs(a1[kc] - a0[kc]));
            worst = std::max(worst, std::abs(a1[kc + 1] - a0[kc + 1] * std::polar(1.0, 1.1)));
            worst = std::max(worst, std::abs(a1[kc - 1] - a0[kc - 1] * std::polar(1.0, -1.1)));
        }
        record("im-phase-law", worst, 1e-6);
    }
    {  // in-phase residual and power balance at the reference point
        const auto model = assemble(Topology::diff_voltage, cp_ref, mp_ref, 0);
        const SteadyState ss = steady_state(model, wrf, 1.0, opt);
        double worst = 0.0;
        for (double r : inphase_residual(Topology::diff_voltage, ss)) worst = std::max(worst, r);
        record("in-phase-residual", worst, 1e-8);
        record("power-balance", power_balance(Topology::diff_voltage, cp_ref, ss).rel_error, 1e-8);
    }
    {  // anti-phase composition
        TdOptions o = opt;
        const SteadyState a = steady_state(assemble(Topology::diff_voltage, cp_ref, mp_ref, 0),
                                           wrf, 1.0, o);
        const SteadyState b = steady_state(compose_diff_voltage(cp_ref, mp_ref, 0), wrf, 1.0, o);
        double worst = 0.0;
        for (int n = 0; n < 3; ++n)
            for (int k = 0; k < a.samples; ++k)
                worst = std::max(
                    worst, std::abs(a.port_v[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)] -
                                    b.port_v[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)]));
        record("anti-phase-composition", worst, 1e-9);
    }

    json report;
    report["all_pass"] = all_pass;
    report["checks"] = checks;
    write_file_atomic(out_dir + "/verify.json", report.dump(2) + "\n");
    write_manifest(out_dir, "verify", json::object(), {"verify.json"});
    std::printf("%s\n", all_pass ? "ALL CHECKS PASS" : "CHECK FAILURES PRESENT");
    return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Differential spatiotemporally-modulated circulator toolkit"};
    app.require_subcommand(1);
    // config syntax: a [subcommand] section holding flag=value lines;
    // command-line flags override file values
    app.set_config("--config", "", "key=value file preloading any flag; flags override");

    std::string out_dir = "./out";
    app.add_option("--out", out_dir, "output directory")->capture_default_str();

    CircuitFlags cf;

    auto* design = app.add_subcommand("design", "solve the isolation conditions");
    design->fallthrough();
    design->add_option("--frf", cf.frf_hz, "operating frequency, Hz")->required();
    design->add_option("--q0", cf.q0, "unloaded tank Q")->required();
    design->add_option("--z0", cf.z0, "port impedance, ohm")->required();
    design->add_option("--l0", cf.l0, "tank inductance, H");
    design->add_option("--f0", cf.f0_hz, "tank resonance, Hz (default: tuned)");
    design->add_option("--topology", cf.topology, "voltage or current")
        ->check(CLI::IsMember({"voltage", "current"}));

    double fstart = 0.9e9, fstop = 1.1e9;
    int npts = 201;
    std::string engine = "analytic";
    auto* sparams = app.add_subcommand("sparams", "evaluate scattering parameters over a band");
    sparams->fallthrough();
    cf.add_circuit(sparams);
    cf.add_modulation(sparams);
    sparams->add_option("--fstart", fstart, "band start, Hz")->required();
    sparams->add_option("--fstop", fstop, "band stop, Hz")->required();
    sparams->add_option("--n", npts, "number of grid points");
    sparams->add_option("--engine", engine, "analytic or td")
        ->check(CLI::IsMember({"analytic", "td"}));
    sparams->add_option("--topology", cf.topology, "voltage or current")
        ->check(CLI::IsMember({"voltage", "current"}));

    double fm_min = 0.02, fm_max = 0.3, dc_min = 0.05, dc_max = 0.9;
    int fm_n = 15, dc_n = 18;
    std::string omega0_mode = "fixed";
    auto* sweep = app.add_subcommand("sweep", "design-chart sweep over modulation parameters");
    sweep->fallthrough();
    sweep->add_option("--frf", cf.frf_hz, "operating frequency, Hz")->required();
    sweep->add_option("--q0", cf.q0, "unloaded tank Q");
    sweep->add_option("--z0", cf.z0, "port impedance, ohm");
    sweep->add_option("--l0", cf.l0, "tank inductance, H");
    sweep->add_option("--f0", cf.f0_hz, "fixed tank resonance, Hz (omega0-mode fixed)");
    sweep->add_option("--fm-min", fm_min, "fm/frf axis start");
    sweep->add_option("--fm-max", fm_max, "fm/frf axis stop");
    sweep->add_option("--fm-n", fm_n, "fm axis points");
    sweep->add_option("--dc-min", dc_min, "dC/C0 axis start");
    sweep->add_option("--dc-max", dc_max, "dC/C0 axis stop");
    sweep->add_option("--dc-n", dc_n, "dC axis points");
    sweep->add_option("--omega0-mode", omega0_mode, "retuned or fixed")
        ->check(CLI::IsMember({"retuned", "fixed"}));
    sweep->add_option("--topology", cf.topology, "voltage or current")
        ->check(CLI::IsMember({"voltage", "current"}));

    std::string spec_topology = "diff-voltage";
    int port = 1;
    double amplitude = 1.0;
    auto* spectrum = app.add_subcommand("spectrum", "time-domain port harmonic spectrum");
    spectrum->fallthrough();
    cf.add_circuit(spectrum);
    cf.add_modulation(spectrum);
    spectrum->add_option("--topology", spec_topology,
                         "se-delta, se-wye, diff-voltage or diff-current")
        ->check(CLI::IsMember({"se-delta", "se-wye", "diff-voltage", "diff-current"}));
    spectrum->add_option("--port", port, "excitation port, 1..3")->check(CLI::Range(1, 3));
    spectrum->add_option("--amplitude", amplitude, "source amplitude, V");

    auto* verify = app.add_subcommand("verify", "run the bundled invariant checks");
    verify->fallthrough();
    (void)verify;

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // usage errors exit 2
    }

    try {
        std::filesystem::create_directories(out_dir);
        if (design->parsed()) return cmd_design(cf, out_dir);
        if (sparams->parsed()) return cmd_sparams(cf, fstart, fstop, npts, engine, out_dir);
        if (sweep->parsed())
            return cmd_sweep(cf, fm_min, fm_max, fm_n, dc_min, dc_max, dc_n, omega0_mode, out_dir);
        if (spectrum->parsed()) return cmd_spectrum(cf, spec_topology, port - 1, amplitude, out_dir);
        if (verify->parsed()) return cmd_verify(out_dir);
    } catch (const std::exception& e) {
        write_file_atomic(out_dir + "/error.json", error_json(e.what()).dump(2) + "\n");
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
