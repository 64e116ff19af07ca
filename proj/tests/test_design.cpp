#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "stmcirc/design.hpp"

using namespace stmcirc;
using Catch::Approx;

namespace {

CircuitParams lossless_ref(double w0_over_wrf, double wrf = kTwoPi * 1e9) {
    CircuitParams cp;
    cp.L0 = 4.3e-9;
    cp.Q0 = std::numeric_limits<double>::infinity();
    cp.Z0 = 100.0;
    const double w0 = w0_over_wrf * wrf;
    cp.C0 = 1.0 / (w0 * w0 * cp.L0);
    return cp;
}

ModulationParams mp_of(const DesignPoint& pt) {
    ModulationParams mp;
    mp.omega_m = pt.omega_m;
    mp.dc_ratio = pt.dc_ratio;
    return mp;
}

}  // namespace

TEST_CASE("lossless isolation point realizes the ideal circulator", "[design]") {
    const double wrf = kTwoPi * 1e9;
    const CircuitParams cp = lossless_ref(0.99);
    const DesignPoint pt = solve_isolation(wrf, cp);

    CHECK(pt.dc_ratio > 0.0);
    CHECK(pt.dc_ratio < 1.0);
    CHECK(pt.eq20_mismatch < 1e-9);
    CHECK(pt.s31_mag < 1e-3);

    const Mat3 s = vm_smatrix(wrf, cp, mp_of(pt));
    CHECK(std::abs(s(2, 0)) < 1e-3);
    CHECK(std::abs(s(0, 0)) < 1e-3);
    CHECK(std::abs(s(1, 0)) > 1.0 - 1e-4);
    CHECK(max_abs_diff(s, ideal_smatrix()) < 1e-4);

    // the stated mode condition at the solved point
    const ModeResponseVM m = vm_modes(wrf, cp, mp_of(pt));
    const cplx want(0.0, -1.0 / (4.0 * std::sqrt(3.0)));
    CHECK(std::abs(m.vd_plus - want) < 1e-6);
    CHECK(std::abs(m.vd_minus + want) < 1e-6);
}

TEST_CASE("finite-Q0 isolation point still nulls the isolated port", "[design]") {
    const double wrf = kTwoPi * 1e9;
    CircuitParams cp = lossless_ref(0.99);
    cp.Q0 = 70.0;
    const DesignPoint pt = solve_isolation(wrf, cp);
    CHECK(pt.s31_mag < 1e-3);
    CHECK(pt.eq20_mismatch < 1e-9);
    // near the published operating band
    CHECK(pt.omega_m / wrf > 0.05);
    CHECK(pt.omega_m / wrf < 0.2);
    CHECK(pt.dc_ratio > 0.3);
    CHECK(pt.dc_ratio < 0.7);
}

TEST_CASE("isolation solve is scale invariant", "[design]") {
    const double wrf = kTwoPi * 1e9;
    CircuitParams cp = lossless_ref(0.99);
    cp.Q0 = 70.0;
    const DesignPoint base = solve_isolation(wrf, cp);
    for (double lambda : {0.5, 2.0, 10.0}) {
        CircuitParams scaled = cp;
        scaled.L0 = cp.L0 / lambda;
        scaled.C0 = cp.C0 / lambda;
        const DesignPoint pt = solve_isolation(lambda * wrf, scaled);
        CHECK(pt.omega_m == Approx(lambda * base.omega_m).epsilon(1e-6));
        CHECK(pt.dc_ratio == Approx(base.dc_ratio).epsilon(1e-6));
    }
}

TEST_CASE("no isolation point is reported as an error", "[design]") {
    // tank far above the operating frequency: no valid root in (0, wrf)
    const double wrf = kTwoPi * 1e9;
    const CircuitParams cp = lossless_ref(2.0);
    CHECK_THROWS_AS(solve_isolation(wrf, cp), DesignError);
}

TEST_CASE("current-mode isolation point nulls S31 through its own model", "[design][cm]") {
    // the wye tanks need w0 L0 well above Z0 for a usable loaded Q, hence the
    // larger inductance here
    const double wrf = kTwoPi * 1e9;
    CircuitParams cp;
    cp.L0 = 47e-9;
    cp.Q0 = 70.0;
    cp.Z0 = 50.0;
    cp.C0 = 1.0 / ((0.95 * wrf) * (0.95 * wrf) * cp.L0);
    const DesignPoint pt = solve_isolation(wrf, cp, DesignTopology::current);
    CHECK(pt.s31_mag < 1e-3);
    const Mat3 s = cm_smatrix(wrf, cp, mp_of(pt));
    CHECK(std::abs(s(2, 0)) < 1e-3);

    // an unusable circuit must be reported, not silently mis-designed
    CircuitParams bad = cp;
    bad.L0 = 4.3e-9;
    bad.C0 = 1.0 / ((0.99 * wrf) * (0.99 * wrf) * bad.L0);
    CHECK_THROWS_AS(solve_isolation(wrf, bad, DesignTopology::current), DesignError);
}

TEST_CASE("reference design reproduces the published response", "[design]") {
    const auto [cp, mp] = reference_design();
    CHECK(cp.Z0 == 100.0);
    CHECK(mp.dc_ratio == 0.5);
    const double wrf = kTwoPi * 1e9;
    const auto grid = band_grid(wrf, 0.10, 401);
    const MetricSet m = metrics(vm_sparams(grid, cp, mp));
    // frozen from the closed-form model at the tuned tank frequency
    CHECK(m.il_db == Approx(0.570).margin(0.01));
    CHECK(m.rl_db == Approx(32.1).margin(0.3));
    CHECK(m.ix_db == Approx(27.50).margin(0.1));
    REQUIRE(m.bw_defined);
    CHECK(m.bw_fractional == Approx(0.0350).margin(0.0008));

    // switching the modulation off restores reciprocity on the same circuit
    ModulationParams off = mp;
    off.dc_ratio = 0.0;
    const Mat3 s = vm_smatrix(wrf, cp, off);
    CHECK(max_abs_diff(s, transpose(s)) < 1e-12);
}

TEST_CASE("degenerate single-cell chart equals one metrics call", "[design][chart]") {
    const auto [cp, mp] = reference_design();
    ChartSpec spec;
    spec.fm_over_f0 = {0.1};
    spec.dc_ratio = {0.5};
    spec.omega0_mode = Omega0Mode::fixed;
    const double wrf = kTwoPi * 1e9;
    const ChartGrid g = chart(spec, wrf, cp);
    REQUIRE(g.cells.size() == 1);
    const MetricSet direct = metrics(vm_sparams(band_grid(wrf, 0.10, 401), cp, mp), {}, wrf);
    CHECK(g.cells[0].il_db == Approx(direct.il_db));
    CHECK(g.cells[0].ix_db == Approx(direct.ix_db));
    CHECK(g.cells[0].bw_fractional == Approx(direct.bw_fractional));
    CHECK(g.p1 == 0);
    CHECK(g.p2 == 0);
    CHECK(g.p3 == 0);
}

TEST_CASE("chart optima are stable under grid refinement", "[design][chart]") {
    const auto [cp, mp_unused] = reference_design();
    (void)mp_unused;
    const double wrf = kTwoPi * 1e9;

    auto axis = [](double lo, double hi, int n) {
        std::vector<double> v;
        for (int i = 0; i < n; ++i) v.push_back(lo + (hi - lo) * i / (n - 1));
        return v;
    };
    ChartSpec coarse;
    coarse.fm_over_f0 = axis(0.06, 0.16, 6);
    coarse.dc_ratio = axis(0.3, 0.7, 6);
    coarse.band_points = 201;
    ChartSpec fine = coarse;
    fine.fm_over_f0 = axis(0.06, 0.16, 11);
    fine.dc_ratio = axis(0.3, 0.7, 11);

    const ChartGrid gc = chart(coarse, wrf, cp);
    const ChartGrid gf = chart(fine, wrf, cp);

    auto cell_of = [](const ChartGrid& g, std::size_t idx) {
        return std::pair<double, double>{g.fm_over_f0[idx / g.dc_ratio.size()],
                                         g.dc_ratio[idx % g.dc_ratio.size()]};
    };
    const double dfm = coarse.fm_over_f0[1] - coarse.fm_over_f0[0];
    const double ddc = coarse.dc_ratio[1] - coarse.dc_ratio[0];
    for (auto [ic, iff] : {std::pair{gc.p2, gf.p2}, std::pair{gc.p3, gf.p3}}) {
        const auto [fmc, dcc] = cell_of(gc, ic);
        const auto [fmf, dcf] = cell_of(gf, iff);
        CHECK(std::abs(fmc - fmf) <= dfm + 1e-12);
        CHECK(std::abs(dcc - dcf) <= ddc + 1e-12);
    }
    // sanity of the optimum ordering
    CHECK(gc.cells[gc.p3].ix_db >= gc.cells[gc.p2].ix_db);
}

TEST_CASE("solver output lands in the best-isolation chart cell", "[design][chart]") {
    const auto [cp, mp_unused] = reference_design();
    (void)mp_unused;
    const double wrf = kTwoPi * 1e9;
    const DesignPoint pt = solve_isolation(wrf, cp);

    ChartSpec spec;
    for (int i = 0; i < 9; ++i) spec.fm_over_f0.push_back(0.07 + 0.01 * i);
    for (int i = 0; i < 9; ++i) spec.dc_ratio.push_back(0.40 + 0.025 * i);
    spec.band_points = 201;
    const ChartGrid g = chart(spec, wrf, cp);

    const std::size_t ifm = g.p3 / g.dc_ratio.size();
    const std::size_t idc = g.p3 % g.dc_ratio.size();
    CHECK(std::abs(g.fm_over_f0[ifm] - pt.omega_m / wrf) <= 0.005 + 1e-12);
    CHECK(std::abs(g.dc_ratio[idc] - pt.dc_ratio) <= 0.0125 + 1e-12);
}
