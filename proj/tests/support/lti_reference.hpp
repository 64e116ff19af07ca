#pragma once

// Test-only references: S-parameters of the static (unmodulated) junctions by
// direct nodal analysis. Kept independent of the production formula path so
// the dc_ratio = 0 limits are checked against something that cannot share a
// transcription mistake with it.

#include "stmcirc/core.hpp"
#include "stmcirc/mat3.hpp"

namespace stmcirc::testref {

/// Static differential voltage-mode circuit: two identical delta junctions in
/// series across each port, equivalent to one junction on Z0/2 half-circuit
/// ports. Nodal equation: (Yt * E + U/Zp) u = vs / Zp.
inline Vec3 static_delta_column1(double omega, const CircuitParams& cp) {
    const DerivedParams d = derive(cp);
    const cplx j(0.0, 1.0);
    const cplx yt = j * omega * cp.C0 + (cp.lossless() ? 0.0 : 1.0 / d.R0) +
                    1.0 / (j * omega * cp.L0);
    const double zp = cp.Z0 / 2.0;

    Mat3 a;
    const double e[9] = {2, -1, -1, -1, 2, -1, -1, -1, 2};
    for (int i = 0; i < 9; ++i) a.m[static_cast<std::size_t>(i)] = yt * e[i];
    for (std::size_t i = 0; i < 3; ++i) a(i, i) += 1.0 / zp;

    Vec3 rhs;
    rhs[0] = 1.0 / zp;
    const Vec3 u = solve(a, rhs);

    Vec3 col;
    col[0] = 2.0 * u[0] - 1.0;
    col[1] = 2.0 * u[1];
    col[2] = 2.0 * u[2];
    return col;
}

/// Static current-mode circuit: two identical wye junctions with terminals
/// tied, i.e. each port node feeds two identical series tanks to two floating
/// stars. Solve the 4-unknown system (u1,u2,u3 and one star voltage per the
/// symmetric pair folded into an effective half-impedance tank).
inline Vec3 static_wye_column1(double omega, const CircuitParams& cp) {
    const DerivedParams d = derive(cp);
    const cplx j(0.0, 1.0);
    const double rs = cp.lossless() ? 0.0 : d.omega0 * cp.L0 / cp.Q0;
    const cplx zt = j * omega * cp.L0 + rs + 1.0 / (j * omega * cp.C0);
    // two identical junctions in parallel act as one with zt/2
    const cplx zh = zt / 2.0;

    // unknowns: u1,u2,u3 (port nodes), vs_star; KCL at nodes and at the star
    // i_n = (u_n - vstar)/zh, (vs_n - u_n)/Z0 = i_n, sum i_n = 0
    // eliminate: u_n = (vs_n zh + vstar Z0)/(zh + Z0); sum (u_n - vstar) = 0
    const cplx den = zh + cp.Z0;
    // sum_n (vs_n zh + vstar Z0 - vstar (zh + Z0)) = 0
    // => zh sum vs_n - 3 vstar zh = 0 => vstar = (sum vs_n)/3
    const cplx vstar = 1.0 / 3.0;
    Vec3 u;
    u[0] = (1.0 * zh + vstar * cp.Z0) / den;
    u[1] = (0.0 * zh + vstar * cp.Z0) / den;
    u[2] = u[1];

    Vec3 col;
    col[0] = 2.0 * u[0] - 1.0;
    col[1] = 2.0 * u[1];
    col[2] = 2.0 * u[2];
    return col;
}

}  // namespace stmcirc::testref
