#pragma once

#include <cmath>
#include <numbers>

#include "stmcirc/core.hpp"
#include "stmcirc/mat3.hpp"

namespace stmcirc {

/// Connection and mode-decomposition operators of a threefold-symmetric
/// junction, plus the time-parameterized modulation matrices.
///
/// T maps mode amplitudes (in-phase, +rotating, -rotating) to tank values;
/// T_inv carries the 1/3 normalization so that to_modes((1,1,1)) = (1,0,0).
/// Cc/Cs take the modulation phase u = omega_m * t.
struct JunctionBasis {
    Mat3 T, T_inv;
    Mat3 G;  // tank current -> port current map of the delta ring
    Mat3 Q;  // cyclic shift, U - G
    Mat3 H;  // G*G
    Mat3 E;  // nodal Laplacian-like operator, equals G^T G

    Mat3 Cc(double u) const {
        Mat3 c;
        for (int n = 0; n < 3; ++n) c(n, n) = std::cos(u + kAlpha * n);
        return c;
    }

    Mat3 Cs(double u) const {
        Mat3 c;
        for (int n = 0; n < 3; ++n) c(n, n) = std::sin(u + kAlpha * n);
        return c;
    }

    // Mode-basis images. The modulation matrices are reported as they enter
    // the reduced mode equations, i.e. with the H operator absorbed.
    Mat3 H_modes() const { return T_inv * H * T; }
    Mat3 Q_modes() const { return T_inv * Q * T; }
    Mat3 G_modes() const { return T_inv * G; }
    Mat3 Cc_modes(double u) const { return T_inv * (H * Cc(u)) * T; }
    Mat3 Cs_modes(double u) const { return T_inv * (H * Cs(u)) * T; }
};

inline JunctionBasis basis() {
    JunctionBasis b;
    const cplx ea = std::polar(1.0, kAlpha);
    const cplx ea2 = std::polar(1.0, 2.0 * kAlpha);
    b.T(0, 0) = 1; b.T(0, 1) = 1;            b.T(0, 2) = 1;
    b.T(1, 0) = 1; b.T(1, 1) = ea;           b.T(1, 2) = std::conj(ea);
    b.T(2, 0) = 1; b.T(2, 1) = ea2;          b.T(2, 2) = std::conj(ea2);
    b.T_inv = inverse(b.T);

    const double g[9] = {1, -1, 0, 0, 1, -1, -1, 0, 1};
    for (int i = 0; i < 9; ++i) b.G.m[i] = g[i];
    b.Q = Mat3::identity() - b.G;
    b.H = b.G * b.G;
    b.E = transpose(b.G) * b.G;
    return b;
}

inline Vec3 to_modes(const Vec3& tank_values) { return basis().T_inv * tank_values; }
inline Vec3 from_modes(const Vec3& mode_values) { return basis().T * mode_values; }

}  // namespace stmcirc
