#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>

namespace stmcirc {

using cplx = std::complex<double>;

struct Vec3 {
    std::array<cplx, 3> v{};

    cplx& operator[](std::size_t i) { return v[i]; }
    const cplx& operator[](std::size_t i) const { return v[i]; }
};

/// Dense 3x3 complex matrix, row-major. Small enough that everything is by value.
struct Mat3 {
    std::array<cplx, 9> m{};

    cplx& operator()(std::size_t r, std::size_t c) { return m[3 * r + c]; }
    const cplx& operator()(std::size_t r, std::size_t c) const { return m[3 * r + c]; }

    static Mat3 identity() {
        Mat3 u;
        u(0, 0) = u(1, 1) = u(2, 2) = 1.0;
        return u;
    }
};

inline Mat3 operator*(const Mat3& a, const Mat3& b) {
    Mat3 r;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            cplx s = 0.0;
            for (std::size_t k = 0; k < 3; ++k) s += a(i, k) * b(k, j);
            r(i, j) = s;
        }
    return r;
}

inline Vec3 operator*(const Mat3& a, const Vec3& x) {
    Vec3 r;
    for (std::size_t i = 0; i < 3; ++i) {
        cplx s = 0.0;
        for (std::size_t k = 0; k < 3; ++k) s += a(i, k) * x[k];
        r[i] = s;
    }
    return r;
}

inline Mat3 operator*(cplx s, const Mat3& a) {
    Mat3 r;
    for (std::size_t i = 0; i < 9; ++i) r.m[i] = s * a.m[i];
    return r;
}

inline Mat3 operator+(const Mat3& a, const Mat3& b) {
    Mat3 r;
    for (std::size_t i = 0; i < 9; ++i) r.m[i] = a.m[i] + b.m[i];
    return r;
}

inline Mat3 operator-(const Mat3& a, const Mat3& b) {
    Mat3 r;
    for (std::size_t i = 0; i < 9; ++i) r.m[i] = a.m[i] - b.m[i];
    return r;
}

inline Mat3 transpose(const Mat3& a) {
    Mat3 r;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) r(i, j) = a(j, i);
    return r;
}

inline Mat3 adjoint(const Mat3& a) {
    Mat3 r;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) r(i, j) = std::conj(a(j, i));
    return r;
}

inline cplx det(const Mat3& a) {
    return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
           a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
           a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
}

/// Inverse by adjugate; fine for the well-conditioned fixed matrices used here.
inline Mat3 inverse(const Mat3& a) {
    const cplx d = det(a);
    Mat3 r;
    r(0, 0) = (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) / d;
    r(0, 1) = (a(0, 2) * a(2, 1) - a(0, 1) * a(2, 2)) / d;
    r(0, 2) = (a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1)) / d;
    r(1, 0) = (a(1, 2) * a(2, 0) - a(1, 0) * a(2, 2)) / d;
    r(1, 1) = (a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0)) / d;
    r(1, 2) = (a(0, 2) * a(1, 0) - a(0, 0) * a(1, 2)) / d;
    r(2, 0) = (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0)) / d;
    r(2, 1) = (a(0, 1) * a(2, 0) - a(0, 0) * a(2, 1)) / d;
    r(2, 2) = (a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0)) / d;
    return r;
}

inline double max_abs_diff(const Mat3& a, const Mat3& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < 9; ++i) m = std::max(m, std::abs(a.m[i] - b.m[i]));
    return m;
}

inline double max_abs(const Mat3& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < 9; ++i) m = std::max(m, std::abs(a.m[i]));
    return m;
}

/// Solve A x = b by Gaussian elimination with partial pivoting.
inline Vec3 solve(Mat3 a, Vec3 b) {
    for (std::size_t c = 0; c < 3; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < 3; ++r)
            if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
        if (piv != c) {
            for (std::size_t k = 0; k < 3; ++k) std::swap(a(c, k), a(piv, k));
            std::swap(b[c], b[piv]);
        }
        for (std::size_t r = c + 1; r < 3; ++r) {
            const cplx f = a(r, c) / a(c, c);
            for (std::size_t k = c; k < 3; ++k) a(r, k) -= f * a(c, k);
            b[r] -= f * b[c];
        }
    }
    Vec3 x;
    for (int r = 2; r >= 0; --r) {
        cplx s = b[static_cast<std::size_t>(r)];
        for (std::size_t k = static_cast<std::size_t>(r) + 1; k < 3; ++k)
            s -= a(static_cast<std::size_t>(r), k) * x[k];
        x[static_cast<std::size_t>(r)] = s / a(static_cast<std::size_t>(r), static_cast<std::size_t>(r));
    }
    return x;
}

}  // namespace stmcirc
