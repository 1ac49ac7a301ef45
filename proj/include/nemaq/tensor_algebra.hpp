#pragma once

// Pointwise algebra for symmetric traceless 3x3 tensors (Q-tensors) and plain
// 3x3 matrices. A Q-tensor is stored by its five independent components
// (q11, q12, q13, q22, q23); q33 = -q11 - q22 is implied, so symmetry and
// tracelessness are structural and survive every arithmetic operation exactly.

#include <array>
#include <cmath>
#include <stdexcept>

namespace nemaq {

struct Matrix3 {
    // row-major: m[3*i + j] = entry (i, j)
    std::array<double, 9> m{};

    double& operator()(int i, int j) { return m[3 * i + j]; }
    double operator()(int i, int j) const { return m[3 * i + j]; }

    Matrix3& operator+=(const Matrix3& o) {
        for (int i = 0; i < 9; ++i) m[i] += o.m[i];
        return *this;
    }
    Matrix3& operator-=(const Matrix3& o) {
        for (int i = 0; i < 9; ++i) m[i] -= o.m[i];
        return *this;
    }
    Matrix3& operator*=(double s) {
        for (int i = 0; i < 9; ++i) m[i] *= s;
        return *this;
    }
};

inline Matrix3 operator+(Matrix3 a, const Matrix3& b) { return a += b; }
inline Matrix3 operator-(Matrix3 a, const Matrix3& b) { return a -= b; }
inline Matrix3 operator*(double s, Matrix3 a) { return a *= s; }

inline Matrix3 matmul(const Matrix3& a, const Matrix3& b) {
    Matrix3 c;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

inline Matrix3 transpose(const Matrix3& a) {
    Matrix3 c;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) c(i, j) = a(j, i);
    return c;
}

inline double trace(const Matrix3& a) { return a(0, 0) + a(1, 1) + a(2, 2); }

// Frobenius inner product sum_ij A_ij B_ij.
inline double ddot(const Matrix3& a, const Matrix3& b) {
    double s = 0.0;
    for (int i = 0; i < 9; ++i) s += a.m[i] * b.m[i];
    return s;
}

struct QTensor {
    double q11 = 0.0, q12 = 0.0, q13 = 0.0, q22 = 0.0, q23 = 0.0;

    double q33() const { return -q11 - q22; }

    double comp(int c) const {
        switch (c) {
            case 0: return q11;
            case 1: return q12;
            case 2: return q13;
            case 3: return q22;
            default: return q23;
        }
    }
    double& comp(int c) {
        switch (c) {
            case 0: return q11;
            case 1: return q12;
            case 2: return q13;
            case 3: return q22;
            default: return q23;
        }
    }

    Matrix3 matrix() const {
        Matrix3 a;
        a(0, 0) = q11; a(0, 1) = q12; a(0, 2) = q13;
        a(1, 0) = q12; a(1, 1) = q22; a(1, 2) = q23;
        a(2, 0) = q13; a(2, 1) = q23; a(2, 2) = q33();
        return a;
    }

    QTensor& operator+=(const QTensor& o) {
        q11 += o.q11; q12 += o.q12; q13 += o.q13; q22 += o.q22; q23 += o.q23;
        return *this;
    }
    QTensor& operator-=(const QTensor& o) {
        q11 -= o.q11; q12 -= o.q12; q13 -= o.q13; q22 -= o.q22; q23 -= o.q23;
        return *this;
    }
    QTensor& operator*=(double s) {
        q11 *= s; q12 *= s; q13 *= s; q22 *= s; q23 *= s;
        return *this;
    }
};

inline QTensor operator+(QTensor a, const QTensor& b) { return a += b; }
inline QTensor operator-(QTensor a, const QTensor& b) { return a -= b; }
inline QTensor operator*(double s, QTensor a) { return a *= s; }

// tr(AB) for two Q-tensors; both symmetric, so this is the Frobenius product.
inline double qdot(const QTensor& a, const QTensor& b) {
    return a.q11 * b.q11 + a.q22 * b.q22 + a.q33() * b.q33() +
           2.0 * (a.q12 * b.q12 + a.q13 * b.q13 + a.q23 * b.q23);
}

// |Q|^2 = tr(Q^2)
inline double qnorm2(const QTensor& a) { return qdot(a, a); }

// Nearest symmetric traceless tensor: (M + M^T)/2 - (tr M / 3) I.
// Output lives in five-component storage, so re-applying it is bit-identical.
inline QTensor sym_traceless_project(const Matrix3& m) {
    for (double v : m.m)
        if (!std::isfinite(v))
            throw std::invalid_argument("sym_traceless_project: non-finite entry");
    const double tr3 = (m(0, 0) + m(1, 1) + m(2, 2)) / 3.0;
    QTensor q;
    q.q11 = m(0, 0) - tr3;
    q.q22 = m(1, 1) - tr3;
    q.q12 = 0.5 * (m(0, 1) + m(1, 0));
    q.q13 = 0.5 * (m(0, 2) + m(2, 0));
    q.q23 = 0.5 * (m(1, 2) + m(2, 1));
    return q;
}

// (tr Q^2, tr Q^3) evaluated from the five stored components.
inline void trace_invariants(const QTensor& q, double& tr2, double& tr3) {
    const double q33 = q.q33();
    tr2 = q.q11 * q.q11 + q.q22 * q.q22 + q33 * q33 +
          2.0 * (q.q12 * q.q12 + q.q13 * q.q13 + q.q23 * q.q23);
    // tr Q^3 = sum_ijk Q_ij Q_jk Q_ki, expanded for symmetric traceless Q
    tr3 = q.q11 * q.q11 * q.q11 + q.q22 * q.q22 * q.q22 + q33 * q33 * q33 +
          3.0 * (q.q12 * q.q12 * (q.q11 + q.q22) +
                 q.q13 * q.q13 * (q.q11 + q33) +
                 q.q23 * q.q23 * (q.q22 + q33)) +
          6.0 * q.q12 * q.q13 * q.q23;
}

inline Matrix3 commutator(const Matrix3& a, const Matrix3& b) {
    return matmul(a, b) - matmul(b, a);
}

// grad_u(i, j) = du_i/dx_j; D = sym part, W = antisym part (vorticity tensor).
inline void strain_and_vorticity(const Matrix3& grad_u, Matrix3& D, Matrix3& W) {
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            D(i, j) = 0.5 * (grad_u(i, j) + grad_u(j, i));
            W(i, j) = 0.5 * (grad_u(i, j) - grad_u(j, i));
        }
}

// Levi-Civita symbol.
inline constexpr int levi_civita(int i, int j, int k) {
    if (i == j || j == k || i == k) return 0;
    if ((i == 0 && j == 1) || (i == 1 && j == 2) || (i == 2 && j == 0)) return 1;
    return -1;
}

}  // namespace nemaq
