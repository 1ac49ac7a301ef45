#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "nemaq/energy.hpp"
#include "nemaq/spectral.hpp"
#include "nemaq/tensor_algebra.hpp"

using namespace nemaq;

namespace {

// Q(x) = amp * sin(m x) * Qdir
QTensorField single_mode_q(const SpectralGrid& g, const QTensor& dir, int m, double amp) {
    QTensorField q(g.npoints());
    for (int i3 = 0; i3 < g.n3(); ++i3)
        for (int i2 = 0; i2 < g.n2(); ++i2)
            for (int i1 = 0; i1 < g.n1(); ++i1) {
                const double x = g.box_length() * i1 / g.n1();
                const double s = amp * std::sin(kTwoPi / g.box_length() * m * x);
                set_qten(q, g.pidx(i1, i2, i3), s * dir);
            }
    return q;
}

}  // namespace

TEST_CASE("parameter validation flags each violated assumption") {
    MaterialParams p;
    CHECK(p.validate().empty());
    p.c = 0.0;
    p.L1 = -1.0;
    p.L2 = -2.0;
    p.L3 = 1.0;
    p.mu = 0.0;
    p.gamma = -0.5;
    CHECK(p.validate().size() == 5);
}

TEST_CASE("bulk density of the unit uniaxial tensor") {
    MaterialParams p;
    p.a = -0.2;
    p.b = 1.0;
    p.c = 1.0;
    QTensor q;
    q.q11 = -1.0 / 3.0;
    q.q22 = -1.0 / 3.0;  // diag(-1/3,-1/3,2/3): tr2 = 2/3, tr3 = 2/9
    const double expect = 0.5 * p.a * (2.0 / 3.0) - (p.b / 3.0) * (2.0 / 9.0) +
                          0.25 * p.c * (2.0 / 3.0) * (2.0 / 3.0);
    CHECK(bulk_density(q, p) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("divergence of a crafted single-mode field") {
    SpectralGrid g(16, kTwoPi);
    QTensor dir;
    dir.q11 = 1.0;  // diag(1,0,-1)
    const QTensorField q = single_mode_q(g, dir, 1, 1.0);
    const QDerivatives d = q_derivatives(g, q);
    for (int i1 = 0; i1 < g.n1(); ++i1) {
        const double x = kTwoPi * i1 / g.n1();
        const std::size_t p = g.pidx(i1, 3, 5);
        CHECK(d.divQ.comp(0)[p] == doctest::Approx(std::cos(x)).epsilon(1e-12));
        CHECK(std::abs(d.divQ.comp(1)[p]) < 1e-13);
        CHECK(std::abs(d.divQ.comp(2)[p]) < 1e-13);
    }
}

TEST_CASE("L1-only elastic energy equals the gradient seminorm") {
    SpectralGrid g(16, kTwoPi);
    MaterialParams p;
    p.L1 = 0.7;
    p.L2 = p.L3 = p.L4 = 0.0;
    const QTensorField q = random_qtensor_field(g, 2.0, 5);
    const double e = quadrature(g, elastic_density(g, q, p));
    const FieldNorms n = discrete_norms(g, q);
    CHECK(e == doctest::Approx(0.5 * p.L1 * n.h1 * n.h1).epsilon(1e-11));
}

TEST_CASE("mixed-gradient terms integrate identically on the torus") {
    // int Q_ik,j Q_ij,k dx = int |div Q|^2 dx, so splitting a fixed L2 + L3
    // budget any way between the two terms leaves the integral unchanged.
    SpectralGrid g(16, kTwoPi);
    const QTensorField q = random_qtensor_field(g, 2.0, 8);
    MaterialParams p;
    p.L1 = 0.0;
    p.L4 = 0.0;
    double vals[3];
    const double splits[3][2] = {{0.9, 0.0}, {0.0, 0.9}, {0.45, 0.45}};
    for (int i = 0; i < 3; ++i) {
        p.L2 = splits[i][0];
        p.L3 = splits[i][1];
        vals[i] = quadrature(g, elastic_density(g, q, p));
    }
    CHECK(vals[1] == doctest::Approx(vals[0]).epsilon(1e-11));
    CHECK(vals[2] == doctest::Approx(vals[0]).epsilon(1e-11));
}

TEST_CASE("cross-coupling elastic term on a two-phase spiral is constant") {
    // Q = eps[sin(x) E12 + cos(x) E13] gives eps_lik Q_lj Q_ij,k = -eps^2
    // everywhere, so the L4/2 integral is -L4 eps^2 V / 2.
    SpectralGrid g(16, kTwoPi);
    const double eps = 0.3;
    QTensorField q(g.npoints());
    for (int i3 = 0; i3 < g.n3(); ++i3)
        for (int i2 = 0; i2 < g.n2(); ++i2)
            for (int i1 = 0; i1 < g.n1(); ++i1) {
                const double x = kTwoPi * i1 / g.n1();
                QTensor v;
                v.q12 = eps * std::sin(x);
                v.q13 = eps * std::cos(x);
                set_qten(q, g.pidx(i1, i2, i3), v);
            }
    MaterialParams p;
    p.L1 = p.L2 = p.L3 = 0.0;
    p.L4 = 0.8;
    const double e = quadrature(g, elastic_density(g, q, p));
    CHECK(e == doctest::Approx(-0.5 * p.L4 * eps * eps * g.volume()).epsilon(1e-11));

    MaterialParams pf;
    pf.a = 0.0;
    pf.b = 0.0;
    pf.c = 1.0;
    pf.L1 = 1.0;
    pf.L2 = pf.L3 = 0.0;
    pf.L4 = 0.8;
    const EnergyReport r = total_energy(g, VectorField3(g.npoints()), q, pf);
    CHECK(r.elastic_L4_cross == doctest::Approx(-0.5 * pf.L4 * eps * eps * g.volume()).epsilon(1e-11));
}

TEST_CASE("molecular field of a single mode with L1 relaxation only") {
    SpectralGrid g(16, kTwoPi);
    MaterialParams p;
    p.L1 = 0.4;
    p.L2 = p.L3 = p.L4 = 0.0;
    p.a = 0.3;
    p.b = 0.0;
    p.c = 0.0;
    QTensor dir;
    dir.q12 = 0.7;
    dir.q23 = -0.2;
    const QTensorField q = single_mode_q(g, dir, 2, 1.0);  // |k| = 2
    const MolecularFieldParts mf = molecular_field(g, q, p);
    // H = L1 Lap Q - a Q = -(4 L1 + a) Q for this mode
    const double fac = -(4.0 * p.L1 + p.a);
    double err = 0.0, ref = 0.0;
    for (std::size_t pt = 0; pt < g.npoints(); ++pt)
        for (int c = 0; c < 5; ++c) {
            const double want = fac * qten_at(q, pt).comp(c);
            const double got = qten_at(mf.H, pt).comp(c);
            err += (got - want) * (got - want);
            ref += want * want;
        }
    CHECK(std::sqrt(err / ref) < 1e-12);
}

TEST_CASE("molecular field decomposes as M + E + B") {
    SpectralGrid g(16, kTwoPi);
    MaterialParams p;
    const QTensorField q = random_qtensor_field(g, 2.0, 12);
    const MolecularFieldParts mf = molecular_field(g, q, p);
    double err = 0.0, scale = 0.0;
    for (std::size_t pt = 0; pt < g.npoints(); ++pt)
        for (int c = 0; c < 5; ++c) {
            const double d = mf.H.comp(c)[pt] - mf.M.comp(c)[pt] - mf.E.comp(c)[pt] - mf.B.comp(c)[pt];
            err = std::max(err, std::abs(d));
            scale = std::max(scale, std::abs(mf.H.comp(c)[pt]));
        }
    CHECK(err < 1e-13 * scale);
}

TEST_CASE("multiplier reassembly recovers the constrained variational derivative") {
    // Build the unconstrained Euler-Lagrange expression V term by term with
    // independent spectral assembly, subtract the trace and antisymmetry
    // multipliers, and compare against the molecular field (raw bulk path).
    SpectralGrid g(16, kTwoPi);
    MaterialParams p;
    p.a = -0.3;
    p.b = 1.2;
    p.c = 0.9;
    p.L1 = 0.8;
    p.L2 = 0.4;
    p.L3 = 0.3;
    p.L4 = 0.25;
    const QTensorField q = random_qtensor_field(g, 2.0, 23);
    const double l23 = p.L2 + p.L3;

    const QDerivatives der = q_derivatives(g, q);
    const QTensorField lapq = to_physical(g, laplacian(g, der.qhat));

    // G_ij = d_j (div Q)_i
    Field<9> G(g.npoints());
    const SpectralVector3 dhat = to_spectral(g, der.divQ);
    for (int j = 0; j < 3; ++j) {
        const SpectralVector3 dj = derivative(g, dhat, j);
        const VectorField3 djp = to_physical(g, dj);
        for (int i = 0; i < 3; ++i)
            std::memcpy(G.comp(3 * i + j), djp.comp(i), g.npoints() * sizeof(double));
    }

    const LagrangeMultipliers lm = lagrange_multipliers(g, q, p);
    const MolecularFieldParts mf = molecular_field(g, q, p, false);

    double err = 0.0, ref = 0.0;
    for (std::size_t pt = 0; pt < g.npoints(); ++pt) {
        const Matrix3 qm = qten_at(q, pt).matrix();
        const Matrix3 q2 = matmul(qm, qm);
        const double s = trace(q2);

        Matrix3 R{};
        const Matrix3 dQ[3] = {qten_at(der.dQ[0], pt).matrix(), qten_at(der.dQ[1], pt).matrix(),
                               qten_at(der.dQ[2], pt).matrix()};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double acc = 0.0;
                for (int l = 0; l < 3; ++l)
                    for (int k = 0; k < 3; ++k) {
                        const int e = levi_civita(l, i, k);
                        if (e != 0) acc += e * dQ[k](l, j);
                    }
                R(i, j) = acc;
            }

        Matrix3 V{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                V(i, j) = p.L1 * qten_at(lapq, pt).matrix()(i, j) + l23 * G.comp(3 * i + j)[pt] +
                          p.L4 * R(i, j) - p.a * qm(i, j) + p.b * q2(i, j) - p.c * s * qm(i, j);

        const double lam0 = lm.lambda0.comp(0)[pt];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const double want =
                    V(i, j) - (i == j ? lam0 : 0.0) - lm.lambda_antisym.comp(3 * i + j)[pt];
                const double got = qten_at(mf.H, pt).matrix()(i, j);
                err += (got - want) * (got - want);
                ref += got * got;
            }
    }
    CHECK(std::sqrt(err / ref) < 1e-10);
}

TEST_CASE("distortion stress matches an independent contraction") {
    SpectralGrid g(16, kTwoPi);
    MaterialParams p;
    p.L1 = 0.9;
    p.L2 = 0.5;
    p.L3 = 0.35;
    p.L4 = 0.6;
    const QTensorField q = random_qtensor_field(g, 2.0, 31);
    const Field<9> sig = distortion_stress(g, q, p, false);

    const QDerivatives d = q_derivatives(g, q);
    double err = 0.0, ref = 0.0;
    for (std::size_t pt = 0; pt < g.npoints(); ++pt) {
        const Matrix3 dQ[3] = {qten_at(d.dQ[0], pt).matrix(), qten_at(d.dQ[1], pt).matrix(),
                               qten_at(d.dQ[2], pt).matrix()};
        const Matrix3 qm = qten_at(q, pt).matrix();
        double divq[3];
        for (int k = 0; k < 3; ++k) divq[k] = dQ[0](k, 0) + dQ[1](k, 1) + dQ[2](k, 2);
        for (int al = 0; al < 3; ++al)
            for (int be = 0; be < 3; ++be) {
                double s = 0.0;
                for (int k = 0; k < 3; ++k)
                    for (int l = 0; l < 3; ++l) s += p.L1 * dQ[al](k, l) * dQ[be](k, l);
                for (int k = 0; k < 3; ++k) s += p.L2 * divq[k] * dQ[al](k, be);
                for (int k = 0; k < 3; ++k)
                    for (int l = 0; l < 3; ++l) s += p.L3 * dQ[l](k, be) * dQ[al](k, l);
                for (int m = 0; m < 3; ++m)
                    for (int k = 0; k < 3; ++k)
                        for (int l = 0; l < 3; ++l) {
                            const int e = levi_civita(m, k, be);
                            if (e != 0) s += 0.5 * p.L4 * e * qm(m, l) * dQ[al](k, l);
                        }
                const double want = -s;
                const double got = sig.comp(3 * al + be)[pt];
                err += (got - want) * (got - want);
                ref += want * want;
            }
    }
    CHECK(std::sqrt(err / ref) < 1e-12);
}

TEST_CASE("antisymmetric stress is exactly antisymmetric pointwise") {
    SpectralGrid g(8, kTwoPi);
    const QTensorField q = random_qtensor_field(g, 2.0, 41);
    const QTensorField h = random_qtensor_field(g, 2.0, 42);
    const Field<9> sig = antisymmetric_stress(g, q, h, false);
    for (std::size_t pt = 0; pt < g.npoints(); ++pt)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                CHECK(sig.comp(3 * i + j)[pt] == -sig.comp(3 * j + i)[pt]);
}

TEST_CASE("antisymmetric stress against a hand-computed commutator") {
    SpectralGrid g(8, kTwoPi);
    QTensorField q(g.npoints()), h(g.npoints());
    QTensor a, b;
    a.q12 = 1.0;          // E12 pair
    b.q11 = 1.0;
    b.q22 = -1.0;         // diag(1,-1,0)
    for (std::size_t pt = 0; pt < g.npoints(); ++pt) {
        set_qten(q, pt, a);
        set_qten(h, pt, b);
    }
    // [A, B] for these: AB - BA with AB = offdiag(-1 at (0,1); 1 at (1,0))
    const Field<9> sig = antisymmetric_stress(g, q, h, false);
    for (std::size_t pt = 0; pt < g.npoints(); ++pt) {
        CHECK(sig.comp(1)[pt] == doctest::Approx(-2.0).epsilon(1e-15));
        CHECK(sig.comp(3)[pt] == doctest::Approx(2.0).epsilon(1e-15));
        CHECK(sig.comp(0)[pt] == 0.0);
        CHECK(sig.comp(4)[pt] == 0.0);
        CHECK(sig.comp(8)[pt] == 0.0);
    }
}

TEST_CASE("energy report parts and dissipations") {
    SpectralGrid g(16, kTwoPi);
    MaterialParams p;
    p.a = 0.3;
    p.b = 0.0;
    p.c = 1.0;
    p.L1 = 0.4;
    p.L2 = p.L3 = p.L4 = 0.0;
    p.mu = 1.3;
    p.gamma = 0.8;

    QTensor dir;
    dir.q12 = 0.5;
    const double amp = 0.2;
    const QTensorField q = single_mode_q(g, dir, 2, amp);
    const VectorField3 u = random_vector_field(g, 2.0, 51, true);

    const EnergyReport r = total_energy(g, u, q, p);
    CHECK(r.total == r.kinetic + r.elastic_L1 + r.elastic_L23 + r.elastic_L4_cross + r.bulk);

    const FieldNorms un = discrete_norms(g, u);
    const FieldNorms qn = discrete_norms(g, q);
    CHECK(r.kinetic == doctest::Approx(0.5 * un.l2 * un.l2).epsilon(1e-12));
    CHECK(r.elastic_L1 == doctest::Approx(0.5 * p.L1 * qn.h1 * qn.h1).epsilon(1e-11));
    CHECK(r.elastic_L23 == 0.0);
    CHECK(r.dissipation_viscous == doctest::Approx(p.mu * un.h1 * un.h1).epsilon(1e-12));

    // b = 0 and a tiny amplitude keep the quartic negligible next to the
    // closed-form quadratic part of |H|^2; compare against the exact linear
    // molecular field response instead: H = -(4 L1 + a) Q + cubic correction.
    MaterialParams plin = p;
    plin.c = 0.0;
    const EnergyReport rl = total_energy(g, u, q, plin);
    const double fac = 4.0 * p.L1 + p.a;
    CHECK(rl.dissipation_rotational ==
          doctest::Approx(p.gamma * fac * fac * qn.l2 * qn.l2).epsilon(1e-11));
}

TEST_CASE("coercivity constant for a purely quartic potential is zero") {
    MaterialParams p;
    p.a = 0.0;
    p.b = 0.0;
    p.c = 1.0;
    const CoercivityResult r = coercivity_constant_K(p);
    CHECK(r.certified);
    CHECK(r.K == 0.0);
}

TEST_CASE("coercivity constant compensates a negative quadratic term") {
    MaterialParams p;
    p.a = -2.0;
    p.b = 0.0;
    p.c = 1.0;
    const CoercivityResult r = coercivity_constant_K(p);
    CHECK(r.certified);
    CHECK(r.K >= 2.0 - 1e-3);
    CHECK(r.K <= 2.0 + 0.11);  // one 5% grid step at K = 2
}

TEST_CASE("coercivity constant for a cubic-coupled potential matches 5/3") {
    MaterialParams p;
    p.a = -1.0;
    p.b = 3.0;
    p.c = 1.0;
    const CoercivityResult r = coercivity_constant_K(p);
    CHECK(r.certified);
    CHECK(std::abs(r.K - 5.0 / 3.0) <= 0.09);

    MaterialParams pm = p;
    pm.b = -3.0;  // worst case flips sign with b; K is unchanged
    const CoercivityResult rm = coercivity_constant_K(pm);
    CHECK(rm.certified);
    CHECK(rm.K == r.K);
}

TEST_CASE("coercivity search reports the violating invariants when capped") {
    MaterialParams p;
    p.a = -2.0;
    p.b = 0.0;
    p.c = 1.0;
    CoercivityBudget budget;
    budget.max_candidates = 3;
    const CoercivityResult r = coercivity_constant_K(p, budget);
    CHECK_FALSE(r.certified);
    CHECK(r.candidates_tried == 3);
    CHECK(r.violating_s > 0.0);
}
