#include "nemaq/energy.hpp"

#include <cmath>
#include <complex>
#include <cstdio>

namespace nemaq {

namespace {

using cd = std::complex<double>;

// Full 3x3 matrix of a five-component field value at one point.
Matrix3 qmat_at(const QTensorField& f, std::size_t p) {
    return qten_at(f, p).matrix();
}

// Reconstruct the complex full matrix of one spectral Q-tensor mode.
void qfull(const SpectralQTensor& q, std::size_t s, cd a[3][3]) {
    const cd q11 = q.comp(0)[s], q12 = q.comp(1)[s], q13 = q.comp(2)[s];
    const cd q22 = q.comp(3)[s], q23 = q.comp(4)[s];
    a[0][0] = q11; a[0][1] = q12; a[0][2] = q13;
    a[1][0] = q12; a[1][1] = q22; a[1][2] = q23;
    a[2][0] = q13; a[2][1] = q23; a[2][2] = -q11 - q22;
}

// Nonlinear bulk terms b(Q^2 - |Q|^2/3 I) - c tr(Q^2) Q, pointwise; the -aQ
// contribution is linear and added spectrally by the caller.
QTensor bulk_nonlinear_at(const QTensor& q, const MaterialParams& p) {
    const Matrix3 qm = q.matrix();
    const Matrix3 q2 = matmul(qm, qm);
    const double s = trace(q2);
    QTensor b;
    b.q11 = p.b * (q2(0, 0) - s / 3.0) - p.c * s * q.q11;
    b.q12 = p.b * q2(0, 1) - p.c * s * q.q12;
    b.q13 = p.b * q2(0, 2) - p.c * s * q.q13;
    b.q22 = p.b * (q2(1, 1) - s / 3.0) - p.c * s * q.q22;
    b.q23 = p.b * q2(1, 2) - p.c * s * q.q23;
    return b;
}

}  // namespace

void elastic_symbol_apply(const double kd[3], double L1, double l23, const double in5[5],
                          double out5[5]) {
    const double ksq = kd[0] * kd[0] + kd[1] * kd[1] + kd[2] * kd[2];
    const QTensor qin{in5[0], in5[1], in5[2], in5[3], in5[4]};
    const Matrix3 qm = qin.matrix();
    double dv[3];
    for (int i = 0; i < 3; ++i) dv[i] = kd[0] * qm(i, 0) + kd[1] * qm(i, 1) + kd[2] * qm(i, 2);
    Matrix3 grd;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) grd(i, j) = -kd[j] * dv[i];
    const QTensor g5 = sym_traceless_project(grd);
    for (int c = 0; c < 5; ++c) out5[c] = -L1 * ksq * in5[c] + l23 * g5.comp(c);
}

void cross_symbol_apply(const double kd[3], const double in5[5], double out5[5]) {
    const QTensor qin{in5[0], in5[1], in5[2], in5[3], in5[4]};
    const Matrix3 qm = qin.matrix();
    Matrix3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (int l = 0; l < 3; ++l)
                for (int k = 0; k < 3; ++k) {
                    const int e = levi_civita(l, i, k);
                    if (e != 0) acc += e * kd[k] * qm(l, j);
                }
            r(i, j) = acc;
        }
    const QTensor r5 = sym_traceless_project(r);
    for (int c = 0; c < 5; ++c) out5[c] = r5.comp(c);
}

std::vector<std::string> MaterialParams::validate() const {
    std::vector<std::string> v;
    char buf[128];
    if (!(c > 0.0)) {
        std::snprintf(buf, sizeof buf, "c must be positive (got %g)", c);
        v.push_back(buf);
    }
    if (!(L1 > 0.0)) {
        std::snprintf(buf, sizeof buf, "L1 must be positive (got %g)", L1);
        v.push_back(buf);
    }
    if (!(L2 + L3 >= 0.0)) {
        std::snprintf(buf, sizeof buf, "L2 + L3 must be nonnegative (got %g)", L2 + L3);
        v.push_back(buf);
    }
    if (!(mu > 0.0)) {
        std::snprintf(buf, sizeof buf, "mu must be positive (got %g)", mu);
        v.push_back(buf);
    }
    if (!(gamma > 0.0)) {
        std::snprintf(buf, sizeof buf, "gamma must be positive (got %g)", gamma);
        v.push_back(buf);
    }
    return v;
}

double bulk_density(const QTensor& q, const MaterialParams& p) {
    double tr2, tr3;
    trace_invariants(q, tr2, tr3);
    return 0.5 * p.a * tr2 - (p.b / 3.0) * tr3 + 0.25 * p.c * tr2 * tr2;
}

QDerivatives q_derivatives(const SpectralGrid& g, const QTensorField& Q) {
    QDerivatives d;
    d.qhat = to_spectral(g, Q);
    for (int ax = 0; ax < 3; ++ax)
        d.dQ[ax] = to_physical(g, derivative(g, d.qhat, ax));
    d.divQ = VectorField3(g.npoints());
    for (std::size_t p = 0; p < g.npoints(); ++p) {
        for (int i = 0; i < 3; ++i) {
            double s = 0.0;
            for (int j = 0; j < 3; ++j) s += qmat_at(d.dQ[j], p)(i, j);
            d.divQ.comp(i)[p] = s;
        }
    }
    return d;
}

ScalarField elastic_density(const SpectralGrid& g, const QTensorField& Q,
                            const MaterialParams& p) {
    const QDerivatives d = q_derivatives(g, Q);
    ScalarField f(g.npoints());
    for (std::size_t pt = 0; pt < g.npoints(); ++pt) {
        const Matrix3 G[3] = {qmat_at(d.dQ[0], pt), qmat_at(d.dQ[1], pt), qmat_at(d.dQ[2], pt)};
        const Matrix3 qm = qmat_at(Q, pt);

        double t1 = 0.0;
        for (int ax = 0; ax < 3; ++ax) t1 += ddot(G[ax], G[ax]);

        double t2 = 0.0;
        for (int i = 0; i < 3; ++i) {
            const double di = d.divQ.comp(i)[pt];
            t2 += di * di;
        }

        // Q_ik,j Q_ij,k
        double t3 = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k) t3 += G[j](i, k) * G[k](i, j);

        // eps_lik Q_lj Q_ij,k
        double t4 = 0.0;
        for (int l = 0; l < 3; ++l)
            for (int i = 0; i < 3; ++i)
                for (int k = 0; k < 3; ++k) {
                    const int e = levi_civita(l, i, k);
                    if (e == 0) continue;
                    for (int j = 0; j < 3; ++j) t4 += e * qm(l, j) * G[k](i, j);
                }

        f.comp(0)[pt] = 0.5 * (p.L1 * t1 + p.L2 * t2 + p.L3 * t3 + p.L4 * t4);
    }
    SpectralScalar fh = to_spectral(g, f);
    dealias(g, fh);
    return to_physical(g, fh);
}

MolecularFieldSpectral molecular_field_spectral(const SpectralGrid& g, const QTensorField& Q,
                                                const MaterialParams& p, bool dealias_bulk,
                                                const std::vector<std::uint8_t>* bc_mask) {
    return molecular_field_spectral(g, Q, to_spectral(g, Q), p, dealias_bulk, bc_mask);
}

MolecularFieldSpectral molecular_field_spectral(const SpectralGrid& g, const QTensorField& Q,
                                                const SpectralQTensor& qhat,
                                                const MaterialParams& p, bool dealias_bulk,
                                                const std::vector<std::uint8_t>* bc_mask) {
    const std::size_t nm = g.nmodes();
    MolecularFieldSpectral out;
    out.M = SpectralQTensor(nm);
    out.E = SpectralQTensor(nm);
    out.H = SpectralQTensor(nm);

    const double l23 = p.L2 + p.L3;

    for (std::size_t s = 0; s < nm; ++s) {
        double k[3];
        g.kd_of(s, k[0], k[1], k[2]);
        double re[5], im[5], mre[5], mim[5], sre[5], sim[5];
        for (int c = 0; c < 5; ++c) {
            re[c] = qhat.comp(c)[s].real();
            im[c] = qhat.comp(c)[s].imag();
        }
        elastic_symbol_apply(k, p.L1, l23, re, mre);
        elastic_symbol_apply(k, p.L1, l23, im, mim);
        cross_symbol_apply(k, re, sre);
        cross_symbol_apply(k, im, sim);
        for (int c = 0; c < 5; ++c) {
            out.M.comp(c)[s] = cd(mre[c], mim[c]);
            out.E.comp(c)[s] = cd(-p.L4 * sim[c], p.L4 * sre[c]);  // i * L4 * S(k) q
        }
    }

    QTensorField bf(g.npoints());
    for (std::size_t pt = 0; pt < g.npoints(); ++pt)
        set_qten(bf, pt, bulk_nonlinear_at(qten_at(Q, pt), p));
    out.B = to_spectral(g, bf);
    if (dealias_bulk) dealias(g, out.B);
    if (bc_mask) apply_mask(g, out.B, *bc_mask);
    // linear -aQ completes B; it follows the outer projection but never the
    // bulk-product mask
    for (int c = 0; c < 5; ++c)
        for (std::size_t s = 0; s < nm; ++s)
            out.B.comp(c)[s] -= p.a * ((dealias_bulk && !g.retained(s)) ? cd(0.0, 0.0)
                                                                        : qhat.comp(c)[s]);

    for (int c = 0; c < 5; ++c)
        for (std::size_t s = 0; s < nm; ++s)
            out.H.comp(c)[s] = out.M.comp(c)[s] + out.E.comp(c)[s] + out.B.comp(c)[s];
    return out;
}

MolecularFieldParts molecular_field(const SpectralGrid& g, const QTensorField& Q,
                                    const MaterialParams& p, bool dealias_bulk) {
    const MolecularFieldSpectral sp = molecular_field_spectral(g, Q, p, dealias_bulk);
    MolecularFieldParts out;
    out.H = to_physical(g, sp.H);
    out.M = to_physical(g, sp.M);
    out.E = to_physical(g, sp.E);
    out.B = to_physical(g, sp.B);
    return out;
}

LagrangeMultipliers lagrange_multipliers(const SpectralGrid& g, const QTensorField& Q,
                                         const MaterialParams& p) {
    const std::size_t nm = g.nmodes();
    const SpectralQTensor qhat = to_spectral(g, Q);
    const double l23 = p.L2 + p.L3;

    SpectralScalar ddq(nm);     // Q_kp,kp
    SpectralScalar curlq(nm);   // eps_lpk Q_lp,k
    SpectralField<9> anti(nm);  // antisymmetric multiplier matrix

    for (std::size_t s = 0; s < nm; ++s) {
        double k[3];
        g.kd_of(s, k[0], k[1], k[2]);
        cd qc[3][3];
        qfull(qhat, s, qc);

        cd dv[3];
        for (int i = 0; i < 3; ++i)
            dv[i] = k[0] * qc[i][0] + k[1] * qc[i][1] + k[2] * qc[i][2];

        cd trg(0.0, 0.0);
        for (int i = 0; i < 3; ++i) trg += -k[i] * dv[i];
        ddq.comp(0)[s] = trg;

        const cd iu(0.0, 1.0);
        cd rr[3][3];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                cd acc(0.0, 0.0);
                for (int l = 0; l < 3; ++l)
                    for (int kk = 0; kk < 3; ++kk) {
                        const int e = levi_civita(l, i, kk);
                        if (e != 0) acc += static_cast<double>(e) * k[kk] * qc[l][j];
                    }
                rr[i][j] = iu * acc;
            }
        cd trr(0.0, 0.0);
        for (int i = 0; i < 3; ++i) trr += rr[i][i];
        curlq.comp(0)[s] = trr;

        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const cd gij = -k[j] * dv[i];
                const cd gji = -k[i] * dv[j];
                anti.comp(3 * i + j)[s] =
                    0.5 * l23 * (gij - gji) + 0.5 * p.L4 * (rr[i][j] - rr[j][i]);
            }
    }

    const ScalarField ddq_p = to_physical(g, ddq);
    const ScalarField curlq_p = to_physical(g, curlq);

    LagrangeMultipliers out;
    out.lambda0 = ScalarField(g.npoints());
    for (std::size_t pt = 0; pt < g.npoints(); ++pt) {
        const double tr2 = pointwise_mag2(Q, pt);
        out.lambda0.comp(0)[pt] =
            (l23 / 3.0) * ddq_p.comp(0)[pt] + (p.b / 3.0) * tr2 +
            (p.L4 / 3.0) * curlq_p.comp(0)[pt];
    }
    out.lambda_antisym = to_physical(g, anti);
    return out;
}

Field<9> distortion_stress_from(const SpectralGrid& g, const QDerivatives& d,
                                const QTensorField& Q, const MaterialParams& p) {
    Field<9> sig(g.npoints());
    for (std::size_t pt = 0; pt < g.npoints(); ++pt) {
        const Matrix3 G[3] = {qmat_at(d.dQ[0], pt), qmat_at(d.dQ[1], pt), qmat_at(d.dQ[2], pt)};
        const Matrix3 qm = qmat_at(Q, pt);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = p.L1 * ddot(G[i], G[j]);  // Q_kl,i Q_kl,j
                for (int k = 0; k < 3; ++k)
                    s += p.L2 * d.divQ.comp(k)[pt] * G[i](k, j);  // Q_km,m Q_kj,i
                for (int k = 0; k < 3; ++k)
                    for (int l = 0; l < 3; ++l)
                        s += p.L3 * G[l](k, j) * G[i](k, l);  // Q_kj,l Q_kl,i
                for (int m = 0; m < 3; ++m)
                    for (int k = 0; k < 3; ++k) {
                        const int e = levi_civita(m, k, j);
                        if (e == 0) continue;
                        for (int l = 0; l < 3; ++l)
                            s += 0.5 * p.L4 * e * qm(m, l) * G[i](k, l);  // eps_mkj Q_ml Q_kl,i
                    }
                sig.comp(3 * i + j)[pt] = -s;
            }
    }
    return sig;
}

Field<9> distortion_stress(const SpectralGrid& g, const QTensorField& Q,
                           const MaterialParams& p, bool dealias_result) {
    const QDerivatives d = q_derivatives(g, Q);
    Field<9> sig = distortion_stress_from(g, d, Q, p);
    if (dealias_result) {
        SpectralField<9> sh = to_spectral(g, sig);
        dealias(g, sh);
        sig = to_physical(g, sh);
    }
    return sig;
}

Field<9> antisymmetric_stress(const SpectralGrid& g, const QTensorField& Q,
                              const QTensorField& H, bool dealias_result) {
    Field<9> sig(g.npoints());
    for (std::size_t pt = 0; pt < g.npoints(); ++pt) {
        const Matrix3 c = commutator(qmat_at(Q, pt), qmat_at(H, pt));
        for (int i = 0; i < 9; ++i) sig.comp(i)[pt] = c.m[i];
    }
    if (dealias_result) {
        SpectralField<9> sh = to_spectral(g, sig);
        dealias(g, sh);
        sig = to_physical(g, sh);
    }
    return sig;
}

ElasticIntegrals elastic_integrals(const SpectralGrid& g, const QDerivatives& d,
                                   const QTensorField& Q) {
    const double dv = g.volume() / static_cast<double>(g.npoints());
    double t1 = 0.0, t2 = 0.0, t3 = 0.0, t4 = 0.0;
    for (std::size_t pt = 0; pt < g.npoints(); ++pt) {
        const Matrix3 G[3] = {qmat_at(d.dQ[0], pt), qmat_at(d.dQ[1], pt), qmat_at(d.dQ[2], pt)};
        const Matrix3 qm = qmat_at(Q, pt);
        for (int ax = 0; ax < 3; ++ax) t1 += ddot(G[ax], G[ax]);
        for (int i = 0; i < 3; ++i) {
            const double di = d.divQ.comp(i)[pt];
            t2 += di * di;
        }
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k) t3 += G[j](i, k) * G[k](i, j);
        for (int l = 0; l < 3; ++l)
            for (int i = 0; i < 3; ++i)
                for (int k = 0; k < 3; ++k) {
                    const int e = levi_civita(l, i, k);
                    if (e == 0) continue;
                    for (int j = 0; j < 3; ++j) t4 += e * qm(l, j) * G[k](i, j);
                }
    }
    ElasticIntegrals out;
    out.t1 = dv * t1;
    out.t2 = dv * t2;
    out.t3 = dv * t3;
    out.t4 = dv * t4;
    return out;
}

EnergyReport total_energy(const SpectralGrid& g, const VectorField3& u, const QTensorField& Q,
                          const MaterialParams& p) {
    const double dv = g.volume() / static_cast<double>(g.npoints());
    EnergyReport r;

    double kin = 0.0;
    for (std::size_t pt = 0; pt < g.npoints(); ++pt) kin += pointwise_mag2(u, pt);
    r.kinetic = 0.5 * dv * kin;

    const QDerivatives d = q_derivatives(g, Q);
    const ElasticIntegrals ei = elastic_integrals(g, d, Q);
    double fb = 0.0;
    for (std::size_t pt = 0; pt < g.npoints(); ++pt) fb += bulk_density(qten_at(Q, pt), p);
    r.elastic_L1 = 0.5 * p.L1 * ei.t1;
    // On the torus the mixed-gradient term integrates to |div Q|^2, so the
    // energy carries (L2+L3)/2 on that single quadratic form.
    r.elastic_L23 = 0.5 * (p.L2 + p.L3) * ei.t2;
    r.elastic_L4_cross = 0.5 * p.L4 * ei.t4;
    r.bulk = dv * fb;
    r.total = r.kinetic + r.elastic_L1 + r.elastic_L23 + r.elastic_L4_cross + r.bulk;

    const FieldNorms un = discrete_norms(g, u);
    r.dissipation_viscous = p.mu * un.h1 * un.h1;

    const MolecularFieldSpectral mf = molecular_field_spectral(g, Q, d.qhat, p);
    const QTensorField h = to_physical(g, mf.H);
    double h2 = 0.0;
    for (std::size_t pt = 0; pt < g.npoints(); ++pt) h2 += pointwise_mag2(h, pt);
    r.dissipation_rotational = p.gamma * dv * h2;
    return r;
}

CoercivityResult coercivity_constant_K(const MaterialParams& p, const CoercivityBudget& budget) {
    const double sqrt6 = std::sqrt(6.0);
    const double tsign = (p.b >= 0.0) ? 1.0 : -1.0;

    auto certify = [&](double K, double& bad_s, double& bad_t) {
        for (long j = 1; j <= budget.s_samples; ++j) {
            const double s = budget.s_max * static_cast<double>(j) / budget.s_samples;
            const double t = tsign * s * std::sqrt(s) / sqrt6;
            const double lin = 0.5 * (K + p.a) * s;
            const double cub = (p.b / 3.0) * t;
            const double qua = 0.125 * p.c * s * s;
            const double gval = lin - cub + qua;
            const double scale = 1.0 + std::abs(lin) + std::abs(cub) + std::abs(qua);
            if (gval < -1e-12 * scale) {
                bad_s = s;
                bad_t = t;
                return false;
            }
        }
        return true;
    };

    CoercivityResult r;
    double K = 0.0;
    for (long n = 0; n < budget.max_candidates; ++n) {
        ++r.candidates_tried;
        double bs = 0.0, bt = 0.0;
        if (certify(K, bs, bt)) {
            r.K = K;
            r.certified = true;
            return r;
        }
        r.violating_s = bs;
        r.violating_t = bt;
        K = (K == 0.0) ? 1e-3 : K * 1.05;
    }
    r.K = K;
    return r;
}

}  // namespace nemaq
