#include "nemaq/verification.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <thread>

#include "nemaq/tensor_algebra.hpp"

namespace nemaq {

namespace {

bool finite_data(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

void require_field(const SpectralGrid& g, std::size_t npoints, const std::vector<double>& data,
                   const char* who) {
    if (npoints != g.npoints())
        throw std::invalid_argument(std::string(who) + ": field size does not match grid");
    if (!finite_data(data)) throw std::invalid_argument(std::string(who) + ": field must be finite");
}

void require_state(const SpectralGrid& g, const SimState& s, const char* who) {
    require_field(g, s.u.npoints(), s.u.data, who);
    require_field(g, s.q.npoints(), s.q.data, who);
}

void require_solenoidal(const SpectralGrid& g, const VectorField3& u, const char* who) {
    const double div = divergence_l2(g, u);
    const double h1 = discrete_norms(g, u).h1;
    if (h1 > 0.0 && div > 1e-10 * h1)
        throw std::invalid_argument(std::string(who) + ": velocity is not divergence-free");
}

// Frobenius magnitude of a five-component spectral coefficient (the 33 entry
// is minus the sum of the diagonal pair).
double frob5(const double re[5], const double im[5]) {
    const double r33 = re[0] + re[3], i33 = im[0] + im[3];
    return re[0] * re[0] + im[0] * im[0] + re[3] * re[3] + im[3] * im[3] + r33 * r33 + i33 * i33 +
           2.0 * (re[1] * re[1] + im[1] * im[1] + re[2] * re[2] + im[2] * im[2] + re[4] * re[4] +
                  im[4] * im[4]);
}

Field<9> velocity_gradient(const SpectralGrid& g, const VectorField3& u) {
    Field<9> grad(g.npoints());
    const SpectralVector3 uhat = to_spectral(g, u);
    SpectralScalar chat(g.nmodes());
    for (int i = 0; i < 3; ++i) {
        std::memcpy(chat.data.data(), uhat.comp(i), g.nmodes() * sizeof(std::complex<double>));
        for (int j = 0; j < 3; ++j) {
            const ScalarField dij = to_physical(g, derivative(g, chat, j));
            std::memcpy(grad.comp(3 * i + j), dij.comp(0), g.npoints() * sizeof(double));
        }
    }
    return grad;
}

// Work queue over independent tasks; each worker gets its own grid so plan
// scratch is never shared.
void parallel_tasks(const SpectralGrid& g, std::size_t n,
                    const std::function<void(std::size_t, const SpectralGrid&)>& fn) {
    const std::size_t nw = std::min<std::size_t>(static_cast<std::size_t>(worker_threads()), n);
    if (nw <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i, g);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(nw);
    std::vector<std::thread> pool;
    pool.reserve(nw);
    for (std::size_t w = 0; w < nw; ++w) {
        pool.emplace_back([&, w]() {
            try {
                SpectralGrid local(g.n1(), g.n2(), g.n3(), g.box_length());
                std::size_t i;
                while ((i = next.fetch_add(1)) < n) fn(i, local);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace

IdentityReport make_identity_report(std::string name, double value, double scale) {
    IdentityReport r;
    r.name = std::move(name);
    r.value = value;
    r.scale = scale;
    if (scale > 0.0)
        r.relative_residual = std::abs(value) / scale;
    else
        r.relative_residual = (value == 0.0) ? 0.0 : std::numeric_limits<double>::infinity();
    return r;
}

std::vector<IdentityReport> cancellation_suite(const SpectralGrid& g, const SimState& s,
                                               const MaterialParams& p) {
    require_state(g, s, "cancellation_suite");
    require_solenoidal(g, s.u, "cancellation_suite");

    const std::size_t np = g.npoints();
    const double dv = g.volume() / static_cast<double>(np);

    const QDerivatives d = q_derivatives(g, s.q);
    const MolecularFieldParts mf = molecular_field(g, s.q, p, true);
    const Field<9> sig = distortion_stress_from(g, d, s.q, p);
    const Field<9> gu = velocity_gradient(g, s.u);

    // Advection of the bulk potential in flux form: the potential is sampled
    // on the grid, differentiated spectrally, and paired with u. The pairing
    // vanishes mode by mode against a divergence-free velocity, so this
    // stays at round-off whatever the potential's frequency content.
    ScalarField fb(np);
    for (std::size_t pt = 0; pt < np; ++pt) fb.comp(0)[pt] = bulk_density(qten_at(s.q, pt), p);
    const SpectralScalar fbhat = to_spectral(g, fb);
    ScalarField dfb[3];
    for (int ax = 0; ax < 3; ++ax) dfb[ax] = to_physical(g, derivative(g, fbhat, ax));
    double bulk_val = 0.0, bulk_scale = 0.0;
    for (std::size_t pt = 0; pt < np; ++pt)
        for (int ax = 0; ax < 3; ++ax) {
            const double t = s.u.comp(ax)[pt] * dfb[ax].comp(0)[pt];
            bulk_val += t;
            bulk_scale += std::abs(t);
        }

    // Second derivatives of Q for the mixed-partial contraction.
    QTensorField d2[6];
    {
        int slot = 0;
        for (int a = 0; a < 3; ++a)
            for (int b = a; b < 3; ++b) {
                SpectralQTensor t = derivative(g, d.qhat, a);
                t = derivative(g, t, b);
                d2[slot++] = to_physical(g, t);
            }
    }
    const auto d2_at = [&](int a, int b) -> const QTensorField& {
        if (a > b) std::swap(a, b);
        static const int slot[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
        return d2[slot[a][b]];
    };

    double i_m = 0.0, i_e = 0.0, i_s = 0.0;
    double j5 = 0.0, j6 = 0.0;
    double mix_val = 0.0, mix_scale = 0.0;
    double tr_val = 0.0, tr_scale = 0.0;

    for (std::size_t pt = 0; pt < np; ++pt) {
        const Matrix3 qm = qten_at(s.q, pt).matrix();
        const Matrix3 hm = qten_at(mf.H, pt).matrix();

        Matrix3 gum;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) gum(i, j) = gu.comp(3 * i + j)[pt];
        Matrix3 D, W;
        strain_and_vorticity(gum, D, W);

        Matrix3 dqm[3];
        for (int ax = 0; ax < 3; ++ax) dqm[ax] = qten_at(d.dQ[ax], pt).matrix();

        // u . grad Q paired with the elastic molecular field parts.
        QTensor adv{};
        for (int ax = 0; ax < 3; ++ax) {
            const double ug = s.u.comp(ax)[pt];
            const QTensor dq = qten_at(d.dQ[ax], pt);
            for (int c = 0; c < 5; ++c) adv.comp(c) += ug * dq.comp(c);
        }
        i_m += qdot(adv, qten_at(mf.M, pt));
        i_e += qdot(adv, qten_at(mf.E, pt));

        // Distortion stress power against the velocity gradient.
        for (int c = 0; c < 9; ++c) i_s += sig.comp(c)[pt] * gu.comp(c)[pt];

        // Co-rotation work and antisymmetric stress power cancel pointwise.
        j5 += ddot(commutator(qm, W), hm);
        j6 -= ddot(commutator(qm, hm), gum);

        // u_g Q_ab,gd Q_ad,b: zero because the d-derivative can be swapped
        // onto the other factor, where renaming the summation indices gives
        // the negative of the same expression.
        for (int ga = 0; ga < 3; ++ga) {
            const double ug = s.u.comp(ga)[pt];
            for (int de = 0; de < 3; ++de) {
                const Matrix3 a2 = qten_at(d2_at(ga, de), pt).matrix();
                for (int al = 0; al < 3; ++al)
                    for (int be = 0; be < 3; ++be) {
                        const double t = ug * a2(al, be) * dqm[be](al, de);
                        mix_val += t;
                        mix_scale += std::abs(t);
                    }
            }
        }

        // tr((WQ - QW) Q), zero by cyclicity of the trace. The constituent
        // traces are themselves pointwise zero (antisymmetric against
        // symmetric), so the scale sums the diagonal entries being traced.
        const Matrix3 wqq = matmul(matmul(W, qm), qm);
        const Matrix3 qwq = matmul(matmul(qm, W), qm);
        tr_val += trace(wqq) - trace(qwq);
        for (int i = 0; i < 3; ++i) tr_scale += std::abs(wqq(i, i)) + std::abs(qwq(i, i));
    }

    std::vector<IdentityReport> out;
    out.push_back(make_identity_report("bulk_transport", bulk_val * dv, bulk_scale * dv));
    out.push_back(make_identity_report("elastic_transport_vs_stress", (i_m + i_e - i_s) * dv,
                                       (std::abs(i_m) + std::abs(i_e) + std::abs(i_s)) * dv));
    out.push_back(make_identity_report("rotation_exchange", (j5 + j6) * dv,
                                       (std::abs(j5) + std::abs(j6)) * dv));
    out.push_back(make_identity_report("mixed_partial_contraction", -p.L3 * mix_val * dv,
                                       std::abs(p.L3) * mix_scale * dv));
    out.push_back(make_identity_report("corotation_trace", tr_val * dv, tr_scale * dv));
    return out;
}

IdentityReport bulk_transport_product_control(const SpectralGrid& g, const SimState& s,
                                              const MaterialParams& p) {
    require_state(g, s, "bulk_transport_product_control");
    require_solenoidal(g, s.u, "bulk_transport_product_control");

    const std::size_t np = g.npoints();
    const double dv = g.volume() / static_cast<double>(np);
    const QDerivatives d = q_derivatives(g, s.q);
    const MolecularFieldParts mf = molecular_field(g, s.q, p, false);

    double val = 0.0, scale = 0.0;
    for (std::size_t pt = 0; pt < np; ++pt) {
        QTensor adv{};
        for (int ax = 0; ax < 3; ++ax) {
            const double ug = s.u.comp(ax)[pt];
            const QTensor dq = qten_at(d.dQ[ax], pt);
            for (int c = 0; c < 5; ++c) adv.comp(c) += ug * dq.comp(c);
        }
        const double t = qdot(adv, qten_at(mf.B, pt));
        val += t;
        scale += std::abs(t);
    }
    return make_identity_report("bulk_transport_pointwise_product", val * dv, scale * dv);
}

IdentityReport null_lagrangian_residual(const SpectralGrid& g, const QTensorField& Q) {
    require_field(g, Q.npoints(), Q.data, "null_lagrangian_residual");
    const QDerivatives d = q_derivatives(g, Q);
    const ElasticIntegrals ei = elastic_integrals(g, d, Q);
    return make_identity_report("null_lagrangian", ei.t2 - ei.t3, std::abs(ei.t2) + std::abs(ei.t3));
}

EnergyBalanceResult energy_balance_residual(const std::vector<EnergyReport>& rows, double row_dt) {
    if (rows.size() < 3)
        throw std::invalid_argument("energy_balance_residual: need at least three report rows");
    if (!(row_dt > 0.0))
        throw std::invalid_argument("energy_balance_residual: row spacing must be positive");
    EnergyBalanceResult out;
    out.residuals.reserve(rows.size() - 1);
    double acc = 0.0;
    for (std::size_t m = 0; m + 1 < rows.size(); ++m) {
        const double d0 = rows[m].dissipation_viscous + rows[m].dissipation_rotational;
        const double d1 = rows[m + 1].dissipation_viscous + rows[m + 1].dissipation_rotational;
        const double r = (rows[m + 1].total - rows[m].total) / row_dt + 0.5 * (d0 + d1);
        out.residuals.push_back(r);
        acc += std::abs(r) * row_dt;
        out.dissipation_integral += 0.5 * (d0 + d1) * row_dt;
    }
    if (out.dissipation_integral > 0.0)
        out.aggregate = acc / out.dissipation_integral;
    else
        out.aggregate = (acc == 0.0) ? 0.0 : std::numeric_limits<double>::infinity();
    return out;
}

VariationalReport variational_consistency(const SpectralGrid& g, const QTensorField& Q,
                                          const MaterialParams& p, double fd_step, int directions,
                                          std::uint64_t seed) {
    if (!(fd_step >= 1e-7 && fd_step <= 1e-3))
        throw std::invalid_argument("variational_consistency: fd_step outside [1e-7, 1e-3]");
    if (directions < 10)
        throw std::invalid_argument("variational_consistency: need at least ten directions");
    require_field(g, Q.npoints(), Q.data, "variational_consistency");

    const std::size_t np = g.npoints();
    // Raw bulk: the exact gradient of the pointwise-quadrature bulk energy.
    // The band projection would be free against band-limited directions but
    // is not part of the discrete functional differentiated here.
    const MolecularFieldParts mf = molecular_field(g, Q, p, false);

    const auto free_energy = [&](const QTensorField& qf) {
        const QDerivatives d = q_derivatives(g, qf);
        const ElasticIntegrals ei = elastic_integrals(g, d, qf);
        double bulk = 0.0;
        for (std::size_t pt = 0; pt < np; ++pt) bulk += bulk_density(qten_at(qf, pt), p);
        bulk *= g.volume() / static_cast<double>(np);
        return 0.5 * (p.L1 * ei.t1 + (p.L2 + p.L3) * ei.t2 + p.L4 * ei.t4) + bulk;
    };

    VariationalReport rep;
    for (int dir = 0; dir < directions; ++dir) {
        QTensorField G = random_qtensor_field(g, 4.0, seed + 1000003ull * static_cast<std::uint64_t>(dir));
        const double gn = discrete_norms(g, G).l2;
        if (gn == 0.0) {
            rep.per_direction.push_back(0.0);
            continue;
        }
        for (double& v : G.data) v /= gn;

        const double pairing = l2_inner(g, mf.H, G);
        const auto feval = [&](double eps) {
            QTensorField qe = Q;
            for (std::size_t i = 0; i < qe.data.size(); ++i) qe.data[i] += eps * G.data[i];
            return free_energy(qe);
        };
        const double h = fd_step;
        const double fd =
            (-feval(2.0 * h) + 8.0 * feval(h) - 8.0 * feval(-h) + feval(-2.0 * h)) / (12.0 * h);
        const double denom = std::max({std::abs(fd), std::abs(pairing), 1e-300});
        const double r = std::abs(fd + pairing) / denom;
        rep.per_direction.push_back(r);
        rep.worst = std::max(rep.worst, r);
    }
    return rep;
}

HigherOrderDiagnostic higher_order_diagnostic(const SpectralGrid& g, const SimState& s,
                                              const MaterialParams& p, bool via_spectral) {
    require_state(g, s, "higher_order_diagnostic");
    const double l23 = p.L2 + p.L3;
    double gu2 = 0.0, lap2 = 0.0, gd2 = 0.0;

    if (via_spectral) {
        const SpectralVector3 uh = to_spectral(g, s.u);
        const SpectralQTensor qh = to_spectral(g, s.q);
        const std::size_t nm = g.nmodes();
        for (std::size_t m = 0; m < nm; ++m) {
            double k1, k2, k3;
            g.kd_of(m, k1, k2, k3);
            const double ksq = k1 * k1 + k2 * k2 + k3 * k3;
            const double mult = g.mult_of(m);

            double um2 = 0.0;
            for (int c = 0; c < 3; ++c) um2 += std::norm(uh.comp(c)[m]);
            gu2 += mult * ksq * um2;

            double re[5], im[5];
            for (int c = 0; c < 5; ++c) {
                re[c] = qh.comp(c)[m].real();
                im[c] = qh.comp(c)[m].imag();
            }
            lap2 += mult * ksq * ksq * frob5(re, im);

            const std::complex<double> ik1(0.0, k1), ik2(0.0, k2), ik3(0.0, k3);
            const std::complex<double> q11 = qh.comp(0)[m], q12 = qh.comp(1)[m],
                                       q13 = qh.comp(2)[m], q22 = qh.comp(3)[m],
                                       q23 = qh.comp(4)[m];
            const std::complex<double> q33 = -(q11 + q22);
            const std::complex<double> dv0 = ik1 * q11 + ik2 * q12 + ik3 * q13;
            const std::complex<double> dv1 = ik1 * q12 + ik2 * q22 + ik3 * q23;
            const std::complex<double> dv2 = ik1 * q13 + ik2 * q23 + ik3 * q33;
            gd2 += mult * ksq * (std::norm(dv0) + std::norm(dv1) + std::norm(dv2));
        }
        gu2 *= g.volume();
        lap2 *= g.volume();
        gd2 *= g.volume();
    } else {
        const std::size_t np = g.npoints();
        const double dv = g.volume() / static_cast<double>(np);

        const Field<9> gradu = velocity_gradient(g, s.u);
        for (int c = 0; c < 9; ++c)
            for (std::size_t pt = 0; pt < np; ++pt) gu2 += gradu.comp(c)[pt] * gradu.comp(c)[pt];
        gu2 *= dv;

        const SpectralQTensor qh = to_spectral(g, s.q);
        const QTensorField lap = to_physical(g, laplacian(g, qh));
        for (std::size_t pt = 0; pt < np; ++pt) lap2 += pointwise_mag2(lap, pt);
        lap2 *= dv;

        const QDerivatives d = q_derivatives(g, s.q);
        const SpectralVector3 dvh = to_spectral(g, d.divQ);
        for (int ax = 0; ax < 3; ++ax) {
            const VectorField3 gda = to_physical(g, derivative(g, dvh, ax));
            for (int c = 0; c < 3; ++c)
                for (std::size_t pt = 0; pt < np; ++pt) gd2 += gda.comp(c)[pt] * gda.comp(c)[pt];
        }
        gd2 *= dv;
    }

    HigherOrderDiagnostic out;
    out.value = gu2 + p.L1 * lap2 + l23 * gd2;
    out.shifted = out.value + 1.0;
    return out;
}

std::vector<ViscositySweepRow> viscosity_sweep(const SpectralGrid& g, const SimState& initial,
                                               const MaterialParams& p,
                                               const std::vector<double>& mu_values,
                                               const SolverConfig& cfg) {
    if (mu_values.size() < 3)
        throw std::invalid_argument("viscosity_sweep: need at least three viscosities");
    for (std::size_t i = 1; i < mu_values.size(); ++i)
        if (!(mu_values[i] > mu_values[i - 1]))
            throw std::invalid_argument("viscosity_sweep: viscosities must be strictly ascending");
    require_state(g, initial, "viscosity_sweep");

    std::vector<ViscositySweepRow> rows(mu_values.size());
    parallel_tasks(g, mu_values.size(), [&](std::size_t idx, const SpectralGrid& gg) {
        MaterialParams q = p;
        q.mu = mu_values[idx];
        ViscositySweepRow row;
        row.mu = q.mu;
        row.sup_shifted = higher_order_diagnostic(gg, initial, q).shifted;
        RunSinks sinks;
        sinks.on_step = [&](const SimState& st) {
            row.sup_shifted = std::max(row.sup_shifted, higher_order_diagnostic(gg, st, q).shifted);
        };
        const RunSummary sum = run(gg, initial, q, cfg, sinks);
        row.blew_up = sum.blew_up;
        row.blowup_time = sum.blowup_time;
        rows[idx] = row;
    });
    return rows;
}

TwinRunResult twin_run(const SpectralGrid& g, const SimState& a, const SimState& b,
                       const MaterialParams& p, const SolverConfig& cfg) {
    require_state(g, a, "twin_run");
    require_state(g, b, "twin_run");
    if (!(cfg.dt > 0.0)) throw std::invalid_argument("twin_run: dt must be positive");
    if (!(cfg.t_end > 0.0)) throw std::invalid_argument("twin_run: t_end must be positive");
    if (cfg.snapshot_every < 0)
        throw std::invalid_argument("twin_run: snapshot_every must be nonnegative");
    const double ratio = cfg.t_end / cfg.dt;
    const long nsteps = std::lround(ratio);
    if (nsteps < 1 || std::abs(ratio - static_cast<double>(nsteps)) > 1e-9 * ratio)
        throw std::invalid_argument("twin_run: t_end must be an integer number of steps");

    struct Series {
        std::vector<double> times, sep, du, dq;
        double kappa1 = 0.0, kappa2 = 0.0;
        bool blew_up = false;
        double blowup_time = 0.0;
    };

    const auto full_h1 = [](const FieldNorms& n) { return std::sqrt(n.l2 * n.l2 + n.h1 * n.h1); };
    const auto full_h2 = [](const FieldNorms& n) {
        return std::sqrt(n.l2 * n.l2 + n.h1 * n.h1 + n.h2 * n.h2);
    };

    const auto run_pair = [&](const SpectralGrid& gg, double dt, int every, long n, Series& out) {
        SolverConfig c2 = cfg;
        c2.dt = dt;
        c2.snapshot_every = every;
        SimState sa = a, sb = b;
        const std::size_t np = gg.npoints();

        const auto sample = [&](const SimState& x, const SimState& y) {
            VectorField3 du(np);
            QTensorField dq(np);
            for (std::size_t i = 0; i < du.data.size(); ++i) du.data[i] = x.u.data[i] - y.u.data[i];
            for (std::size_t i = 0; i < dq.data.size(); ++i) dq.data[i] = x.q.data[i] - y.q.data[i];
            const FieldNorms nu = discrete_norms(gg, du);
            const FieldNorms nq = discrete_norms(gg, dq);
            out.times.push_back(x.time);
            out.sep.push_back(nu.l2 * nu.l2 + nq.l2 * nq.l2 + nq.h1 * nq.h1);
            out.du.push_back(p.mu * nu.h1 * nu.h1);
            out.dq.push_back(p.gamma * p.L1 * p.L1 * nq.h2 * nq.h2);
            for (const SimState* st : {&x, &y}) {
                const FieldNorms su = discrete_norms(gg, st->u);
                const FieldNorms sq = discrete_norms(gg, st->q);
                out.kappa1 = std::max(out.kappa1, su.l2 + full_h1(sq));
                out.kappa2 = std::max(out.kappa2, full_h1(su) + full_h2(sq));
            }
        };

        sample(sa, sb);
        for (long m = 0; m < n; ++m) {
            try {
                sa = step(gg, sa, p, c2);
                sb = step(gg, sb, p, c2);
            } catch (const BlowupError& e) {
                out.blew_up = true;
                out.blowup_time = e.time;
                break;
            }
            const bool at_row = (m + 1 == n) || (every > 0 && (m + 1) % every == 0);
            if (at_row) sample(sa, sb);
        }
    };

    Series main_run, half_run;
    const std::function<void(std::size_t, const SpectralGrid&)> task =
        [&](std::size_t idx, const SpectralGrid& gg) {
            if (idx == 0)
                run_pair(gg, cfg.dt, cfg.snapshot_every, nsteps, main_run);
            else
                run_pair(gg, 0.5 * cfg.dt, cfg.snapshot_every * 2, 2 * nsteps, half_run);
        };
    parallel_tasks(g, 2, task);

    const auto fit = [](const Series& s) {
        const double g0 = s.sep.empty() ? 0.0 : s.sep.front();
        if (!(g0 > 0.0)) return 0.0;
        double best = 0.0;
        bool any = false;
        for (std::size_t i = 1; i < s.sep.size(); ++i) {
            if (!(s.times[i] > 0.0) || !(s.sep[i] > 0.0)) continue;
            const double slope = (std::log(s.sep[i]) - std::log(g0)) / s.times[i];
            best = any ? std::max(best, slope) : slope;
            any = true;
        }
        return any ? best : 0.0;
    };

    TwinRunResult out;
    out.c_fit = fit(main_run);
    out.c_fit_half = fit(half_run);
    out.times = std::move(main_run.times);
    out.separation = std::move(main_run.sep);
    out.dissipation_u = std::move(main_run.du);
    out.dissipation_q = std::move(main_run.dq);
    out.kappa1 = main_run.kappa1;
    out.kappa2 = main_run.kappa2;
    out.blew_up = main_run.blew_up || half_run.blew_up;
    out.blowup_time = main_run.blew_up ? main_run.blowup_time : half_run.blowup_time;

    const double g0 = out.separation.empty() ? 0.0 : out.separation.front();
    const bool identical = (a.u.data == b.u.data) && (a.q.data == b.q.data);
    if (g0 == 0.0) {
        out.degenerate = !identical;
        out.stable = identical;
        out.bound_satisfied = identical;
        return out;
    }
    out.stable = std::abs(out.c_fit_half - out.c_fit) <= 0.05 * std::abs(out.c_fit) + 1e-12;
    bool within = true;
    for (std::size_t i = 0; i < out.separation.size(); ++i)
        within = within &&
                 out.separation[i] <= g0 * std::exp(out.c_fit * out.times[i]) * (1.0 + 1e-6);
    out.bound_satisfied = within && out.stable && !out.blew_up;
    return out;
}

std::vector<IdentityReport> mollifier_suite(const SpectralGrid& g,
                                            const std::vector<double>& n_values) {
    std::vector<IdentityReport> out;
    int idx = 0;
    for (double n : n_values) {
        if (!(n >= 1.0))
            throw std::invalid_argument("mollifier_suite: cutoff index must be at least 1");
        char tag[32];
        std::snprintf(tag, sizeof tag, "%g", n);
        const auto mask = g.mollifier_mask(n);

        const ScalarField f = random_scalar_field(g, 2.5, 7101 + 17 * static_cast<std::uint64_t>(idx), false);
        const ScalarField h = random_scalar_field(g, 2.5, 7301 + 17 * static_cast<std::uint64_t>(idx), false);
        ++idx;

        const SpectralScalar fh = to_spectral(g, f);
        SpectralScalar once = fh;
        apply_mask(g, once, mask);
        SpectralScalar twice = once;
        apply_mask(g, twice, mask);
        double dmax = 0.0, cmax = 0.0;
        for (std::size_t m = 0; m < g.nmodes(); ++m) {
            dmax = std::max(dmax, std::abs(once.comp(0)[m] - twice.comp(0)[m]));
            cmax = std::max(cmax, std::abs(once.comp(0)[m]));
        }
        out.push_back(make_identity_report(std::string("mollifier_idempotent_") + tag, dmax, cmax));

        const ScalarField jf = mollified(g, f, n);
        const ScalarField jh = mollified(g, h, n);
        const double lhs = l2_inner(g, jf, h);
        const double rhs = l2_inner(g, f, jh);
        const FieldNorms nf = discrete_norms(g, f);
        const FieldNorms nh = discrete_norms(g, h);
        out.push_back(make_identity_report(std::string("mollifier_self_adjoint_") + tag, lhs - rhs,
                                           nf.l2 * nh.l2));

        SpectralScalar a1 = fh;
        apply_mask(g, a1, mask);
        a1 = derivative(g, a1, 0);
        SpectralScalar a2 = derivative(g, fh, 0);
        apply_mask(g, a2, mask);
        double acc = 0.0;
        for (std::size_t m = 0; m < g.nmodes(); ++m)
            acc += g.mult_of(m) * std::norm(a1.comp(0)[m] - a2.comp(0)[m]);
        out.push_back(make_identity_report(std::string("mollifier_derivative_commutes_") + tag,
                                           std::sqrt(g.volume() * acc), nf.h1));
    }
    return out;
}

DeltaDissipationReport delta_dissipation_check(const SpectralGrid& g, const QTensorField& q1,
                                               const QTensorField& q2, const MaterialParams& p) {
    require_field(g, q1.npoints(), q1.data, "delta_dissipation_check");
    require_field(g, q2.npoints(), q2.data, "delta_dissipation_check");
    if (!(p.L1 > 0.0))
        throw std::invalid_argument("delta_dissipation_check: L1 must be positive");

    QTensorField dq(g.npoints());
    for (std::size_t i = 0; i < dq.data.size(); ++i) dq.data[i] = q1.data[i] - q2.data[i];
    const SpectralQTensor dh = to_spectral(g, dq);

    const double l23 = p.L2 + p.L3;
    double ctrl = 0.0, curv = 0.0, grad = 0.0;
    for (std::size_t m = 0; m < g.nmodes(); ++m) {
        double kd[3];
        g.kd_of(m, kd[0], kd[1], kd[2]);
        const double ksq = kd[0] * kd[0] + kd[1] * kd[1] + kd[2] * kd[2];
        const double mult = g.mult_of(m);

        double re[5], im[5];
        for (int c = 0; c < 5; ++c) {
            re[c] = dh.comp(c)[m].real();
            im[c] = dh.comp(c)[m].imag();
        }
        double mre[5], mim[5], cre[5], cim[5], tre[5], tim[5];
        elastic_symbol_apply(kd, p.L1, l23, re, mre);
        elastic_symbol_apply(kd, p.L1, l23, im, mim);
        cross_symbol_apply(kd, re, cre);
        cross_symbol_apply(kd, im, cim);
        for (int c = 0; c < 5; ++c) {
            tre[c] = mre[c] - p.L4 * cim[c];
            tim[c] = mim[c] + p.L4 * cre[c];
        }
        ctrl += mult * frob5(tre, tim);
        const double q2m = frob5(re, im);
        curv += mult * ksq * ksq * q2m;
        grad += mult * ksq * q2m;
    }
    ctrl *= g.volume();
    curv *= g.volume();
    grad *= g.volume();

    DeltaDissipationReport rep;
    rep.control_norm2 = ctrl;
    rep.curvature_norm2 = curv;
    rep.gradient_norm2 = grad;
    rep.c_emp = 2.0 * (p.L4 * p.L4 + l23 * l23) / p.L1 + p.L1 * std::abs(l23);
    rep.bound = 0.5 * p.L1 * p.L1 * curv - rep.c_emp * grad;
    rep.margin = ctrl - rep.bound;
    return rep;
}

int worker_threads() {
    const char* env = std::getenv("NEMAQ_THREADS");
    if (!env || !*env) return 1;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || v < 1) return 1;
    return static_cast<int>(std::min(v, 64L));
}

}  // namespace nemaq
