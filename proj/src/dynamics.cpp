#include "nemaq/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <utility>

namespace nemaq {

namespace {

using cd = std::complex<double>;

double smag2_vec(const SpectralVector3& v, std::size_t s) {
    return std::norm(v.comp(0)[s]) + std::norm(v.comp(1)[s]) + std::norm(v.comp(2)[s]);
}

// Frobenius magnitude of the symmetric traceless matrix held as five
// components: |q11|^2 + |q22|^2 + |q11+q22|^2 + 2(|q12|^2 + |q13|^2 + |q23|^2).
double smag2_qten(const SpectralQTensor& q, std::size_t s) {
    const cd q11 = q.comp(0)[s], q12 = q.comp(1)[s], q13 = q.comp(2)[s];
    const cd q22 = q.comp(3)[s], q23 = q.comp(4)[s];
    return std::norm(q11) + std::norm(q22) + std::norm(q11 + q22) +
           2.0 * (std::norm(q12) + std::norm(q13) + std::norm(q23));
}

template <int NC>
bool field_finite(const Field<NC>& f) {
    for (int c = 0; c < NC; ++c) {
        const double* d = f.comp(c);
        for (std::size_t p = 0; p < f.npoints(); ++p)
            if (!std::isfinite(d[p])) return false;
    }
    return true;
}

bool state_finite(const SimState& s) { return field_finite(s.u) && field_finite(s.q); }

template <int NC>
double field_l2(const SpectralGrid& g, const Field<NC>& f) {
    double acc = 0.0;
    for (int c = 0; c < NC; ++c) {
        const double* d = f.comp(c);
        for (std::size_t p = 0; p < f.npoints(); ++p) acc += d[p] * d[p];
    }
    // Off-diagonal and q33 weights are omitted on purpose: this norm only
    // scales the blow-up report, where the plain component magnitude is enough.
    return std::sqrt(acc * g.volume() / static_cast<double>(g.npoints()));
}

BlowupError make_blowup(const SpectralGrid& g, const SimState& last_finite) {
    return BlowupError(last_finite.time, field_l2(g, last_finite.u), field_l2(g, last_finite.q));
}

// Spectral-side result of one right-hand-side evaluation.  The imex scheme
// needs the transforms of both the state and the full tendency, so the core
// keeps them; the physical-side StateRhs is derived from this.
struct SpectralRhs {
    SpectralVector3 uhat;
    SpectralQTensor qhat;
    SpectralVector3 duhat;
    SpectralQTensor dqhat;
    EnergyReport report;
    double dissipation = 0.0;
};

SpectralRhs rhs_spectral(const SpectralGrid& g, const SimState& s, const MaterialParams& p,
                         const std::optional<double>& mollifier_n) {
    if (mollifier_n && !(*mollifier_n >= 1.0))
        throw std::invalid_argument("mollifier cutoff must be >= 1");
    const std::size_t np = g.npoints();
    const std::size_t nm = g.nmodes();
    const double dv = g.volume() / static_cast<double>(np);

    std::vector<std::uint8_t> jn;
    if (mollifier_n) jn = g.mollifier_mask(*mollifier_n);

    SpectralRhs out;
    out.uhat = to_spectral(g, s.u);

    // Velocity gradient, one scalar inverse transform per entry.
    Field<9> grad_u(np);
    {
        SpectralScalar ci(nm), di(nm);
        ScalarField dp(np);
        for (int i = 0; i < 3; ++i) {
            std::memcpy(ci.comp(0), out.uhat.comp(i), nm * sizeof(cd));
            for (int j = 0; j < 3; ++j) {
                di = derivative(g, ci, j);
                g.backward(di.comp(0), dp.comp(0));
                std::memcpy(grad_u.comp(3 * i + j), dp.comp(0), np * sizeof(double));
            }
        }
    }

    const QDerivatives d = q_derivatives(g, s.q);
    out.qhat = d.qhat;
    const MolecularFieldSpectral mf =
        molecular_field_spectral(g, s.q, d.qhat, p, true, mollifier_n ? &jn : nullptr);
    const QTensorField h = to_physical(g, mf.H);

    // Pointwise nonlinearities: convection of u, stress (distortion plus
    // antisymmetric part), co-rotation minus advection for Q.
    VectorField3 conv_u(np);
    Field<9> sigma = distortion_stress_from(g, d, s.q, p);
    QTensorField qadv(np);
    for (std::size_t pt = 0; pt < np; ++pt) {
        for (int i = 0; i < 3; ++i) {
            double acc = 0.0;
            for (int j = 0; j < 3; ++j) acc += s.u.comp(j)[pt] * grad_u.comp(3 * i + j)[pt];
            conv_u.comp(i)[pt] = acc;
        }

        Matrix3 gu;
        for (int e = 0; e < 9; ++e) gu.m[e] = grad_u.comp(e)[pt];
        Matrix3 D, W;
        strain_and_vorticity(gu, D, W);
        const Matrix3 qm = qten_at(s.q, pt).matrix();
        QTensor rot = sym_traceless_project(commutator(W, qm));
        for (int c = 0; c < 5; ++c) {
            double adv = 0.0;
            for (int j = 0; j < 3; ++j) adv += s.u.comp(j)[pt] * d.dQ[j].comp(c)[pt];
            rot.comp(c) -= adv;
        }
        set_qten(qadv, pt, rot);

        const Matrix3 sa = commutator(qm, qten_at(h, pt).matrix());
        for (int e = 0; e < 9; ++e) sigma.comp(e)[pt] += sa.m[e];
    }

    // Momentum: project(-u.grad u + div sigma), then the viscous term on the
    // untouched velocity modes.
    const SpectralVector3 conv_hat = to_spectral(g, conv_u);
    const SpectralField<9> sig_hat = to_spectral(g, sigma);
    out.duhat = SpectralVector3(nm);
    for (std::size_t m = 0; m < nm; ++m) {
        double k[3];
        g.kd_of(m, k[0], k[1], k[2]);
        for (int i = 0; i < 3; ++i) {
            cd acc = -conv_hat.comp(i)[m];
            for (int j = 0; j < 3; ++j) acc += cd(0.0, k[j]) * sig_hat.comp(3 * i + j)[m];
            out.duhat.comp(i)[m] = acc;
        }
    }
    dealias(g, out.duhat);
    if (mollifier_n) apply_mask(g, out.duhat, jn);
    leray_project(g, out.duhat);
    for (std::size_t m = 0; m < nm; ++m) {
        double k[3];
        g.kd_of(m, k[0], k[1], k[2]);
        const double ksq = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        for (int i = 0; i < 3; ++i) out.duhat.comp(i)[m] -= p.mu * ksq * out.uhat.comp(i)[m];
    }

    // Orientation: project the transported part, then relax along the
    // molecular field.
    out.dqhat = to_spectral(g, qadv);
    dealias(g, out.dqhat);
    if (mollifier_n) apply_mask(g, out.dqhat, jn);
    for (int c = 0; c < 5; ++c)
        for (std::size_t m = 0; m < nm; ++m)
            out.dqhat.comp(c)[m] += p.gamma * mf.H.comp(c)[m];

    // Diagnostics of the input state, assembled from intermediates already in
    // hand so an evaluation doubles as an energy probe.
    EnergyReport& r = out.report;
    double kin = 0.0, fb = 0.0;
    for (std::size_t pt = 0; pt < np; ++pt) {
        kin += pointwise_mag2(s.u, pt);
        fb += bulk_density(qten_at(s.q, pt), p);
    }
    const ElasticIntegrals ei = elastic_integrals(g, d, s.q);
    r.kinetic = 0.5 * dv * kin;
    r.elastic_L1 = 0.5 * p.L1 * ei.t1;
    r.elastic_L23 = 0.5 * (p.L2 + p.L3) * ei.t2;
    r.elastic_L4_cross = 0.5 * p.L4 * ei.t4;
    r.bulk = dv * fb;
    r.total = r.kinetic + r.elastic_L1 + r.elastic_L23 + r.elastic_L4_cross + r.bulk;

    double gu2 = 0.0, h2 = 0.0;
    for (std::size_t m = 0; m < nm; ++m) {
        double k[3];
        g.kd_of(m, k[0], k[1], k[2]);
        const double ksq = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        const double w = g.mult_of(m);
        gu2 += w * ksq * smag2_vec(out.uhat, m);
        h2 += w * smag2_qten(mf.H, m);
    }
    r.dissipation_viscous = p.mu * g.volume() * gu2;
    r.dissipation_rotational = p.gamma * g.volume() * h2;
    out.dissipation = r.dissipation_viscous + r.dissipation_rotational;
    return out;
}

StateRhs to_state_rhs(const SpectralGrid& g, SpectralRhs&& sp) {
    StateRhs out;
    out.du = to_physical(g, sp.duhat);
    out.dq = to_physical(g, sp.dqhat);
    out.report = sp.report;
    out.dissipation = sp.dissipation;
    return out;
}

SimState advanced(const SimState& base, double a, const StateRhs& k) {
    SimState s;
    s.time = base.time;
    s.u = VectorField3(base.u.npoints());
    s.q = QTensorField(base.q.npoints());
    for (int c = 0; c < 3; ++c) {
        const double* b = base.u.comp(c);
        const double* dk = k.du.comp(c);
        double* o = s.u.comp(c);
        for (std::size_t p = 0; p < s.u.npoints(); ++p) o[p] = b[p] + a * dk[p];
    }
    for (int c = 0; c < 5; ++c) {
        const double* b = base.q.comp(c);
        const double* dk = k.dq.comp(c);
        double* o = s.q.comp(c);
        for (std::size_t p = 0; p < s.q.npoints(); ++p) o[p] = b[p] + a * dk[p];
    }
    return s;
}

// Pulls the updated state back onto the discrete solution manifold: velocity
// band-limited and solenoidal, Q band-limited.  Cheap relative to a
// right-hand-side evaluation and it keeps round-off from accumulating outside
// the band across many steps.
void reproject(const SpectralGrid& g, SimState& s) {
    SpectralVector3 uh = to_spectral(g, s.u);
    dealias(g, uh);
    leray_project(g, uh);
    s.u = to_physical(g, uh);
    SpectralQTensor qh = to_spectral(g, s.q);
    dealias(g, qh);
    s.q = to_physical(g, qh);
}

struct StepDiag {
    EnergyReport report;       // of the pre-step state
    double dissipation = 0.0;  // stage-weighted, matches the integrator order
};

// Stage evaluation with overflow mapped to the blow-up report: once the
// configuration has been validated, an invalid_argument escaping the RHS can
// only come from non-finite products of a diverging trajectory.
StateRhs eval_stage(const SpectralGrid& g, const SimState& stage, const SimState& pre,
                    const MaterialParams& p, const std::optional<double>& mollifier_n) {
    try {
        return to_state_rhs(g, rhs_spectral(g, stage, p, mollifier_n));
    } catch (const std::invalid_argument&) {
        throw make_blowup(g, pre);
    }
}

SimState rk4_step(const SpectralGrid& g, const SimState& s, const MaterialParams& p,
                  const SolverConfig& cfg, StepDiag* diag) {
    const double dt = cfg.dt;
    const StateRhs k1 = eval_stage(g, s, s, p, cfg.mollifier_n);
    SimState s2 = advanced(s, 0.5 * dt, k1);
    if (!state_finite(s2)) throw make_blowup(g, s);
    const StateRhs k2 = eval_stage(g, s2, s, p, cfg.mollifier_n);
    SimState s3 = advanced(s, 0.5 * dt, k2);
    if (!state_finite(s3)) throw make_blowup(g, s);
    const StateRhs k3 = eval_stage(g, s3, s, p, cfg.mollifier_n);
    SimState s4 = advanced(s, dt, k3);
    if (!state_finite(s4)) throw make_blowup(g, s);
    const StateRhs k4 = eval_stage(g, s4, s, p, cfg.mollifier_n);

    SimState out;
    out.time = s.time + dt;
    out.u = VectorField3(s.u.npoints());
    out.q = QTensorField(s.q.npoints());
    const double w = dt / 6.0;
    for (int c = 0; c < 3; ++c) {
        double* o = out.u.comp(c);
        const double* b = s.u.comp(c);
        const double* a1 = k1.du.comp(c);
        const double* a2 = k2.du.comp(c);
        const double* a3 = k3.du.comp(c);
        const double* a4 = k4.du.comp(c);
        for (std::size_t pt = 0; pt < out.u.npoints(); ++pt)
            o[pt] = b[pt] + w * (a1[pt] + 2.0 * a2[pt] + 2.0 * a3[pt] + a4[pt]);
    }
    for (int c = 0; c < 5; ++c) {
        double* o = out.q.comp(c);
        const double* b = s.q.comp(c);
        const double* a1 = k1.dq.comp(c);
        const double* a2 = k2.dq.comp(c);
        const double* a3 = k3.dq.comp(c);
        const double* a4 = k4.dq.comp(c);
        for (std::size_t pt = 0; pt < out.q.npoints(); ++pt)
            o[pt] = b[pt] + w * (a1[pt] + 2.0 * a2[pt] + 2.0 * a3[pt] + a4[pt]);
    }
    reproject(g, out);
    if (!state_finite(out)) throw make_blowup(g, s);

    if (diag) {
        diag->report = k1.report;
        diag->dissipation = (k1.dissipation + 2.0 * k2.dissipation + 2.0 * k3.dissipation +
                             k4.dissipation) /
                            6.0;
    }
    return out;
}

// Factorizations of (I - dt*gamma*A(k)) per mode, where A is the linear
// elastic symbol.  Keyed by grid shape and the coefficients the matrix depends
// on; runs reusing a configuration skip the refactorization.
struct ImexFactors {
    std::vector<double> lu;   // nmodes * 25, row-major per mode
    std::vector<int> piv;     // nmodes * 5
};

struct ImexKey {
    int n1, n2, n3;
    double box, dt, gamma, L1, l23;
    bool operator<(const ImexKey& o) const {
        return std::tie(n1, n2, n3, box, dt, gamma, L1, l23) <
               std::tie(o.n1, o.n2, o.n3, o.box, o.dt, o.gamma, o.L1, o.l23);
    }
};

std::shared_ptr<const ImexFactors> imex_factors(const SpectralGrid& g, const MaterialParams& p,
                                                double dt) {
    static std::mutex mu;
    static std::map<ImexKey, std::shared_ptr<const ImexFactors>> cache;
    const ImexKey key{g.n1(), g.n2(), g.n3(), g.box_length(), dt, p.gamma, p.L1, p.L2 + p.L3};
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }

    auto f = std::make_shared<ImexFactors>();
    const std::size_t nm = g.nmodes();
    f->lu.resize(nm * 25);
    f->piv.resize(nm * 5);
    const double l23 = p.L2 + p.L3;
    for (std::size_t m = 0; m < nm; ++m) {
        double k[3];
        g.kd_of(m, k[0], k[1], k[2]);
        double* A = f->lu.data() + m * 25;
        for (int c = 0; c < 5; ++c) {
            double e[5] = {0, 0, 0, 0, 0};
            double col[5];
            e[c] = 1.0;
            elastic_symbol_apply(k, p.L1, l23, e, col);
            for (int r = 0; r < 5; ++r) A[5 * r + c] = (r == c ? 1.0 : 0.0) - dt * p.gamma * col[r];
        }
        int* piv = f->piv.data() + m * 5;
        for (int c = 0; c < 5; ++c) piv[c] = c;
        // LU with partial pivoting, in place.
        for (int c = 0; c < 5; ++c) {
            int best = c;
            for (int r = c + 1; r < 5; ++r)
                if (std::abs(A[5 * r + c]) > std::abs(A[5 * best + c])) best = r;
            if (best != c) {
                for (int j = 0; j < 5; ++j) std::swap(A[5 * c + j], A[5 * best + j]);
                std::swap(piv[c], piv[best]);
            }
            const double diag = A[5 * c + c];
            for (int r = c + 1; r < 5; ++r) {
                const double l = A[5 * r + c] / diag;
                A[5 * r + c] = l;
                for (int j = c + 1; j < 5; ++j) A[5 * r + j] -= l * A[5 * c + j];
            }
        }
    }
    std::lock_guard<std::mutex> lock(mu);
    cache.emplace(key, f);
    return f;
}

void lu5_solve(const double* A, const int* piv, const double* b, double* x) {
    double y[5];
    for (int r = 0; r < 5; ++r) {
        double acc = b[piv[r]];
        for (int c = 0; c < r; ++c) acc -= A[5 * r + c] * y[c];
        y[r] = acc;
    }
    for (int r = 4; r >= 0; --r) {
        double acc = y[r];
        for (int c = r + 1; c < 5; ++c) acc -= A[5 * r + c] * x[c];
        x[r] = acc / A[5 * r + r];
    }
}

SimState imex_step(const SpectralGrid& g, const SimState& s, const MaterialParams& p,
                   const SolverConfig& cfg, StepDiag* diag) {
    if (!(p.L1 > 0.0))
        throw std::invalid_argument("imex scheme needs a positive leading elastic coefficient");
    const double dt = cfg.dt;
    const std::size_t nm = g.nmodes();
    SpectralRhs rhs;
    try {
        rhs = rhs_spectral(g, s, p, cfg.mollifier_n);
    } catch (const std::invalid_argument&) {
        throw make_blowup(g, s);
    }
    const auto factors = imex_factors(g, p, dt);
    const double l23 = p.L2 + p.L3;

    SpectralVector3 unew(nm);
    SpectralQTensor qnew(nm);
    for (std::size_t m = 0; m < nm; ++m) {
        double k[3];
        g.kd_of(m, k[0], k[1], k[2]);
        const double ksq = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];

        // The explicit velocity tendency is the full one with the viscous part
        // taken back out; that part is then applied implicitly.
        for (int i = 0; i < 3; ++i) {
            const cd nl = rhs.duhat.comp(i)[m] + p.mu * ksq * rhs.uhat.comp(i)[m];
            unew.comp(i)[m] = (rhs.uhat.comp(i)[m] + dt * nl) / (1.0 + dt * p.mu * ksq);
        }

        double qre[5], qim[5], mre[5], mim[5];
        for (int c = 0; c < 5; ++c) {
            qre[c] = rhs.qhat.comp(c)[m].real();
            qim[c] = rhs.qhat.comp(c)[m].imag();
        }
        elastic_symbol_apply(k, p.L1, l23, qre, mre);
        elastic_symbol_apply(k, p.L1, l23, qim, mim);
        double bre[5], bim[5], xre[5], xim[5];
        for (int c = 0; c < 5; ++c) {
            const cd nl = rhs.dqhat.comp(c)[m] - p.gamma * cd(mre[c], mim[c]);
            bre[c] = qre[c] + dt * nl.real();
            bim[c] = qim[c] + dt * nl.imag();
        }
        const double* A = factors->lu.data() + m * 25;
        const int* piv = factors->piv.data() + m * 5;
        lu5_solve(A, piv, bre, xre);
        lu5_solve(A, piv, bim, xim);
        for (int c = 0; c < 5; ++c) qnew.comp(c)[m] = cd(xre[c], xim[c]);
    }

    dealias(g, unew);
    leray_project(g, unew);
    dealias(g, qnew);

    SimState out;
    out.time = s.time + dt;
    out.u = to_physical(g, unew);
    out.q = to_physical(g, qnew);
    if (!state_finite(out)) throw make_blowup(g, s);
    if (diag) {
        diag->report = rhs.report;
        diag->dissipation = rhs.dissipation;
    }
    return out;
}

SimState step_core(const SpectralGrid& g, const SimState& s, const MaterialParams& p,
                   const SolverConfig& cfg, StepDiag* diag) {
    if (!(cfg.dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (cfg.mollifier_n && !(*cfg.mollifier_n >= 1.0))
        throw std::invalid_argument("mollifier cutoff must be >= 1");
    if (!state_finite(s)) throw make_blowup(g, s);
    switch (cfg.scheme) {
        case Scheme::imex:
            return imex_step(g, s, p, cfg, diag);
        case Scheme::explicit_rk4:
        default:
            return rk4_step(g, s, p, cfg, diag);
    }
}

}  // namespace

BlowupError::BlowupError(double t, double ul2, double ql2)
    : std::runtime_error("solution lost finiteness after t = " + std::to_string(t)),
      time(t),
      u_l2(ul2),
      q_l2(ql2) {}

StateRhs rhs_eval(const SpectralGrid& g, const SimState& s, const MaterialParams& p,
                  std::optional<double> mollifier_n) {
    return to_state_rhs(g, rhs_spectral(g, s, p, mollifier_n));
}

VectorField3 velocity_rhs(const SpectralGrid& g, const SimState& s, const MaterialParams& p) {
    return rhs_eval(g, s, p).du;
}

QTensorField qtensor_rhs(const SpectralGrid& g, const SimState& s, const MaterialParams& p) {
    return rhs_eval(g, s, p).dq;
}

StateRhs mollified_rhs(const SpectralGrid& g, const SimState& s, const MaterialParams& p,
                       double n) {
    if (!(n >= 1.0)) throw std::invalid_argument("mollifier cutoff must be >= 1");
    return rhs_eval(g, s, p, n);
}

SimState step(const SpectralGrid& g, const SimState& s, const MaterialParams& p,
              const SolverConfig& cfg) {
    return step_core(g, s, p, cfg, nullptr);
}

RunSummary run(const SpectralGrid& g, SimState initial, const MaterialParams& p,
               const SolverConfig& cfg, const RunSinks& sinks) {
    if (!(cfg.dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (!(cfg.t_end >= 0.0)) throw std::invalid_argument("t_end must be nonnegative");
    if (cfg.snapshot_every < 0) throw std::invalid_argument("snapshot_every must be nonnegative");
    if (cfg.mollifier_n && !(*cfg.mollifier_n >= 1.0))
        throw std::invalid_argument("mollifier cutoff must be >= 1");
    if (cfg.scheme == Scheme::imex && !(p.L1 > 0.0))
        throw std::invalid_argument("imex scheme needs a positive leading elastic coefficient");

    long nsteps = 0;
    if (cfg.t_end > 0.0) {
        if (cfg.dt > cfg.t_end * (1.0 + 1e-12))
            throw std::invalid_argument("dt must not exceed t_end");
        const double ratio = cfg.t_end / cfg.dt;
        nsteps = std::lround(ratio);
        if (nsteps < 1 || std::abs(ratio - static_cast<double>(nsteps)) > 1e-9 * ratio)
            throw std::invalid_argument("t_end must be an integer number of steps");
    }

    if (!state_finite(initial)) throw std::invalid_argument("initial state must be finite");

    RunSummary summary;
    SimState cur = std::move(initial);

    auto emit = [&](const SimState& st, const EnergyReport& rep) {
        summary.report_times.push_back(st.time);
        summary.reports.push_back(rep);
        if (sinks.on_report) sinks.on_report(st, rep);
    };

    for (long m = 0; m < nsteps; ++m) {
        StepDiag diag;
        SimState next;
        try {
            next = step_core(g, cur, p, cfg, &diag);
        } catch (const BlowupError& e) {
            summary.blew_up = true;
            summary.blowup_time = e.time;
            break;
        }
        const bool cadence = cfg.snapshot_every > 0 ? (m % cfg.snapshot_every == 0) : (m == 0);
        if (cadence) emit(cur, diag.report);
        summary.dissipation_integral += cfg.dt * diag.dissipation;
        ++summary.steps;
        cur = std::move(next);
        if (sinks.on_step) sinks.on_step(cur);
    }

    // The end state always gets a row, whether the loop ran to t_end, halted
    // early, or there were no steps at all.  Near overflow the report can slip
    // out of range; a NaN row is still a row.
    EnergyReport last;
    try {
        last = total_energy(g, cur.u, cur.q, p);
    } catch (const std::invalid_argument&) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        last.kinetic = last.elastic_L1 = last.elastic_L23 = last.elastic_L4_cross = nan;
        last.bulk = last.total = last.dissipation_viscous = last.dissipation_rotational = nan;
    }
    emit(cur, last);
    summary.final_state = std::move(cur);
    return summary;
}

}  // namespace nemaq
