// Acceptance gate: ten end-to-end criteria, one line each. Exit status is
// nonzero if any criterion fails. Runtime is dominated by the 32^3 RK4
// trajectories; expect roughly twenty minutes on one core.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "nemaq/dynamics.hpp"
#include "nemaq/energy.hpp"
#include "nemaq/spectral.hpp"
#include "nemaq/tensor_algebra.hpp"
#include "nemaq/verification.hpp"

using namespace nemaq;

namespace {

bool all_pass = true;

void record(int idx, const char* label, bool pass, const std::string& detail) {
    std::printf("[%s] %2d. %s (%s)\n", pass ? "PASS" : "FAIL", idx, label, detail.c_str());
    std::fflush(stdout);
    all_pass = all_pass && pass;
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

QTensorField scaled_q(const SpectralGrid& g, unsigned seed, double amp, double decay = 4.0,
                      bool dealias_draw = true) {
    QTensorField q = random_qtensor_field(g, decay, seed, dealias_draw);
    const double n = discrete_norms(g, q).l2;
    if (n > 0.0)
        for (double& v : q.data) v *= amp / n;
    return q;
}

SimState make_state(const SpectralGrid& g, unsigned seed, double u_amp, double q_amp, double decay,
                    bool dealias_draw = true) {
    SimState s;
    s.u = random_vector_field(g, decay, seed, true, dealias_draw);
    s.q = random_qtensor_field(g, decay, seed + 1, dealias_draw);
    const double un = discrete_norms(g, s.u).l2;
    const double qn = discrete_norms(g, s.q).l2;
    if (un > 0.0)
        for (double& v : s.u.data) v *= u_amp / un;
    if (qn > 0.0)
        for (double& v : s.q.data) v *= q_amp / qn;
    return s;
}

void criterion_variational() {
    SpectralGrid g(16, kTwoPi);
    MaterialParams p;  // the documented test tuple is the default set
    double worst = 0.0;
    for (unsigned k = 0; k < 20; ++k) {
        const QTensorField q = scaled_q(g, 1500 + 7 * k, 0.5);
        worst = std::max(worst, variational_consistency(g, q, p).worst);
    }
    record(1, "variational consistency, 20 random fields", worst <= 1e-6,
           "worst=" + num(worst) + " tol=1e-6");
}

void criterion_energy_law(const SpectralGrid& g) {
    MaterialParams p;
    // Band-limit the draw to |k| <= 5.  The reports sample the energy at step
    // resolution and the trapezoid closure error per mode scales like
    // (rate * dt)^2, so data with content near the dealias shell (rates ~ 100)
    // would inflate the constant without saying anything new about the order.
    SimState initial = make_state(g, 2100, 0.5, 0.5, 3.0);
    initial.u = mollified(g, initial.u, 5.0);
    initial.q = mollified(g, initial.q, 5.0);
    const double un = discrete_norms(g, initial.u).l2;
    const double qn = discrete_norms(g, initial.q).l2;
    for (double& v : initial.u.data) v *= 0.5 / un;
    for (double& v : initial.q.data) v *= 0.5 / qn;
    const double dts[3] = {2e-3, 1e-3, 5e-4};
    double agg[3] = {0, 0, 0};
    bool ran = true;
    for (int i = 0; i < 3; ++i) {
        SolverConfig cfg;
        cfg.dt = dts[i];
        cfg.t_end = 0.5;
        cfg.snapshot_every = 1;
        const RunSummary sum = run(g, initial, p, cfg);
        ran = ran && !sum.blew_up;
        agg[i] = energy_balance_residual(sum.reports, dts[i]).aggregate;
    }
    const double order1 = std::log2(agg[0] / agg[1]);
    const double order2 = std::log2(agg[1] / agg[2]);
    const bool pass = ran && agg[2] <= 1e-4 && order1 >= 1.9 && order2 >= 1.9;
    record(2, "energy balance closes at second order", pass,
           "aggregate(5e-4)=" + num(agg[2]) + " tol=1e-4, orders=" + num(order1) + "," +
               num(order2));
}

void criterion_cancellations(const SpectralGrid& g) {
    MaterialParams p;
    double worst = 0.0;
    for (unsigned k = 0; k < 100; ++k) {
        const SimState s = make_state(g, 3000 + 7 * k, 0.8, 0.6, 3.0);
        for (const IdentityReport& r : cancellation_suite(g, s, p))
            worst = std::max(worst, r.relative_residual);
    }
    const SimState rough = make_state(g, 5000, 1.5, 1.0, 2.0, false);
    const double control = bulk_transport_product_control(g, rough, p).relative_residual;
    const bool pass = worst <= 1e-10 && control > 1e-6;
    record(3, "transport and rotation identities at round-off", pass,
           "worst=" + num(worst) + " tol=1e-10, aliased control=" + num(control) + " > 1e-6");
}

void criterion_null_lagrangian(const SpectralGrid& g) {
    double worst = 0.0;
    for (unsigned k = 0; k < 100; ++k) {
        const QTensorField q = random_qtensor_field(g, 3.0, 4000 + k, k % 2 == 0);
        worst = std::max(worst, null_lagrangian_residual(g, q).relative_residual);
    }
    record(4, "divergence and cross-gradient terms integrate identically", worst <= 1e-10,
           "worst=" + num(worst) + " tol=1e-10, 100 seeds");
}

void criterion_structure(const SpectralGrid& g) {
    MaterialParams p;
    SolverConfig cfg;
    cfg.dt = 4e-3;
    cfg.t_end = 1.0;
    cfg.snapshot_every = 10;
    double max_trace = 0.0, max_asym = 0.0, worst_div = 0.0;
    long checks = 0;
    RunSinks sinks;
    sinks.on_report = [&](const SimState& s, const EnergyReport&) {
        for (std::size_t pt = 0; pt < g.npoints(); ++pt) {
            const Matrix3 m = qten_at(s.q, pt).matrix();
            max_trace = std::max(max_trace, std::abs(trace(m)));
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    max_asym = std::max(max_asym, std::abs(m(i, j) - m(j, i)));
        }
        const double un = discrete_norms(g, s.u).l2;
        const double dv = divergence_l2(g, s.u);
        if (un > 0.0) worst_div = std::max(worst_div, dv / un);
        ++checks;
    };
    const RunSummary sum = run(g, make_state(g, 5100, 0.5, 0.5, 3.0), p, cfg, sinks);
    const bool pass =
        !sum.blew_up && checks >= 2 && max_trace == 0.0 && max_asym == 0.0 && worst_div <= 1e-12;
    record(5, "trace, symmetry, and incompressibility preserved over T=1", pass,
           "max|tr|=" + num(max_trace) + " max_asym=" + num(max_asym) +
               " worst relative div=" + num(worst_div) + ", snapshots=" + std::to_string(checks));
}

void criterion_mollifier(const SpectralGrid& g) {
    bool pass = true;
    double worst_adjoint = 0.0, worst_commute = 0.0;
    for (const IdentityReport& r : mollifier_suite(g, {1.0, 2.0, 4.0, 8.0})) {
        if (r.name.find("idempotent") != std::string::npos) {
            pass = pass && r.value == 0.0;
        } else if (r.name.find("self_adjoint") != std::string::npos) {
            worst_adjoint = std::max(worst_adjoint, r.relative_residual);
        } else {
            worst_commute = std::max(worst_commute, r.relative_residual);
        }
    }
    pass = pass && worst_adjoint <= 1e-12 && worst_commute <= 1e-12;
    record(6, "frequency cutoff is a projection commuting with derivatives", pass,
           "idempotence exact, adjoint=" + num(worst_adjoint) +
               " commutation=" + num(worst_commute) + " tol=1e-12");
}

void criterion_closed_form_decay(const SpectralGrid& g) {
    MaterialParams p;
    p.b = 0.0;
    p.c = 0.0;
    p.L2 = 0.0;
    p.L3 = 0.0;
    p.L4 = 0.0;
    SimState initial;
    initial.u = VectorField3(g.npoints());
    initial.q = QTensorField(g.npoints());
    for (int i3 = 0; i3 < g.n3(); ++i3)
        for (int i2 = 0; i2 < g.n2(); ++i2)
            for (int i1 = 0; i1 < g.n1(); ++i1)
                initial.q.comp(1)[g.pidx(i1, i2, i3)] = 0.3 * std::cos(kTwoPi * i1 / g.n1());
    const double rate = p.gamma * (-p.L1 - p.a);  // wavenumber 1

    const auto final_error = [&](double dt) {
        SolverConfig cfg;
        cfg.dt = dt;
        cfg.t_end = 1.0;
        cfg.snapshot_every = 0;
        const RunSummary sum = run(g, initial, p, cfg);
        const double factor = std::exp(rate * 1.0);
        double err2 = 0.0, ref2 = 0.0;
        for (int c = 0; c < 5; ++c)
            for (std::size_t pt = 0; pt < g.npoints(); ++pt) {
                const double exact = factor * initial.q.comp(c)[pt];
                const double d = sum.final_state.q.comp(c)[pt] - exact;
                err2 += d * d;
                ref2 += exact * exact;
            }
        return std::sqrt(err2 / ref2);
    };

    // Ladder steps must keep the whole retained band (rates up to about 100
    // at 32^3) inside the explicit stability region |rate * dt| < 2.8, or
    // round-off seeded high modes dominate the error.
    const double err_fine = final_error(1e-3);
    const double e1 = final_error(0.025), e2 = final_error(0.0125), e3 = final_error(0.00625);
    const double order1 = std::log2(e1 / e2), order2 = std::log2(e2 / e3);
    const bool pass = err_fine <= 1e-6 && order1 >= 3.8 && order2 >= 3.8;
    record(7, "single-mode relaxation matches the exponential closed form", pass,
           "error(dt=1e-3)=" + num(err_fine) + " tol=1e-6, orders=" + num(order1) + "," +
               num(order2) + " >= 3.8");
}

void criterion_continuous_dependence(const SpectralGrid& g) {
    MaterialParams p;
    const SimState base = make_state(g, 8100, 0.5, 0.5, 4.0);
    const QTensorField qdir = scaled_q(g, 8200, 1.0);
    VectorField3 udir = random_vector_field(g, 4.0, 8300, true);
    const double un = discrete_norms(g, udir).l2;
    for (double& v : udir.data) v /= un;
    const auto perturbed = [&](double eps) {
        SimState b = base;
        for (std::size_t i = 0; i < b.q.data.size(); ++i) b.q.data[i] += eps * qdir.data[i];
        for (std::size_t i = 0; i < b.u.data.size(); ++i) b.u.data[i] += eps * udir.data[i];
        return b;
    };
    SolverConfig cfg;
    cfg.dt = 2e-3;
    cfg.t_end = 0.1;
    cfg.snapshot_every = 5;
    const TwinRunResult t1 = twin_run(g, base, perturbed(1e-3), p, cfg);
    const TwinRunResult t2 = twin_run(g, base, perturbed(5e-4), p, cfg);
    double sup1 = 0.0, sup2 = 0.0;
    for (double v : t1.separation) sup1 = std::max(sup1, v);
    for (double v : t2.separation) sup2 = std::max(sup2, v);
    const double ratio = sup2 > 0.0 ? sup1 / sup2 : 0.0;
    const bool pass = t1.bound_satisfied && t1.stable && !t1.degenerate && !t1.blew_up &&
                      t2.bound_satisfied && t2.stable && !t2.degenerate && !t2.blew_up &&
                      std::abs(ratio - 4.0) <= 0.4;
    record(8, "twin separation obeys the fitted exponential envelope", pass,
           "c_fit=" + num(t1.c_fit) + " halved-dt drift=" +
               num(std::abs(t1.c_fit_half - t1.c_fit)) + ", quadratic sup ratio=" + num(ratio) +
               " in [3.6,4.4]");
}

void criterion_viscosity_sweep(const SpectralGrid& g) {
    MaterialParams p;
    SolverConfig cfg;
    cfg.scheme = Scheme::imex;
    cfg.dt = 5e-3;
    cfg.t_end = 1.0;
    cfg.snapshot_every = 4;
    const SimState initial = make_state(g, 9100, 1.2, 0.5, 3.0);
    const auto rows = viscosity_sweep(g, initial, p, {1.0, 2.0, 4.0, 8.0}, cfg);
    bool pass = rows.size() == 4;
    std::string table;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        pass = pass && !rows[i].blew_up && std::isfinite(rows[i].sup_shifted);
        if (i > 0) pass = pass && rows[i].sup_shifted <= rows[i - 1].sup_shifted * (1.0 + 1e-12);
        if (i) table += ",";
        table += num(rows[i].sup_shifted);
    }
    // The sup sits at t = 0 here (both fields only lose regularity under this
    // parameter set), so also check directly that viscosity reaches the flow:
    // after twenty steps the kinetic norm must be sharply smaller at mu = 8.
    SolverConfig short_cfg = cfg;
    short_cfg.t_end = 20.0 * cfg.dt;
    short_cfg.snapshot_every = 0;
    MaterialParams lo = p, hi = p;
    lo.mu = 1.0;
    hi.mu = 8.0;
    const double u_lo = discrete_norms(g, run(g, initial, lo, short_cfg).final_state.u).l2;
    const double u_hi = discrete_norms(g, run(g, initial, hi, short_cfg).final_state.u).l2;
    const double damping = u_lo > 0.0 ? u_hi / u_lo : 1.0;
    pass = pass && damping < 0.9;
    record(9, "regularity gauge is non-increasing in viscosity", pass,
           "sup table=" + table + ", kinetic damping |u|(mu=8)/|u|(mu=1)=" + num(damping));
}

void criterion_coercivity() {
    MaterialParams p;
    p.b = 0.0;
    p.a = 0.0;
    p.c = 1.0;
    const CoercivityResult r1 = coercivity_constant_K(p);
    p.a = -2.0;
    const CoercivityResult r2 = coercivity_constant_K(p);
    p.a = -1.0;
    p.b = 3.0;
    const CoercivityResult r3 = coercivity_constant_K(p);
    // The candidate grid is geometric with ratio 1.05, so the certified K for
    // (-2, 0, 1) sits within one step above the analytic value 2.
    const bool pass = r1.certified && r1.K == 0.0 && r2.certified && r2.K >= 1.9 &&
                      r2.K <= 2.0 * 1.05 && r3.certified && r3.K >= 1.0 && r3.K <= 10.0;
    record(10, "bulk coercivity constants certified by sampling", pass,
           "K(0,0,1)=" + num(r1.K) + " K(-2,0,1)=" + num(r2.K) + " K(-1,3,1)=" + num(r3.K) +
               ", 1e5 samples each");
}

}  // namespace

int main() {
    SpectralGrid g(32, kTwoPi);
    criterion_variational();
    criterion_energy_law(g);
    criterion_cancellations(g);
    criterion_null_lagrangian(g);
    criterion_structure(g);
    criterion_mollifier(g);
    criterion_closed_form_decay(g);
    criterion_continuous_dependence(g);
    criterion_viscosity_sweep(g);
    criterion_coercivity();
    std::printf("%s\n", all_pass ? "acceptance: all 10 criteria passed"
                                 : "acceptance: at least one criterion FAILED");
    return all_pass ? 0 : 1;
}
