#pragma once

// Certification layer: quadrature checks of the exact cancellations behind
// the energy balance, consistency of the molecular field with the discrete
// free energy, continuation diagnostics, twin-trajectory stability probes,
// and the frequency-cutoff algebra. Everything here is read-only with
// respect to the solver; routines either return signed residuals paired
// with the magnitude of their constituent terms, or structured summaries a
// caller can threshold.

#include <cstdint>
#include <string>
#include <vector>

#include "nemaq/dynamics.hpp"
#include "nemaq/energy.hpp"
#include "nemaq/spectral.hpp"

namespace nemaq {

struct IdentityReport {
    std::string name;
    double value = 0.0;  // signed quadrature of the expression that should vanish
    double scale = 0.0;  // sum of the magnitudes of its constituent terms
    // |value| / scale; 0 when both vanish (degenerate input), infinity when
    // the value survives with no scale to measure it against.
    double relative_residual = 0.0;
};

IdentityReport make_identity_report(std::string name, double value, double scale);

// Grid quadratures of the five exchange integrals whose cancellation closes
// the energy balance:
//   bulk_transport          advection of the bulk potential by a
//                           divergence-free velocity integrates to zero
//                           (evaluated in flux form: u . grad of the
//                           pointwise potential, differentiated spectrally)
//   elastic_transport_vs_stress  transport of the elastic energy against the
//                           power of the distortion stress
//   rotation_exchange       co-rotation work on the molecular field against
//                           the power of the antisymmetric stress (the two
//                           integrands cancel pointwise)
//   mixed_partial_contraction  the second-derivative contraction multiplying
//                           the cross elastic coefficient, zero by symmetry
//                           of mixed partials
//   corotation_trace        tr((WQ - QW) Q), pointwise zero by cyclicity
//
// Preconditions: fields sized to the grid, finite, u discretely
// divergence-free (relative divergence <= 1e-10; violations throw
// std::invalid_argument). Residuals reach round-off on states confined to
// the dealias band when no grid dimension is a multiple of three (at
// multiples of three, triple products can fold onto the mean).
std::vector<IdentityReport> cancellation_suite(const SpectralGrid& g, const SimState& s,
                                               const MaterialParams& p);

// Negative control for bulk_transport: the same integral evaluated as the
// pointwise product u_g Q_ab,g dF/dQ_ab. The product of five band-limited
// factors overflows the grid's exact-quadrature range, so this residual
// sits orders of magnitude above the flux form on rough states.
IdentityReport bulk_transport_product_control(const SpectralGrid& g, const SimState& s,
                                              const MaterialParams& p);

// |div Q|^2 and the cross contraction Q_ik,j Q_ij,k integrate identically on
// the periodic box; both quadratures are exact for band-limited Q.
IdentityReport null_lagrangian_residual(const SpectralGrid& g, const QTensorField& Q);

// Discrete energy balance over uniformly spaced report rows: per-interval
// residual r_m = (E_{m+1} - E_m)/dt + (D_m + D_{m+1})/2 with D the recorded
// instantaneous dissipation, aggregated as sum |r_m| dt over the trapezoid
// integral of D. Fewer than three rows or a non-positive spacing throw.
struct EnergyBalanceResult {
    std::vector<double> residuals;
    double aggregate = 0.0;
    double dissipation_integral = 0.0;
};
EnergyBalanceResult energy_balance_residual(const std::vector<EnergyReport>& rows, double row_dt);

// Pairs -<H, G> against a fourth-order difference quotient of the discrete
// free energy along at least ten random band-limited directions G. fd_step
// outside [1e-7, 1e-3] or fewer than ten directions throw. Reported values
// are |fd + <H, G>| / max(|fd|, |<H, G>|).
struct VariationalReport {
    std::vector<double> per_direction;
    double worst = 0.0;
};
VariationalReport variational_consistency(const SpectralGrid& g, const QTensorField& Q,
                                          const MaterialParams& p, double fd_step = 1e-5,
                                          int directions = 10, std::uint64_t seed = 1);

// The quadratic form controlling continuation of strong solutions:
//   A = ||grad u||^2 + L1 ||Lap Q||^2 + (L2+L3) ||grad div Q||^2
// and its shifted companion A + 1. The spectral route sums multiplier
// weights over modes; the physical route assembles the derivative fields and
// integrates on the grid (the two agree to round-off).
struct HigherOrderDiagnostic {
    double value = 0.0;
    double shifted = 1.0;
};
HigherOrderDiagnostic higher_order_diagnostic(const SpectralGrid& g, const SimState& s,
                                              const MaterialParams& p, bool via_spectral = true);

// Integrates the same initial data under a strictly ascending list of at
// least three viscosities and records the supremum of the shifted diagnostic
// along each trajectory, plus any blow-up. Runs are independent and execute
// on worker_threads() threads.
struct ViscositySweepRow {
    double mu = 0.0;
    double sup_shifted = 0.0;
    bool blew_up = false;
    double blowup_time = 0.0;
};
std::vector<ViscositySweepRow> viscosity_sweep(const SpectralGrid& g, const SimState& initial,
                                               const MaterialParams& p,
                                               const std::vector<double>& mu_values,
                                               const SolverConfig& cfg);

// Evolves two states in lockstep and tracks the squared separation
//   G(t) = ||du||_{L2}^2 + ||dQ||_{H1}^2
// (full Sobolev norm: L2 plus first-derivative seminorm), the separation
// dissipation channels mu ||grad du||^2 and Gamma L1^2 ||Lap dQ||^2, and the
// trajectory sizes kappa1 = sup(||u||_L2 + ||Q||_H1) and
// kappa2 = sup(||u||_H1 + ||Q||_H2) over both runs. c_fit is the largest
// sampled growth exponent log(G(t)/G(0))/t; the run is repeated at half the
// step to test its stability (within 5%), and bound_satisfied certifies
// G(t) <= G(0) exp(c_fit t) (1 + 1e-6) together with that stability.
// Bit-identical initial states give identically zero G and a trivially
// satisfied bound; a zero initial separation between distinct states is
// flagged degenerate instead of claimed.
struct TwinRunResult {
    std::vector<double> times;
    std::vector<double> separation;    // G at the sample times
    std::vector<double> dissipation_u;
    std::vector<double> dissipation_q;
    double kappa1 = 0.0;
    double kappa2 = 0.0;
    double c_fit = 0.0;
    double c_fit_half = 0.0;
    bool stable = false;
    bool bound_satisfied = false;
    bool degenerate = false;
    bool blew_up = false;
    double blowup_time = 0.0;
};
TwinRunResult twin_run(const SpectralGrid& g, const SimState& a, const SimState& b,
                       const MaterialParams& p, const SolverConfig& cfg);

// For each cutoff n: idempotence of the band-pass projection (bit-exact),
// self-adjointness in the grid inner product (round-off), and commutation
// with the first coordinate derivative (bit-exact, both orderings multiply
// the same coefficients by the same factors).
std::vector<IdentityReport> mollifier_suite(const SpectralGrid& g, const std::vector<double>& n_values);

// Lower bound on the separation dissipation: with dQ = Q1 - Q2,
//   ||M_dQ + E_dQ||^2 >= (L1^2/2) ||Lap dQ||^2 - C ||grad dQ||^2,
//   C = 2 (L4^2 + (L2+L3)^2) / L1 + L1 |L2+L3|,
// where M + E is the linear elastic part of the molecular field. margin is
// the amount by which the left side clears the bound (nonnegative when the
// inequality holds; exactly half the curvature term survives when the only
// elastic constant is L1).
struct DeltaDissipationReport {
    double control_norm2 = 0.0;    // ||M_dQ + E_dQ||^2
    double curvature_norm2 = 0.0;  // ||Lap dQ||^2
    double gradient_norm2 = 0.0;   // ||grad dQ||^2
    double c_emp = 0.0;
    double bound = 0.0;
    double margin = 0.0;
};
DeltaDissipationReport delta_dissipation_check(const SpectralGrid& g, const QTensorField& q1,
                                               const QTensorField& q2, const MaterialParams& p);

// Worker pool width for independent runs (twin halves, sweep entries), from
// NEMAQ_THREADS; defaults to 1, clamped to [1, 64].
int worker_threads();

}  // namespace nemaq
