#pragma once

// Landau-de Gennes free energy for a Q-tensor field on the periodic grid:
// bulk and elastic densities, the constrained variational derivative
// (molecular field), the Lagrange-multiplier fields that enforce symmetry and
// tracelessness, the distortion and antisymmetric stresses, and the coercivity
// constant used by the energy lower bound.
//
// Product discipline: quantities flagged "dealiased" get one outer 2/3-rule
// projection applied after the full pointwise nonlinear expression is formed.
// That single outer projection is exactly what makes the discrete energy law
// and the cancellation identities close to round-off; chained per-product
// projections would not.

#include <string>
#include <vector>

#include "nemaq/spectral.hpp"
#include "nemaq/tensor_algebra.hpp"

namespace nemaq {

struct MaterialParams {
    double a = -0.2;
    double b = 1.0;
    double c = 1.0;
    double L1 = 1.0;
    double L2 = 0.5;
    double L3 = 0.5;
    double L4 = 0.3;
    double mu = 1.0;     // viscosity
    double gamma = 1.0;  // rotational mobility

    // Standing-assumption violations (c > 0, L1 > 0, L2 + L3 >= 0, mu > 0,
    // gamma > 0), each as a human-readable message; empty means valid.
    // Enforced at the configuration boundary: library routines accept
    // arbitrary coefficients so degenerate sub-models stay testable.
    std::vector<std::string> validate() const;
};

struct EnergyReport {
    double kinetic = 0.0;           // 1/2 ||u||^2
    double elastic_L1 = 0.0;        // L1/2 |grad Q|^2
    double elastic_L23 = 0.0;       // (L2+L3)/2 |div Q|^2
    double elastic_L4_cross = 0.0;  // L4/2 eps_lak Q_lb Q_ab,k
    double bulk = 0.0;
    double total = 0.0;  // sum of the five parts
    double dissipation_viscous = 0.0;     // mu ||grad u||^2
    double dissipation_rotational = 0.0;  // gamma ||H_Q||^2
};

double bulk_density(const QTensor& q, const MaterialParams& p);

// Pointwise elastic energy density (dealiased field; its quadrature is exact
// because quadratic products of band-limited factors alias only above the
// retained band).
ScalarField elastic_density(const SpectralGrid& g, const QTensorField& Q,
                            const MaterialParams& p);

struct MolecularFieldParts {
    QTensorField H;  // M + E + B
    QTensorField M;  // L1 Lap Q + (L2+L3) * sym-traceless grad div Q
    QTensorField E;  // L4 * sym-traceless of eps_lik d_k Q_lj
    QTensorField B;  // -aQ + b(Q^2 - |Q|^2/3 I) - c tr(Q^2) Q
};
struct MolecularFieldSpectral {
    SpectralQTensor H, M, E, B;
};

// dealias_bulk selects the production path (outer projection on B, matching
// the rotational dissipation the Q-equation realizes). The raw path exists for
// pointwise-identity checks such as the Lagrange-multiplier reassembly.
// bc_mask, when given, is an additional spectral mask applied to the
// quadratic/cubic bulk terms only (the -aQ term stays unmasked); the
// regularized system passes the low-pass cutoff here.
MolecularFieldParts molecular_field(const SpectralGrid& g, const QTensorField& Q,
                                    const MaterialParams& p, bool dealias_bulk = true);
MolecularFieldSpectral molecular_field_spectral(const SpectralGrid& g, const QTensorField& Q,
                                                const MaterialParams& p, bool dealias_bulk = true,
                                                const std::vector<std::uint8_t>* bc_mask = nullptr);
// Variant reusing an already-computed transform of Q.
MolecularFieldSpectral molecular_field_spectral(const SpectralGrid& g, const QTensorField& Q,
                                                const SpectralQTensor& qhat,
                                                const MaterialParams& p, bool dealias_bulk = true,
                                                const std::vector<std::uint8_t>* bc_mask = nullptr);

struct LagrangeMultipliers {
    ScalarField lambda0;       // trace multiplier
    Field<9> lambda_antisym;   // lambda_ij - lambda_ji (antisymmetric matrix field)
};

// Raw (no dealiasing): subtracting these from the unconstrained Euler-Lagrange
// expression reproduces the (raw-bulk) molecular field pointwise.
LagrangeMultipliers lagrange_multipliers(const SpectralGrid& g, const QTensorField& Q,
                                         const MaterialParams& p);

// sigma^d_ij = -(L1 Q_kl,i Q_kl,j + L2 Q_km,m Q_kj,i + L3 Q_kj,l Q_kl,i
//               + L4/2 eps_mkj Q_ml Q_kl,i)
Field<9> distortion_stress(const SpectralGrid& g, const QTensorField& Q,
                           const MaterialParams& p, bool dealias_result = true);

// sigma^a = Q H - H Q (antisymmetric since both arguments are symmetric).
Field<9> antisymmetric_stress(const SpectralGrid& g, const QTensorField& Q,
                              const QTensorField& H, bool dealias_result = true);

EnergyReport total_energy(const SpectralGrid& g, const VectorField3& u, const QTensorField& Q,
                          const MaterialParams& p);

struct CoercivityBudget {
    double s_max = 100.0;       // certification range for s = tr(Q^2)
    long s_samples = 100000;    // dense samples across [0, s_max]
    long max_candidates = 400;  // geometric K grid size
};

struct CoercivityResult {
    double K = 0.0;
    bool certified = false;
    // First violating sample of the last candidate tried, when not certified.
    double violating_s = 0.0;
    double violating_t = 0.0;
    long candidates_tried = 0;
};

// Smallest K on {0} followed by a geometric grid such that the shifted bulk
// density dominates the quartic floor,
//   (a/2) s - (b/3) t + (c/4) s^2 + (K/2) s >= (c/8) s^2,
// for all admissible invariants: s = tr(Q^2) in [0, s_max] and
// |t| = |tr(Q^3)| <= s^(3/2)/sqrt(6). Certification samples s densely and
// evaluates the worst case t = sign(b) s^(3/2)/sqrt(6).
CoercivityResult coercivity_constant_K(const MaterialParams& p, const CoercivityBudget& budget = {});

// Convenience accessors used throughout: read/write a Q-tensor value at one
// grid point of a five-component field.
inline QTensor qten_at(const QTensorField& f, std::size_t p) {
    return QTensor{f.comp(0)[p], f.comp(1)[p], f.comp(2)[p], f.comp(3)[p], f.comp(4)[p]};
}
inline void set_qten(QTensorField& f, std::size_t p, const QTensor& q) {
    f.comp(0)[p] = q.q11;
    f.comp(1)[p] = q.q12;
    f.comp(2)[p] = q.q13;
    f.comp(3)[p] = q.q22;
    f.comp(4)[p] = q.q23;
}

// The fifteen first derivatives of Q as three five-component fields, plus the
// divergence d_i = Q_ij,j; shared by the energy, stress and identity code.
struct QDerivatives {
    SpectralQTensor qhat;
    QTensorField dQ[3];   // dQ[g] = d(Q)/dx_g
    VectorField3 divQ;
};
QDerivatives q_derivatives(const SpectralGrid& g, const QTensorField& Q);

// Grid quadratures of the four gradient contractions entering the elastic
// energy: t1 = Q_ij,k Q_ij,k, t2 = |div Q|^2, t3 = Q_ik,j Q_ij,k and
// t4 = e_lik Q_lj Q_ij,k.  Cell volume is already applied.
struct ElasticIntegrals {
    double t1 = 0.0;
    double t2 = 0.0;
    double t3 = 0.0;
    double t4 = 0.0;
};
ElasticIntegrals elastic_integrals(const SpectralGrid& g, const QDerivatives& d,
                                   const QTensorField& Q);

// Raw pointwise distortion stress assembled from precomputed derivatives;
// distortion_stress wraps this, and the RHS assembly reuses it so the stress
// entering the momentum equation is bitwise the tested contraction.
Field<9> distortion_stress_from(const SpectralGrid& g, const QDerivatives& d,
                                const QTensorField& Q, const MaterialParams& p);

// Per-wavenumber symbols of the linear elastic parts of the molecular field,
// acting on five real components. elastic_symbol_apply gives
// -L1 |k|^2 q + (L2+L3) * (sym-traceless gradient-divergence coupling); the
// first-order cross coupling is i * L4 * S(k) q with S real, and
// cross_symbol_apply evaluates S(k) q. Shared by the spectral molecular field
// assembly and the imex implicit solve.
void elastic_symbol_apply(const double kd[3], double L1, double l23, const double in5[5],
                          double out5[5]);
void cross_symbol_apply(const double kd[3], const double in5[5], double out5[5]);

}  // namespace nemaq
