#include "nemaq/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <mutex>
#include <random>
#include <stdexcept>

namespace nemaq {

namespace {

// FFTW plan creation/destruction mutates global planner state; executing a
// plan through the new-array interface is thread-safe.
std::mutex g_fftw_planner_mutex;

}  // namespace

SpectralGrid::SpectralGrid(int n1, int n2, int n3, double box_length)
    : n1_(n1), n2_(n2), n3_(n3), nc1_(n1 / 2 + 1), length_(box_length) {
    auto bad = [](int n) { return n < 8 || n % 2 != 0; };
    if (bad(n1) || bad(n2) || bad(n3))
        throw std::invalid_argument("SpectralGrid: grid sizes must be even and >= 8");
    if (!(box_length > 0.0) || !std::isfinite(box_length))
        throw std::invalid_argument("SpectralGrid: box length must be positive and finite");

    np_ = static_cast<std::size_t>(n1_) * n2_ * n3_;
    nm_ = static_cast<std::size_t>(nc1_) * n2_ * n3_;

    const double k0 = kTwoPi / length_;
    auto signed_mode = [](int i, int n) { return i <= n / 2 ? i : i - n; };

    m1_.resize(nc1_);
    kd1_.resize(nc1_);
    mult_.resize(nc1_);
    for (int j = 0; j < nc1_; ++j) {
        m1_[j] = j;
        kd1_[j] = (j == n1_ / 2) ? 0.0 : k0 * j;
        mult_[j] = (j == 0 || j == n1_ / 2) ? 1.0 : 2.0;
    }
    m2_.resize(n2_);
    kd2_.resize(n2_);
    for (int i = 0; i < n2_; ++i) {
        m2_[i] = signed_mode(i, n2_);
        kd2_[i] = (std::abs(m2_[i]) == n2_ / 2) ? 0.0 : k0 * m2_[i];
    }
    m3_.resize(n3_);
    kd3_.resize(n3_);
    for (int i = 0; i < n3_; ++i) {
        m3_[i] = signed_mode(i, n3_);
        kd3_[i] = (std::abs(m3_[i]) == n3_ / 2) ? 0.0 : k0 * m3_[i];
    }

    // 2/3 rule: retain exactly the modes with |k_a| <= (2/3) * (pi n_a / L),
    // i.e. 3|m_a| <= n_a, on every axis.
    dealias_.assign(nm_, 0);
    for (int i3 = 0; i3 < n3_; ++i3)
        for (int i2 = 0; i2 < n2_; ++i2)
            for (int j1 = 0; j1 < nc1_; ++j1) {
                const bool keep = 3 * std::abs(m1_[j1]) <= n1_ &&
                                  3 * std::abs(m2_[i2]) <= n2_ &&
                                  3 * std::abs(m3_[i3]) <= n3_;
                dealias_[sidx(j1, i2, i3)] = keep ? 1 : 0;
            }

    std::lock_guard<std::mutex> lock(g_fftw_planner_mutex);
    std::vector<double> pin(np_);
    std::vector<std::complex<double>> pout(nm_);
    plan_r2c_ = fftw_plan_dft_r2c_3d(n3_, n2_, n1_, pin.data(),
                                     reinterpret_cast<fftw_complex*>(pout.data()),
                                     FFTW_ESTIMATE | FFTW_UNALIGNED);
    plan_c2r_ = fftw_plan_dft_c2r_3d(n3_, n2_, n1_,
                                     reinterpret_cast<fftw_complex*>(pout.data()), pin.data(),
                                     FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan_r2c_ || !plan_c2r_) throw std::runtime_error("SpectralGrid: FFTW planning failed");
}

SpectralGrid::~SpectralGrid() {
    std::lock_guard<std::mutex> lock(g_fftw_planner_mutex);
    if (plan_r2c_) fftw_destroy_plan(static_cast<fftw_plan>(plan_r2c_));
    if (plan_c2r_) fftw_destroy_plan(static_cast<fftw_plan>(plan_c2r_));
}

void SpectralGrid::modes_of(std::size_t s, int& m1, int& m2, int& m3) const {
    const std::size_t j1 = s % nc1_;
    const std::size_t rest = s / nc1_;
    m1 = m1_[j1];
    m2 = m2_[rest % n2_];
    m3 = m3_[rest / n2_];
}

void SpectralGrid::kd_of(std::size_t s, double& k1, double& k2, double& k3) const {
    const std::size_t j1 = s % nc1_;
    const std::size_t rest = s / nc1_;
    k1 = kd1_[j1];
    k2 = kd2_[rest % n2_];
    k3 = kd3_[rest / n2_];
}

double SpectralGrid::kmag_of(std::size_t s) const {
    int m1, m2, m3;
    modes_of(s, m1, m2, m3);
    const double k0 = kTwoPi / length_;
    return k0 * std::sqrt(double(m1) * m1 + double(m2) * m2 + double(m3) * m3);
}

std::vector<std::uint8_t> SpectralGrid::mollifier_mask(double n) const {
    if (!(n >= 1.0)) throw std::invalid_argument("mollifier_mask: n must be >= 1");
    std::vector<std::uint8_t> mask(nm_, 0);
    const double lo = 1.0 / n;
    for (std::size_t s = 0; s < nm_; ++s) {
        const double km = kmag_of(s);
        mask[s] = (km >= lo && km <= n) ? 1 : 0;
    }
    return mask;
}

void SpectralGrid::forward(const double* in, std::complex<double>* out) const {
    // Out-of-place r2c leaves the input intact; FFTW's signature is just not
    // const-qualified.
    fftw_execute_dft_r2c(static_cast<fftw_plan>(plan_r2c_), const_cast<double*>(in),
                         reinterpret_cast<fftw_complex*>(out));
    const double scale = 1.0 / static_cast<double>(np_);
    for (std::size_t s = 0; s < nm_; ++s) out[s] *= scale;
}

void SpectralGrid::backward(const std::complex<double>* in, double* out) const {
    // Multidimensional c2r clobbers its input, so transform a scratch copy.
    std::vector<std::complex<double>> tmp(in, in + nm_);
    fftw_execute_dft_c2r(static_cast<fftw_plan>(plan_c2r_),
                         reinterpret_cast<fftw_complex*>(tmp.data()), out);
}

template <int NC>
SpectralField<NC> to_spectral(const SpectralGrid& g, const Field<NC>& f) {
    if (f.npoints() != g.npoints())
        throw std::invalid_argument("to_spectral: field size does not match grid");
    SpectralField<NC> c(g.nmodes());
    for (int a = 0; a < NC; ++a) g.forward(f.comp(a), c.comp(a));
    return c;
}

template <int NC>
Field<NC> to_physical(const SpectralGrid& g, const SpectralField<NC>& c) {
    if (c.nmodes() != g.nmodes())
        throw std::invalid_argument("to_physical: field size does not match grid");
    Field<NC> f(g.npoints());
    for (int a = 0; a < NC; ++a) g.backward(c.comp(a), f.comp(a));
    return f;
}

template <int NC>
SpectralField<NC> derivative(const SpectralGrid& g, const SpectralField<NC>& c, int axis) {
    if (axis < 0 || axis > 2) throw std::invalid_argument("derivative: axis must be 0, 1 or 2");
    SpectralField<NC> d(g.nmodes());
    const std::size_t nm = g.nmodes();
    for (int a = 0; a < NC; ++a) {
        const std::complex<double>* in = c.comp(a);
        std::complex<double>* out = d.comp(a);
        for (std::size_t s = 0; s < nm; ++s) {
            double k[3];
            g.kd_of(s, k[0], k[1], k[2]);
            out[s] = std::complex<double>(0.0, k[axis]) * in[s];
        }
    }
    return d;
}

template <int NC>
SpectralField<NC> laplacian(const SpectralGrid& g, const SpectralField<NC>& c) {
    SpectralField<NC> d(g.nmodes());
    const std::size_t nm = g.nmodes();
    for (int a = 0; a < NC; ++a) {
        const std::complex<double>* in = c.comp(a);
        std::complex<double>* out = d.comp(a);
        for (std::size_t s = 0; s < nm; ++s) {
            double k1, k2, k3;
            g.kd_of(s, k1, k2, k3);
            out[s] = -(k1 * k1 + k2 * k2 + k3 * k3) * in[s];
        }
    }
    return d;
}

template <int NC>
void apply_mask(const SpectralGrid& g, SpectralField<NC>& c,
                const std::vector<std::uint8_t>& mask) {
    const std::size_t nm = g.nmodes();
    if (c.nmodes() != nm || mask.size() != nm)
        throw std::invalid_argument("apply_mask: size mismatch");
    for (int a = 0; a < NC; ++a) {
        std::complex<double>* x = c.comp(a);
        for (std::size_t s = 0; s < nm; ++s)
            if (!mask[s]) x[s] = std::complex<double>(0.0, 0.0);
    }
}

template <int NC>
void dealias(const SpectralGrid& g, SpectralField<NC>& c) {
    apply_mask(g, c, g.dealias_mask());
}

template <int NC>
void mollify(const SpectralGrid& g, SpectralField<NC>& c, double n) {
    apply_mask(g, c, g.mollifier_mask(n));
}

template <int NC>
Field<NC> dealiased(const SpectralGrid& g, const Field<NC>& f) {
    SpectralField<NC> c = to_spectral(g, f);
    dealias(g, c);
    return to_physical(g, c);
}

template <int NC>
Field<NC> mollified(const SpectralGrid& g, const Field<NC>& f, double n) {
    SpectralField<NC> c = to_spectral(g, f);
    mollify(g, c, n);
    return to_physical(g, c);
}

void leray_project(const SpectralGrid& g, SpectralVector3& v) {
    if (v.nmodes() != g.nmodes()) throw std::invalid_argument("leray_project: size mismatch");
    const std::size_t nm = g.nmodes();
    std::complex<double>* v1 = v.comp(0);
    std::complex<double>* v2 = v.comp(1);
    std::complex<double>* v3 = v.comp(2);
    for (std::size_t s = 0; s < nm; ++s) {
        double k1, k2, k3;
        g.kd_of(s, k1, k2, k3);
        const double k2n = k1 * k1 + k2 * k2 + k3 * k3;
        if (k2n == 0.0) continue;  // mean (and pure-Nyquist modes) untouched
        const std::complex<double> dot = (k1 * v1[s] + k2 * v2[s] + k3 * v3[s]) / k2n;
        v1[s] -= k1 * dot;
        v2[s] -= k2 * dot;
        v3[s] -= k3 * dot;
    }
}

VectorField3 leray_projected(const SpectralGrid& g, const VectorField3& v) {
    SpectralVector3 c = to_spectral(g, v);
    leray_project(g, c);
    return to_physical(g, c);
}

double divergence_l2(const SpectralGrid& g, const SpectralVector3& v) {
    const std::size_t nm = g.nmodes();
    const std::complex<double>* v1 = v.comp(0);
    const std::complex<double>* v2 = v.comp(1);
    const std::complex<double>* v3 = v.comp(2);
    double acc = 0.0;
    for (std::size_t s = 0; s < nm; ++s) {
        double k1, k2, k3;
        g.kd_of(s, k1, k2, k3);
        const std::complex<double> div = k1 * v1[s] + k2 * v2[s] + k3 * v3[s];  // i factored out
        acc += g.mult_of(s) * std::norm(div);
    }
    return std::sqrt(g.volume() * acc);
}

double divergence_l2(const SpectralGrid& g, const VectorField3& v) {
    return divergence_l2(g, to_spectral(g, v));
}

double pointwise_mag2(const Field<1>& f, std::size_t p) {
    const double v = f.comp(0)[p];
    return v * v;
}

double pointwise_mag2(const Field<3>& f, std::size_t p) {
    const double a = f.comp(0)[p], b = f.comp(1)[p], c = f.comp(2)[p];
    return a * a + b * b + c * c;
}

double pointwise_mag2(const Field<5>& f, std::size_t p) {
    const double q11 = f.comp(0)[p], q12 = f.comp(1)[p], q13 = f.comp(2)[p];
    const double q22 = f.comp(3)[p], q23 = f.comp(4)[p];
    const double q33 = -q11 - q22;
    return q11 * q11 + q22 * q22 + q33 * q33 + 2.0 * (q12 * q12 + q13 * q13 + q23 * q23);
}

namespace {

// Squared magnitude of one spectral coefficient, matching the pointwise
// contraction of the field kind (for Q-tensors: the full tr(Q^2) form with the
// implied 33 component).
template <int NC>
double spectral_mag2(const SpectralField<NC>& c, std::size_t s);

template <>
double spectral_mag2<1>(const SpectralField<1>& c, std::size_t s) {
    return std::norm(c.comp(0)[s]);
}

template <>
double spectral_mag2<3>(const SpectralField<3>& c, std::size_t s) {
    return std::norm(c.comp(0)[s]) + std::norm(c.comp(1)[s]) + std::norm(c.comp(2)[s]);
}

template <>
double spectral_mag2<5>(const SpectralField<5>& c, std::size_t s) {
    const std::complex<double> q11 = c.comp(0)[s], q12 = c.comp(1)[s], q13 = c.comp(2)[s];
    const std::complex<double> q22 = c.comp(3)[s], q23 = c.comp(4)[s];
    return std::norm(q11) + std::norm(q22) + std::norm(q11 + q22) +
           2.0 * (std::norm(q12) + std::norm(q13) + std::norm(q23));
}

template <int NC>
FieldNorms norms_impl(const SpectralGrid& g, const Field<NC>& f) {
    if (f.npoints() != g.npoints())
        throw std::invalid_argument("discrete_norms: field size does not match grid");
    FieldNorms out;
    const std::size_t np = g.npoints();
    double s2 = 0.0, s4 = 0.0;
    for (std::size_t p = 0; p < np; ++p) {
        const double m2 = pointwise_mag2(f, p);
        s2 += m2;
        s4 += m2 * m2;
    }
    const double dv = g.volume() / static_cast<double>(np);
    out.l2 = std::sqrt(dv * s2);
    out.l4 = std::pow(dv * s4, 0.25);

    const SpectralField<NC> c = to_spectral(g, f);
    const std::size_t nm = g.nmodes();
    double h1 = 0.0, h2 = 0.0;
    for (std::size_t s = 0; s < nm; ++s) {
        double k1, k2, k3;
        g.kd_of(s, k1, k2, k3);
        const double ksq = k1 * k1 + k2 * k2 + k3 * k3;
        const double w = g.mult_of(s) * spectral_mag2<NC>(c, s);
        h1 += ksq * w;
        h2 += ksq * ksq * w;
    }
    out.h1 = std::sqrt(g.volume() * h1);
    out.h2 = std::sqrt(g.volume() * h2);
    return out;
}

template <int NC>
double pointwise_dot(const Field<NC>& a, const Field<NC>& b, std::size_t p);

template <>
double pointwise_dot<1>(const Field<1>& a, const Field<1>& b, std::size_t p) {
    return a.comp(0)[p] * b.comp(0)[p];
}

template <>
double pointwise_dot<3>(const Field<3>& a, const Field<3>& b, std::size_t p) {
    return a.comp(0)[p] * b.comp(0)[p] + a.comp(1)[p] * b.comp(1)[p] + a.comp(2)[p] * b.comp(2)[p];
}

template <>
double pointwise_dot<5>(const Field<5>& a, const Field<5>& b, std::size_t p) {
    const double a11 = a.comp(0)[p], a12 = a.comp(1)[p], a13 = a.comp(2)[p];
    const double a22 = a.comp(3)[p], a23 = a.comp(4)[p];
    const double b11 = b.comp(0)[p], b12 = b.comp(1)[p], b13 = b.comp(2)[p];
    const double b22 = b.comp(3)[p], b23 = b.comp(4)[p];
    return a11 * b11 + a22 * b22 + (a11 + a22) * (b11 + b22) +
           2.0 * (a12 * b12 + a13 * b13 + a23 * b23);
}

}  // namespace

FieldNorms discrete_norms(const SpectralGrid& g, const ScalarField& f) { return norms_impl(g, f); }
FieldNorms discrete_norms(const SpectralGrid& g, const VectorField3& f) { return norms_impl(g, f); }
FieldNorms discrete_norms(const SpectralGrid& g, const QTensorField& f) { return norms_impl(g, f); }

template <int NC>
double l2_inner(const SpectralGrid& g, const Field<NC>& a, const Field<NC>& b) {
    if (a.npoints() != g.npoints() || b.npoints() != g.npoints())
        throw std::invalid_argument("l2_inner: field size does not match grid");
    const std::size_t np = g.npoints();
    double acc = 0.0;
    for (std::size_t p = 0; p < np; ++p) acc += pointwise_dot<NC>(a, b, p);
    return acc * g.volume() / static_cast<double>(np);
}

double quadrature(const SpectralGrid& g, const ScalarField& f) {
    if (f.npoints() != g.npoints())
        throw std::invalid_argument("quadrature: field size does not match grid");
    double acc = 0.0;
    for (std::size_t p = 0; p < g.npoints(); ++p) acc += f.comp(0)[p];
    return acc * g.volume() / static_cast<double>(g.npoints());
}

namespace {

// Deterministic Gaussian draws: explicit Box-Muller over mt19937_64 output so
// the stream does not depend on the standard library's distribution choices.
struct GaussStream {
    std::mt19937_64 eng;
    explicit GaussStream(std::uint64_t seed) : eng(seed) {}
    double uniform() { return (static_cast<double>(eng() >> 11) + 0.5) * 0x1.0p-53; }
    std::complex<double> cnormal() {
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return {r * std::cos(kTwoPi * u2), r * std::sin(kTwoPi * u2)};
    }
};

// Fill one spectral component with shaped Gaussian coefficients and repair the
// Hermitian constraint on the two self-conjugate j1 planes.
void draw_component(const SpectralGrid& g, GaussStream& rng, double decay,
                    std::complex<double>* c) {
    const int n1 = g.n1(), n2 = g.n2(), n3 = g.n3();
    const int nc1 = n1 / 2 + 1;
    for (int i3 = 0; i3 < n3; ++i3)
        for (int i2 = 0; i2 < n2; ++i2)
            for (int j1 = 0; j1 < nc1; ++j1) {
                const std::size_t s = g.sidx(j1, i2, i3);
                c[s] = rng.cnormal() * std::pow(1.0 + g.kmag_of(s), -decay);
            }
    // j1 = 0 and j1 = n1/2 pair with themselves under conjugation: enforce
    // c(-m2, -m3) = conj(c(m2, m3)) there.
    for (int j1 : {0, n1 / 2})
        for (int i3 = 0; i3 < n3; ++i3)
            for (int i2 = 0; i2 < n2; ++i2) {
                const int p2 = (n2 - i2) % n2;
                const int p3 = (n3 - i3) % n3;
                const std::size_t self = g.sidx(j1, i2, i3);
                const std::size_t partner = g.sidx(j1, p2, p3);
                if (partner == self)
                    c[self] = std::complex<double>(c[self].real(), 0.0);
                else if (partner > self)
                    c[partner] = std::conj(c[self]);
            }
}

}  // namespace

ScalarField random_scalar_field(const SpectralGrid& g, double decay, std::uint64_t seed,
                                bool apply_dealias) {
    GaussStream rng(seed);
    SpectralScalar c(g.nmodes());
    draw_component(g, rng, decay, c.comp(0));
    if (apply_dealias) dealias(g, c);
    return to_physical(g, c);
}

VectorField3 random_vector_field(const SpectralGrid& g, double decay, std::uint64_t seed,
                                 bool solenoidal, bool apply_dealias) {
    GaussStream rng(seed);
    SpectralVector3 c(g.nmodes());
    for (int a = 0; a < 3; ++a) draw_component(g, rng, decay, c.comp(a));
    if (apply_dealias) dealias(g, c);
    if (solenoidal) leray_project(g, c);
    return to_physical(g, c);
}

QTensorField random_qtensor_field(const SpectralGrid& g, double decay, std::uint64_t seed,
                                  bool apply_dealias) {
    GaussStream rng(seed);
    SpectralQTensor c(g.nmodes());
    for (int a = 0; a < 5; ++a) draw_component(g, rng, decay, c.comp(a));
    if (apply_dealias) dealias(g, c);
    return to_physical(g, c);
}

// Explicit instantiations for the component counts used across the project
// (scalars, velocity, Q-tensors, full 3x3 matrix fields).
#define NEMAQ_INSTANTIATE(NC)                                                                   \
    template SpectralField<NC> to_spectral<NC>(const SpectralGrid&, const Field<NC>&);          \
    template Field<NC> to_physical<NC>(const SpectralGrid&, const SpectralField<NC>&);          \
    template SpectralField<NC> derivative<NC>(const SpectralGrid&, const SpectralField<NC>&,    \
                                              int);                                             \
    template SpectralField<NC> laplacian<NC>(const SpectralGrid&, const SpectralField<NC>&);    \
    template void apply_mask<NC>(const SpectralGrid&, SpectralField<NC>&,                       \
                                 const std::vector<std::uint8_t>&);                             \
    template void dealias<NC>(const SpectralGrid&, SpectralField<NC>&);                         \
    template void mollify<NC>(const SpectralGrid&, SpectralField<NC>&, double);                 \
    template Field<NC> dealiased<NC>(const SpectralGrid&, const Field<NC>&);                    \
    template Field<NC> mollified<NC>(const SpectralGrid&, const Field<NC>&, double);

NEMAQ_INSTANTIATE(1)
NEMAQ_INSTANTIATE(3)
NEMAQ_INSTANTIATE(5)
NEMAQ_INSTANTIATE(9)
#undef NEMAQ_INSTANTIATE

template double l2_inner<1>(const SpectralGrid&, const Field<1>&, const Field<1>&);
template double l2_inner<3>(const SpectralGrid&, const Field<3>&, const Field<3>&);
template double l2_inner<5>(const SpectralGrid&, const Field<5>&, const Field<5>&);

}  // namespace nemaq
