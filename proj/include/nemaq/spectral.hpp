#pragma once

// Periodic pseudo-spectral domain: cubic box of length L with an n1 x n2 x n3
// grid (even sizes), real-to-complex FFT transforms, spectral differentiation,
// Leray projection, the 2/3-rule dealias mask, low/high-pass mollification,
// discrete norms and deterministic random band-limited fields.
//
// Layout. Physical fields are x-fastest: index = i1 + n1*(i2 + n2*i3).
// Spectral fields hold the non-redundant r2c half-spectrum with the first axis
// cut: index = j1 + (n1/2+1)*(i2 + n2*i3), j1 in [0, n1/2]. Forward transforms
// are normalized by 1/(n1*n2*n3), so coefficients are honest Fourier
// coefficients: f(x) = sum_k c_k exp(i k.x).
//
// Wavenumbers. k_a = (2*pi/L) * m_a with signed integer modes m_a. The
// derivative tables zero the Nyquist mode of each axis, so Nyquist modes are
// excluded from differentiation; everything kept by the dealias mask sits
// strictly below Nyquist anyway.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace nemaq {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

template <int NC>
struct Field {
    static_assert(NC >= 1);
    std::vector<double> data;  // NC * npoints, component-major

    Field() = default;
    explicit Field(std::size_t npoints) : data(static_cast<std::size_t>(NC) * npoints, 0.0) {}

    std::size_t npoints() const { return data.size() / NC; }
    double* comp(int c) { return data.data() + static_cast<std::size_t>(c) * npoints(); }
    const double* comp(int c) const { return data.data() + static_cast<std::size_t>(c) * npoints(); }
};

using ScalarField = Field<1>;
using VectorField3 = Field<3>;
using QTensorField = Field<5>;  // components q11, q12, q13, q22, q23

template <int NC>
struct SpectralField {
    static_assert(NC >= 1);
    std::vector<std::complex<double>> data;  // NC * nmodes, component-major

    SpectralField() = default;
    explicit SpectralField(std::size_t nmodes)
        : data(static_cast<std::size_t>(NC) * nmodes, std::complex<double>(0.0, 0.0)) {}

    std::size_t nmodes() const { return data.size() / NC; }
    std::complex<double>* comp(int c) { return data.data() + static_cast<std::size_t>(c) * nmodes(); }
    const std::complex<double>* comp(int c) const {
        return data.data() + static_cast<std::size_t>(c) * nmodes();
    }
};

using SpectralScalar = SpectralField<1>;
using SpectralVector3 = SpectralField<3>;
using SpectralQTensor = SpectralField<5>;

class SpectralGrid {
public:
    SpectralGrid(int n1, int n2, int n3, double box_length);
    SpectralGrid(int n, double box_length) : SpectralGrid(n, n, n, box_length) {}
    ~SpectralGrid();

    SpectralGrid(const SpectralGrid&) = delete;
    SpectralGrid& operator=(const SpectralGrid&) = delete;

    int n1() const { return n1_; }
    int n2() const { return n2_; }
    int n3() const { return n3_; }
    double box_length() const { return length_; }
    double volume() const { return length_ * length_ * length_; }

    std::size_t npoints() const { return np_; }
    std::size_t nmodes() const { return nm_; }

    std::size_t pidx(int i1, int i2, int i3) const {
        return static_cast<std::size_t>(i1) +
               static_cast<std::size_t>(n1_) * (static_cast<std::size_t>(i2) +
                                                static_cast<std::size_t>(n2_) * i3);
    }
    std::size_t sidx(int j1, int i2, int i3) const {
        return static_cast<std::size_t>(j1) +
               static_cast<std::size_t>(nc1_) * (static_cast<std::size_t>(i2) +
                                                 static_cast<std::size_t>(n2_) * i3);
    }

    // Signed integer modes and derivative wavenumbers (Nyquist zeroed) of a
    // spectral index. kmag is the true |k| (Nyquist included), used by the
    // mollifier and the random-field envelope.
    void modes_of(std::size_t s, int& m1, int& m2, int& m3) const;
    void kd_of(std::size_t s, double& k1, double& k2, double& k3) const;
    double kmag_of(std::size_t s) const;

    // Hermitian multiplicity of a spectral index: 2 for interior j1, else 1.
    double mult_of(std::size_t s) const { return mult_[s % nc1_]; }

    bool retained(std::size_t s) const { return dealias_[s] != 0; }
    const std::vector<std::uint8_t>& dealias_mask() const { return dealias_; }

    // Retains modes with 1/n <= |k| <= n (Euclidean physical wavenumbers).
    // The mean always falls below the lower cutoff and is removed.
    std::vector<std::uint8_t> mollifier_mask(double n) const;

    // Per-component transforms. Forward normalizes by 1/(n1*n2*n3); backward
    // is a plain inverse (round trip is the identity up to round-off).
    void forward(const double* in, std::complex<double>* out) const;
    void backward(const std::complex<double>* in, double* out) const;

private:
    int n1_, n2_, n3_, nc1_;
    double length_;
    std::size_t np_, nm_;
    std::vector<int> m1_, m2_, m3_;        // per-axis signed modes
    std::vector<double> kd1_, kd2_, kd3_;  // per-axis derivative wavenumbers
    std::vector<double> mult_;
    std::vector<std::uint8_t> dealias_;
    void* plan_r2c_ = nullptr;
    void* plan_c2r_ = nullptr;
};

template <int NC>
SpectralField<NC> to_spectral(const SpectralGrid& g, const Field<NC>& f);
template <int NC>
Field<NC> to_physical(const SpectralGrid& g, const SpectralField<NC>& c);

// d/dx_axis (axis in {0,1,2}) and the Laplacian, as spectral multipliers
// built from the Nyquist-zeroed derivative tables.
template <int NC>
SpectralField<NC> derivative(const SpectralGrid& g, const SpectralField<NC>& c, int axis);
template <int NC>
SpectralField<NC> laplacian(const SpectralGrid& g, const SpectralField<NC>& c);

// In-place helpers.
template <int NC>
void apply_mask(const SpectralGrid& g, SpectralField<NC>& c, const std::vector<std::uint8_t>& mask);
template <int NC>
void dealias(const SpectralGrid& g, SpectralField<NC>& c);
template <int NC>
void mollify(const SpectralGrid& g, SpectralField<NC>& c, double n);

// Physical-field conveniences (transform, mask, transform back).
template <int NC>
Field<NC> dealiased(const SpectralGrid& g, const Field<NC>& f);
template <int NC>
Field<NC> mollified(const SpectralGrid& g, const Field<NC>& f, double n);

// v_hat -> v_hat - k (k.v_hat)/|k|^2 per mode; the k = 0 mode (and modes whose
// derivative wavenumber vanishes entirely) are left unchanged.
void leray_project(const SpectralGrid& g, SpectralVector3& v);
VectorField3 leray_projected(const SpectralGrid& g, const VectorField3& v);

// L2 norm of the spectral divergence built from the derivative tables.
double divergence_l2(const SpectralGrid& g, const SpectralVector3& v);
double divergence_l2(const SpectralGrid& g, const VectorField3& v);

struct FieldNorms {
    double l2 = 0.0;  // grid quadrature
    double h1 = 0.0;  // |grad f|   seminorm, spectral sum
    double h2 = 0.0;  // |Delta f|  seminorm, spectral sum
    double l4 = 0.0;  // grid quadrature of |f|^4, fourth root
};

// Pointwise squared magnitudes: f^2, |v|^2, tr(Q^2).
double pointwise_mag2(const Field<1>& f, std::size_t p);
double pointwise_mag2(const Field<3>& f, std::size_t p);
double pointwise_mag2(const Field<5>& f, std::size_t p);

FieldNorms discrete_norms(const SpectralGrid& g, const ScalarField& f);
FieldNorms discrete_norms(const SpectralGrid& g, const VectorField3& f);
FieldNorms discrete_norms(const SpectralGrid& g, const QTensorField& f);

// Grid quadrature (V/N) * sum_x of the pointwise product; for tensor kinds the
// pointwise product is the full contraction (vector dot, tr(AB)).
template <int NC>
double l2_inner(const SpectralGrid& g, const Field<NC>& a, const Field<NC>& b);

// Plain grid quadrature of a scalar field.
double quadrature(const SpectralGrid& g, const ScalarField& f);

// Deterministic band-limited random fields. Coefficients are complex Gaussian
// draws shaped by (1 + |k|)^(-decay), Hermitian-symmetrized, then restricted
// to the dealias band. The same (grid, seed, decay) always reproduces the same
// field bit-for-bit. With apply_dealias = false the draw fills the whole
// spectrum (used by negative controls only).
ScalarField random_scalar_field(const SpectralGrid& g, double decay, std::uint64_t seed,
                                bool apply_dealias = true);
VectorField3 random_vector_field(const SpectralGrid& g, double decay, std::uint64_t seed,
                                 bool solenoidal, bool apply_dealias = true);
QTensorField random_qtensor_field(const SpectralGrid& g, double decay, std::uint64_t seed,
                                  bool apply_dealias = true);

}  // namespace nemaq
