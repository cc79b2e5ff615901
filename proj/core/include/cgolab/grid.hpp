#pragma once

#include "cgolab/common.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace cgolab {

// Periodic box [-L, L)^dim sampled with n points per axis.
class GridSpec {
public:
    GridSpec() = default;
    GridSpec(int dim, int n, double L);

    int dim() const { return dim_; }
    int n() const { return n_; }
    double L() const { return L_; }
    double h() const { return 2.0 * L_ / n_; }
    double dk() const { return M_PI / L_; }
    std::size_t size() const;

    double coord(int j) const { return -L_ + j * h(); }
    // Lattice frequency of FFT-ordered index j.
    double freq(int j) const { return dk() * (j < n_ / 2 ? j : j - n_); }

    // Multi-index of a flat (row-major) index; unused components are 0.
    std::array<int, 3> unflatten(std::size_t idx) const;
    std::size_t flatten(const std::array<int, 3>& j) const;
    Vec3 point(std::size_t idx) const;
    Vec3 frequency(std::size_t idx) const;

    bool operator==(const GridSpec& o) const { return dim_ == o.dim_ && n_ == o.n_ && L_ == o.L_; }
    bool operator!=(const GridSpec& o) const { return !(*this == o); }

private:
    int dim_ = 3;
    int n_ = 8;
    double L_ = 1.0;
};

struct GridField {
    GridSpec spec;
    std::vector<cplx> values;

    GridField() = default;
    explicit GridField(const GridSpec& s) : spec(s), values(s.size(), cplx(0.0)) {}
    GridField(const GridSpec& s, std::vector<cplx> v);

    static GridField sample(const GridSpec& s, const std::function<cplx(const Vec3&)>& f);

    GridField& operator+=(const GridField& o);
    GridField& operator-=(const GridField& o);
    GridField& operator*=(cplx c);
    friend GridField operator+(GridField a, const GridField& b) { return a += b; }
    friend GridField operator-(GridField a, const GridField& b) { return a -= b; }
    friend GridField operator*(cplx c, GridField a) { return a *= c; }
    // Pointwise product.
    GridField times(const GridField& o) const;
    double max_abs() const;
};

// Coefficients in FFT order; coeffs[idx] belongs to spec.frequency(idx).
struct SpectralField {
    GridSpec spec;
    std::vector<cplx> coeffs;

    SpectralField() = default;
    explicit SpectralField(const GridSpec& s) : spec(s), coeffs(s.size(), cplx(0.0)) {}
};

// coeffs[k] = h^dim * sum_x f(x) e^{-i k.x}
SpectralField to_spectral(const GridField& f);
GridField from_spectral(const SpectralField& f);

// Spectral derivatives (multiplication by i k).
GridField partial(const GridField& f, int axis);
std::vector<GridField> gradient(const GridField& f);
GridField laplacian(const GridField& f);
GridField divergence(const std::vector<GridField>& g);

namespace norms {
struct L2Ball { double r; };
struct HkBall { int k; double r; };
struct HMinus1 {};
struct HMinusHalf {};
struct Lp { double p; };
struct LpBall { double p; double r; };
struct HkGlobal { int k; };
}  // namespace norms

using NormKind = std::variant<norms::L2Ball, norms::HkBall, norms::HMinus1, norms::HMinusHalf, norms::Lp,
                              norms::LpBall, norms::HkGlobal>;

double norm(const GridField& f, const NormKind& kind);
// sup |f| and sup over the ball of radius r.
double sup_norm(const GridField& f);
// h^{dim/p} * l^p over the whole box; accepts p >= 1.
double lp_norm(const GridField& f, double p);
// sum over |alpha| <= k of sup |D^alpha f| (spectral derivatives).
double ck_norm(const GridField& f, int k);

GridField ball_restrict(const GridField& f, double r);
// True when f vanishes exactly outside the ball of radius r.
bool supported_in_ball(const GridField& f, double r);

// 24-byte header (dim:int32, n:int32, L:float64, reserved:float64) followed by
// little-endian complex64 pairs.
void write_field(std::ostream& os, const GridField& f);
GridField read_field(std::istream& is);
void save_field(const std::string& path, const GridField& f);
GridField load_field(const std::string& path);
struct FieldHeader {
    int dim;
    int n;
    double L;
};
FieldHeader read_field_header(std::istream& is);
// Columns x0[,x1[,x2]],re,im.
void write_field_csv(std::ostream& os, const GridField& f);

// Periodic cubic (4-point Lagrange) interpolation of the real part.
double interpolate_real(const GridField& f, const Vec3& x);

}  // namespace cgolab
