#pragma once

#include "cgolab/grid.hpp"

#include <optional>

namespace cgolab {

enum class XiVariant { Xi1, Xi2, Raw };

// xi = re + i*im with xi.xi = 0 (bilinear product).
struct ComplexFrequency {
    int dim = 3;
    double s = 0;
    Vec3 sigma1{}, sigma2{}, sigma3{};
    bool has_sigma3 = false;
    XiVariant variant = XiVariant::Raw;
    Vec3 re{}, im{};

    double abs() const { return std::sqrt(dot(re, re) + dot(im, im)); }
    // xi . k for real k.
    cplx dot_real(const Vec3& k) const { return {dot(re, k), dot(im, k)}; }
    // xi . xi (bilinear).
    cplx self_dot() const { return {dot(re, re) - dot(im, im), 2 * dot(re, im)}; }
};

// xi_1 = s sigma2 - i s sigma1.
ComplexFrequency make_xi1(double s, const Vec3& sigma1, const Vec3& sigma2, int dim = 3);
// xi_2 = -s^2 sigma2/sqrt(1+s^2) + s sigma3/sqrt(1+s^2) + i s sigma1.
ComplexFrequency make_xi2(double s, const Vec3& sigma1, const Vec3& sigma2, const Vec3& sigma3);
ComplexFrequency make_raw(const Vec3& re, const Vec3& im, int dim = 3);

// Denominator of the multiplier: -|k|^2 + i xi.k.
inline cplx symbol(const ComplexFrequency& xi, const Vec3& k)
{
    return cplx(-dot(k, k), 0.0) + cplx(0, 1) * xi.dot_real(k);
}

// Gamma_xi = {k : a.k = 0, |k - c| = s'/2} with xi = a + i b, c = -b/2, s' = |a| = |b|.
struct CharSetGeometry {
    ComplexFrequency xi;
    Vec3 center{};
    double radius = 0;
    Vec3 plane_normal{};
    // Orthonormal in-plane basis (d = 3); e1 points from the center to the origin.
    Vec3 e1{}, e2{};

    // Point of the circle at angle phi (d = 3).
    Vec3 point(double phi) const;
};

CharSetGeometry charset_geometry(const ComplexFrequency& xi);
double dist_to_charset(const Vec3& k, const ComplexFrequency& xi);
double dist_to_charset(const Vec3& k, const CharSetGeometry& g);

enum class SplitPart { Near, Mid, Far };
enum class TwoWayPart { Close, Away };

// Near: dist <= |k|/|xi|; Far: dist > 4|xi|; Mid: the rest.
SplitPart classify(const Vec3& k, const CharSetGeometry& g);
// Close: dist < threshold; Away: dist >= threshold.
TwoWayPart classify_two_way(const Vec3& k, const CharSetGeometry& g, double threshold = 1.0);

struct KernelSplit {
    bool two_way = false;
    SplitPart part = SplitPart::Near;
    TwoWayPart two_way_part = TwoWayPart::Close;
    double two_way_threshold = 1.0;
};

struct SplitMasks {
    std::vector<std::size_t> near, mid, far;
};
SplitMasks split_masks(const ComplexFrequency& xi, const GridSpec& spec);

struct MultiplierReport {
    std::size_t count_regularized = 0;
    double min_abs_denominator = 0;
    double delta_floor = 0;
};

struct KernelOptions {
    // Absolute floor; when unset, 1e-10 |xi|^2.
    std::optional<double> delta_floor;
    std::optional<KernelSplit> split;
    // Reject inputs that do not vanish outside B_{L/2}.
    bool enforce_support = true;
};

// Multiplier array for one (xi, spec); reusable across inputs.
class KernelMultiplier {
public:
    KernelMultiplier(const ComplexFrequency& xi, const GridSpec& spec, const KernelOptions& opts = {});

    const std::vector<cplx>& values() const { return mult_; }
    const MultiplierReport& report() const { return report_; }
    const ComplexFrequency& xi() const { return xi_; }
    const GridSpec& spec() const { return spec_; }

    GridField apply(const GridField& f) const;
    SpectralField apply(const SpectralField& f) const;

private:
    ComplexFrequency xi_;
    GridSpec spec_;
    bool enforce_support_;
    std::vector<cplx> mult_;
    MultiplierReport report_;
};

GridField apply_kernel(const ComplexFrequency& xi, const GridField& f, const KernelOptions& opts = {},
                       MultiplierReport* report = nullptr);

// Delta W + xi.grad W - f evaluated spectrally on the modes the multiplier keeps.
double kernel_residual(const KernelMultiplier& K, const GridField& f, const GridField& W);

}  // namespace cgolab
