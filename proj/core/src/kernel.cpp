#include "cgolab/kernel.hpp"

#include <algorithm>
#include <limits>

namespace cgolab {

namespace {

void check_frame(double s, std::initializer_list<Vec3> sig)
{
    if (!(s > 2)) throw Error("complex frequency requires s > 2");
    std::vector<Vec3> v(sig);
    for (auto& a : v)
        if (std::abs(norm(a) - 1.0) > 1e-10) throw Error("frame vector is not unit length");
    for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = i + 1; j < v.size(); ++j)
            if (std::abs(dot(v[i], v[j])) > 1e-10) throw Error("frame vectors are not orthogonal");
}

}  // namespace

ComplexFrequency make_xi1(double s, const Vec3& sigma1, const Vec3& sigma2, int dim)
{
    check_frame(s, {sigma1, sigma2});
    ComplexFrequency xi;
    xi.dim = dim;
    xi.s = s;
    xi.sigma1 = sigma1;
    xi.sigma2 = sigma2;
    xi.variant = XiVariant::Xi1;
    xi.re = s * sigma2;
    xi.im = -s * sigma1;
    return xi;
}

ComplexFrequency make_xi2(double s, const Vec3& sigma1, const Vec3& sigma2, const Vec3& sigma3)
{
    check_frame(s, {sigma1, sigma2, sigma3});
    ComplexFrequency xi;
    xi.dim = 3;
    xi.s = s;
    xi.sigma1 = sigma1;
    xi.sigma2 = sigma2;
    xi.sigma3 = sigma3;
    xi.has_sigma3 = true;
    xi.variant = XiVariant::Xi2;
    double r = std::sqrt(1.0 + s * s);
    xi.re = (-s * s / r) * sigma2 + (s / r) * sigma3;
    xi.im = s * sigma1;
    return xi;
}

ComplexFrequency make_raw(const Vec3& re, const Vec3& im, int dim)
{
    ComplexFrequency xi;
    xi.dim = dim;
    xi.re = re;
    xi.im = im;
    xi.s = norm(im);
    xi.variant = XiVariant::Raw;
    return xi;
}

Vec3 CharSetGeometry::point(double phi) const
{
    return center + radius * (std::cos(phi) * e1 + std::sin(phi) * e2);
}

CharSetGeometry charset_geometry(const ComplexFrequency& xi)
{
    if (xi.variant == XiVariant::Raw) throw Error("characteristic set geometry is unsupported for Raw frequencies");
    CharSetGeometry g;
    g.xi = xi;
    g.center = -0.5 * xi.im;
    g.radius = 0.5 * norm(xi.im);
    g.plane_normal = normalized(xi.re);
    g.e1 = normalized(xi.im);
    g.e2 = xi.dim == 3 ? cross(g.plane_normal, g.e1) : Vec3{0, 0, 0};
    return g;
}

double dist_to_charset(const Vec3& k, const CharSetGeometry& g)
{
    Vec3 d = k - g.center;
    double z = dot(d, g.plane_normal);
    Vec3 p = d - z * g.plane_normal;
    double rho = norm(p);
    double t = rho - g.radius;
    return std::sqrt(t * t + z * z);
}

double dist_to_charset(const Vec3& k, const ComplexFrequency& xi)
{
    return dist_to_charset(k, charset_geometry(xi));
}

SplitPart classify(const Vec3& k, const CharSetGeometry& g)
{
    double d = dist_to_charset(k, g);
    double ax = g.xi.abs();
    if (d <= norm(k) / ax) return SplitPart::Near;
    if (d > 4 * ax) return SplitPart::Far;
    return SplitPart::Mid;
}

TwoWayPart classify_two_way(const Vec3& k, const CharSetGeometry& g, double threshold)
{
    return dist_to_charset(k, g) < threshold ? TwoWayPart::Close : TwoWayPart::Away;
}

SplitMasks split_masks(const ComplexFrequency& xi, const GridSpec& spec)
{
    CharSetGeometry g = charset_geometry(xi);
    SplitMasks m;
    for (std::size_t i = 0; i < spec.size(); ++i) {
        switch (classify(spec.frequency(i), g)) {
            case SplitPart::Near: m.near.push_back(i); break;
            case SplitPart::Mid: m.mid.push_back(i); break;
            case SplitPart::Far: m.far.push_back(i); break;
        }
    }
    return m;
}

KernelMultiplier::KernelMultiplier(const ComplexFrequency& xi, const GridSpec& spec, const KernelOptions& opts)
    : xi_(xi), spec_(spec), enforce_support_(opts.enforce_support), mult_(spec.size())
{
    if (xi.dim != spec.dim()) throw Error("kernel: frequency and grid dimensions differ");
    double ax = xi.abs();
    if (!(ax > 2)) throw Error("kernel: |xi| > 2 required");
    double floor = opts.delta_floor ? *opts.delta_floor : 1e-10 * ax * ax;
    report_.delta_floor = floor;
    report_.min_abs_denominator = std::numeric_limits<double>::infinity();
    std::optional<CharSetGeometry> geom;
    if (opts.split) geom = charset_geometry(xi);
    for (std::size_t i = 0; i < mult_.size(); ++i) {
        Vec3 k = spec.frequency(i);
        cplx den = symbol(xi, k);
        double a = std::abs(den);
        report_.min_abs_denominator = std::min(report_.min_abs_denominator, a);
        bool keep = true;
        if (opts.split) {
            const KernelSplit& sp = *opts.split;
            if (sp.two_way)
                keep = classify_two_way(k, *geom, sp.two_way_threshold) == sp.two_way_part;
            else
                keep = classify(k, *geom) == sp.part;
        }
        if (a < floor) {
            ++report_.count_regularized;
            mult_[i] = 0.0;
        } else {
            mult_[i] = keep ? 1.0 / den : cplx(0.0);
        }
    }
}

SpectralField KernelMultiplier::apply(const SpectralField& f) const
{
    if (f.spec != spec_) throw Error("kernel: spec mismatch");
    SpectralField out = f;
    for (std::size_t i = 0; i < out.coeffs.size(); ++i) out.coeffs[i] *= mult_[i];
    return out;
}

GridField KernelMultiplier::apply(const GridField& f) const
{
    if (f.spec != spec_) throw Error("kernel: spec mismatch");
    if (enforce_support_ && !supported_in_ball(f, spec_.L() / 2))
        throw Error("kernel: input support exceeds L/2 (periodic wrap-around)");
    return from_spectral(apply(to_spectral(f)));
}

GridField apply_kernel(const ComplexFrequency& xi, const GridField& f, const KernelOptions& opts,
                       MultiplierReport* report)
{
    KernelMultiplier K(xi, f.spec, opts);
    if (report) *report = K.report();
    return K.apply(f);
}

double kernel_residual(const KernelMultiplier& K, const GridField& f, const GridField& W)
{
    SpectralField F = to_spectral(f), Wh = to_spectral(W);
    SpectralField R(f.spec);
    for (std::size_t i = 0; i < R.coeffs.size(); ++i) {
        if (K.values()[i] == cplx(0.0)) continue;
        R.coeffs[i] = symbol(K.xi(), f.spec.frequency(i)) * Wh.coeffs[i] - F.coeffs[i];
    }
    GridField r = from_spectral(R);
    double num = lp_norm(r, 2), den = lp_norm(f, 2);
    return den > 0 ? num / den : num;
}

}  // namespace cgolab
