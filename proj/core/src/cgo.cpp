#include "cgolab/cgo.hpp"

#include <cfloat>
#include <limits>

namespace cgolab {

namespace {

const GridSpec& form_spec(const PotentialForm& f)
{
    if (auto* p = std::get_if<Plain>(&f)) return p->q.spec;
    return std::get<DivForm>(f).g2.spec;
}

GridField lowpass(const GridField& f, double cutoff)
{
    SpectralField F = to_spectral(f);
    for (std::size_t i = 0; i < F.coeffs.size(); ++i)
        if (norm(F.spec.frequency(i)) > cutoff) F.coeffs[i] = 0.0;
    return from_spectral(F);
}

double support_radius(const GridField& f)
{
    double r = 0;
    for (std::size_t i = 0; i < f.values.size(); ++i)
        if (f.values[i] != cplx(0.0)) r = std::max(r, norm(f.spec.point(i)));
    return r;
}

struct Windowed {
    GridField smooth, small;
};

Windowed split_field(const GridField& f, double cutoff, WindowMode mode, double r_in)
{
    Windowed out{lowpass(f, cutoff), GridField()};
    if (mode == WindowMode::Bump) {
        for (std::size_t i = 0; i < f.values.size(); ++i)
            out.smooth.values[i] *= smooth_window(norm(f.spec.point(i)), r_in, 1.0);
    }
    out.small = f - out.smooth;
    return out;
}

double sup_of(const std::vector<GridField>& g)
{
    double m = 0;
    for (auto& c : g) m = std::max(m, sup_norm(c));
    return m;
}

// Values and gradient on B_r from spectral coefficients.
double h1_from_spectral(const SpectralField& F, double r)
{
    const GridSpec& s = F.spec;
    GridField f = from_spectral(F);
    std::vector<GridField> g;
    for (int a = 0; a < s.dim(); ++a) {
        SpectralField D = F;
        for (std::size_t i = 0; i < D.coeffs.size(); ++i) D.coeffs[i] *= cplx(0, s.frequency(i)[a]);
        g.push_back(from_spectral(D));
    }
    double r2 = r * r;
    std::vector<double> terms;
    terms.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        Vec3 x = s.point(i);
        if (dot(x, x) > r2) continue;
        double t = std::norm(f.values[i]);
        for (auto& c : g) t += std::norm(c.values[i]);
        terms.push_back(t);
    }
    return std::sqrt(pairwise_sum(terms) * std::pow(s.h(), s.dim()));
}

bool finite_field(const GridField& f)
{
    for (auto& v : f.values)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
}

}  // namespace

const GridSpec& PotentialSplit::spec() const { return form_spec(form); }

GridField recombine(const PotentialForm& form)
{
    if (auto* p = std::get_if<Plain>(&form)) return p->q;
    const DivForm& d = std::get<DivForm>(form);
    if (static_cast<int>(d.g1.size()) != d.g2.spec.dim()) throw Error("div form: g1 needs one component per axis");
    return divergence(d.g1) + d.g2;
}

GridField PotentialSplit::potential() const { return recombine(form); }

double smooth_window(double r, double r_in, double r_out)
{
    if (r <= r_in) return 1.0;
    if (r >= r_out) return 0.0;
    auto f = [](double t) { return t > 0 ? std::exp(-1.0 / t) : 0.0; };
    double t = (r - r_in) / (r_out - r_in);
    return f(1 - t) / (f(1 - t) + f(t));
}

PotentialSplit split_smooth_small(const PotentialSplit& q, double cutoff, WindowMode window)
{
    if (!(cutoff > 0)) throw Error("split_smooth_small: cutoff must be positive");
    const GridSpec& s = q.spec();
    SmoothSmall ss;
    ss.cutoff = cutoff;
    if (auto* p = std::get_if<Plain>(&q.form)) {
        double r_in = std::min(support_radius(p->q), 0.95);
        auto w = split_field(p->q, cutoff, window, r_in);
        ss.smooth_part = Plain{w.smooth};
        ss.small_part = Plain{w.small};
        ss.small_norm = lp_norm(w.small, s.dim() / 2.0);
        ss.small_norm_kind = s.dim() == 3 ? "L^{3/2}" : "L^1";
    } else {
        const DivForm& d = std::get<DivForm>(q.form);
        double r = support_radius(d.g2);
        for (auto& c : d.g1) r = std::max(r, support_radius(c));
        double r_in = std::min(r, 0.95);
        DivForm sm, sl;
        for (auto& c : d.g1) {
            auto w = split_field(c, cutoff, window, r_in);
            sm.g1.push_back(w.smooth);
            sl.g1.push_back(w.small);
        }
        auto w = split_field(d.g2, cutoff, window, r_in);
        sm.g2 = w.smooth;
        sl.g2 = w.small;
        ss.small_norm = sup_of(sl.g1) + lp_norm(sl.g2, s.dim());
        ss.small_norm_kind = s.dim() == 3 ? "Linf(g1)+L^3(g2)" : "Linf(g1)+L^2(g2)";
        ss.smooth_part = std::move(sm);
        ss.small_part = std::move(sl);
    }
    PotentialSplit out = q;
    out.smooth_small = std::move(ss);
    return out;
}

double h1_ball_norm(const SpectralField& F, double r)
{
    if (r > F.spec.L() / 2) throw Error("h1_ball_norm: ball escapes the box");
    return h1_from_spectral(F, r);
}

CgoSolution born_solve(const PotentialSplit& split, const ComplexFrequency& xi, const BornOptions& opts)
{
    if (opts.max_iter < 1) throw Error("born_solve: max_iter must be at least 1");
    if (!(xi.abs() > 2)) throw Error("born_solve: |xi| > 2 required");
    bool supported = true;
    if (auto* p = std::get_if<Plain>(&split.form)) {
        supported = supported_in_ball(p->q, 1.0);
    } else {
        const DivForm& d = std::get<DivForm>(split.form);
        supported = supported_in_ball(d.g2, 1.0);
        for (auto& c : d.g1) supported = supported && supported_in_ball(c, 1.0);
    }
    if (!supported) throw Error("born_solve: potential must be supported in B_1");
    GridField q = split.potential();
    const GridSpec& s = q.spec;
    KernelOptions ko;
    ko.delta_floor = opts.delta_floor;
    KernelMultiplier K(xi, s, ko);

    // T(w) = K * (q + q w), returned in both representations.
    auto step = [&](const GridField& w, SpectralField& W) {
        W = K.apply(to_spectral(q + q.times(w)));
        return from_spectral(W);
    };
    auto diff_norm = [&](const SpectralField& A, const SpectralField& B) {
        SpectralField D = A;
        for (std::size_t i = 0; i < D.coeffs.size(); ++i) D.coeffs[i] -= B.coeffs[i];
        return h1_ball_norm(D, opts.norm_radius);
    };

    CgoSolution sol;
    sol.xi = xi;
    sol.kernel = K.report();
    SpectralField Kq = K.apply(to_spectral(q));
    sol.reference_norm = h1_ball_norm(Kq, opts.norm_radius);
    const double target = opts.tol * sol.reference_norm;

    GridField w(s);
    SpectralField W(s);
    if (opts.start == BornStart::KernelOfQ) {
        W = Kq;
        w = from_spectral(W);
    }

    // The residual of w_n is the increment of step n + 1, so the loop may run one
    // step past max_iter to measure it; that step is not kept.
    int streak = 0;
    for (int n = 1; n <= opts.max_iter + 1; ++n) {
        SpectralField Wn;
        GridField wn = step(w, Wn);
        double inc = diff_norm(Wn, W);
        if (!finite_field(wn) || !std::isfinite(inc))
            throw BornError("born_solve: non-finite iterate at step " + std::to_string(n), sol.trace);
        if (!sol.trace.empty()) sol.trace.back().residual = inc;
        if (n >= 2 && inc <= target) {
            sol.converged = true;
            break;
        }
        if (n > opts.max_iter) break;
        IterationRecord rec;
        rec.step = n;
        rec.increment = inc;
        rec.ratio = std::numeric_limits<double>::quiet_NaN();
        rec.residual = std::numeric_limits<double>::quiet_NaN();
        if (!sol.trace.empty()) {
            double p = sol.trace.back().increment;
            rec.ratio = p > 0 ? inc / p : (inc > 0 ? std::numeric_limits<double>::infinity() : 0.0);
        }
        sol.trace.push_back(rec);
        w = std::move(wn);
        W = std::move(Wn);
        sol.iterations = n;
        streak = (n >= 2 && rec.ratio >= 1.0) ? streak + 1 : 0;
        if (streak >= opts.divergence_patience) {
            SpectralField Wr;
            if (finite_field(step(w, Wr))) sol.trace.back().residual = diff_norm(Wr, W);
            break;
        }
    }
    sol.w = std::move(w);
    return sol;
}

AssembledSolution assemble_solution(const GridField& w, const ComplexFrequency& xi, double radius)
{
    const GridSpec& s = w.spec;
    AssembledSolution out{GridField(s), false};
    const double limit = std::log(DBL_MAX) - 1;
    double r2 = radius * radius;
    for (std::size_t i = 0; i < s.size(); ++i) {
        Vec3 x = s.point(i);
        cplx e(0.5 * dot(xi.re, x), 0.5 * dot(xi.im, x));
        if (dot(x, x) > r2) {
            if (std::abs(e.real()) > limit) out.clamped = true;
            continue;
        }
        out.v.values[i] = (1.0 + w.values[i]) * std::exp(e);
    }
    return out;
}

double corrector_residual(const GridField& q, const GridField& w, const ComplexFrequency& xi, double radius)
{
    const GridSpec& s = q.spec;
    SpectralField Wh = to_spectral(w);
    SpectralField R = to_spectral(q + q.times(w));
    double floor = 1e-10 * xi.abs() * xi.abs();
    for (std::size_t i = 0; i < R.coeffs.size(); ++i) {
        cplx p = symbol(xi, s.frequency(i));
        R.coeffs[i] = std::abs(p) < floor ? cplx(0.0) : p * Wh.coeffs[i] - R.coeffs[i];
    }
    GridField r = from_spectral(R);
    double num = norm(r, norms::L2Ball{radius}), den = norm(q, norms::L2Ball{radius});
    return den > 0 ? num / den : num;
}

ComplexFrequency frame_xi(const Frame& f, double s, int dim)
{
    switch (f.variant) {
        case XiVariant::Xi1: return make_xi1(s, f.sigma1, f.sigma2, dim);
        case XiVariant::Xi2: return make_xi2(s, f.sigma1, f.sigma2, f.sigma3);
        default: throw Error("frame: Raw variant has no frame construction");
    }
}

std::vector<ScanRow> vanishing_scan(const PotentialSplit& q, const std::vector<double>& s_list, const Frame& frame,
                                    ScanNorm second, const BornOptions& opts)
{
    int dim = q.spec().dim();
    if (second == ScanNorm::Lcritical && dim < 3) throw Error("vanishing_scan: critical Lebesgue norm needs dim >= 3");
    std::vector<ScanRow> rows;
    for (double s : s_list) {
        CgoSolution sol = born_solve(q, frame_xi(frame, s, dim), opts);
        ScanRow row;
        row.s = s;
        row.converged = sol.converged;
        row.iterations = sol.iterations;
        row.last_ratio = sol.trace.back().ratio;
        row.l2 = norm(sol.w, norms::L2Ball{opts.norm_radius});
        row.second = second == ScanNorm::H1 ? norm(sol.w, norms::HkBall{1, opts.norm_radius})
                                            : norm(sol.w, norms::LpBall{2.0 * dim / (dim - 2), opts.norm_radius});
        rows.push_back(row);
    }
    return rows;
}

}  // namespace cgolab
