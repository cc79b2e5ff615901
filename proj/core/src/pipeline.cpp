#include "cgolab/pipeline.hpp"

#include "cgolab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace cgolab {

namespace {

constexpr double kQuadRadius = 2.0;

bool vanishes_outside(const GridField& f, double r)
{
    for (std::size_t i = 0; i < f.values.size(); ++i)
        if (f.values[i] != cplx(0) && norm(f.spec.point(i)) > r + 1e-12) return false;
    return true;
}

bool supported_in(const PotentialSplit& q, double r)
{
    if (const auto* p = std::get_if<Plain>(&q.form)) return vanishes_outside(p->q, r);
    const auto& d = std::get<DivForm>(q.form);
    for (const auto& g : d.g1)
        if (!vanishes_outside(g, r)) return false;
    return vanishes_outside(d.g2, r);
}

int dyadic_shell(double s) { return static_cast<int>(std::floor(std::log2(s) + 1e-12)); }

// Least squares y = a + b x; returns a.
double intercept(const std::vector<double>& x, const std::vector<double>& y)
{
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
    mx /= x.size();
    my /= y.size();
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sxx += (x[i] - mx) * (x[i] - mx), sxy += (x[i] - mx) * (y[i] - my);
    double b = sxx > 0 ? sxy / sxx : 0.0;
    return my - b * mx;
}

}  // namespace

const char* theorem_name(Theorem t)
{
    switch (t) {
    case Theorem::T1: return "t1";
    case Theorem::T2: return "t2";
    case Theorem::T3: return "t3";
    }
    return "?";
}

Theorem parse_theorem(const std::string& name)
{
    if (name == "t1" || name == "T1") return Theorem::T1;
    if (name == "t2" || name == "T2") return Theorem::T2;
    if (name == "t3" || name == "T3") return Theorem::T3;
    throw Error("unknown theorem '" + name + "' (expected t1, t2 or t3)");
}

std::vector<Vec3> design_directions()
{
    // z-y-z Euler rotation with fixed irrational-looking angles
    const double a = 0.4, b = 0.9, c = 1.3;
    auto rz = [](double t, const Vec3& v) { return Vec3{std::cos(t) * v[0] - std::sin(t) * v[1], std::sin(t) * v[0] + std::cos(t) * v[1], v[2]}; };
    auto ry = [](double t, const Vec3& v) { return Vec3{std::cos(t) * v[0] + std::sin(t) * v[2], v[1], -std::sin(t) * v[0] + std::cos(t) * v[2]}; };
    std::vector<Vec3> out;
    for (int i = -1; i <= 1; ++i)
        for (int j = -1; j <= 1; ++j)
            for (int k = -1; k <= 1; ++k) {
                if (!i && !j && !k) continue;
                Vec3 v = normalized(Vec3{double(i), double(j), double(k)});
                out.push_back(rz(a, ry(b, rz(c, v))));
            }
    return out;
}

Frame frame_about(const Vec3& sigma0, std::uint64_t seed, std::uint64_t stream)
{
    if (std::abs(norm(sigma0) - 1) > 1e-9) throw Error("frame_about: sigma0 must be a unit vector");
    int axis = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(sigma0[i]) < std::abs(sigma0[axis])) axis = i;
    Vec3 e{};
    e[axis] = 1;
    Vec3 u = normalized(e - dot(e, sigma0) * sigma0);
    Vec3 v = cross(sigma0, u);
    std::mt19937_64 rng(stream_seed(seed, stream));
    double phi = 2 * M_PI * std::uniform_real_distribution<double>(0, 1)(rng);
    Frame f;
    f.sigma3 = sigma0;
    f.sigma1 = std::cos(phi) * u + std::sin(phi) * v;
    f.sigma2 = cross(sigma0, f.sigma1);
    return f;
}

double moment(const GridField& qdiff, const Vec3& sigma)
{
    const GridSpec& s = qdiff.spec;
    std::vector<double> t;
    t.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        double re = qdiff.values[i].real();
        if (re == 0) continue;
        Vec3 x = s.point(i);
        if (norm(x) >= kQuadRadius) continue;
        t.push_back(re * std::exp(0.5 * dot(sigma, x)));
    }
    return std::pow(s.h(), s.dim()) * pairwise_sum(t);
}

MomentTable compute_moments(const GridField& qdiff, const std::vector<Vec3>& directions)
{
    MomentTable m;
    m.directions = directions;
    m.values.resize(directions.size());
    parallel_for(directions.size(), [&](std::size_t i) { m.values[i] = moment(qdiff, directions[i]); });
    for (double v : m.values) m.max_abs = std::max(m.max_abs, std::abs(v));
    return m;
}

ShellSelection uniqueness_shells(const PotentialSplit& q1, const PotentialSplit& q2, double s_max)
{
    ShellSelection a = shell_select(to_spectral(q1.potential()));
    ShellSelection b = shell_select(to_spectral(q2.potential()));
    std::vector<double> seq = a.profile.a;
    for (std::size_t i = 0; i < seq.size(); ++i) seq[i] += b.profile.a[i];
    int top = a.profile.shell(seq.size() - 1);
    for (int n = top + 1; n <= dyadic_shell(s_max); ++n) seq.push_back(0.0);
    return select_shells(ShellProfile::from_sequence(std::move(seq), a.profile.n_lo));
}

UniquenessRun run_uniqueness(Theorem theorem, const PotentialSplit& q1, const PotentialSplit& q2,
                             const std::vector<double>& s_list, const std::vector<Vec3>& sigma0_list,
                             std::uint64_t seed, const UniquenessOptions& opts)
{
    const GridSpec& spec = q1.spec();
    if (spec != q2.spec()) throw Error("run_uniqueness: q1 and q2 live on different grids");
    if (spec.dim() != 3) throw Error("run_uniqueness: d = 3 only");
    if (s_list.empty() || sigma0_list.empty()) throw Error("run_uniqueness: empty schedule");
    for (double s : s_list)
        if (!(s > 0)) throw Error("run_uniqueness: s must be positive");
    for (const auto& d : sigma0_list)
        if (std::abs(norm(d) - 1) > 1e-9) throw Error("run_uniqueness: directions must be unit vectors");
    if (!supported_in(q1, 0.5) || !supported_in(q2, 0.5))
        throw Error("run_uniqueness: potentials must vanish outside B_{1/2}");

    UniquenessRun run;
    run.theorem = theorem;
    run.seed = seed;
    run.s_list = s_list;
    std::sort(run.s_list.begin(), run.s_list.end());

    if (theorem == Theorem::T3) {
        ShellSelection sel = uniqueness_shells(q1, q2, run.s_list.back());
        run.selected_shells = sel.selected;
    }

    GridField qdiff = q1.potential();
    qdiff -= q2.potential();
    for (auto& v : qdiff.values) v = v.real();

    SpectralField Q1, Q2;
    if (theorem == Theorem::T1) {
        Q1 = to_spectral(q1.potential());
        Q2 = to_spectral(q2.potential());
    }

    const std::size_t ns = run.s_list.size();
    run.rows.resize(sigma0_list.size() * ns);
    for (std::size_t d = 0; d < sigma0_list.size(); ++d)
        for (std::size_t j = 0; j < ns; ++j) {
            auto& r = run.rows[d * ns + j];
            r.direction = d;
            r.s_nominal = r.s = run.s_list[j];
            if (theorem == Theorem::T3)
                r.shell_selected = std::find(run.selected_shells.begin(), run.selected_shells.end(),
                                             dyadic_shell(r.s)) != run.selected_shells.end();
        }

    const double hd = std::pow(spec.h(), spec.dim());
    parallel_for(run.rows.size(), [&](std::size_t i) {
        UniquenessRow& r = run.rows[i];
        const Vec3& sigma0 = sigma0_list[r.direction];
        if (theorem == Theorem::T1) {
            FrameChoice c = select_good_frame(Q1, Q2, r.s_nominal, sigma0, opts.epsilon,
                                              stream_seed(seed, 0x7100 + i), opts.frame_draws, opts.frame_power);
            r.s = c.frame.s;
            r.frame.sigma1 = c.frame.sigma1;
            r.frame.sigma2 = c.frame.sigma2;
            r.frame.sigma3 = c.frame.sigma3;
        } else {
            r.frame = frame_about(sigma0, seed, r.direction);
        }
        ComplexFrequency x1 = make_xi1(r.s, r.frame.sigma1, r.frame.sigma2, 3);
        ComplexFrequency x2 = make_xi2(r.s, r.frame.sigma1, r.frame.sigma2, r.frame.sigma3);
        r.sigma_s = x1.re + x2.re;

        auto solve = [&](const PotentialSplit& q, const ComplexFrequency& xi, bool& conv, int& iters, double& wn) {
            try {
                CgoSolution sol = born_solve(q, xi, opts.born);
                conv = sol.converged;
                iters = sol.iterations;
                wn = h1_ball_norm(to_spectral(sol.w), kQuadRadius);
                return sol.w;
            } catch (const BornError& e) {
                conv = false;
                iters = static_cast<int>(e.trace().size());
                wn = std::numeric_limits<double>::quiet_NaN();
                return GridField(spec);
            }
        };
        GridField w1 = solve(q1, x1, r.converged1, r.iterations1, r.w1_norm);
        GridField w2 = solve(q2, x2, r.converged2, r.iterations2, r.w2_norm);

        std::vector<double> re, im;
        for (std::size_t k = 0; k < spec.size(); ++k) {
            double qd = qdiff.values[k].real();
            if (qd == 0) continue;
            Vec3 x = spec.point(k);
            if (norm(x) >= kQuadRadius) continue;
            cplx t = qd * (1.0 + w1.values[k]) * (1.0 + w2.values[k]) * std::exp(0.5 * dot(r.sigma_s, x));
            re.push_back(t.real());
            im.push_back(t.imag());
        }
        r.value = hd * cplx(pairwise_sum(re), pairwise_sum(im));
        r.moment_ref = moment(qdiff, r.frame.sigma3);
        r.gap = std::abs(r.value - r.moment_ref);
        r.used = r.converged1 && r.converged2;
    });

    run.moments = compute_moments(qdiff, sigma0_list);
    for (std::size_t d = 0; d < sigma0_list.size(); ++d) {
        DirectionLimit L;
        L.sigma0 = sigma0_list[d];
        L.moment = run.moments.values[d];
        std::vector<double> x, yr, yi, gs, gv;
        for (std::size_t j = 0; j < ns; ++j) {
            const auto& r = run.rows[d * ns + j];
            if (!r.shell_selected) continue;
            if (!r.used) {
                ++L.rows_excluded;
                continue;
            }
            x.push_back(1.0 / r.s);
            yr.push_back(r.value.real());
            yi.push_back(r.value.imag());
            L.last_gap = r.gap;
            if (r.gap > 0) gs.push_back(r.s), gv.push_back(r.gap);
        }
        L.rows_used = static_cast<int>(x.size());
        run.excluded += L.rows_excluded;
        if (L.rows_used < 3)
            throw Error("run_uniqueness: direction " + std::to_string(d) + " has " + std::to_string(L.rows_used) +
                        " converged rows (need 3)");
        L.limit = cplx(intercept(x, yr), intercept(x, yi));
        L.gap_slope = gs.size() >= 2 ? loglog_slope(gs, gv) : std::numeric_limits<double>::quiet_NaN();
        run.limits.push_back(L);
    }
    return run;
}

MomentInversionReport moment_inversion_check(const MomentTable& moments, const GridField& qdiff)
{
    MomentInversionReport r;
    r.qdiff_l2 = lp_norm(qdiff, 2.0);
    r.max_abs = moments.max_abs;
    r.min_abs = moments.values.empty() ? 0.0 : std::abs(moments.values[0]);
    for (double v : moments.values) r.min_abs = std::min(r.min_abs, std::abs(v));
    r.margin = r.qdiff_l2 > 0 ? r.max_abs / r.qdiff_l2 : 0.0;

    bool pos = true, neg = true;
    std::vector<double> mass;
    const GridSpec& s = qdiff.spec;
    for (std::size_t i = 0; i < s.size(); ++i) {
        double v = qdiff.values[i].real();
        if (v > 0) neg = false;
        if (v < 0) pos = false;
        if (norm(s.point(i)) <= 1) mass.push_back(v);
    }
    r.mass_in_b1 = std::pow(s.h(), s.dim()) * pairwise_sum(mass);
    r.one_signed = (pos || neg) && r.qdiff_l2 > 0;
    if (r.one_signed && vanishes_outside(qdiff, 1.0)) r.positivity_bound = std::exp(-0.5) * std::abs(r.mass_in_b1);
    return r;
}

double moment_correlation(const std::vector<MomentInversionReport>& reports)
{
    const std::size_t n = reports.size();
    if (n < 2) throw Error("moment_correlation: need at least two reports");
    double mx = 0, my = 0;
    for (const auto& r : reports) mx += r.qdiff_l2, my += r.max_abs;
    mx /= n;
    my /= n;
    double sxx = 0, syy = 0, sxy = 0;
    for (const auto& r : reports) {
        sxx += (r.qdiff_l2 - mx) * (r.qdiff_l2 - mx);
        syy += (r.max_abs - my) * (r.max_abs - my);
        sxy += (r.qdiff_l2 - mx) * (r.max_abs - my);
    }
    if (sxx == 0 || syy == 0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace cgolab
