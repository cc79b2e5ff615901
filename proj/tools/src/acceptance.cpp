#include "cgolab_cli/acceptance.hpp"

#include "cgolab/averaging.hpp"
#include "cgolab/dtn.hpp"
#include "cgolab/estimates.hpp"
#include "cgolab/pipeline.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

namespace cgolab::cli {

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> body;
};

Frame generic_frame()
{
    Vec3 a = normalized(Vec3{0.48, -0.31, 0.82});
    Vec3 b = normalized(Vec3{0.2, 0.9, 0.0} - dot(Vec3{0.2, 0.9, 0.0}, a) * a);
    return Frame{a, b, cross(a, b), XiVariant::Xi1};
}

std::vector<ComplexFrequency> sweep(const Frame& f, const std::vector<double>& s_list)
{
    std::vector<ComplexFrequency> out;
    for (double s : s_list) out.push_back(frame_xi(f, s));
    return out;
}

std::vector<double> dyadic(double lo, double hi)
{
    std::vector<double> out;
    for (double s = lo; s <= hi; s *= 2) out.push_back(s);
    return out;
}

Frame random_frame(std::mt19937_64& rng)
{
    std::normal_distribution<double> N(0, 1);
    Vec3 a = normalized(Vec3{N(rng), N(rng), N(rng)});
    Vec3 t{N(rng), N(rng), N(rng)};
    Vec3 b = normalized(t - dot(t, a) * a);
    return Frame{a, b, cross(a, b), XiVariant::Xi1};
}

double spread(const std::vector<double>& v)
{
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi / *lo;
}

// Smooth bump that is 1 near the origin and vanishes outside B_r.
double window(const Vec3& x, double r) { return smooth_window(norm(x), 0.8 * r, r); }

Outcome multiplier_exactness()
{
    GridSpec g(3, 32, 4.0);
    std::mt19937_64 rng(stream_seed(1, 1));
    std::uniform_real_distribution<double> S(2, 40);
    std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
    KernelOptions opts;
    opts.enforce_support = false;
    double worst = 0;
    int done = 0;
    while (done < 100) {
        ComplexFrequency xi = frame_xi(random_frame(rng), S(rng));
        std::size_t idx = pick(rng);
        Vec3 k = g.frequency(idx);
        // off the characteristic set by a clear margin
        if (dist_to_charset(k, xi) < 0.5 * g.dk()) continue;
        SpectralField F(g);
        F.coeffs[idx] = 1.0;
        GridField mode = from_spectral(F);
        GridField W = apply_kernel(xi, mode, opts);
        cplx inv = 1.0 / (cplx(-dot(k, k), 0) + cplx(0, 1) * cplx(dot(xi.re, k), dot(xi.im, k)));
        double err = 0, ref = 0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            err = std::max(err, std::abs(W.values[i] - inv * mode.values[i]));
            ref = std::max(ref, std::abs(inv * mode.values[i]));
        }
        worst = std::max(worst, err / ref);
        ++done;
    }
    return {worst <= 1e-12, fmt::format("100 modes, max relative error {:.3e} (<= 1e-12)", worst)};
}

Outcome su1_decay()
{
    GridSpec g(3, 64, 4.0);
    ScanInput in;
    in.f = GridField::sample(g, [](const Vec3& x) { return cplx(std::exp(-dot(x, x) / (2 * 0.2 * 0.2)) * window(x, 1.0)); });
    std::vector<double> x, y;
    for (const auto& r : ratio_scan(make_case(CaseId::SU1), in, sweep(generic_frame(), dyadic(8, 512)))) {
        x.push_back(r.xi_abs);
        y.push_back(r.raw);
    }
    double m = loglog_slope(x, y);
    return {m >= -1.2 && m <= -0.8, fmt::format("slope {:.4f} over s = 8..512 (band [-1.2, -0.8])", m)};
}

// Gaussian white noise on B_0.9.
GridField white_noise(const GridSpec& g, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N(0, 1);
    return GridField::sample(g, [&](const Vec3& x) {
        double v = N(rng);
        return cplx(dot(x, x) <= 0.81 ? v : 0.0);
    });
}

Outcome su2_boundedness()
{
    GridSpec g(3, 64, 4.0);
    auto xis = sweep(generic_frame(), dyadic(8, 512));
    double worst = 0;
    std::string per;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        ScanInput in;
        in.f = white_noise(g, stream_seed(3, seed));
        std::vector<double> r;
        for (const auto& row : ratio_scan(make_case(CaseId::SU2), in, xis)) r.push_back(row.ratio);
        double sp = spread(r);
        worst = std::max(worst, sp);
        per += fmt::format("{}{:.1f}", seed ? "," : "", sp);
    }
    return {worst <= 4, fmt::format("max/min ratio per seed [{}], worst {:.2f} (<= 4)", per, worst)};
}

Outcome lem_separation()
{
    GridSpec g(3, 128, 4.0);
    std::mt19937_64 rng(5);
    GridField bump = GridField::sample(g, [](const Vec3& x) {
        double r2 = dot(x, x);
        return cplx(r2 < 0.81 ? std::exp(-1 / std::max(1e-12, 1 - r2 / 0.81)) : 0.0);
    });
    std::vector<GridField> rough, smooth;
    for (int c = 0; c < 3; ++c)
        rough.push_back(GridField::sample(g, [&](const Vec3& x) {
            double v = rng() & 1 ? 1.0 : -1.0;
            return cplx(dot(x, x) <= 0.64 ? v : 0.0);
        }));
    for (const auto& r : rough) {
        SpectralField G = to_spectral(r);
        for (std::size_t i = 0; i < G.coeffs.size(); ++i) {
            Vec3 k = g.frequency(i);
            G.coeffs[i] *= std::exp(-dot(k, k) * 0.15 * 0.15 / 2);
        }
        GridField sm = from_spectral(G);
        for (auto& v : sm.values) v = v.real();
        smooth.push_back(sm.times(bump));
    }
    GridField V = GridField::sample(g, [](const Vec3& x) { return cplx(std::exp(-dot(x, x) / 0.18)); });
    std::mt19937_64 fr(1);
    std::vector<Frame> frames;
    for (int f = 0; f < 3; ++f) frames.push_back(random_frame(fr));
    auto mean_slope = [&](CaseId id, const std::vector<GridField>& g1) {
        ScanInput in;
        in.q = PotentialSplit::div_form(g1, GridField(g));
        in.V = V;
        double acc = 0;
        for (const auto& f : frames) {
            std::vector<double> x, y;
            for (const auto& row : ratio_scan(make_case(id), in, sweep(f, {16, 32, 64}))) {
                x.push_back(row.xi_abs);
                y.push_back(row.raw);
            }
            acc += loglog_slope(x, y);
        }
        return acc / frames.size();
    };
    double l1 = mean_slope(CaseId::LEM1, rough), l2 = mean_slope(CaseId::LEM2, smooth);
    bool pass = l1 >= -0.2 && l1 <= 0.2 && l2 <= l1 - 0.7;
    return {pass, fmt::format("LEM1 slope {:.4f} (band [-0.2, 0.2]), LEM2 slope {:.4f} (<= {:.4f})", l1, l2, l1 - 0.7)};
}

Outcome born_vanishing()
{
    GridSpec g(3, 64, 4.0);
    GridField q = GridField::sample(g, [](const Vec3& x) {
        Vec3 c1{0.3, 0, 0}, c2{-0.2, 0.25, 0.1};
        double v = std::exp(-dot(x - c1, x - c1) / 0.05) + 0.5 * std::exp(-dot(x - c2, x - c2) / 0.02);
        return cplx(v * smooth_window(norm(x), 0.7, 0.9));
    });
    auto qs = PotentialSplit::plain(q);
    std::vector<double> sl{32, 64, 128, 256}, w;
    double max_ratio = 0;
    bool conv = true;
    for (double s : sl) {
        CgoSolution sol = born_solve(qs, frame_xi(generic_frame(), s));
        conv = conv && sol.converged;
        for (const auto& r : sol.trace)
            if (std::isfinite(r.ratio)) max_ratio = std::max(max_ratio, r.ratio);
        w.push_back(h1_ball_norm(to_spectral(sol.w), 2.0));
    }
    bool mono = true;
    for (std::size_t i = 1; i < w.size(); ++i) mono = mono && w[i] < w[i - 1];
    double m = loglog_slope(sl, w);
    bool pass = conv && max_ratio <= 0.75 && mono && m <= -0.8;
    return {pass, fmt::format("converged {}, max step ratio {:.4f} (<= 0.75), |w|_H1(B2) = {:.3e} .. {:.3e}, "
                              "monotone {}, slope {:.4f} (<= -0.8)",
                              conv, max_ratio, w.front(), w.back(), mono, m)};
}

Outcome krs_uniformity()
{
    GridSpec g(3, 64, 4.0);
    auto xis = sweep(generic_frame(), dyadic(8, 256));
    double worst = 0;
    std::string per;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        std::mt19937_64 rng(stream_seed(6, seed));
        std::uniform_real_distribution<double> U(-0.3, 0.3);
        Vec3 c{U(rng), U(rng), U(rng)};
        // |x - c|^{-1.4} lies in L^{6/5} but not in L^2.
        double h = g.h();
        ScanInput in;
        in.f = GridField::sample(g, [&](const Vec3& x) {
            return cplx(dot(x, x) <= 0.81 ? std::pow(std::max(norm(x - c), 0.5 * h), -1.4) : 0.0);
        });
        std::vector<double> r;
        for (const auto& row : ratio_scan(make_case(CaseId::KRS), in, xis)) r.push_back(row.ratio);
        double sp = spread(r);
        worst = std::max(worst, sp);
        per += fmt::format("{}{:.1f}", seed ? "," : "", sp);
    }
    return {worst <= 4, fmt::format("max/min ratio per seed [{}], worst {:.2f} (<= 4)", per, worst)};
}

Outcome averaging_bound()
{
    bool pass = true;
    std::string parts;
    for (auto v : {XiVariant::Xi1, XiVariant::Xi2})
        for (double p : {1.0, 1.5}) {
            std::vector<double> C;
            std::size_t hits = 0, samples = 0;
            bool flagged = false;
            for (double R : {16.0, 32.0, 64.0})
                for (double k : {4.0, 16.0, 64.0, 256.0}) {
                    AvgEstimate e = avg_kernel_power(R, {k, 0, 0}, p, 100000, 1, v);
                    C.push_back(e.ratio);
                    hits += e.cap_hits;
                    samples += e.mc_samples;
                    flagged = flagged || e.flagged;
                }
            double sp = spread(C);
            pass = pass && sp <= 3 && !flagged;
            parts += fmt::format("{}{} p={}: C in [{:.3f}, {:.3f}] spread {:.2f}, cap hits {}/{}",
                                 parts.empty() ? "" : "; ", v == XiVariant::Xi1 ? "Xi1" : "Xi2", p,
                                 *std::min_element(C.begin(), C.end()), *std::max_element(C.begin(), C.end()), sp,
                                 hits, samples);
        }
    return {pass, parts + " (spread <= 3, no cell flagged)"};
}

Outcome energy_scaling()
{
    GridSpec g(3, 32, 4.0);
    // single shell |eta| in [4.5, 5.5]
    SpectralField F(g);
    for (std::size_t i = 0; i < F.coeffs.size(); ++i)
        if (std::abs(norm(g.frequency(i)) - 5.0) <= 0.5) F.coeffs[i] = 1.0;
    std::vector<double> Rs{16, 32, 64, 128}, E;
    for (double R : Rs) E.push_back(avg_energy_functional(R, F, 16, 1, XiVariant::Xi1).value);
    double m = loglog_slope(Rs, E);
    return {m >= -1.4 && m <= -0.6,
            fmt::format("E = {:.3e} .. {:.3e}, slope {:.4f} over R = 16..128 (band [-1.4, -0.6])", E.front(), E.back(), m)};
}

Outcome shell_selection()
{
    std::vector<double> a;
    for (int n = 1; n <= 20; ++n) a.push_back(std::ldexp(1.0, -n));
    ShellProfile p = ShellProfile::from_sequence(a);
    double exact_err = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double n = p.shell(i);
        double want = n * n * std::ldexp(1.0, -static_cast<int>(n));
        exact_err = std::max(exact_err, std::abs(p.nb(i) - want) / want);
    }
    std::mt19937_64 rng(stream_seed(9, 0));
    std::uniform_real_distribution<double> U(0, 1);
    double worst = 0;
    for (int t = 0; t < 20; ++t) {
        std::vector<double> r;
        for (int n = 1; n <= 20; ++n) r.push_back(U(rng) / (static_cast<double>(n) * n));
        double total = std::accumulate(r.begin(), r.end(), 0.0);
        worst = std::max(worst, select_shells(ShellProfile::from_sequence(r)).min_nb / total);
    }
    bool pass = exact_err <= 1e-14 && worst <= 0.2;
    return {pass, fmt::format("2^-n: max relative error {:.1e} (<= 1e-14); random: max min(n b_n)/sum a = {:.4f} (<= 0.2)",
                              exact_err, worst)};
}

double q1f(const Vec3& x) { return 3.0 * std::exp(-dot(x - Vec3{0.5, 0.5, 0.5}, x - Vec3{0.5, 0.5, 0.5}) / (2 * 0.12 * 0.12)); }
double q2f(const Vec3& x) { return -2.0 * std::exp(-dot(x - Vec3{0.45, 0.55, 0.5}, x - Vec3{0.45, 0.55, 0.5}) / (2 * 0.1 * 0.1)); }
double f1f(const Vec3& x) { return std::exp(0.8 * x[0] + 0.3 * x[1]) * std::cos(0.5 * x[2]); }
double f2f(const Vec3& x) { return std::exp(-0.5 * x[1]) * std::cos(0.9 * x[0]) + x[2]; }

Outcome dtn_identity()
{
    auto identity = [](int m, bool equal) {
        DomainMesh mesh(3, m);
        MeshField q1 = MeshField::sample(mesh, q1f), q2 = equal ? q1 : MeshField::sample(mesh, q2f);
        DirichletSolver S1(mesh, Schrodinger{q1}), S2(mesh, Schrodinger{q2});
        return integral_identity_residual(mesh, q1, q2, S1.solve(f1f), S2.solve(f2f));
    };
    double same = std::abs(identity(17, true).difference);
    double e17 = std::abs(identity(17, false).difference), e33 = std::abs(identity(33, false).difference);
    bool pass = same <= 1e-8 && e17 / e33 >= 3.5;
    return {pass, fmt::format("q1 = q2 residual {:.2e} (<= 1e-8); error {:.3e} (m=17) -> {:.3e} (m=33), ratio {:.3f} (>= 3.5)",
                              same, e17, e33, e17 / e33)};
}

Outcome boundary_probe_check()
{
    Vec3 zp{0, 0.5, 0.5};
    auto base = [](const Vec3& x) { return 1.0 + 0.3 * x[1] + 0.2 * std::sin(3 * x[2]); };
    double zero = 0;
    std::string rec;
    bool pass = true;
    for (int m : {17, 33}) {
        DomainMesh mesh(3, m);
        int mid = (m + 1) / 2;
        BoundaryNodeId z{0, mid, mid};
        auto g2 = MeshField::sample(mesh, base);
        auto g1 = MeshField::sample(mesh, [&](const Vec3& x) { return base(x) + 0.5 * smooth_window(norm(x - zp), 0.3, 0.6); });
        for (double v : boundary_probe(mesh, g2, g2, z, 4).values) zero = std::max(zero, std::abs(v));
        double lim = boundary_probe(mesh, g1, g2, z, 4).limit;
        pass = pass && std::abs(lim - 0.5) <= 0.05;
        rec += fmt::format("{}m={}: {:.4f}", rec.empty() ? "" : ", ", m, lim);
    }
    pass = pass && zero <= 1e-6;
    return {pass, fmt::format("zero difference max |value| {:.1e} (<= 1e-6); recovered jump {} (0.5 within 10%)", zero, rec)};
}

Outcome uniqueness_pipeline()
{
    GridSpec g(3, 64, 4.0);
    auto bump = [&](Vec3 c, double w) {
        return GridField::sample(g, [=](const Vec3& x) {
            return cplx(std::exp(-dot(x - c, x - c) / (2 * w * w)) * smooth_window(norm(x), 0.35, 0.5));
        });
    };
    GridField q2 = 0.5 * bump({0.05, -0.1, 0.0}, 0.12);
    GridField d = bump({0.1, -0.05, 0.08}, 0.15);
    d *= 0.3 / lp_norm(d, 2.0);
    GridField q1 = q2 + d;
    auto dirs = design_directions();
    UniquenessRun run = run_uniqueness(Theorem::T2, PotentialSplit::plain(q1), PotentialSplit::plain(q2), {32, 64, 128},
                                       dirs, 7);
    double worst = 0, min_m = INFINITY;
    int monotone = 0;
    bool ok = run.excluded == 0;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        const auto& r32 = run.rows[3 * i];
        const auto& r128 = run.rows[3 * i + 2];
        double M = std::abs(r128.moment_ref);
        min_m = std::min(min_m, M);
        worst = std::max(worst, r128.gap / M);
        if (r128.gap <= run.rows[3 * i + 1].gap && run.rows[3 * i + 1].gap <= r32.gap) ++monotone;
    }
    ok = ok && worst <= 0.1 && min_m >= 0.05;
    UniquenessRun same = run_uniqueness(Theorem::T2, PotentialSplit::plain(q2), PotentialSplit::plain(q2), {32, 64, 128},
                                        dirs, 7);
    double zero = 0;
    for (const auto& r : same.rows) zero = std::max(zero, std::abs(r.value));
    ok = ok && zero <= 1e-6 && same.excluded == 0;
    return {ok, fmt::format("|q1-q2|_L2 = {:.3f}; 26 directions, excluded {}; max |I-M|/|M| at s=128 {:.2e} (<= 0.1), "
                            "min |M| {:.4f} (>= 0.05); gap monotone in {}/26; q1 = q2 max |I| {:.1e} (<= 1e-6)",
                            lp_norm(d, 2.0), run.excluded, worst, min_m, monotone, zero)};
}

const std::vector<Criterion>& criteria()
{
    static const std::vector<Criterion> list{
        {1, "multiplier exactness", 10, multiplier_exactness},
        {2, "SU1 decay", 120, su1_decay},
        {3, "SU2 boundedness", 120, su2_boundedness},
        {4, "LEM1 vs LEM2 separation", 300, lem_separation},
        {5, "Born convergence and corrector vanishing", 600, born_vanishing},
        {6, "KRS uniformity", 300, krs_uniformity},
        {7, "averaging bound", 900, averaging_bound},
        {8, "averaged energy scaling", 900, energy_scaling},
        {9, "shell selection", 1, shell_selection},
        {10, "DtN and integral identity", 300, dtn_identity},
        {11, "boundary probe", 300, boundary_probe_check},
        {12, "uniqueness pipeline", 1800, uniqueness_pipeline},
    };
    return list;
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const std::vector<int>& only, std::ostream* log)
{
    std::vector<CriterionResult> out;
    for (const auto& c : criteria()) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        CriterionResult r;
        r.id = c.id;
        r.name = c.name;
        r.budget_seconds = c.budget_seconds;
        auto t0 = std::chrono::steady_clock::now();
        try {
            Outcome o = c.body();
            r.pass = o.pass;
            r.detail = o.detail;
        } catch (const std::exception& e) {
            r.pass = false;
            r.detail = std::string("error: ") + e.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (r.seconds > r.budget_seconds) {
            r.pass = false;
            r.detail += fmt::format("; over the {:.0f} s budget", r.budget_seconds);
        }
        if (log)
            *log << fmt::format("{} criterion {:2d} ({}) {:.1f}s: {}\n", r.pass ? "PASS" : "FAIL", r.id, r.name, r.seconds,
                                r.detail)
                 << std::flush;
        out.push_back(r);
    }
    return out;
}

}  // namespace cgolab::cli
