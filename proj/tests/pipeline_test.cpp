#include "cgolab/pipeline.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace cgolab;

namespace {

GridField bump(const GridSpec& s, const Vec3& c, double w, double amp, double r_in = 0.35, double r_out = 0.5)
{
    return GridField::sample(s, [=](const Vec3& x) {
        return cplx(amp * std::exp(-dot(x - c, x - c) / (2 * w * w)) * smooth_window(norm(x), r_in, r_out));
    });
}

std::vector<Vec3> first(std::size_t n)
{
    auto d = design_directions();
    d.resize(n);
    return d;
}

}  // namespace

TEST(Design, TwentySixGenericUnitDirections)
{
    auto d = design_directions();
    ASSERT_EQ(d.size(), 26u);
    for (std::size_t i = 0; i < d.size(); ++i) {
        EXPECT_NEAR(norm(d[i]), 1, 1e-14);
        for (double c : d[i]) EXPECT_LT(std::abs(c), 0.99);
        bool antipode = false;
        for (std::size_t j = 0; j < d.size(); ++j) {
            if (j != i) EXPECT_GT(norm(d[i] - d[j]), 0.5);
            antipode |= norm(d[i] + d[j]) < 1e-12;
        }
        EXPECT_TRUE(antipode);
    }
}

TEST(Design, FrameAboutDirection)
{
    Vec3 s0 = design_directions()[5];
    Frame f = frame_about(s0, 3, 11);
    EXPECT_EQ(f.sigma3, s0);
    EXPECT_NEAR(dot(f.sigma1, f.sigma1), 1, 1e-14);
    EXPECT_NEAR(dot(f.sigma2, f.sigma2), 1, 1e-14);
    EXPECT_NEAR(dot(f.sigma1, f.sigma2), 0, 1e-14);
    EXPECT_NEAR(dot(f.sigma1, s0), 0, 1e-14);
    EXPECT_NEAR(norm(cross(f.sigma1, f.sigma2) - s0), 0, 1e-14);
    Frame g = frame_about(s0, 3, 11), h = frame_about(s0, 3, 12);
    EXPECT_EQ(f.sigma1, g.sigma1);
    EXPECT_GT(norm(f.sigma1 - h.sigma1), 1e-6);
    EXPECT_THROW(frame_about({1, 1, 0}, 0, 0), Error);
}

TEST(Moments, GaussianClosedForm)
{
    // int A e^{-|x-c|^2/2w^2} e^{sigma.x/2} = A (2 pi w^2)^{3/2} e^{sigma.c/2 + w^2 |sigma|^2 / 8}
    GridSpec s(3, 64, 2.0);
    Vec3 c{0.1, -0.2, 0.05};
    double w = 0.15, A = 1.7;
    GridField q = GridField::sample(s, [&](const Vec3& x) { return cplx(A * std::exp(-dot(x - c, x - c) / (2 * w * w))); });
    for (const Vec3& sig : design_directions()) {
        double exact = A * std::pow(2 * M_PI * w * w, 1.5) * std::exp(0.5 * dot(sig, c) + w * w / 8);
        EXPECT_NEAR(moment(q, sig), exact, 1e-10 * exact);
    }
}

TEST(Moments, LinearInTheDifference)
{
    GridSpec s(3, 32, 2.0);
    GridField q = bump(s, {0.1, 0, 0}, 0.15, 1.0);
    GridField q2 = q;
    q2 *= 2.0;
    auto a = compute_moments(q, design_directions()), b = compute_moments(q2, design_directions());
    for (std::size_t i = 0; i < a.values.size(); ++i) EXPECT_NEAR(b.values[i], 2 * a.values[i], 1e-10 * std::abs(b.values[i]));
    EXPECT_NEAR(b.max_abs, 2 * a.max_abs, 1e-10 * b.max_abs);
}

TEST(MomentInversion, ZeroAndPositiveBump)
{
    GridSpec s(3, 32, 2.0);
    auto zero = moment_inversion_check(compute_moments(GridField(s), design_directions()), GridField(s));
    EXPECT_EQ(zero.max_abs, 0.0);
    EXPECT_EQ(zero.margin, 0.0);
    EXPECT_FALSE(zero.one_signed);

    GridField q = bump(s, {0.2, -0.1, 0.3}, 0.2, 1.0, 0.5, 0.9);
    double mass = 0;
    for (const auto& v : q.values) mass += v.real();
    q *= 1.0 / (mass * std::pow(s.h(), 3));
    auto m = compute_moments(q, design_directions());
    auto r = moment_inversion_check(m, q);
    EXPECT_TRUE(r.one_signed);
    EXPECT_NEAR(r.mass_in_b1, 1.0, 1e-12);
    EXPECT_NEAR(r.positivity_bound, std::exp(-0.5), 1e-12);
    for (double v : m.values) {
        EXPECT_GE(v, r.positivity_bound);
        EXPECT_GT(v, 0.6);
    }
    EXPECT_NEAR(r.min_abs, *std::min_element(m.values.begin(), m.values.end()), 0);
}

TEST(MomentInversion, SignChangingDifferencesAreSeen)
{
    GridSpec s(3, 32, 2.0);
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> U(-1, 1);
    std::vector<MomentInversionReport> reports;
    for (int t = 0; t < 20; ++t) {
        GridField q(s);
        for (int j = 0; j < 4; ++j) {
            Vec3 c{0.3 * U(rng), 0.3 * U(rng), 0.3 * U(rng)};
            q += bump(s, c, 0.1 + 0.05 * std::abs(U(rng)), U(rng), 0.6, 0.9);
        }
        auto r = moment_inversion_check(compute_moments(q, design_directions()), q);
        EXPECT_GT(r.max_abs, 1e-3 * r.qdiff_l2) << t;
        reports.push_back(r);
    }
    // scaled copies are perfectly correlated
    std::vector<MomentInversionReport> scaled;
    GridField q = bump(s, {0, 0.1, 0}, 0.15, 1.0);
    for (double a : {0.5, 1.0, 2.0, 3.0}) {
        GridField qa = q;
        qa *= a;
        scaled.push_back(moment_inversion_check(compute_moments(qa, design_directions()), qa));
    }
    EXPECT_NEAR(moment_correlation(scaled), 1.0, 1e-12);
    EXPECT_GE(moment_correlation(reports), -1.0);
    EXPECT_THROW(moment_correlation({reports[0]}), Error);
}

TEST(Uniqueness, EqualPotentialsGiveZero)
{
    GridSpec s(3, 64, 4.0);
    auto q = PotentialSplit::plain(bump(s, {0.05, 0, -0.1}, 0.15, 2.0));
    auto run = run_uniqueness(Theorem::T2, q, q, {32, 64, 128}, first(3), 1);
    ASSERT_EQ(run.rows.size(), 9u);
    for (const auto& r : run.rows) {
        EXPECT_TRUE(r.used);
        EXPECT_LE(std::abs(r.value), 1e-6);
    }
    EXPECT_EQ(run.moments.max_abs, 0.0);
    EXPECT_EQ(run.excluded, 0);
}

TEST(Uniqueness, T2GapDecreasesTowardsTheMoment)
{
    GridSpec s(3, 64, 4.0);
    GridField d = bump(s, {0, 0, 0}, 0.15, 1.0);
    d *= 0.3 / lp_norm(d, 2.0);
    auto run = run_uniqueness(Theorem::T2, PotentialSplit::plain(d), PotentialSplit::plain(GridField(s)), {32, 64, 128},
                              first(6), 4);
    for (std::size_t k = 0; k < run.limits.size(); ++k) {
        const UniquenessRow* r = &run.rows[3 * k];
        EXPECT_GT(r[0].gap, r[1].gap) << k;
        EXPECT_GT(r[1].gap, r[2].gap) << k;
        EXPECT_LE(r[2].gap, 0.1 * std::abs(r[2].moment_ref));
        EXPECT_EQ(r[0].frame.sigma3, run.limits[k].sigma0);
        EXPECT_NEAR(std::abs(run.limits[k].limit - run.limits[k].moment), 0, 1e-3 * run.limits[k].moment);
        // sigma_s -> sigma3
        EXPECT_LT(norm(r[2].sigma_s - r[2].frame.sigma3), norm(r[0].sigma_s - r[0].frame.sigma3));
    }
}

TEST(Uniqueness, T1FramesStayInTheCone)
{
    GridSpec s(3, 64, 4.0);
    auto q1 = PotentialSplit::plain(bump(s, {0.05, 0, 0}, 0.15, 2.0));
    auto q2 = PotentialSplit::plain(bump(s, {0, 0.05, 0}, 0.12, 1.0));
    UniquenessOptions o;
    o.frame_draws = 4000;
    auto run = run_uniqueness(Theorem::T1, q1, q2, {32, 64, 128}, first(1), 9, o);
    for (const auto& r : run.rows) {
        EXPECT_LE(norm(r.frame.sigma3 - run.limits[r.direction].sigma0), o.epsilon);
        EXPECT_GE(r.s, r.s_nominal);
        EXPECT_LE(r.s, 2 * r.s_nominal);
        EXPECT_LE(r.gap, 0.1 * std::abs(r.moment_ref));
    }
    auto again = run_uniqueness(Theorem::T1, q1, q2, {32, 64, 128}, first(1), 9, o);
    for (std::size_t i = 0; i < run.rows.size(); ++i) EXPECT_EQ(run.rows[i].value, again.rows[i].value);
}

TEST(Uniqueness, T3FitsOnlySelectedShells)
{
    GridSpec s(3, 64, 4.0);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> N;
    GridField rough(s);
    for (std::size_t i = 0; i < s.size(); ++i)
        rough.values[i] = 0.3 * N(rng) * smooth_window(norm(s.point(i)), 0.3, 0.5);
    auto q1 = PotentialSplit::plain(rough);
    auto q2 = PotentialSplit::plain(bump(s, {0, 0, 0}, 0.15, 0.5));
    std::vector<double> sl{8, 16, 32, 64, 128, 256};
    ShellSelection sel = uniqueness_shells(q1, q2, 256);
    std::string shells;
    for (int n : sel.selected) shells += std::to_string(n) + " ";
    SCOPED_TRACE("selected shells: " + shells);
    auto run = run_uniqueness(Theorem::T3, q1, q2, sl, first(1), 2);
    EXPECT_EQ(run.selected_shells, sel.selected);
    int fitted = 0;
    std::vector<double> w_sel, w_unsel;
    for (const auto& r : run.rows) {
        int n = static_cast<int>(std::floor(std::log2(r.s)));
        bool in = std::find(sel.selected.begin(), sel.selected.end(), n) != sel.selected.end();
        EXPECT_EQ(r.shell_selected, in);
        fitted += in && r.used;
        (in ? w_sel : w_unsel).push_back(r.w1_norm);
    }
    EXPECT_EQ(run.limits[0].rows_used, fitted);
    // the profile past the lattice band is empty, so the top shells are always selected
    EXPECT_NE(std::find(sel.selected.begin(), sel.selected.end(), 7), sel.selected.end());
    if (!w_unsel.empty()) {
        std::sort(w_unsel.begin(), w_unsel.end());
        double med = w_unsel[w_unsel.size() / 2];
        for (double w : w_sel) EXPECT_LE(w, 2 * med);
    }
}

TEST(Uniqueness, Errors)
{
    GridSpec s(3, 64, 4.0);
    auto ok = PotentialSplit::plain(bump(s, {0, 0, 0}, 0.15, 1.0));
    auto wide = PotentialSplit::plain(bump(s, {0, 0, 0}, 0.15, 1.0, 0.5, 0.8));
    auto dirs = first(1);
    EXPECT_THROW(run_uniqueness(Theorem::T2, wide, ok, {32, 64, 128}, dirs, 0), Error);
    EXPECT_THROW(run_uniqueness(Theorem::T2, ok, ok, {32, 64}, dirs, 0), Error);
    EXPECT_THROW(run_uniqueness(Theorem::T2, ok, ok, {}, dirs, 0), Error);
    EXPECT_THROW(run_uniqueness(Theorem::T2, ok, ok, {32, 64, 128}, {{1, 1, 1}}, 0), Error);
    auto other = PotentialSplit::plain(bump(GridSpec(3, 32, 4.0), {0, 0, 0}, 0.15, 1.0));
    EXPECT_THROW(run_uniqueness(Theorem::T2, ok, other, {32, 64, 128}, dirs, 0), Error);
    EXPECT_THROW(parse_theorem("t4"), Error);
    EXPECT_EQ(parse_theorem("T3"), Theorem::T3);
    EXPECT_STREQ(theorem_name(Theorem::T1), "t1");
}
