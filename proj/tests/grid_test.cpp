#include "cgolab/grid.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace cgolab;

namespace {

GridField random_field(const GridSpec& s, unsigned seed, bool real = false)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N(0, 1);
    GridField f(s);
    for (auto& v : f.values) v = real ? cplx(N(rng), 0) : cplx(N(rng), N(rng));
    return f;
}

// Direct evaluation of h^d sum f(x) e^{-ik.x}.
cplx direct_coeff(const GridField& f, const Vec3& k)
{
    cplx acc = 0;
    for (std::size_t i = 0; i < f.values.size(); ++i)
        acc += f.values[i] * std::exp(cplx(0, -dot(k, f.spec.point(i))));
    return acc * std::pow(f.spec.h(), f.spec.dim());
}

double rel_l2(const std::vector<cplx>& a, const std::vector<cplx>& b)
{
    double num = 0, den = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += std::norm(a[i] - b[i]);
        den += std::norm(b[i]);
    }
    return std::sqrt(num / den);
}

}  // namespace

TEST(GridSpec, RejectsBadParameters)
{
    EXPECT_THROW(GridSpec(4, 16, 1.0), Error);
    EXPECT_THROW(GridSpec(3, 12, 1.0), Error);
    EXPECT_THROW(GridSpec(3, 4, 1.0), Error);
    EXPECT_THROW(GridSpec(2, 16, 0.0), Error);
    GridSpec s(3, 16, 2.0);
    EXPECT_EQ(s.h() * s.n(), 2 * s.L());
}

TEST(Spectral, ZeroFieldHasZeroCoefficients)
{
    GridSpec s(2, 16, 1.0);
    auto F = to_spectral(GridField(s));
    for (auto c : F.coeffs) EXPECT_EQ(c, cplx(0));
}

TEST(Spectral, SingleModeGivesBoxVolume)
{
    GridSpec s(3, 16, 2.0);
    std::size_t target = s.flatten({3, 14, 5});
    Vec3 k0 = s.frequency(target);
    auto f = GridField::sample(s, [&](const Vec3& x) { return std::exp(cplx(0, dot(k0, x))); });
    auto F = to_spectral(f);
    double vol = std::pow(2 * s.L(), 3);
    for (std::size_t i = 0; i < F.coeffs.size(); ++i) {
        cplx expect = i == target ? cplx(vol) : cplx(0);
        EXPECT_NEAR(std::abs(F.coeffs[i] - expect), 0.0, 1e-12 * vol);
    }
}

TEST(Spectral, MatchesDirectSummationAndAnalyticGaussian)
{
    GridSpec s(3, 64, 2.0);
    const double w = 0.2;
    auto f = GridField::sample(s, [&](const Vec3& x) { return std::exp(-dot(x, x) / (2 * w * w)); });
    auto F = to_spectral(f);
    std::mt19937_64 rng(7);
    double kmax = M_PI / (2 * s.h());
    std::uniform_int_distribution<int> J(0, s.n() - 1);
    int checked = 0;
    while (checked < 20) {
        std::size_t idx = s.flatten({J(rng), J(rng), J(rng)});
        Vec3 k = s.frequency(idx);
        if (norm(k) > kmax) continue;
        cplx direct = direct_coeff(f, k);
        double analytic = std::pow(2 * M_PI * w * w, 1.5) * std::exp(-w * w * dot(k, k) / 2);
        EXPECT_LE(std::abs(F.coeffs[idx] - direct), 1e-10 * std::abs(direct) + 1e-14);
        EXPECT_LE(std::abs(F.coeffs[idx] - analytic), 1e-6 * analytic + 1e-14);
        ++checked;
    }
}

TEST(Spectral, RoundTripIsIdentity)
{
    for (int n : {16, 32, 64}) {
        for (int dim : {2, 3}) {
            GridSpec s(dim, n, 3.0);
            auto f = random_field(s, 11 + n + dim);
            auto g = from_spectral(to_spectral(f));
            EXPECT_LE(rel_l2(g.values, f.values), 1e-12) << "n=" << n << " dim=" << dim;
        }
    }
}

TEST(Spectral, Parseval)
{
    for (unsigned seed = 0; seed < 10; ++seed) {
        GridSpec s(seed % 2 ? 2 : 3, 16, 1.5);
        auto f = random_field(s, seed);
        auto F = to_spectral(f);
        double lhs = 0, rhs = 0;
        for (auto v : f.values) lhs += std::norm(v);
        for (auto v : F.coeffs) rhs += std::norm(v);
        lhs *= std::pow(s.h(), s.dim());
        rhs *= std::pow(2 * s.L(), -s.dim());
        EXPECT_NEAR(lhs / rhs, 1.0, 1e-10);
    }
}

TEST(Norms, HMinus1OfSingleMode)
{
    GridSpec s(3, 16, 2.0);
    Vec3 k0 = s.frequency(s.flatten({2, 1, 15}));
    cplx c(0.7, -1.1);
    auto f = GridField::sample(s, [&](const Vec3& x) { return c * std::exp(cplx(0, dot(k0, x))); });
    double expect = std::abs(c) / std::sqrt(1 + dot(k0, k0)) * std::pow(2 * s.L(), 1.5);
    EXPECT_NEAR(norm(f, norms::HMinus1{}), expect, 1e-10 * expect);
    double expect_half = std::abs(c) * std::pow(1 + dot(k0, k0), -0.25) * std::pow(2 * s.L(), 1.5);
    EXPECT_NEAR(norm(f, norms::HMinusHalf{}), expect_half, 1e-10 * expect_half);
}

TEST(Norms, ConstantOnUnitBall)
{
    GridSpec s(3, 64, 4.0);
    GridField one = GridField::sample(s, [](const Vec3&) { return cplx(1); });
    double v = norm(one, norms::L2Ball{1.0});
    EXPECT_NEAR(v, std::sqrt(4 * M_PI / 3), 3 * s.h());
}

TEST(Norms, LpAgreesWithBallWhenSupported)
{
    GridSpec s(3, 32, 2.0);
    double r = s.L() / 2 - s.h();
    for (unsigned seed = 0; seed < 10; ++seed) {
        auto f = ball_restrict(random_field(s, 100 + seed, true), r);
        EXPECT_NEAR(norm(f, norms::Lp{2}), norm(f, norms::L2Ball{r}), 1e-9 * norm(f, norms::Lp{2}));
    }
}

TEST(Norms, RejectsBallsThatEscapeTheBox)
{
    GridSpec s(2, 16, 2.0);
    GridField f(s);
    EXPECT_THROW(norm(f, norms::L2Ball{1.5}), Error);
    EXPECT_THROW(norm(f, norms::Lp{1.0}), Error);
    EXPECT_THROW(norm(f, norms::HkBall{3, 0.5}), Error);
    EXPECT_THROW(ball_restrict(f, 1.01), Error);
}

TEST(Norms, HkBallMonotoneInRadiusAndOrder)
{
    GridSpec s(3, 32, 4.0);
    auto f = GridField::sample(s, [](const Vec3& x) { return std::exp(-dot(x, x)) * std::cos(3 * x[0]); });
    double prev_r = 0;
    for (double r : {0.5, 1.0, 1.5, 2.0}) {
        double prev_k = 0;
        for (int k = 0; k <= 2; ++k) {
            double v = norm(f, norms::HkBall{k, r});
            EXPECT_GE(v, prev_k);
            prev_k = v;
        }
        double v0 = norm(f, norms::HkBall{1, r});
        EXPECT_GE(v0, prev_r);
        prev_r = v0;
    }
}

TEST(Norms, AbsolutelyHomogeneous)
{
    GridSpec s(3, 16, 4.0);
    auto f = ball_restrict(random_field(s, 5), 1.5);
    cplx c(-2.5, 1.25);
    GridField g = c * f;
    std::vector<NormKind> kinds = {norms::L2Ball{1.0}, norms::HkBall{1, 1.0}, norms::HkBall{2, 2.0},
                                   norms::HMinus1{},   norms::HMinusHalf{},    norms::Lp{1.5},
                                   norms::LpBall{6, 2.0}, norms::HkGlobal{2}};
    for (auto& k : kinds) {
        double a = norm(f, k), b = norm(g, k);
        EXPECT_NEAR(b, std::abs(c) * a, 1e-12 * b);
    }
}

TEST(BallRestrict, IndicatorIdempotenceAndNorm)
{
    GridSpec s(3, 16, 4.0);
    GridField one = GridField::sample(s, [](const Vec3&) { return cplx(1); });
    auto ind = ball_restrict(one, 1.0);
    for (std::size_t i = 0; i < ind.values.size(); ++i) {
        Vec3 x = s.point(i);
        EXPECT_EQ(ind.values[i], dot(x, x) <= 1.0 ? cplx(1) : cplx(0));
    }
    EXPECT_EQ(ball_restrict(ind, 1.0).values, ind.values);
    auto f = random_field(s, 3);
    EXPECT_DOUBLE_EQ(norm(ball_restrict(f, 1.0), norms::L2Ball{1.0}), norm(f, norms::L2Ball{1.0}));
}

TEST(Derivatives, SpectralLaplacianOfGaussian)
{
    GridSpec s(3, 64, 4.0);
    auto f = GridField::sample(s, [](const Vec3& x) { return std::exp(-4 * dot(x, x)); });
    auto lap = laplacian(f);
    auto div = divergence(gradient(f));
    double err = 0, err2 = 0;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        Vec3 x = s.point(i);
        double r2 = dot(x, x);
        double exact = (64 * r2 - 24) * std::exp(-4 * r2);
        err = std::max(err, std::abs(lap.values[i] - exact));
        err2 = std::max(err2, std::abs(div.values[i] - exact));
    }
    EXPECT_LT(err, 1e-10);
    EXPECT_LT(err2, 1e-10);
}

TEST(FieldIO, BinaryRoundTripAndHeader)
{
    GridSpec s(2, 16, 1.25);
    auto f = random_field(s, 9);
    std::stringstream ss;
    write_field(ss, f);
    EXPECT_EQ(ss.str().size(), 24 + 8 * s.size());
    auto g = read_field(ss);
    EXPECT_EQ(g.spec, s);
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        EXPECT_EQ(g.values[i].real(), static_cast<float>(f.values[i].real()));
        EXPECT_EQ(g.values[i].imag(), static_cast<float>(f.values[i].imag()));
    }
    std::string bad = ss.str();
    bad[0] = 7;
    std::stringstream sb(bad);
    EXPECT_THROW(read_field(sb), Error);
}

TEST(FieldIO, CsvHasHeaderAndOneRowPerPoint)
{
    GridSpec s(2, 8, 1.0);
    GridField f(s);
    std::stringstream ss;
    write_field_csv(ss, f);
    std::string line;
    std::getline(ss, line);
    EXPECT_EQ(line, "x0,x1,re,im\r");
    int rows = 0;
    while (std::getline(ss, line)) ++rows;
    EXPECT_EQ(rows, 64);
}

TEST(Interpolation, CubicIsExactOnLowModesToFourthOrder)
{
    GridSpec s(3, 32, 1.0);
    auto f = GridField::sample(s, [](const Vec3& x) { return std::cos(M_PI * x[0]) * std::sin(M_PI * x[1]) + x[2] * 0; });
    Vec3 p{0.123, -0.377, 0.5};
    double exact = std::cos(M_PI * p[0]) * std::sin(M_PI * p[1]);
    EXPECT_NEAR(interpolate_real(f, p), exact, 1e-4);
}
