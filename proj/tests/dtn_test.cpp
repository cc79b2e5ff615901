#include "cgolab/cgo.hpp"
#include "cgolab/dtn.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace cgolab;

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b)
{
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double bump(const Vec3& x, const Vec3& c, double w) { return std::exp(-dot(x - c, x - c) / (2 * w * w)); }

double q1f(const Vec3& x) { return 3.0 * bump(x, {0.5, 0.5, 0.5}, 0.12); }
double q2f(const Vec3& x) { return -2.0 * bump(x, {0.45, 0.55, 0.5}, 0.1); }
double f1f(const Vec3& x) { return std::exp(0.8 * x[0] + 0.3 * x[1]) * std::cos(0.5 * x[2]); }
double f2f(const Vec3& x) { return std::exp(-0.5 * x[1]) * std::cos(0.9 * x[0]) + x[2]; }

IdentityReport identity_at(int m, FluxScheme scheme)
{
    DomainMesh mesh(3, m);
    MeshField q1 = MeshField::sample(mesh, q1f), q2 = MeshField::sample(mesh, q2f);
    DirichletSolver S1(mesh, Schrodinger{q1}), S2(mesh, Schrodinger{q2});
    return integral_identity_residual(mesh, q1, q2, S1.solve(f1f), S2.solve(f2f), scheme);
}

}  // namespace

TEST(Mesh, LayoutAndBoundaryNodes)
{
    DomainMesh m3(3, 5);
    EXPECT_EQ(m3.node_count(), 343u);
    EXPECT_EQ(m3.interior_count(), 125u);
    EXPECT_EQ(m3.boundary().size(), 150u);
    for (const auto& b : m3.boundary()) {
        EXPECT_NEAR(norm(b.normal), 1, 1e-15);
        Vec3 p = m3.point(b.node), p1 = m3.point(b.inner1);
        EXPECT_NEAR(norm(p - p1 + (-m3.h()) * b.normal), 0, 1e-15);
        EXPECT_TRUE(m3.is_interior(b.inner1));
    }
    std::size_t i = m3.boundary_index(BoundaryNodeId{3, 2, 4});
    EXPECT_EQ(m3.boundary()[i].face, 3);
    Vec3 p = m3.point(m3.boundary()[i].node);
    EXPECT_NEAR(p[1], 1.0, 1e-15);
    EXPECT_NEAR(p[0], 2 * m3.h(), 1e-15);
    EXPECT_NEAR(p[2], 4 * m3.h(), 1e-15);
    EXPECT_EQ(m3.boundary_index(p), i);
    EXPECT_THROW(m3.boundary_index(BoundaryNodeId{0, 0, 3}), Error);
    EXPECT_THROW(m3.boundary_index(BoundaryNodeId{6, 1, 1}), Error);
    EXPECT_THROW(m3.boundary_index(Vec3{0.5, 0.5, 0.5}), Error);
    EXPECT_EQ(DomainMesh(2, 7).boundary().size(), 28u);
    EXPECT_THROW(DomainMesh(3, 2), Error);
}

TEST(Dtn, LinearDataGivesExactNormalDerivative)
{
    for (int dim : {2, 3}) {
        DomainMesh mesh(dim, dim == 3 ? 5 : 9);
        Vec3 a{0.7, -1.3, dim == 3 ? 0.4 : 0.0};
        DtnMatrix L = assemble_dtn(mesh, Schrodinger{MeshField::constant(mesh, 0.0)});
        auto g = L.apply(boundary_values(mesh, [&](const Vec3& x) { return dot(a, x); }));
        for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(g[i], dot(a, mesh.boundary()[i].normal), 1e-9);
    }
}

TEST(Dtn, ConductivityScalingAndAgreementWithSchrodinger)
{
    DomainMesh mesh(3, 5);
    DtnMatrix one = assemble_dtn(mesh, Conductivity{MeshField::constant(mesh, 1.0)});
    DtnMatrix two = assemble_dtn(mesh, Conductivity{MeshField::constant(mesh, 2.0)});
    DtnMatrix sch = assemble_dtn(mesh, Schrodinger{MeshField::constant(mesh, 0.0)});
    double scale = 0;
    for (double v : one.values) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < one.values.size(); ++i) {
        EXPECT_NEAR(two.values[i], 2 * one.values[i], 1e-10 * scale);
        EXPECT_NEAR(sch.values[i], one.values[i], 1e-10 * scale);
    }
    EXPECT_EQ(one.kind, DtnKind::Conductivity);
    EXPECT_EQ(sch.kind, DtnKind::Schrodinger);
}

TEST(Dtn, VariationalFluxIsSelfAdjoint)
{
    DomainMesh mesh(3, 5);
    auto q = MeshField::sample(mesh, [](const Vec3& x) { return 4.0 * x[0] * x[1] + 1.0; });
    auto g = MeshField::sample(mesh, [](const Vec3& x) { return 1.0 + 0.5 * std::sin(3 * x[2]) * x[0]; });
    EXPECT_LE(asymmetry(assemble_dtn(mesh, Schrodinger{q}, FluxScheme::Variational)), 1e-8);
    EXPECT_LE(asymmetry(assemble_dtn(mesh, Conductivity{g}, FluxScheme::Variational)), 1e-8);
    DomainMesh m2(2, 15);
    auto q2 = MeshField::sample(m2, [](const Vec3& x) { return -3.0 + 5 * x[1]; });
    EXPECT_LE(asymmetry(assemble_dtn(m2, Schrodinger{q2}, FluxScheme::Variational)), 1e-8);
}

TEST(Dtn, MatrixActionMatchesDirectSolves)
{
    DomainMesh mesh(2, 11);
    auto q = MeshField::sample(mesh, [](const Vec3& x) { return 2.0 + x[0]; });
    DtnMatrix L = assemble_dtn(mesh, Schrodinger{q});
    DirichletSolver S(mesh, Schrodinger{q});
    auto f = [](const Vec3& x) { return std::sin(2 * x[0]) + x[1] * x[1]; };
    auto g = [](const Vec3& x) { return std::exp(x[1]) * x[0]; };
    auto h = [&](const Vec3& x) { return 2.5 * f(x) - 0.7 * g(x); };
    auto direct = S.flux(S.solve(h));
    auto viaL = L.apply(boundary_values(mesh, h));
    auto lin = L.apply(boundary_values(mesh, f));
    auto lg = L.apply(boundary_values(mesh, g));
    for (std::size_t i = 0; i < lin.size(); ++i) lin[i] = 2.5 * lin[i] - 0.7 * lg[i];
    EXPECT_LE(max_abs_diff(direct, viaL), 1e-9);
    EXPECT_LE(max_abs_diff(lin, viaL), 1e-9);
}

TEST(Dtn, HarmonicFluxConvergesAtSecondOrder)
{
    auto u = [](const Vec3& x) { return x[0] * x[0] * x[0] - 3 * x[0] * x[1] * x[1] + std::exp(x[1]) * std::cos(x[2]); };
    auto grad = [](const Vec3& x) {
        return Vec3{3 * x[0] * x[0] - 3 * x[1] * x[1], -6 * x[0] * x[1] + std::exp(x[1]) * std::cos(x[2]),
                    -std::exp(x[1]) * std::sin(x[2])};
    };
    std::vector<double> err;
    for (int m : {17, 33}) {
        DomainMesh mesh(3, m);
        DirichletSolver S(mesh, Schrodinger{MeshField::constant(mesh, 0.0)});
        auto F = S.flux(S.solve(u));
        double e = 0;
        for (std::size_t i = 0; i < F.size(); ++i) {
            const auto& b = mesh.boundary()[i];
            e = std::max(e, std::abs(F[i] - dot(grad(mesh.point(b.node)), b.normal)));
        }
        err.push_back(e);
    }
    double order = std::log(err[0] / err[1]) / std::log(34.0 / 18.0);
    EXPECT_GE(order, 1.8);
}

TEST(Dtn, SingularProblemIsRejected)
{
    DomainMesh mesh(2, 9);
    double h = mesh.h();
    double lambda = 2 * 4 / (h * h) * std::pow(std::sin(M_PI * h / 2), 2);  // lowest eigenvalue of -Delta_h
    EXPECT_THROW(DirichletSolver(mesh, Schrodinger{MeshField::constant(mesh, -lambda)}), Error);
    EXPECT_NO_THROW(DirichletSolver(mesh, Schrodinger{MeshField::constant(mesh, -0.5 * lambda)}));
    EXPECT_THROW(DirichletSolver(mesh, Conductivity{MeshField::constant(mesh, 0.0)}), Error);
}

TEST(Dtn, SerializationRoundTrip)
{
    DomainMesh mesh(2, 5);
    DtnMatrix A = assemble_dtn(mesh, Conductivity{MeshField::sample(mesh, [](const Vec3& x) { return 1 + x[0]; })});
    std::stringstream ss;
    write_dtn(ss, A);
    DtnMatrix B = read_dtn(ss);
    EXPECT_EQ(B.kind, A.kind);
    EXPECT_EQ(B.m, 5);
    EXPECT_EQ(B.dim, 2);
    EXPECT_EQ(B.values, A.values);
    std::stringstream bad("xx");
    EXPECT_THROW(read_dtn(bad), Error);
}

TEST(Liouville, ConstantGivesZero)
{
    GridSpec s(3, 16, 2.0);
    GridField g(s);
    for (auto& v : g.values) v = 2.7;
    auto r = liouville(g);
    EXPECT_LE(r.q.max_abs(), 1e-12);
    EXPECT_LE(r.discrepancy, 1e-12);
    g.values[5] = -1;
    EXPECT_THROW(liouville(g), Error);
}

TEST(Liouville, GaussianRootClosedForm)
{
    // gamma^{1/2} = exp(|x|^2/2) inside B_1, cut off smoothly so the field is periodic.
    // The cutoff's spectral tail limits the accuracy.
    GridSpec s(3, 128, 4.0);
    GridField g = GridField::sample(s, [](const Vec3& x) {
        return cplx(std::exp(dot(x, x) * smooth_window(norm(x), 1.2, 3.5)));
    });
    auto r = liouville(g);
    double worst = 0;
    for (std::size_t i = 0; i < g.values.size(); ++i) {
        Vec3 x = s.point(i);
        if (norm(x) <= 1) worst = std::max(worst, std::abs(r.q.values[i].real() - (3 + dot(x, x))));
    }
    EXPECT_LE(worst, 2e-4);
}

TEST(Liouville, TwoFormulasAgree)
{
    GridSpec s(3, 64, 4.0);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> U(-1, 1);
    for (int t = 0; t < 10; ++t) {
        Vec3 c1{U(rng), U(rng), U(rng)}, c2{U(rng), U(rng), U(rng)};
        double a1 = U(rng), a2 = U(rng);
        GridField g = GridField::sample(s, [&](const Vec3& x) {
            return cplx(std::exp(a1 * bump(x, c1, 0.45) + a2 * bump(x, c2, 0.5)));
        });
        EXPECT_LE(liouville(g).discrepancy, 1e-8) << t;
    }
}

TEST(Liouville, ConductivityAndSchrodingerPairingsAgree)
{
    // gamma - 1 is below 1e-5 on the boundary, so u = gamma^{-1/2} v keeps trace and flux.
    GridSpec s(2, 128, 2.0);
    Vec3 c{0.5, 0.5, 0};
    GridField g = GridField::sample(s, [&](const Vec3& x) {
        double b = 1 + 0.5 * std::exp(-dot(x - c, x - c) / 0.02);
        return cplx(b * b);
    });
    GridField q = liouville(g).q;
    auto f1 = [](const Vec3& x) { return std::exp(0.8 * x[0] + 0.3 * x[1]); };
    auto f2 = [](const Vec3& x) { return std::exp(-0.5 * x[1]) * std::cos(0.9 * x[0]) + x[1]; };
    std::vector<double> gap;
    for (int m : {33, 65}) {
        DomainMesh mesh(2, m);
        DirichletSolver Sg(mesh, Conductivity{MeshField::from_grid(mesh, g)});
        DirichletSolver Sq(mesh, Schrodinger{MeshField::from_grid(mesh, q)});
        auto fb = boundary_values(mesh, f2);
        double pg = pairing(mesh, Sg.flux(Sg.solve(f1)), fb);
        double pq = pairing(mesh, Sq.flux(Sq.solve(f1)), fb);
        gap.push_back(std::abs(pg - pq));
    }
    EXPECT_LE(gap[1], gap[0] / 3);
    EXPECT_LE(gap[1], 1e-2);
}

TEST(Identity, EqualPotentialsGiveZero)
{
    auto r = identity_at(9, FluxScheme::OneSided);
    DomainMesh mesh(3, 9);
    MeshField q = MeshField::sample(mesh, q1f);
    DirichletSolver S(mesh, Schrodinger{q});
    auto e = integral_identity_residual(mesh, q, q, S.solve(f1f), S.solve(f2f));
    EXPECT_LE(std::abs(e.volume), 1e-12);
    EXPECT_LE(std::abs(e.boundary_pairing), 1e-8);
    EXPECT_GT(std::abs(r.volume), 1e-3);
}

TEST(Identity, BilinearInV1)
{
    DomainMesh mesh(3, 7);
    MeshField q1 = MeshField::sample(mesh, q1f), q2 = MeshField::sample(mesh, q2f);
    DirichletSolver S1(mesh, Schrodinger{q1}), S2(mesh, Schrodinger{q2});
    MeshField v1 = S1.solve(f1f), v2 = S2.solve(f2f);
    auto a = integral_identity_residual(mesh, q1, q2, v1, v2);
    for (auto& v : v1.values) v *= -3.5;
    auto b = integral_identity_residual(mesh, q1, q2, v1, v2);
    EXPECT_NEAR(b.volume, -3.5 * a.volume, 1e-12 * std::abs(b.volume));
    EXPECT_NEAR(b.boundary_pairing, -3.5 * a.boundary_pairing, 1e-12 * std::abs(b.boundary_pairing));
}

TEST(Identity, GreenPairingConvergesAtSecondOrder)
{
    double e9 = std::abs(identity_at(9, FluxScheme::OneSided).difference);
    double e17 = std::abs(identity_at(17, FluxScheme::OneSided).difference);
    EXPECT_GE(e9 / e17, 0.9 * std::pow(18.0 / 10.0, 2));
}

TEST(Identity, VariationalFluxSatisfiesDiscreteGreenExactly)
{
    auto r = identity_at(9, FluxScheme::Variational);
    EXPECT_LE(std::abs(r.difference), 1e-10 * std::abs(r.volume));
}

TEST(Identity, RejectsNonSolutions)
{
    DomainMesh mesh(3, 5);
    MeshField q = MeshField::sample(mesh, q1f);
    MeshField junk = MeshField::sample(mesh, f1f);
    EXPECT_THROW(integral_identity_residual(mesh, q, q, junk, junk), Error);
}

TEST(Probe, EqualConductivitiesAndAntisymmetry)
{
    DomainMesh mesh(3, 9);
    auto g2 = MeshField::sample(mesh, [](const Vec3& x) { return 1.0 + 0.3 * x[1]; });
    auto g1 = MeshField::sample(mesh, [](const Vec3& x) { return 1.4 + 0.3 * x[1] - 0.2 * x[0]; });
    BoundaryNodeId z{0, 5, 5};
    auto same = boundary_probe(mesh, g2, g2, z, 3);
    for (double v : same.values) EXPECT_EQ(v, 0.0);
    auto ab = boundary_probe(mesh, g1, g2, z, 3);
    auto ba = boundary_probe(mesh, g2, g1, z, 3);
    for (std::size_t i = 0; i < ab.values.size(); ++i) {
        EXPECT_NEAR(ab.values[i], -ba.values[i], 1e-10 * std::abs(ab.values[i]));
        EXPECT_GT(ab.values[i], 0);  // gamma1 > gamma2 at z
        if (i) EXPECT_LT(ab.distances[i], ab.distances[i - 1]);
    }
    EXPECT_THROW(boundary_probe(mesh, g1, g2, BoundaryNodeId{0, 0, 5}, 3), Error);
    EXPECT_THROW(boundary_probe(DomainMesh(2, 9), MeshField::constant(DomainMesh(2, 9), 1),
                                MeshField::constant(DomainMesh(2, 9), 1), BoundaryNodeId{0, 5, 1}, 2),
                 Error);
}

TEST(Probe, RecoversLocalJump)
{
    DomainMesh mesh(3, 17);
    Vec3 zp{0, 0.5, 0.5};
    auto base = [](const Vec3& x) { return 1.0 + 0.3 * x[1] + 0.2 * std::sin(3 * x[2]); };
    auto g2 = MeshField::sample(mesh, base);
    auto g1 = MeshField::sample(mesh, [&](const Vec3& x) { return base(x) + 0.5 * smooth_window(norm(x - zp), 0.3, 0.6); });
    auto r = boundary_probe(mesh, g1, g2, BoundaryNodeId{0, 9, 9}, 4);
    EXPECT_NEAR(r.limit, 0.5, 0.05);
    for (std::size_t i = 1; i < r.ratios.size(); ++i) EXPECT_GT(r.ratios[i], r.ratios[i - 1]);
    // negative jump has negative sign
    auto g3 = MeshField::sample(mesh, [&](const Vec3& x) { return base(x) - 0.3 * smooth_window(norm(x - zp), 0.3, 0.6); });
    EXPECT_LT(boundary_probe(mesh, g3, g2, BoundaryNodeId{0, 9, 9}, 2).limit, 0);
}
