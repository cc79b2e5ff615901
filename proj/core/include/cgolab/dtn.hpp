#pragma once

#include "cgolab/grid.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <variant>

namespace cgolab {

// Box (0,1)^dim with m interior nodes per axis, h = 1/(m+1). Nodes are indexed
// over the full (m+2)^dim lattice, first axis fastest.
struct BoundaryNode {
    int face = 0;  // 0: x0=0, 1: x0=1, 2: x1=0, 3: x1=1, 4: x2=0, 5: x2=1
    std::size_t node = 0;
    std::size_t inner1 = 0, inner2 = 0;  // first and second node inward along the normal
    Vec3 normal{};
};

struct BoundaryNodeId {
    int face = 0;
    int a = 1, b = 1;  // tangential indices in 1..m (b unused in 2-d)
};

class DomainMesh {
public:
    DomainMesh(int dim, int m);

    int dim() const { return dim_; }
    int m() const { return m_; }
    int side() const { return m_ + 2; }
    double h() const { return 1.0 / (m_ + 1); }
    std::size_t node_count() const { return node_count_; }
    std::size_t interior_count() const { return interior_count_; }
    std::size_t flat(int i, int j, int k = 0) const;
    std::array<int, 3> unflat(std::size_t idx) const;
    Vec3 point(std::size_t idx) const;
    bool is_interior(std::size_t idx) const { return unknown_[idx] >= 0; }
    long unknown(std::size_t idx) const { return unknown_[idx]; }
    // Face nodes with all tangential indices in 1..m (edges and corners never
    // enter the interior stencil and are excluded).
    const std::vector<BoundaryNode>& boundary() const { return boundary_; }
    std::size_t boundary_index(const BoundaryNodeId& id) const;
    std::size_t boundary_index(const Vec3& z) const;

private:
    int dim_, m_;
    std::size_t node_count_ = 0, interior_count_ = 0;
    std::vector<long> unknown_;
    std::vector<BoundaryNode> boundary_;
};

struct MeshField {
    std::vector<double> values;  // over all nodes of the mesh

    static MeshField sample(const DomainMesh& mesh, const std::function<double(const Vec3&)>& f);
    // Real part of a periodic-grid field, cubic interpolation at the mesh nodes.
    static MeshField from_grid(const DomainMesh& mesh, const GridField& f);
    static MeshField constant(const DomainMesh& mesh, double c);
};

struct Schrodinger {
    MeshField q;
};
struct Conductivity {
    MeshField gamma;
};
using Coefficient = std::variant<Schrodinger, Conductivity>;

enum class FluxScheme {
    OneSided,     // second-order one-sided difference (3u0 - 4u1 + u2)/(2h)
    Variational,  // (u_b - u_1)/h, the flux of the discrete Green identity; exactly self-adjoint
};

// Factorized interior operator (Delta_h - q, or div_h gamma grad_h with
// edge-averaged gamma); reused for any number of Dirichlet solves.
class DirichletSolver {
public:
    DirichletSolver(const DomainMesh& mesh, Coefficient coeff);
    ~DirichletSolver();
    DirichletSolver(DirichletSolver&&) noexcept;

    const DomainMesh& mesh() const { return mesh_; }
    const Coefficient& coefficient() const { return coeff_; }
    // Smallest over largest |pivot| of the LDL^T factorization.
    double pivot_ratio() const { return pivot_ratio_; }

    // data supplies the boundary values (interior entries are ignored).
    MeshField solve(const MeshField& data) const;
    MeshField solve(const std::function<double(const Vec3&)>& data) const;
    // Normal flux at each boundary node (gamma du/dn for Conductivity).
    std::vector<double> flux(const MeshField& u, FluxScheme scheme = FluxScheme::OneSided) const;
    // max over interior nodes of |L_h u|, relative to max |u| / h^2.
    double residual(const MeshField& u) const;

private:
    struct Impl;
    const DomainMesh& mesh_;
    Coefficient coeff_;
    std::unique_ptr<Impl> impl_;
    double pivot_ratio_ = 0;
};

enum class DtnKind { Schrodinger = 0, Conductivity = 1 };

struct DtnMatrix {
    DtnKind kind = DtnKind::Schrodinger;
    int dim = 3;
    int m = 0;
    FluxScheme scheme = FluxScheme::OneSided;
    std::size_t size = 0;        // boundary node count
    std::vector<double> values;  // row-major size x size

    double operator()(std::size_t i, std::size_t j) const { return values[i * size + j]; }
    std::vector<double> apply(const std::vector<double>& f) const;
};

constexpr double kPivotThreshold = 1e-10;

DtnMatrix assemble_dtn(const DomainMesh& mesh, const Coefficient& coeff, FluxScheme scheme = FluxScheme::OneSided);
// Boundary values of a mesh field, in boundary() order.
std::vector<double> boundary_values(const DomainMesh& mesh, const MeshField& u);
// Trace of a function, in boundary() order.
std::vector<double> boundary_values(const DomainMesh& mesh, const std::function<double(const Vec3&)>& f);
// h^{dim-1} sum_b a_b c_b: the boundary mass-matrix pairing.
double pairing(const DomainMesh& mesh, const std::vector<double>& a, const std::vector<double>& c);
// max |A - A^T| / max |A|.
double asymmetry(const DtnMatrix& A);

// Header: kind, m, dim as int32 (little-endian), then size*size float64 row-major.
void write_dtn(std::ostream& os, const DtnMatrix& A);
DtnMatrix read_dtn(std::istream& is);

struct LiouvilleResult {
    GridField q;         // Delta t + |grad t|^2, t = ln gamma^{1/2}
    GridField q_direct;  // Delta gamma^{1/2} / gamma^{1/2}
    double discrepancy = 0;  // max |q - q_direct|
};
LiouvilleResult liouville(const GridField& gamma);

struct IdentityReport {
    double volume = 0;            // quadrature of (q1 - q2) v1 v2 over the interior nodes
    double boundary_pairing = 0;  // <(Lambda_q1 - Lambda_q2) v1|, v2|>
    double difference = 0;        // volume - boundary_pairing
};
constexpr double kSolutionResidualTol = 1e-8;
IdentityReport integral_identity_residual(const DomainMesh& mesh, const MeshField& q1, const MeshField& q2,
                                          const MeshField& v1, const MeshField& v2,
                                          FluxScheme scheme = FluxScheme::OneSided);

struct ProbeResult {
    Vec3 z{};
    std::vector<double> distances;    // |z_n - z|, strictly decreasing
    std::vector<double> values;       // int (g1-g2) grad u1.grad u2 / int |grad v_n|^2
    std::vector<double> calibration;  // same with the pair (g2 + 1, g2)
    std::vector<double> ratios;       // values / calibration
    double limit = 0;                 // last ratio
    double extrapolated = 0;          // 2 r_n - r_{n-1}, first-order in the distance
};
// d = 3 only; z_n = z + 2^{-(j+1)} n(z), j = 1..n_steps.
ProbeResult boundary_probe(const DomainMesh& mesh, const MeshField& gamma1, const MeshField& gamma2,
                           const BoundaryNodeId& z, int n_steps);

}  // namespace cgolab
