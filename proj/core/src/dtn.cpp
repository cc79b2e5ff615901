#include "cgolab/dtn.hpp"
#include "cgolab/parallel.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cstring>
#include <istream>
#include <ostream>

namespace cgolab {

DomainMesh::DomainMesh(int dim, int m) : dim_(dim), m_(m)
{
    if (dim != 2 && dim != 3) throw Error("DomainMesh: dim must be 2 or 3");
    if (m < 3) throw Error("DomainMesh: m >= 3 required");
    const int N = side();
    node_count_ = dim == 3 ? std::size_t(N) * N * N : std::size_t(N) * N;
    unknown_.assign(node_count_, -1);
    for (std::size_t idx = 0; idx < node_count_; ++idx) {
        auto c = unflat(idx);
        bool inner = true;
        for (int a = 0; a < dim; ++a) inner = inner && c[a] >= 1 && c[a] <= m;
        if (inner) unknown_[idx] = static_cast<long>(interior_count_++);
    }
    for (int face = 0; face < 2 * dim; ++face) {
        const int axis = face / 2, hi = face % 2;
        int t[2] = {-1, -1}, nt = 0;
        for (int a = 0; a < dim; ++a)
            if (a != axis) t[nt++] = a;
        const int bmax = dim == 3 ? m : 1;
        for (int b = 1; b <= bmax; ++b)
            for (int a = 1; a <= m; ++a) {
                std::array<int, 3> c{0, 0, 0};
                c[t[0]] = a;
                if (dim == 3) c[t[1]] = b;
                auto at = [&](int along) {
                    c[axis] = along;
                    return flat(c[0], c[1], c[2]);
                };
                BoundaryNode bn;
                bn.face = face;
                bn.node = at(hi ? N - 1 : 0);
                bn.inner1 = at(hi ? N - 2 : 1);
                bn.inner2 = at(hi ? N - 3 : 2);
                bn.normal[axis] = hi ? 1.0 : -1.0;
                boundary_.push_back(bn);
            }
    }
}

std::size_t DomainMesh::flat(int i, int j, int k) const
{
    const std::size_t N = side();
    return static_cast<std::size_t>(i) + N * (static_cast<std::size_t>(j) + N * static_cast<std::size_t>(k));
}

std::array<int, 3> DomainMesh::unflat(std::size_t idx) const
{
    const std::size_t N = side();
    return {static_cast<int>(idx % N), static_cast<int>((idx / N) % N), dim_ == 3 ? static_cast<int>(idx / (N * N)) : 0};
}

Vec3 DomainMesh::point(std::size_t idx) const
{
    auto c = unflat(idx);
    return {c[0] * h(), c[1] * h(), dim_ == 3 ? c[2] * h() : 0.0};
}

std::size_t DomainMesh::boundary_index(const BoundaryNodeId& id) const
{
    if (id.face < 0 || id.face >= 2 * dim_) throw Error("boundary node: face out of range");
    int b = dim_ == 3 ? id.b : 1;
    if (id.a < 1 || id.a > m_ || b < 1 || b > m_)
        throw Error("boundary node: tangential index outside 1..m (edges and corners are not boundary nodes)");
    std::size_t per_face = dim_ == 3 ? std::size_t(m_) * m_ : std::size_t(m_);
    return id.face * per_face + std::size_t(b - 1) * m_ + std::size_t(id.a - 1);
}

std::size_t DomainMesh::boundary_index(const Vec3& z) const
{
    for (std::size_t i = 0; i < boundary_.size(); ++i)
        if (norm(point(boundary_[i].node) - z) < 1e-9) return i;
    throw Error("z is not a boundary node of the mesh");
}

MeshField MeshField::sample(const DomainMesh& mesh, const std::function<double(const Vec3&)>& f)
{
    MeshField out;
    out.values.resize(mesh.node_count());
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = f(mesh.point(i));
    return out;
}

MeshField MeshField::from_grid(const DomainMesh& mesh, const GridField& f)
{
    if (f.spec.dim() != mesh.dim()) throw Error("MeshField::from_grid: dimension mismatch");
    if (f.spec.L() <= 1.0) throw Error("MeshField::from_grid: the grid box must contain [0,1]^d");
    return sample(mesh, [&](const Vec3& x) { return interpolate_real(f, x); });
}

MeshField MeshField::constant(const DomainMesh& mesh, double c)
{
    MeshField out;
    out.values.assign(mesh.node_count(), c);
    return out;
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;

bool is_conductivity(const Coefficient& c) { return std::holds_alternative<Conductivity>(c); }

const std::vector<double>& coeff_values(const Coefficient& c)
{
    if (auto* s = std::get_if<Schrodinger>(&c)) return s->q.values;
    return std::get<Conductivity>(c).gamma.values;
}

// Calls f(neighbour index) for the 2*dim lattice neighbours of an interior node.
template <class F>
void for_neighbours(const DomainMesh& mesh, std::size_t idx, F&& f)
{
    std::size_t stride = 1;
    for (int a = 0; a < mesh.dim(); ++a) {
        f(idx - stride);
        f(idx + stride);
        stride *= mesh.side();
    }
}

}  // namespace

struct DirichletSolver::Impl {
    SpMat A;
    Eigen::SimplicialLDLT<SpMat> ldlt;
};

DirichletSolver::DirichletSolver(const DomainMesh& mesh, Coefficient coeff)
    : mesh_(mesh), coeff_(std::move(coeff)), impl_(std::make_unique<Impl>())
{
    const auto& c = coeff_values(coeff_);
    if (c.size() != mesh.node_count()) throw Error("DirichletSolver: coefficient size does not match the mesh");
    const bool cond = is_conductivity(coeff_);
    for (double v : c) {
        if (!std::isfinite(v)) throw Error("DirichletSolver: non-finite coefficient");
        if (cond && !(v > 0)) throw Error("DirichletSolver: conductivity must be positive on the mesh");
    }
    const double h2 = mesh.h() * mesh.h();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(mesh.interior_count() * (2 * mesh.dim() + 1));
    for (std::size_t idx = 0; idx < mesh.node_count(); ++idx) {
        long r = mesh.unknown(idx);
        if (r < 0) continue;
        double diag = cond ? 0.0 : 2 * mesh.dim() + h2 * c[idx];
        for_neighbours(mesh, idx, [&](std::size_t nb) {
            double w = cond ? 0.5 * (c[idx] + c[nb]) : 1.0;
            if (cond) diag += w;
            long col = mesh.unknown(nb);
            if (col >= 0) trip.emplace_back(r, col, -w);
        });
        trip.emplace_back(r, r, diag);
    }
    impl_->A.resize(mesh.interior_count(), mesh.interior_count());
    impl_->A.setFromTriplets(trip.begin(), trip.end());
    impl_->ldlt.compute(impl_->A);
    if (impl_->ldlt.info() != Eigen::Success)
        throw Error("Dirichlet problem is singular: 0 is a Dirichlet eigenvalue of the discrete operator");
    const auto D = impl_->ldlt.vectorD();
    double lo = D.cwiseAbs().minCoeff(), hi = D.cwiseAbs().maxCoeff();
    pivot_ratio_ = hi > 0 ? lo / hi : 0.0;
    if (pivot_ratio_ < kPivotThreshold)
        throw Error("Dirichlet problem is numerically singular (pivot ratio " + std::to_string(pivot_ratio_) +
                    "): 0 is (close to) a Dirichlet eigenvalue");
}

DirichletSolver::~DirichletSolver() = default;
DirichletSolver::DirichletSolver(DirichletSolver&&) noexcept = default;

MeshField DirichletSolver::solve(const MeshField& data) const
{
    if (data.values.size() != mesh_.node_count()) throw Error("DirichletSolver::solve: data size mismatch");
    const auto& c = coeff_values(coeff_);
    const bool cond = is_conductivity(coeff_);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<long>(mesh_.interior_count()));
    for (const auto& b : mesh_.boundary()) {
        double w = cond ? 0.5 * (c[b.node] + c[b.inner1]) : 1.0;
        rhs[mesh_.unknown(b.inner1)] += w * data.values[b.node];
    }
    Eigen::VectorXd x = impl_->ldlt.solve(rhs);
    MeshField u = data;
    for (std::size_t idx = 0; idx < u.values.size(); ++idx) {
        long r = mesh_.unknown(idx);
        if (r >= 0) u.values[idx] = x[r];
    }
    return u;
}

MeshField DirichletSolver::solve(const std::function<double(const Vec3&)>& data) const
{
    return solve(MeshField::sample(mesh_, data));
}

std::vector<double> DirichletSolver::flux(const MeshField& u, FluxScheme scheme) const
{
    const auto& c = coeff_values(coeff_);
    const bool cond = is_conductivity(coeff_);
    const double h = mesh_.h();
    std::vector<double> out;
    out.reserve(mesh_.boundary().size());
    for (const auto& b : mesh_.boundary()) {
        const double u0 = u.values[b.node], u1 = u.values[b.inner1], u2 = u.values[b.inner2];
        if (scheme == FluxScheme::OneSided) {
            double d = (3 * u0 - 4 * u1 + u2) / (2 * h);
            out.push_back(cond ? c[b.node] * d : d);
        } else {
            double d = (u0 - u1) / h;
            out.push_back(cond ? 0.5 * (c[b.node] + c[b.inner1]) * d : d);
        }
    }
    return out;
}

double DirichletSolver::residual(const MeshField& u) const
{
    const auto& c = coeff_values(coeff_);
    const bool cond = is_conductivity(coeff_);
    const double h2 = mesh_.h() * mesh_.h();
    double worst = 0, umax = 0, cmax = 0;
    for (std::size_t idx = 0; idx < u.values.size(); ++idx) {
        umax = std::max(umax, std::abs(u.values[idx]));
        cmax = std::max(cmax, std::abs(c[idx]));
        if (!mesh_.is_interior(idx)) continue;
        double acc = 0;
        for_neighbours(mesh_, idx, [&](std::size_t nb) {
            double w = cond ? 0.5 * (c[idx] + c[nb]) : 1.0;
            acc += w * (u.values[nb] - u.values[idx]);
        });
        acc /= h2;
        if (!cond) acc -= c[idx] * u.values[idx];
        worst = std::max(worst, std::abs(acc));
    }
    double scale = umax * (cond ? 2 * mesh_.dim() * cmax / h2 : 2 * mesh_.dim() / h2 + cmax);
    return scale > 0 ? worst / scale : worst;
}

std::vector<double> DtnMatrix::apply(const std::vector<double>& f) const
{
    if (f.size() != size) throw Error("DtnMatrix::apply: size mismatch");
    std::vector<double> out(size, 0.0);
    for (std::size_t i = 0; i < size; ++i) {
        double acc = 0;
        for (std::size_t j = 0; j < size; ++j) acc += values[i * size + j] * f[j];
        out[i] = acc;
    }
    return out;
}

DtnMatrix assemble_dtn(const DomainMesh& mesh, const Coefficient& coeff, FluxScheme scheme)
{
    DirichletSolver S(mesh, coeff);
    DtnMatrix A;
    A.kind = is_conductivity(coeff) ? DtnKind::Conductivity : DtnKind::Schrodinger;
    A.dim = mesh.dim();
    A.m = mesh.m();
    A.scheme = scheme;
    A.size = mesh.boundary().size();
    A.values.assign(A.size * A.size, 0.0);
    parallel_for(A.size, [&](std::size_t j) {
        MeshField data = MeshField::constant(mesh, 0.0);
        data.values[mesh.boundary()[j].node] = 1.0;
        auto col = S.flux(S.solve(data), scheme);
        for (std::size_t i = 0; i < A.size; ++i) A.values[i * A.size + j] = col[i];
    });
    return A;
}

std::vector<double> boundary_values(const DomainMesh& mesh, const MeshField& u)
{
    std::vector<double> out;
    out.reserve(mesh.boundary().size());
    for (const auto& b : mesh.boundary()) out.push_back(u.values[b.node]);
    return out;
}

std::vector<double> boundary_values(const DomainMesh& mesh, const std::function<double(const Vec3&)>& f)
{
    std::vector<double> out;
    out.reserve(mesh.boundary().size());
    for (const auto& b : mesh.boundary()) out.push_back(f(mesh.point(b.node)));
    return out;
}

double pairing(const DomainMesh& mesh, const std::vector<double>& a, const std::vector<double>& c)
{
    if (a.size() != mesh.boundary().size() || c.size() != a.size()) throw Error("pairing: size mismatch");
    std::vector<double> t(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) t[i] = a[i] * c[i];
    return std::pow(mesh.h(), mesh.dim() - 1) * pairwise_sum(t);
}

double asymmetry(const DtnMatrix& A)
{
    double d = 0, mx = 0;
    for (std::size_t i = 0; i < A.size; ++i)
        for (std::size_t j = 0; j < A.size; ++j) {
            d = std::max(d, std::abs(A(i, j) - A(j, i)));
            mx = std::max(mx, std::abs(A(i, j)));
        }
    return mx > 0 ? d / mx : 0.0;
}

void write_dtn(std::ostream& os, const DtnMatrix& A)
{
    std::int32_t hdr[3] = {static_cast<std::int32_t>(A.kind), A.m, A.dim};
    os.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
    os.write(reinterpret_cast<const char*>(A.values.data()), static_cast<std::streamsize>(A.values.size() * sizeof(double)));
    if (!os) throw Error("write_dtn: stream error");
}

DtnMatrix read_dtn(std::istream& is)
{
    std::int32_t hdr[3];
    if (!is.read(reinterpret_cast<char*>(hdr), sizeof hdr)) throw Error("read_dtn: truncated header");
    if (hdr[0] != 0 && hdr[0] != 1) throw Error("read_dtn: unknown kind");
    if ((hdr[2] != 2 && hdr[2] != 3) || hdr[1] < 3) throw Error("read_dtn: bad header");
    DtnMatrix A;
    A.kind = static_cast<DtnKind>(hdr[0]);
    A.m = hdr[1];
    A.dim = hdr[2];
    A.size = 2 * std::size_t(A.dim) * (A.dim == 3 ? std::size_t(A.m) * A.m : std::size_t(A.m));
    A.values.resize(A.size * A.size);
    if (!is.read(reinterpret_cast<char*>(A.values.data()), static_cast<std::streamsize>(A.values.size() * sizeof(double))))
        throw Error("read_dtn: truncated data");
    return A;
}

LiouvilleResult liouville(const GridField& gamma)
{
    GridField root(gamma.spec), t(gamma.spec);
    for (std::size_t i = 0; i < gamma.values.size(); ++i) {
        double g = gamma.values[i].real();
        if (!(g > 0)) throw Error("liouville: gamma must be positive");
        root.values[i] = std::sqrt(g);
        t.values[i] = 0.5 * std::log(g);
    }
    LiouvilleResult out;
    out.q = laplacian(t);
    for (const auto& d : gradient(t))
        for (std::size_t i = 0; i < d.values.size(); ++i) out.q.values[i] += d.values[i] * d.values[i];
    out.q_direct = laplacian(root);
    for (std::size_t i = 0; i < root.values.size(); ++i) {
        out.q.values[i] = out.q.values[i].real();
        out.q_direct.values[i] = out.q_direct.values[i].real() / root.values[i].real();
        out.discrepancy = std::max(out.discrepancy, std::abs(out.q.values[i] - out.q_direct.values[i]));
    }
    return out;
}

IdentityReport integral_identity_residual(const DomainMesh& mesh, const MeshField& q1, const MeshField& q2,
                                          const MeshField& v1, const MeshField& v2, FluxScheme scheme)
{
    DirichletSolver S1(mesh, Schrodinger{q1}), S2(mesh, Schrodinger{q2});
    if (v1.values.size() != mesh.node_count() || v2.values.size() != mesh.node_count())
        throw Error("integral identity: field size mismatch");
    double r1 = S1.residual(v1), r2 = S2.residual(v2);
    if (r1 > kSolutionResidualTol || r2 > kSolutionResidualTol)
        throw Error("integral identity: v1, v2 must solve their equations (relative residuals " + std::to_string(r1) +
                    ", " + std::to_string(r2) + ")");
    std::vector<double> t;
    t.reserve(mesh.interior_count());
    for (std::size_t idx = 0; idx < mesh.node_count(); ++idx)
        if (mesh.is_interior(idx)) t.push_back((q1.values[idx] - q2.values[idx]) * v1.values[idx] * v2.values[idx]);
    IdentityReport rep;
    rep.volume = std::pow(mesh.h(), mesh.dim()) * pairwise_sum(t);
    auto f1 = S1.flux(v1, scheme);
    auto f2 = S2.flux(S2.solve(v1), scheme);
    for (std::size_t i = 0; i < f1.size(); ++i) f1[i] -= f2[i];
    rep.boundary_pairing = pairing(mesh, f1, boundary_values(mesh, v2));
    rep.difference = rep.volume - rep.boundary_pairing;
    return rep;
}

namespace {

// sum over lattice edges with an interior endpoint of w_e (a_x - a_y)(b_x - b_y).
double edge_form(const DomainMesh& mesh, const std::vector<double>* weight, const MeshField& a, const MeshField& b)
{
    std::vector<double> t;
    t.reserve(mesh.interior_count() * mesh.dim() * 2);
    std::size_t stride = 1;
    for (int ax = 0; ax < mesh.dim(); ++ax) {
        for (std::size_t idx = 0; idx < mesh.node_count(); ++idx) {
            auto c = mesh.unflat(idx);
            if (c[ax] == mesh.side() - 1) continue;
            std::size_t nb = idx + stride;
            if (!mesh.is_interior(idx) && !mesh.is_interior(nb)) continue;
            double w = weight ? 0.5 * ((*weight)[idx] + (*weight)[nb]) : 1.0;
            t.push_back(w * (a.values[nb] - a.values[idx]) * (b.values[nb] - b.values[idx]));
        }
        stride *= mesh.side();
    }
    return std::pow(mesh.h(), mesh.dim() - 2) * pairwise_sum(t);
}

}  // namespace

ProbeResult boundary_probe(const DomainMesh& mesh, const MeshField& gamma1, const MeshField& gamma2,
                           const BoundaryNodeId& zid, int n_steps)
{
    if (mesh.dim() != 3) throw Error("boundary_probe: d = 3 only");
    if (n_steps < 1) throw Error("boundary_probe: n_steps must be positive");
    const BoundaryNode& bz = mesh.boundary()[mesh.boundary_index(zid)];
    DirichletSolver C1(mesh, Conductivity{gamma1}), C2(mesh, Conductivity{gamma2});
    MeshField shifted = gamma2;
    for (auto& v : shifted.values) v += 1.0;
    DirichletSolver Cc(mesh, Conductivity{shifted});
    std::vector<double> diff(gamma1.values.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = gamma1.values[i] - gamma2.values[i];
    std::vector<double> ones(diff.size(), 1.0);

    ProbeResult out;
    out.z = mesh.point(bz.node);
    for (int j = 1; j <= n_steps; ++j) {
        double dist = std::ldexp(1.0, -(j + 1));
        Vec3 zn = out.z + dist * bz.normal;
        MeshField v = MeshField::sample(mesh, [&](const Vec3& x) { return 1.0 / norm(x - zn); });
        MeshField u1 = C1.solve(v), u2 = C2.solve(v), uc = Cc.solve(v);
        double energy = edge_form(mesh, nullptr, v, v);
        out.distances.push_back(dist);
        out.values.push_back(edge_form(mesh, &diff, u1, u2) / energy);
        out.calibration.push_back(edge_form(mesh, &ones, uc, u2) / energy);
        out.ratios.push_back(out.values.back() / out.calibration.back());
    }
    out.limit = out.ratios.back();
    out.extrapolated = out.ratios.size() > 1 ? 2 * out.ratios.back() - out.ratios[out.ratios.size() - 2] : out.limit;
    return out;
}

}  // namespace cgolab
