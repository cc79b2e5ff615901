#include "cgolab/estimates.hpp"
#include "cgolab/parallel.hpp"

#include <algorithm>
#include <random>

namespace cgolab {

const char* case_name(CaseId id)
{
    switch (id) {
        case CaseId::SU1: return "SU1";
        case CaseId::SU2_1: return "SU2_1";
        case CaseId::SU2: return "SU2";
        case CaseId::SU3: return "SU3";
        case CaseId::LEM1: return "LEM1";
        case CaseId::LEM2: return "LEM2";
        case CaseId::KRS: return "KRS";
        case CaseId::LEMNEW: return "LEMNEW";
    }
    return "?";
}

CaseId parse_case(const std::string& name)
{
    for (CaseId id : {CaseId::SU1, CaseId::SU2_1, CaseId::SU2, CaseId::SU3, CaseId::LEM1, CaseId::LEM2, CaseId::KRS,
                      CaseId::LEMNEW})
        if (name == case_name(id)) return id;
    throw Error("unknown estimate case '" + name + "'");
}

namespace {

NormKind sobolev(int k)
{
    if (k == -1) return norms::HMinus1{};
    return norms::HkGlobal{k};
}

std::string hk(int k) { return "H^" + std::to_string(k); }

}  // namespace

EstimateCase make_case(CaseId id, int k, double r)
{
    EstimateCase c;
    c.id = id;
    c.k = k;
    c.r = r;
    auto ball = [&](const std::string& n) { return n + "(B_" + std::to_string(r).substr(0, 4) + ")"; };
    switch (id) {
        case CaseId::SU1:
            if (k < 0 || k > 2) throw Error("SU1: k in {0,1,2}");
            c.lhs_norm = norms::HkBall{k, r};
            c.rhs_norm = sobolev(k);
            c.expected_xi_power = -1;
            c.lhs_desc = ball("|K*f|_" + hk(k));
            c.rhs_desc = "|f|_" + hk(k);
            break;
        case CaseId::SU2_1:
            if (k < 0 || k > 1) throw Error("SU2_1: k in {0,1}");
            c.lhs_norm = norms::HkBall{k + 1, r};
            c.rhs_norm = sobolev(k);
            c.lhs_desc = ball("|K*f|_" + hk(k + 1));
            c.rhs_desc = "|f|_" + hk(k);
            break;
        case CaseId::SU2:
            c.lhs_norm = norms::L2Ball{r};
            c.rhs_norm = norms::HMinus1{};
            c.lhs_desc = ball("|K*f|_L2");
            c.rhs_desc = "|f|_H^-1";
            break;
        case CaseId::SU3:
            if (k < 0 || k > 1) throw Error("SU3: k in {0,1}");
            c.lhs_norm = norms::HkBall{k + 1, r};
            c.rhs_norm = sobolev(k - 1);
            c.expected_xi_power = 1;
            c.lhs_desc = ball("|K*f|_" + hk(k + 1));
            c.rhs_desc = "|f|_" + hk(k - 1);
            break;
        case CaseId::LEM1:
            c.lhs_desc = ball("|grad W|_L2") + " + |xi| " + ball("|W|_L2");
            c.rhs_desc = "(|g1|_Linf + |g2|_Ld)(|grad V|_L2 + |xi||V|_L2)";
            break;
        case CaseId::LEM2:
            c.expected_xi_power = -1;
            c.lhs_desc = ball("|grad W|_L2") + " + |xi| " + ball("|W|_L2");
            c.rhs_desc = "(|g1|_C2 + |g2|_C1)(|grad V|_L2 + |xi||V|_L2)";
            break;
        case CaseId::KRS:
            c.lhs_norm = norms::LpBall{6.0, 2.0};
            c.rhs_norm = norms::Lp{1.2};
            c.lhs_desc = "|K*f|_L6(B_2)";
            c.rhs_desc = "|f|_L6/5";
            break;
        case CaseId::LEMNEW:
            c.lhs_desc = ball("|W|_H1") + "^2";
            c.rhs_desc = "|V|_H1(B_2)^2 E(q,xi)";
            break;
    }
    return c;
}

namespace {

double grad_l2(const SpectralField& F, double r, bool ball)
{
    double acc = 0;
    for (int a = 0; a < F.spec.dim(); ++a) {
        SpectralField D = F;
        for (std::size_t i = 0; i < D.coeffs.size(); ++i) D.coeffs[i] *= cplx(0, F.spec.frequency(i)[a]);
        GridField g = from_spectral(D);
        double v = ball ? norm(g, norms::L2Ball{r}) : lp_norm(g, 2);
        acc += v * v;
    }
    return std::sqrt(acc);
}

double vector_sup(const std::vector<GridField>& g)
{
    double m = 0;
    for (std::size_t i = 0; i < g.front().values.size(); ++i) {
        double t = 0;
        for (auto& c : g) t += std::norm(c.values[i]);
        m = std::max(m, std::sqrt(t));
    }
    return m;
}

}  // namespace

std::vector<RatioRow> ratio_scan(const EstimateCase& c, const ScanInput& in, const std::vector<ComplexFrequency>& xis)
{
    std::vector<RatioRow> rows;
    bool lem = c.id == CaseId::LEM1 || c.id == CaseId::LEM2 || c.id == CaseId::LEMNEW;
    if (lem && (!in.q || !in.V)) throw Error(std::string(case_name(c.id)) + ": needs q and V");
    if (!lem && !in.f) throw Error(std::string(case_name(c.id)) + ": needs f");
    if ((c.id == CaseId::LEM1 || c.id == CaseId::LEM2) && !std::holds_alternative<DivForm>(in.q->form))
        throw Error("LEM1/LEM2 need a div-form potential");

    // Pieces of the right side that do not depend on xi.
    double g_norm = 0, v_grad = 0, v_l2 = 0, v_h1b2 = 0;
    GridField qV;
    if (lem) {
        const GridField& V = *in.V;
        GridField q = in.q->potential();
        qV = q.times(V);
        SpectralField Vh = to_spectral(V);
        v_grad = grad_l2(Vh, 0, false);
        v_l2 = lp_norm(V, 2);
        v_h1b2 = norm(V, norms::HkBall{1, 2.0});
        if (auto* d = std::get_if<DivForm>(&in.q->form)) {
            if (c.id == CaseId::LEM1) {
                g_norm = vector_sup(d->g1) + lp_norm(d->g2, d->g2.spec.dim());
            } else {
                for (auto& g : d->g1) g_norm += ck_norm(g, 2);
                g_norm += ck_norm(d->g2, 1);
            }
        }
    }

    for (const auto& xi : xis) {
        RatioRow row;
        row.s = xi.s;
        row.xi_abs = xi.abs();
        if (!lem) {
            KernelMultiplier K(xi, in.f->spec);
            GridField W = K.apply(*in.f);
            row.lhs = norm(W, *c.lhs_norm);
            row.rhs = norm(*in.f, *c.rhs_norm);
        } else {
            KernelOptions ko;
            ko.enforce_support = false;
            KernelMultiplier K(xi, qV.spec, ko);
            SpectralField Wh = K.apply(to_spectral(qV));
            if (c.id == CaseId::LEMNEW) {
                double h1 = h1_ball_norm(Wh, c.r);
                row.lhs = h1 * h1;
                EnergyBreakdown e = energy_functional(to_spectral(in.q->potential()), xi);
                row.rhs = v_h1b2 * v_h1b2 * e.total;
            } else {
                GridField W = from_spectral(Wh);
                row.lhs = grad_l2(Wh, c.r, true) + row.xi_abs * norm(W, norms::L2Ball{c.r});
                row.rhs = g_norm * (v_grad + row.xi_abs * v_l2);
            }
        }
        if (row.rhs == 0) {
            if (row.lhs > 0) throw Error(std::string(case_name(c.id)) + ": zero right side with nonzero left side");
        } else {
            row.raw = row.lhs / row.rhs;
            row.ratio = row.raw / std::pow(row.xi_abs, c.expected_xi_power);
        }
        rows.push_back(row);
    }
    return rows;
}

double krs_ratio(const GridField& f, const ComplexFrequency& xi, double p)
{
    int d = f.spec.dim();
    if (d < 3 || std::abs(p - 2.0 * d / (d - 2)) > 1e-12) throw Error("krs_ratio: only the pair p = 2d/(d-2), p' = 2d/(d+2) is supported");
    double pp = 2.0 * d / (d + 2);
    GridField W = apply_kernel(xi, f);
    double den = lp_norm(f, pp);
    if (den == 0) return 0.0;
    return norm(W, norms::LpBall{p, 2.0}) / den;
}

namespace {

int signed_index(int j, int n) { return j < n / 2 ? j : j - n; }
int fft_index(int m, int n) { return m < 0 ? m + n : m; }

void check_tilde_spacing(const GridSpec& s)
{
    if (s.dk() > kQTildeRadius) throw Error("q_tilde: frequency spacing exceeds the window radius");
}

}  // namespace

QTilde q_tilde(const SpectralField& q)
{
    const GridSpec& s = q.spec;
    check_tilde_spacing(s);
    const int n = s.n(), dim = s.dim();
    const int reach = static_cast<int>(std::floor(kQTildeRadius / s.dk() + 1e-12));
    std::vector<double> a(q.coeffs.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::abs(q.coeffs[i]);

    // Window of half-width m along the last axis, for every m that occurs.
    const int last = dim - 1;
    auto stride = [&](int axis) {
        std::size_t st = 1;
        for (int b = axis + 1; b < dim; ++b) st *= n;
        return st;
    };
    const std::size_t st_last = stride(last);
    std::vector<std::vector<double>> line(reach + 1, std::vector<double>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto j = s.unflatten(i);
        int m0 = signed_index(j[last], n);
        double best = a[i];
        line[0][i] = best;
        for (int w = 1; w <= reach; ++w) {
            for (int sgn : {-1, 1}) {
                int m = m0 + sgn * w;
                if (m < -n / 2 || m >= n / 2) continue;
                std::size_t k = i + (static_cast<long>(fft_index(m, n)) - j[last]) * static_cast<long>(st_last);
                best = std::max(best, a[k]);
            }
            line[w][i] = best;
        }
    }
    QTilde out{s, std::vector<double>(a.size(), 0.0)};
    if (dim == 2) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            auto j = s.unflatten(i);
            int m0 = signed_index(j[0], n);
            double best = 0;
            for (int dx = -reach; dx <= reach; ++dx) {
                int m = m0 + dx;
                if (m < -n / 2 || m >= n / 2) continue;
                double rem = kQTildeRadius * kQTildeRadius - (dx * s.dk()) * (dx * s.dk());
                int w = static_cast<int>(std::floor(std::sqrt(std::max(0.0, rem)) / s.dk() + 1e-12));
                std::size_t k = s.flatten({fft_index(m, n), j[1], 0});
                best = std::max(best, line[w][k]);
            }
            out.values[i] = best;
        }
        return out;
    }
    // Disk of offsets over the first two axes, each paired with its half-width along the last.
    struct Off {
        int dx, dy, w;
    };
    std::vector<Off> offs;
    for (int dx = -reach; dx <= reach; ++dx)
        for (int dy = -reach; dy <= reach; ++dy) {
            double rem = kQTildeRadius * kQTildeRadius - (dx * dx + dy * dy) * s.dk() * s.dk();
            if (rem < -1e-12) continue;
            offs.push_back({dx, dy, static_cast<int>(std::floor(std::sqrt(std::max(0.0, rem)) / s.dk() + 1e-12))});
        }
    parallel_for(a.size(), [&](std::size_t i) {
        auto j = s.unflatten(i);
        int mx = signed_index(j[0], n), my = signed_index(j[1], n);
        double best = 0;
        for (const auto& o : offs) {
            int x = mx + o.dx, y = my + o.dy;
            if (x < -n / 2 || x >= n / 2 || y < -n / 2 || y >= n / 2) continue;
            best = std::max(best, line[o.w][s.flatten({fft_index(x, n), fft_index(y, n), j[2]})]);
        }
        out.values[i] = best;
    });
    return out;
}

QTilde q_tilde_bruteforce(const SpectralField& q)
{
    const GridSpec& s = q.spec;
    check_tilde_spacing(s);
    QTilde out{s, std::vector<double>(q.coeffs.size(), 0.0)};
    const double r2 = kQTildeRadius * kQTildeRadius * (1 + 1e-12);
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        Vec3 k = s.frequency(i);
        double best = 0;
        for (std::size_t j = 0; j < out.values.size(); ++j) {
            Vec3 d = s.frequency(j) - k;
            if (dot(d, d) <= r2) best = std::max(best, std::abs(q.coeffs[j]));
        }
        out.values[i] = best;
    }
    return out;
}

double ball_mean_inverse_square(double D, double a)
{
    if (D < 1e-9 * a) return 3.0 / (a * a);
    if (D > 4 * a) {
        double e = (a * a) / (D * D);
        return (1 + e / 5 + 3 * e * e / 35) / (D * D);
    }
    double gap = std::abs(D - a);
    if (gap < 1e-12 * a) return 1.5 / (a * a);
    return 1.5 / (a * a) + 0.75 * (a * a - D * D) * std::log((D + a) / gap) / (D * a * a * a);
}

namespace {

// Point masses m_j at lattice frequencies, structure-of-arrays for the inner loops.
struct Masses {
    std::vector<double> x, y, z, m;
    double radius = 0;
    double total = 0;
    std::size_t size() const { return m.size(); }
    void add(const Vec3& k, double mass)
    {
        x.push_back(k[0]);
        y.push_back(k[1]);
        z.push_back(k[2]);
        m.push_back(mass);
        radius = std::max(radius, norm(k));
        total += mass;
    }
};

double smeared_sum(const Masses& M, const Vec3& k, double a, DiagonalRule rule)
{
    double acc = 0;
    const double far2 = 16 * a * a, a2 = a * a;
    for (std::size_t j = 0; j < M.size(); ++j) {
        double dx = k[0] - M.x[j], dy = k[1] - M.y[j], dz = k[2] - M.z[j];
        double D2 = dx * dx + dy * dy + dz * dz;
        double v;
        if (D2 > far2) {
            double e = a2 / D2;
            v = (1 + e / 5 + 3 * e * e / 35) / D2;
        } else if (rule == DiagonalRule::Exclude) {
            v = D2 < a2 ? 0.0 : 1.0 / D2;
        } else {
            v = ball_mean_inverse_square(std::sqrt(D2), a);
        }
        acc += M.m[j] * v;
    }
    return acc;
}

Vec3 random_direction(std::mt19937_64& rng)
{
    std::normal_distribution<double> N(0, 1);
    for (;;) {
        Vec3 v{N(rng), N(rng), N(rng)};
        double n = norm(v);
        if (n > 1e-12) return (1.0 / n) * v;
    }
}

constexpr std::size_t kBlock = 256;

// Fills w[i] for i < count with block-seeded RNG streams; the result does not
// depend on the worker count.
void sample_blocks(std::size_t count, std::uint64_t seed, std::uint64_t stream_base, std::vector<double>& w,
                   const std::function<double(std::mt19937_64&)>& draw)
{
    w.assign(count, 0.0);
    std::size_t blocks = (count + kBlock - 1) / kBlock;
    parallel_for(blocks, [&](std::size_t b) {
        std::mt19937_64 rng(stream_seed(seed, stream_base + b));
        std::size_t hi = std::min(count, (b + 1) * kBlock);
        for (std::size_t i = b * kBlock; i < hi; ++i) w[i] = draw(rng);
    });
}

}  // namespace

EnergyBreakdown energy_functional(const SpectralField& q, const ComplexFrequency& xi, const EnergyOptions& opts)
{
    const GridSpec& s = q.spec;
    if (s.dim() != 3) throw Error("energy_functional: defined for d = 3 only");
    const double ax = xi.abs();
    if (!(ax >= 4)) throw Error("energy_functional: the tube parametrisation needs |xi| >= 4");
    const double w = std::pow(s.dk(), 3);
    const double a = s.dk() * std::cbrt(3.0 / (4 * M_PI));

    EnergyBreakdown out;
    double qmax = 0;
    for (auto c : q.coeffs) qmax = std::max(qmax, std::norm(c));
    if (qmax == 0) return out;
    const double cut = opts.prune * qmax;

    Masses mid;
    std::vector<double> base_terms;
    for (std::size_t i = 0; i < q.coeffs.size(); ++i) {
        double m = std::norm(q.coeffs[i]);
        Vec3 k = s.frequency(i);
        base_terms.push_back(m / std::sqrt(1 + dot(k, k)));
        if (m > cut) mid.add(k, w * m);
    }
    out.term_base = w * pairwise_sum(base_terms);

    QTilde qt = q_tilde(q);
    Masses tilde;
    for (std::size_t i = 0; i < qt.values.size(); ++i) {
        double m = qt.values[i] * qt.values[i];
        if (m > cut) tilde.add(s.frequency(i), w * m);
    }
    out.support_points = mid.size();
    out.tilde_support_points = tilde.size();

    const CharSetGeometry g = charset_geometry(xi);
    const double Rc = g.radius;
    const Vec3 c = g.center, n = g.plane_normal;
    auto ring = [&](double phi) { return std::cos(phi) * g.e1 + std::sin(phi) * g.e2; };

    // Mid part: mixture of a log-radial tube around the circle, log-radial
    // shells about its centre, and a uniform ball over the q^ support.
    const double r_min = 1e-3, r1 = 0.9 * Rc;
    const double rho_min = 0.01 * Rc, rho_max = Rc + 4 * ax;
    const double rho3 = mid.radius + kQTildeRadius;
    const double l1 = std::log(r1 / r_min), l2 = std::log(rho_max / rho_min);
    const double alpha[3] = {0.5, 0.3, 0.2};
    auto density = [&](const Vec3& k) {
        double p = 0;
        Vec3 d = k - c;
        double z = dot(d, n);
        double rho = norm(d - z * n);
        double r = std::sqrt((rho - Rc) * (rho - Rc) + z * z);
        if (r >= r_min && r <= r1 && rho > 0) p += alpha[0] / (4 * M_PI * M_PI * r * r * l1 * rho);
        double rr = norm(d);
        if (rr >= rho_min && rr <= rho_max) p += alpha[1] / (4 * M_PI * rr * rr * rr * l2);
        if (norm(k) <= rho3) p += alpha[2] * 3 / (4 * M_PI * rho3 * rho3 * rho3);
        return p;
    };
    auto mid_draw = [&](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> U(0, 1);
        double pick = U(rng);
        Vec3 k;
        if (pick < alpha[0]) {
            double phi = 2 * M_PI * U(rng), th = 2 * M_PI * U(rng);
            double r = r_min * std::exp(l1 * U(rng));
            k = c + (Rc + r * std::cos(th)) * ring(phi) + (r * std::sin(th)) * n;
        } else if (pick < alpha[0] + alpha[1]) {
            k = c + (rho_min * std::exp(l2 * U(rng))) * random_direction(rng);
        } else {
            k = (rho3 * std::cbrt(U(rng))) * random_direction(rng);
        }
        double dist = dist_to_charset(k, g), kk = norm(k);
        if (dist > 4 * ax || dist <= kk / ax) return 0.0;
        double den = std::norm(symbol(xi, k));
        return kk * kk / den * smeared_sum(mid, k, a, opts.diagonal) / density(k);
    };

    // Near part: the tube dist <= |k|/|xi| sampled exactly in toroidal
    // coordinates; phi mixes a (1 - cos) law with an arc over the q~ support.
    const double X = ax * ax - 1;
    const double reach = tilde.radius + 1;
    const double phi_a = reach >= 2 * Rc ? M_PI : 2 * std::asin(reach / (2 * Rc));
    auto phi_density = [&](double phi) {
        double p = 0.5 * (1 - std::cos(phi)) / (2 * M_PI);
        if (std::abs(phi) <= phi_a) p += 0.5 / (2 * phi_a);
        return p;
    };
    auto near_draw = [&](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> U(0, 1);
        double phi;
        if (U(rng) < 0.5) {
            do phi = M_PI * (2 * U(rng) - 1);
            while (2 * U(rng) > 1 - std::cos(phi));
        } else {
            phi = phi_a * (2 * U(rng) - 1);
        }
        double th = 2 * M_PI * U(rng);
        Vec3 er = ring(phi);
        Vec3 p = c + Rc * er;
        Vec3 u = std::cos(th) * er + std::sin(th) * n;
        double pu = dot(p, u), pp = dot(p, p);
        double r_hi = (pu + std::sqrt(pu * pu + X * pp)) / X;
        if (!(r_hi > 0)) return 0.0;
        double r = r_hi * std::sqrt(U(rng));
        Vec3 k = p + r * u;
        double rho_cyl = Rc + r * std::cos(th);
        return smeared_sum(tilde, k, a, opts.diagonal) * M_PI * r_hi * r_hi * rho_cyl / phi_density(phi);
    };

    std::vector<double> wm, wn;
    sample_blocks(opts.mid_samples, opts.seed, 0, wm, mid_draw);
    sample_blocks(opts.near_samples, opts.seed, 1ULL << 40, wn, near_draw);
    MeanStd ms = mean_std(wm), ns = mean_std(wn);
    out.term_mid = ms.mean;
    out.mid_std_error = ms.std_error;
    out.term_near = ns.mean;
    out.near_std_error = ns.std_error;
    out.total = out.term_mid + out.term_near + out.term_base;
    return out;
}

}  // namespace cgolab
