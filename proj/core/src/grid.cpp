#include "cgolab/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <tuple>

namespace cgolab {

GridSpec::GridSpec(int dim, int n, double L) : dim_(dim), n_(n), L_(L)
{
    if (dim != 2 && dim != 3) throw Error("GridSpec: dim must be 2 or 3");
    if (n < 8 || (n & (n - 1)) != 0) throw Error("GridSpec: n must be a power of two >= 8");
    if (!(L > 0)) throw Error("GridSpec: L must be positive");
}

std::size_t GridSpec::size() const
{
    std::size_t s = 1;
    for (int a = 0; a < dim_; ++a) s *= static_cast<std::size_t>(n_);
    return s;
}

std::array<int, 3> GridSpec::unflatten(std::size_t idx) const
{
    std::array<int, 3> j{0, 0, 0};
    for (int a = dim_ - 1; a >= 0; --a) {
        j[a] = static_cast<int>(idx % n_);
        idx /= n_;
    }
    return j;
}

std::size_t GridSpec::flatten(const std::array<int, 3>& j) const
{
    std::size_t idx = 0;
    for (int a = 0; a < dim_; ++a) idx = idx * n_ + static_cast<std::size_t>(((j[a] % n_) + n_) % n_);
    return idx;
}

Vec3 GridSpec::point(std::size_t idx) const
{
    auto j = unflatten(idx);
    Vec3 x{0, 0, 0};
    for (int a = 0; a < dim_; ++a) x[a] = coord(j[a]);
    return x;
}

Vec3 GridSpec::frequency(std::size_t idx) const
{
    auto j = unflatten(idx);
    Vec3 k{0, 0, 0};
    for (int a = 0; a < dim_; ++a) k[a] = freq(j[a]);
    return k;
}

GridField::GridField(const GridSpec& s, std::vector<cplx> v) : spec(s), values(std::move(v))
{
    if (values.size() != spec.size()) throw Error("GridField: value count does not match spec");
}

GridField GridField::sample(const GridSpec& s, const std::function<cplx(const Vec3&)>& f)
{
    GridField g(s);
    for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] = f(s.point(i));
    return g;
}

GridField& GridField::operator+=(const GridField& o)
{
    if (spec != o.spec) throw Error("GridField: spec mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
    return *this;
}

GridField& GridField::operator-=(const GridField& o)
{
    if (spec != o.spec) throw Error("GridField: spec mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
    return *this;
}

GridField& GridField::operator*=(cplx c)
{
    for (auto& v : values) v *= c;
    return *this;
}

GridField GridField::times(const GridField& o) const
{
    if (spec != o.spec) throw Error("GridField: spec mismatch");
    GridField r(spec);
    for (std::size_t i = 0; i < values.size(); ++i) r.values[i] = values[i] * o.values[i];
    return r;
}

double GridField::max_abs() const
{
    double m = 0;
    for (auto v : values) m = std::max(m, std::abs(v));
    return m;
}

namespace {

std::mutex plan_mutex;

fftw_plan plan_for(int dim, int n, int sign)
{
    static std::map<std::tuple<int, int, int>, fftw_plan> cache;
    std::lock_guard<std::mutex> lock(plan_mutex);
    auto key = std::make_tuple(dim, n, sign);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    std::size_t total = 1;
    for (int a = 0; a < dim; ++a) total *= n;
    auto* in = fftw_alloc_complex(total);
    auto* out = fftw_alloc_complex(total);
    int dims[3] = {n, n, n};
    fftw_plan p = fftw_plan_dft(dim, dims, in, out, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(in);
    fftw_free(out);
    if (!p) throw Error("FFTW planning failed");
    cache.emplace(key, p);
    return p;
}

void execute(const GridSpec& s, const std::vector<cplx>& in, std::vector<cplx>& out, int sign)
{
    out.resize(in.size());
    fftw_plan p = plan_for(s.dim(), s.n(), sign);
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
}

// (-1)^{sum of indices}: the phase e^{i k L} from the box offset.
double parity(const GridSpec& s, std::size_t idx)
{
    auto j = s.unflatten(idx);
    int t = j[0] + j[1] + j[2];
    return (t & 1) ? -1.0 : 1.0;
}

}  // namespace

SpectralField to_spectral(const GridField& f)
{
    SpectralField out(f.spec);
    execute(f.spec, f.values, out.coeffs, FFTW_FORWARD);
    double scale = std::pow(f.spec.h(), f.spec.dim());
    for (std::size_t i = 0; i < out.coeffs.size(); ++i) out.coeffs[i] *= scale * parity(f.spec, i);
    return out;
}

GridField from_spectral(const SpectralField& f)
{
    std::vector<cplx> tmp(f.coeffs.size());
    for (std::size_t i = 0; i < tmp.size(); ++i) tmp[i] = f.coeffs[i] * parity(f.spec, i);
    GridField out(f.spec);
    execute(f.spec, tmp, out.values, FFTW_BACKWARD);
    double scale = std::pow(2.0 * f.spec.L(), -f.spec.dim());
    for (auto& v : out.values) v *= scale;
    return out;
}

GridField partial(const GridField& f, int axis)
{
    if (axis < 0 || axis >= f.spec.dim()) throw Error("partial: axis out of range");
    SpectralField F = to_spectral(f);
    for (std::size_t i = 0; i < F.coeffs.size(); ++i) F.coeffs[i] *= cplx(0, F.spec.frequency(i)[axis]);
    return from_spectral(F);
}

std::vector<GridField> gradient(const GridField& f)
{
    SpectralField F = to_spectral(f);
    std::vector<GridField> g;
    for (int a = 0; a < f.spec.dim(); ++a) {
        SpectralField D = F;
        for (std::size_t i = 0; i < D.coeffs.size(); ++i) D.coeffs[i] *= cplx(0, D.spec.frequency(i)[a]);
        g.push_back(from_spectral(D));
    }
    return g;
}

GridField laplacian(const GridField& f)
{
    SpectralField F = to_spectral(f);
    for (std::size_t i = 0; i < F.coeffs.size(); ++i) {
        Vec3 k = F.spec.frequency(i);
        F.coeffs[i] *= -dot(k, k);
    }
    return from_spectral(F);
}

GridField divergence(const std::vector<GridField>& g)
{
    if (g.empty()) throw Error("divergence: empty vector field");
    const GridSpec& s = g[0].spec;
    if (static_cast<int>(g.size()) != s.dim()) throw Error("divergence: component count must equal dim");
    SpectralField acc(s);
    for (int a = 0; a < s.dim(); ++a) {
        SpectralField G = to_spectral(g[a]);
        for (std::size_t i = 0; i < G.coeffs.size(); ++i) acc.coeffs[i] += cplx(0, s.frequency(i)[a]) * G.coeffs[i];
    }
    return from_spectral(acc);
}

namespace {

void check_radius(const GridSpec& s, double r)
{
    if (!(r > 0)) throw Error("ball radius must be positive");
    if (r > s.L() / 2 + 1e-12) throw Error("ball radius exceeds L/2: wrap-around would corrupt the norm");
}

double ball_sumsq(const GridField& f, double r)
{
    double r2 = r * r, acc = 0;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        Vec3 x = f.spec.point(i);
        if (dot(x, x) <= r2) acc += std::norm(f.values[i]);
    }
    return acc;
}

double ball_sum_p(const GridField& f, double p, double r)
{
    double r2 = r * r, acc = 0;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        Vec3 x = f.spec.point(i);
        if (dot(x, x) <= r2) acc += std::pow(std::abs(f.values[i]), p);
    }
    return acc;
}

double spectral_weighted(const GridField& f, const std::function<double(double)>& weight_of_k2)
{
    SpectralField F = to_spectral(f);
    std::vector<double> terms(F.coeffs.size());
    for (std::size_t i = 0; i < F.coeffs.size(); ++i) {
        Vec3 k = F.spec.frequency(i);
        terms[i] = std::norm(F.coeffs[i]) * weight_of_k2(dot(k, k));
    }
    return std::sqrt(pairwise_sum(terms) * std::pow(2.0 * f.spec.L(), -f.spec.dim()));
}

void check_p(double p)
{
    if (!(p > 1) || !std::isfinite(p)) throw Error("Lp norm requires 1 < p < infinity");
}

void check_k(int k)
{
    if (k < 0 || k > 2) throw Error("Sobolev index must be 0, 1 or 2");
}

}  // namespace

double norm(const GridField& f, const NormKind& kind)
{
    const GridSpec& s = f.spec;
    double vol = std::pow(s.h(), s.dim());
    return std::visit(
        [&](const auto& K) -> double {
            using T = std::decay_t<decltype(K)>;
            if constexpr (std::is_same_v<T, norms::L2Ball>) {
                check_radius(s, K.r);
                return std::sqrt(vol * ball_sumsq(f, K.r));
            } else if constexpr (std::is_same_v<T, norms::HkBall>) {
                check_radius(s, K.r);
                check_k(K.k);
                double acc = ball_sumsq(f, K.r);
                if (K.k >= 1) {
                    auto g = gradient(f);
                    for (auto& ga : g) acc += ball_sumsq(ga, K.r);
                    if (K.k == 2)
                        for (int a = 0; a < s.dim(); ++a)
                            for (int b = 0; b < s.dim(); ++b) acc += ball_sumsq(partial(g[a], b), K.r);
                }
                return std::sqrt(vol * acc);
            } else if constexpr (std::is_same_v<T, norms::HMinus1>) {
                return spectral_weighted(f, [](double k2) { return 1.0 / (1.0 + k2); });
            } else if constexpr (std::is_same_v<T, norms::HMinusHalf>) {
                return spectral_weighted(f, [](double k2) { return 1.0 / std::sqrt(1.0 + k2); });
            } else if constexpr (std::is_same_v<T, norms::Lp>) {
                check_p(K.p);
                return lp_norm(f, K.p);
            } else if constexpr (std::is_same_v<T, norms::LpBall>) {
                check_p(K.p);
                check_radius(s, K.r);
                return std::pow(vol * ball_sum_p(f, K.p, K.r), 1.0 / K.p);
            } else {
                check_k(K.k);
                int k = K.k;
                return spectral_weighted(f, [k](double k2) {
                    double w = 1.0;
                    if (k >= 1) w += k2;
                    if (k >= 2) w += k2 * k2;
                    return w;
                });
            }
        },
        kind);
}

double sup_norm(const GridField& f) { return f.max_abs(); }

double lp_norm(const GridField& f, double p)
{
    if (!(p >= 1)) throw Error("lp_norm requires p >= 1");
    std::vector<double> terms(f.values.size());
    for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = std::pow(std::abs(f.values[i]), p);
    return std::pow(std::pow(f.spec.h(), f.spec.dim()) * pairwise_sum(terms), 1.0 / p);
}

double ck_norm(const GridField& f, int k)
{
    check_k(k);
    double acc = sup_norm(f);
    if (k >= 1) {
        auto g = gradient(f);
        for (auto& ga : g) acc += sup_norm(ga);
        if (k == 2)
            for (int a = 0; a < f.spec.dim(); ++a)
                for (int b = 0; b < f.spec.dim(); ++b) acc += sup_norm(partial(g[a], b));
    }
    return acc;
}

GridField ball_restrict(const GridField& f, double r)
{
    check_radius(f.spec, r);
    GridField out = f;
    double r2 = r * r;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        Vec3 x = f.spec.point(i);
        if (dot(x, x) > r2) out.values[i] = 0.0;
    }
    return out;
}

bool supported_in_ball(const GridField& f, double r)
{
    double r2 = r * r;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        if (f.values[i] == cplx(0.0)) continue;
        Vec3 x = f.spec.point(i);
        if (dot(x, x) > r2) return false;
    }
    return true;
}

namespace {

template <class T>
void put_le(std::ostream& os, T v)
{
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    // Host is little-endian on all supported targets; keep the byte order explicit.
    static_assert(sizeof(T) <= 8);
    uint16_t probe = 1;
    if (*reinterpret_cast<unsigned char*>(&probe) != 1) std::reverse(buf, buf + sizeof(T));
    os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get_le(std::istream& is)
{
    unsigned char buf[sizeof(T)];
    is.read(reinterpret_cast<char*>(buf), sizeof(T));
    if (!is) throw Error("field file truncated");
    uint16_t probe = 1;
    if (*reinterpret_cast<unsigned char*>(&probe) != 1) std::reverse(buf, buf + sizeof(T));
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

}  // namespace

void write_field(std::ostream& os, const GridField& f)
{
    put_le<int32_t>(os, f.spec.dim());
    put_le<int32_t>(os, f.spec.n());
    put_le<double>(os, f.spec.L());
    put_le<double>(os, 0.0);
    for (auto v : f.values) {
        put_le<float>(os, static_cast<float>(v.real()));
        put_le<float>(os, static_cast<float>(v.imag()));
    }
}

FieldHeader read_field_header(std::istream& is)
{
    FieldHeader h{};
    h.dim = get_le<int32_t>(is);
    h.n = get_le<int32_t>(is);
    h.L = get_le<double>(is);
    (void)get_le<double>(is);
    if (h.dim != 2 && h.dim != 3) throw Error("field header: invalid dim " + std::to_string(h.dim));
    if (h.n < 8 || (h.n & (h.n - 1)) != 0) throw Error("field header: invalid n " + std::to_string(h.n));
    if (!(h.L > 0) || !std::isfinite(h.L)) throw Error("field header: invalid L");
    return h;
}

GridField read_field(std::istream& is)
{
    FieldHeader h = read_field_header(is);
    GridField f(GridSpec(h.dim, h.n, h.L));
    for (auto& v : f.values) {
        float re = get_le<float>(is);
        float im = get_le<float>(is);
        v = cplx(re, im);
    }
    return f;
}

void save_field(const std::string& path, const GridField& f)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path + " for writing");
    write_field(os, f);
}

GridField load_field(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open field file " + path);
    return read_field(is);
}

void write_field_csv(std::ostream& os, const GridField& f)
{
    const char* names[3] = {"x0", "x1", "x2"};
    for (int a = 0; a < f.spec.dim(); ++a) os << names[a] << ',';
    os << "re,im\r\n";
    char buf[64];
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        Vec3 x = f.spec.point(i);
        for (int a = 0; a < f.spec.dim(); ++a) {
            std::snprintf(buf, sizeof buf, "%.17g,", x[a]);
            os << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\r\n", f.values[i].real(), f.values[i].imag());
        os << buf;
    }
}

double interpolate_real(const GridField& f, const Vec3& x)
{
    const GridSpec& s = f.spec;
    int n = s.n();
    std::array<int, 3> base{0, 0, 0};
    std::array<std::array<double, 4>, 3> w{};
    for (int a = 0; a < 3; ++a) w[a] = {0, 1, 0, 0};
    for (int a = 0; a < s.dim(); ++a) {
        double t = (x[a] + s.L()) / s.h();
        double fl = std::floor(t);
        double u = t - fl;
        base[a] = static_cast<int>(fl) - 1;
        w[a][0] = -u * (u - 1) * (u - 2) / 6;
        w[a][1] = (u + 1) * (u - 1) * (u - 2) / 2;
        w[a][2] = -(u + 1) * u * (u - 2) / 2;
        w[a][3] = (u + 1) * u * (u - 1) / 6;
    }
    int span2 = s.dim() == 3 ? 4 : 1;
    double acc = 0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < span2; ++k) {
                std::array<int, 3> idx{base[0] + i, base[1] + j, s.dim() == 3 ? base[2] + k : 0};
                for (int a = 0; a < s.dim(); ++a) idx[a] = ((idx[a] % n) + n) % n;
                double wt = w[0][i] * w[1][j] * (s.dim() == 3 ? w[2][k] : 1.0);
                acc += wt * f.values[s.flatten(idx)].real();
            }
    return acc;
}

}  // namespace cgolab
