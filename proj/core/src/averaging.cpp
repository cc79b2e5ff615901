#include "cgolab/averaging.hpp"
#include "cgolab/parallel.hpp"

#include <algorithm>
#include <random>

namespace cgolab {

namespace {

Vec3 uniform_sphere(std::mt19937_64& rng)
{
    std::normal_distribution<double> N(0, 1);
    for (;;) {
        Vec3 v{N(rng), N(rng), N(rng)};
        double n = norm(v);
        if (n > 1e-12) return (1.0 / n) * v;
    }
}

// Orthonormal basis of the plane orthogonal to a unit vector.
std::pair<Vec3, Vec3> complement(const Vec3& a)
{
    Vec3 t = std::abs(a[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    Vec3 u = normalized(t - dot(t, a) * a);
    return {u, cross(a, u)};
}

}  // namespace

FrameSample sample_frame(double R, std::uint64_t seed, std::uint64_t stream, int dim)
{
    if (!(R > 10)) throw Error("sample_frames: R > 10 required");
    if (dim != 2 && dim != 3) throw Error("sample_frames: dim must be 2 or 3");
    std::mt19937_64 rng(stream_seed(seed, stream));
    std::uniform_real_distribution<double> U(0, 1);
    FrameSample f;
    f.rng_stream_id = stream;
    double u = (static_cast<double>(stream % kStrata) + U(rng)) / kStrata;
    f.s = R / 2 + 1.5 * R * u;
    double sign = U(rng) < 0.5 ? -1.0 : 1.0;
    if (dim == 3) {
        f.sigma1 = uniform_sphere(rng);
        auto [e, g] = complement(f.sigma1);
        double th = 2 * M_PI * U(rng);
        f.sigma2 = normalized(std::cos(th) * e + std::sin(th) * g);
        f.sigma3 = sign * cross(f.sigma1, f.sigma2);
    } else {
        double th = 2 * M_PI * U(rng);
        f.sigma1 = {std::cos(th), std::sin(th), 0};
        f.sigma2 = {-sign * f.sigma1[1], sign * f.sigma1[0], 0};
    }
    return f;
}

std::vector<FrameSample> sample_frames(double R, std::size_t count, std::uint64_t seed, int dim)
{
    if (count < 1) throw Error("sample_frames: count must be positive");
    std::vector<FrameSample> out(count);
    parallel_for(count, [&](std::size_t i) { out[i] = sample_frame(R, seed, i, dim); });
    return out;
}

ComplexFrequency frame_frequency(const FrameSample& f, XiVariant variant, int dim)
{
    if (variant == XiVariant::Xi2) return make_xi2(f.s, f.sigma1, f.sigma2, f.sigma3);
    if (variant == XiVariant::Xi1) return make_xi1(f.s, f.sigma1, f.sigma2, dim);
    throw Error("frame_frequency: Raw has no frame construction");
}

double kernel_power_bound(double R, double k_abs, double p)
{
    return std::min(std::pow(R, -p) * std::pow(k_abs, -p), std::pow(k_abs, -2 * p));
}

AvgEstimate avg_kernel_power(double R, const Vec3& k, double p, std::size_t mc_samples, std::uint64_t seed,
                             XiVariant variant)
{
    if (!(p >= 1 && p < 2)) throw Error("avg_kernel_power: p must lie in [1, 2)");
    double kn = norm(k);
    if (!(kn >= 2)) throw Error("avg_kernel_power: |k| >= 2 required");
    if (mc_samples < 1000) throw Error("avg_kernel_power: at least 1000 samples");
    if (!(R > 10)) throw Error("avg_kernel_power: R > 10 required");
    std::vector<double> v(mc_samples);
    std::vector<unsigned char> hit(mc_samples, 0);
    parallel_for(mc_samples, [&](std::size_t i) {
        FrameSample f = sample_frame(R, seed, i);
        double den = std::abs(symbol(frame_frequency(f, variant), k));
        double val = den > 0 ? std::pow(den, -p) : kKernelPowerCap;
        if (val > kKernelPowerCap) {
            val = kKernelPowerCap;
            hit[i] = 1;
        }
        v[i] = val;
    });
    AvgEstimate e;
    e.R = R;
    e.p = p;
    e.k_abs = kn;
    e.mc_samples = mc_samples;
    MeanStd ms = mean_std(v);
    e.value = ms.mean;
    e.std_error = ms.std_error;
    for (auto h : hit) e.cap_hits += h;
    e.flagged = e.cap_hits >= 1e-4 * static_cast<double>(mc_samples) && e.cap_hits > 0;
    e.bound_value = kernel_power_bound(R, kn, p);
    e.ratio = e.value / e.bound_value;
    return e;
}

double energy_bound(double R, const SpectralField& q)
{
    const GridSpec& s = q.spec;
    double w = std::pow(s.dk(), s.dim());
    double lr = std::log(R);
    std::vector<double> t(q.coeffs.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        Vec3 k = s.frequency(i);
        double k2 = dot(k, k);
        double m = lr / R;
        if (k2 > 0) m = std::min(m, R * lr / k2);
        t[i] = std::norm(q.coeffs[i]) * m;
    }
    return w * pairwise_sum(t);
}

AvgEstimate avg_energy_functional(double R, const SpectralField& q, std::size_t frames, std::uint64_t seed,
                                  XiVariant variant, const EnergyOptions& opts)
{
    if (q.spec.dim() != 3) throw Error("avg_energy_functional: d = 3 only");
    if (!(R > 10)) throw Error("avg_energy_functional: R > 10 required");
    if (frames < 2) throw Error("avg_energy_functional: at least two frames");
    std::vector<double> v(frames);
    double base = 0;
    for (std::size_t i = 0; i < frames; ++i) {
        FrameSample f = sample_frame(R, seed, i);
        EnergyOptions o = opts;
        o.seed = stream_seed(seed ^ 0x5eedULL, i);
        EnergyBreakdown e = energy_functional(q, frame_frequency(f, variant), o);
        v[i] = e.term_mid + e.term_near;
        base = e.term_base;
    }
    AvgEstimate out;
    out.R = R;
    out.mc_samples = frames * (opts.mid_samples + opts.near_samples);
    MeanStd ms = mean_std(v);
    out.value = ms.mean;
    out.std_error = ms.std_error;
    out.base_term = base;
    out.bound_value = energy_bound(R, q);
    out.ratio = out.bound_value > 0 ? out.value / out.bound_value : 0.0;
    return out;
}

double frame_objective(const SpectralField& q1, const SpectralField& q2, const FrameSample& f, double R, double p)
{
    const GridSpec& s = q1.spec;
    if (q2.spec != s) throw Error("frame_objective: spec mismatch");
    ComplexFrequency x1 = make_xi1(f.s, f.sigma1, f.sigma2, s.dim());
    ComplexFrequency x2 = make_xi2(f.s, f.sigma1, f.sigma2, f.sigma3);
    std::vector<double> t(q1.coeffs.size(), 0.0);
    double Rp = std::pow(R, p);
    auto kpow = [&](const ComplexFrequency& xi, const Vec3& k) {
        double den = std::abs(symbol(xi, k));
        return den < 1e-10 * xi.abs() * xi.abs() ? 0.0 : std::pow(den, -p);
    };
    for (std::size_t i = 0; i < t.size(); ++i) {
        double a1 = std::abs(q1.coeffs[i]), a2 = std::abs(q2.coeffs[i]);
        if (a1 == 0 && a2 == 0) continue;
        Vec3 k = s.frequency(i);
        double v = 0;
        if (a1 > 0) v += kpow(x1, k) * std::pow(a1, p);
        if (a2 > 0) v += kpow(x2, k) * std::pow(a2, p);
        t[i] = v * (std::pow(norm(k), p) + Rp);
    }
    return std::pow(s.dk(), s.dim()) * pairwise_sum(t);
}

FrameChoice select_good_frame(const SpectralField& q1, const SpectralField& q2, double R, const Vec3& target_sigma3,
                              double epsilon, std::uint64_t seed, std::size_t mc_samples, double p)
{
    if (!(epsilon > 0 && epsilon < 1)) throw Error("select_good_frame: epsilon must lie in (0, 1)");
    if (q1.spec.dim() != 3) throw Error("select_good_frame: d = 3 only");
    std::vector<FrameSample> pool;
    for (std::size_t i = 0; i < mc_samples; ++i) {
        FrameSample f = sample_frame(R, seed, i);
        if (norm(f.sigma3 - target_sigma3) <= epsilon) pool.push_back(f);
    }
    if (pool.empty()) throw Error("select_good_frame: no candidate within epsilon of the target after " +
                                  std::to_string(mc_samples) + " draws");
    FrameChoice out;
    out.candidates = pool.size();
    out.pool_objectives.resize(pool.size());
    parallel_for(pool.size(), [&](std::size_t i) { out.pool_objectives[i] = frame_objective(q1, q2, pool[i], R, p); });
    std::size_t best = 0;
    for (std::size_t i = 1; i < pool.size(); ++i)
        if (out.pool_objectives[i] < out.pool_objectives[best]) best = i;
    out.frame = pool[best];
    out.objective = out.pool_objectives[best];
    return out;
}

ShellProfile ShellProfile::from_sequence(std::vector<double> a, int n_lo)
{
    ShellProfile p;
    p.n_lo = n_lo;
    p.b.resize(a.size());
    double prev = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!(a[i] >= 0)) throw Error("shell profile: a_n must be nonnegative");
        p.b[i] = a[i] + 0.5 * prev;
        prev = p.b[i];
    }
    p.a = std::move(a);
    return p;
}

ShellSelection select_shells(const ShellProfile& p)
{
    if (p.a.size() < 3) throw Error("shell selection needs at least 3 shells");
    ShellSelection out;
    out.profile = p;
    std::vector<double> seen;
    out.min_nb = p.nb(0);
    out.argmin = p.shell(0);
    for (std::size_t i = 0; i < p.a.size(); ++i) {
        double v = p.nb(i);
        seen.push_back(v);
        std::vector<double> sorted = seen;
        std::sort(sorted.begin(), sorted.end());
        std::size_t m = sorted.size();
        double median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
        if (v <= median) out.selected.push_back(p.shell(i));
        if (v < out.min_nb) {
            out.min_nb = v;
            out.argmin = p.shell(i);
        }
    }
    return out;
}

ShellSelection shell_select(const SpectralField& q)
{
    const GridSpec& s = q.spec;
    double kmax = 0;
    for (std::size_t i = 0; i < s.size(); ++i) kmax = std::max(kmax, norm(s.frequency(i)));
    const int n_lo = 1;
    int n_hi = static_cast<int>(std::floor(std::log2(kmax)));
    if (n_hi < n_lo) throw Error("shell selection needs at least 3 shells");
    std::vector<std::vector<double>> terms(n_hi - n_lo + 1);
    for (std::size_t i = 0; i < s.size(); ++i) {
        double k = norm(s.frequency(i));
        if (k < std::ldexp(1.0, n_lo)) continue;
        int n = static_cast<int>(std::floor(std::log2(k)));
        // log2 rounding at exact powers of two
        if (std::ldexp(1.0, n) > k) --n;
        else if (std::ldexp(1.0, n + 1) <= k) ++n;
        if (n > n_hi) continue;
        terms[n - n_lo].push_back(std::norm(q.coeffs[i]) / k);
    }
    double w = std::pow(s.dk(), s.dim());
    std::vector<double> a;
    for (auto& t : terms) a.push_back(w * pairwise_sum(t));
    return select_shells(ShellProfile::from_sequence(std::move(a), n_lo));
}

}  // namespace cgolab
