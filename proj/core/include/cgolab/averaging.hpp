#pragma once

#include "cgolab/estimates.hpp"

#include <cstdint>

namespace cgolab {

struct FrameSample {
    double s = 0;
    Vec3 sigma1{}, sigma2{}, sigma3{};
    std::uint64_t rng_stream_id = 0;
};

constexpr int kStrata = 16;

// Frame number `stream` of the sequence for (R, seed): s is drawn from stratum
// stream % 16 of [R/2, 2R], sigma1 uniform on the sphere, sigma2 uniform on the
// great circle orthogonal to it, sigma3 = +-sigma1 x sigma2 by a fair bit.
FrameSample sample_frame(double R, std::uint64_t seed, std::uint64_t stream, int dim = 3);
std::vector<FrameSample> sample_frames(double R, std::size_t count, std::uint64_t seed, int dim = 3);
ComplexFrequency frame_frequency(const FrameSample& f, XiVariant variant, int dim = 3);

struct AvgEstimate {
    double R = 0;
    double p = 0;
    double k_abs = 0;
    std::size_t mc_samples = 0;
    double value = 0;
    double std_error = 0;
    double bound_value = 0;
    double ratio = 0;
    std::size_t cap_hits = 0;
    bool flagged = false;  // cap hits at or above 0.01% of samples
    double base_term = 0;  // energy average only: the xi-independent part
};

constexpr double kKernelPowerCap = 1e12;

double kernel_power_bound(double R, double k_abs, double p);
AvgEstimate avg_kernel_power(double R, const Vec3& k, double p, std::size_t mc_samples, std::uint64_t seed,
                             XiVariant variant);

// Right side of the averaged energy bound, summed over the q^ lattice.
double energy_bound(double R, const SpectralField& q);
// value: frame average of term_mid + term_near; base_term reports the
// xi-independent H^{-1/2} term separately.
AvgEstimate avg_energy_functional(double R, const SpectralField& q, std::size_t frames, std::uint64_t seed,
                                  XiVariant variant, const EnergyOptions& opts = {});

struct FrameChoice {
    FrameSample frame;
    double objective = 0;
    std::vector<double> pool_objectives;
    std::size_t candidates = 0;
};

double frame_objective(const SpectralField& q1, const SpectralField& q2, const FrameSample& f, double R, double p);
FrameChoice select_good_frame(const SpectralField& q1, const SpectralField& q2, double R, const Vec3& target_sigma3,
                              double epsilon, std::uint64_t seed, std::size_t mc_samples = 20000, double p = 1.5);

struct ShellProfile {
    int n_lo = 1;
    std::vector<double> a, b;

    // b_n = sum_{l <= n} 2^{l-n} a_l, starting at shell n_lo.
    static ShellProfile from_sequence(std::vector<double> a, int n_lo = 1);
    int shell(std::size_t i) const { return n_lo + static_cast<int>(i); }
    double nb(std::size_t i) const { return shell(i) * b[i]; }
};

struct ShellSelection {
    ShellProfile profile;
    std::vector<int> selected;
    double min_nb = 0;
    int argmin = 0;
};

// Shells whose n b_n is at or below the median of n b_n over shells up to n.
ShellSelection select_shells(const ShellProfile& p);
// Shells [2^n, 2^{n+1}) for n = 1 .. floor(log2 max|k|).
ShellSelection shell_select(const SpectralField& q);

}  // namespace cgolab
