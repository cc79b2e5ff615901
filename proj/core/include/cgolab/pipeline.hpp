#pragma once

#include "cgolab/averaging.hpp"
#include "cgolab/cgo.hpp"

namespace cgolab {

enum class Theorem { T1, T2, T3 };
const char* theorem_name(Theorem t);
Theorem parse_theorem(const std::string& name);

// The 26 normalized nonzero vectors of {-1,0,1}^3, turned by a fixed rotation so
// that no direction lies on a lattice axis or diagonal.
std::vector<Vec3> design_directions();

// Right-handed frame with sigma3 = sigma0, turned about sigma0 by an angle drawn from (seed, stream).
Frame frame_about(const Vec3& sigma0, std::uint64_t seed, std::uint64_t stream);

struct MomentTable {
    std::vector<Vec3> directions;
    std::vector<double> values;  // h^d sum_{B_2} q_diff e^{sigma.x/2}
    double max_abs = 0;
};
MomentTable compute_moments(const GridField& qdiff, const std::vector<Vec3>& directions);
double moment(const GridField& qdiff, const Vec3& sigma);

struct UniquenessRow {
    std::size_t direction = 0;
    double s_nominal = 0;
    double s = 0;  // differs from s_nominal for T1 (frame drawn from [s, 2s])
    Frame frame;
    Vec3 sigma_s{};  // xi_1 + xi_2, real
    cplx value;      // I(s)
    double moment_ref = 0;  // M(sigma3 of the frame)
    double gap = 0;         // |I(s) - moment_ref|
    bool converged1 = false, converged2 = false;
    int iterations1 = 0, iterations2 = 0;
    double w1_norm = 0, w2_norm = 0;  // H^1(B_2)
    bool shell_selected = true;      // T3: unselected rows are kept for comparison, not fitted
    bool used = false;               // both solves converged
};

struct DirectionLimit {
    Vec3 sigma0{};
    double moment = 0;  // M(sigma0)
    cplx limit;         // intercept of I(s) = a + b/s over converged rows
    double last_gap = 0;
    double gap_slope = 0;  // log-log slope of the gap in s; NaN with fewer than 2 nonzero gaps
    int rows_used = 0;
    int rows_excluded = 0;
};

struct UniquenessOptions {
    BornOptions born;
    double epsilon = 0.15;            // T1 cone around sigma0
    std::size_t frame_draws = 20000;  // T1 candidate draws
    double frame_power = 1.5;
};

struct UniquenessRun {
    Theorem theorem = Theorem::T2;
    std::vector<double> s_list;
    std::vector<int> selected_shells;
    std::uint64_t seed = 0;
    std::vector<UniquenessRow> rows;  // direction-major, s ascending
    std::vector<DirectionLimit> limits;
    MomentTable moments;
    int excluded = 0;
};

UniquenessRun run_uniqueness(Theorem theorem, const PotentialSplit& q1, const PotentialSplit& q2,
                             const std::vector<double>& s_list, const std::vector<Vec3>& sigma0_list,
                             std::uint64_t seed, const UniquenessOptions& opts = {});

// Shell profile of (q1, q2) extended by empty shells up to s_max; T3 fits only the
// rows whose dyadic shell floor(log2 s) is selected.
ShellSelection uniqueness_shells(const PotentialSplit& q1, const PotentialSplit& q2, double s_max);

struct MomentInversionReport {
    double qdiff_l2 = 0;
    double max_abs = 0;
    double margin = 0;  // max |M| / |q_diff|_{L^2}; 0 for q_diff = 0
    bool one_signed = false;
    double mass_in_b1 = 0;
    double positivity_bound = 0;  // e^{-1/2} |mass in B_1| when one-signed and supported in B_1
    double min_abs = 0;
};
MomentInversionReport moment_inversion_check(const MomentTable& moments, const GridField& qdiff);
// Pearson correlation of max|M| against |q_diff|_{L^2} over a set of reports.
double moment_correlation(const std::vector<MomentInversionReport>& reports);

}  // namespace cgolab
