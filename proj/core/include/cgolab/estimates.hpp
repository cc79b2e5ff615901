#pragma once

#include "cgolab/cgo.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace cgolab {

enum class CaseId { SU1, SU2_1, SU2, SU3, LEM1, LEM2, KRS, LEMNEW };

const char* case_name(CaseId id);
CaseId parse_case(const std::string& name);

struct EstimateCase {
    CaseId id = CaseId::SU1;
    // Set for the single-field cases; the LEM cases use composite norms
    // described by the strings.
    std::optional<NormKind> lhs_norm, rhs_norm;
    std::string lhs_desc, rhs_desc;
    int expected_xi_power = 0;
    int k = 0;
    double r = 1.0;
};

// k is the derivative index of the display (ignored where it has none).
EstimateCase make_case(CaseId id, int k = 0, double r = 1.0);

struct ScanInput {
    std::optional<GridField> f;          // SU*, KRS
    std::optional<PotentialSplit> q;     // LEM1/LEM2 (DivForm), LEMNEW (any form)
    std::optional<GridField> V;          // LEM*
};

struct RatioRow {
    double s = 0;
    double xi_abs = 0;
    double lhs = 0;
    double rhs = 0;
    double raw = 0;    // lhs / rhs
    double ratio = 0;  // lhs / (rhs |xi|^expected_xi_power)
};

std::vector<RatioRow> ratio_scan(const EstimateCase& c, const ScanInput& in, const std::vector<ComplexFrequency>& xis);

// |K*f|_{L^p(B_2)} / |f|_{L^{p'}}, p = 2d/(d-2), p' = 2d/(d+2).
double krs_ratio(const GridField& f, const ComplexFrequency& xi, double p);

struct QTilde {
    GridSpec spec;
    std::vector<double> values;  // FFT order, like SpectralField
};
constexpr double kQTildeRadius = 4.0;
QTilde q_tilde(const SpectralField& q);
// Reference implementation: direct scan of every lattice point.
QTilde q_tilde_bruteforce(const SpectralField& q);

enum class DiagonalRule { CellAverage, Exclude };

struct EnergyOptions {
    std::size_t mid_samples = 4000;
    std::size_t near_samples = 2000;
    std::uint64_t seed = 1;
    DiagonalRule diagonal = DiagonalRule::CellAverage;
    // Lattice points with |q^|^2 below prune * max |q^|^2 are dropped from the
    // double sums (0 keeps every nonzero point).
    double prune = 1e-14;
};

struct EnergyBreakdown {
    double term_mid = 0;
    double term_near = 0;
    double term_base = 0;
    double total = 0;
    double mid_std_error = 0;
    double near_std_error = 0;
    std::size_t support_points = 0;
    std::size_t tilde_support_points = 0;
};

// Lattice weight (pi/L)^3 turns sums over the q^ lattice into integrals.
EnergyBreakdown energy_functional(const SpectralField& q, const ComplexFrequency& xi, const EnergyOptions& opts = {});

// Mean of 1/|y|^2 over the ball of radius a whose centre is at distance D.
double ball_mean_inverse_square(double D, double a);

}  // namespace cgolab
