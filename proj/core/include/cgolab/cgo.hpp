#pragma once

#include "cgolab/kernel.hpp"

#include <optional>
#include <string>
#include <variant>

namespace cgolab {

// q = div g1 + g2.
struct DivForm {
    std::vector<GridField> g1;
    GridField g2;
};
struct Plain {
    GridField q;
};
using PotentialForm = std::variant<DivForm, Plain>;

struct SmoothSmall {
    PotentialForm smooth_part;
    PotentialForm small_part;
    double cutoff = 0;
    double small_norm = 0;
    std::string small_norm_kind;
};

struct PotentialSplit {
    PotentialForm form;
    std::optional<SmoothSmall> smooth_small;

    static PotentialSplit plain(GridField q) { return {Plain{std::move(q)}, std::nullopt}; }
    static PotentialSplit div_form(std::vector<GridField> g1, GridField g2) { return {DivForm{std::move(g1), std::move(g2)}, std::nullopt}; }

    const GridSpec& spec() const;
    // The potential q, recombined spectrally for DivForm.
    GridField potential() const;
};

GridField recombine(const PotentialForm& form);

enum class WindowMode { Bump, None };

// Spectral truncation at |k| <= cutoff, re-windowed into B_1 by a C^infinity bump
// (WindowMode::Bump); the remainder is the small part.
PotentialSplit split_smooth_small(const PotentialSplit& q, double cutoff, WindowMode window = WindowMode::Bump);

// C^infinity radial window: 1 on B_{r_in}, 0 outside B_{r_out}.
double smooth_window(double r, double r_in, double r_out);

struct IterationRecord {
    int step = 0;
    double increment = 0;
    double ratio = 0;  // NaN for the first step
    double residual = 0;
};
using IterationTrace = std::vector<IterationRecord>;

struct CgoSolution {
    ComplexFrequency xi;
    GridField w;
    IterationTrace trace;
    bool converged = false;
    int iterations = 0;
    // |K_xi * q|_{H^1(B_2)}, the tolerance reference.
    double reference_norm = 0;
    MultiplierReport kernel;
};

class BornError : public Error {
public:
    BornError(const std::string& what, IterationTrace trace) : Error(what), trace_(std::move(trace)) {}
    const IterationTrace& trace() const { return trace_; }

private:
    IterationTrace trace_;
};

enum class BornStart { Zero, KernelOfQ };

struct BornOptions {
    double tol = 1e-8;
    int max_iter = 100;
    BornStart start = BornStart::Zero;
    std::optional<double> delta_floor;
    double norm_radius = 2.0;
    // Consecutive steps with ratio >= 1 before giving up.
    int divergence_patience = 3;
};

CgoSolution born_solve(const PotentialSplit& q, const ComplexFrequency& xi, const BornOptions& opts = {});

// |f|_{H^1(B_r)} from spectral coefficients.
double h1_ball_norm(const SpectralField& F, double r);

struct AssembledSolution {
    GridField v;
    bool clamped = false;
};
// (1 + w) e^{xi.x/2} inside B_2; zero outside, flagged when that discards values.
AssembledSolution assemble_solution(const GridField& w, const ComplexFrequency& xi, double radius = 2.0);

// Delta w + xi.grad w - q w - q, relative L^2 norm over B_radius. Modes on the
// characteristic set (k = 0 among them) are skipped: the periodic problem has no
// solution there and the kernel regularizes them to zero.
double corrector_residual(const GridField& q, const GridField& w, const ComplexFrequency& xi, double radius = 1.0);

struct Frame {
    Vec3 sigma1{1, 0, 0}, sigma2{0, 1, 0}, sigma3{0, 0, 1};
    XiVariant variant = XiVariant::Xi1;
};
ComplexFrequency frame_xi(const Frame& f, double s, int dim = 3);

enum class ScanNorm { H1, Lcritical };

struct ScanRow {
    double s = 0;
    double l2 = 0;
    double second = 0;  // H^1(B_2) or L^{2d/(d-2)}(B_2)
    bool converged = false;
    int iterations = 0;
    double last_ratio = 0;
};

std::vector<ScanRow> vanishing_scan(const PotentialSplit& q, const std::vector<double>& s_list, const Frame& frame,
                                    ScanNorm second = ScanNorm::H1, const BornOptions& opts = {});

}  // namespace cgolab
