#include "cgolab_cli/commands.hpp"

#include "cgolab_cli/acceptance.hpp"
#include "cgolab_cli/output.hpp"

#include "cgolab/averaging.hpp"
#include "cgolab/dtn.hpp"
#include "cgolab/estimates.hpp"
#include "cgolab/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace cgolab::cli {

namespace {

Json vec_json(const Vec3& v) { return Json::array({v[0], v[1], v[2]}); }

// Non-finite values become null.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

XiVariant variant_of(const ExperimentConfig& c)
{
    return c.get_string("xi.variant", "xi1") == "xi2" ? XiVariant::Xi2 : XiVariant::Xi1;
}

Frame frame_of(const ExperimentConfig& c, int dim)
{
    Frame f;
    f.variant = variant_of(c);
    if (c.has("frame.sigma1") || c.has("frame.sigma2")) {
        f.sigma1 = c.get_vec3("frame.sigma1");
        f.sigma2 = c.get_vec3("frame.sigma2");
        f.sigma3 = c.get_vec3("frame.sigma3", cross(f.sigma1, f.sigma2));
        return f;
    }
    if (dim == 2) {
        f.sigma1 = {0.6, 0.8, 0};
        f.sigma2 = {-0.8, 0.6, 0};
        f.sigma3 = {0, 0, 1};
        return f;
    }
    Frame g = frame_about(normalized(Vec3{0.36, -0.48, 0.8}), 0, 0);
    g.variant = f.variant;
    return g;
}

ComplexFrequency xi_at(const Frame& f, double s, int dim) { return frame_xi(f, s, dim); }

BornOptions born_of(const ExperimentConfig& c)
{
    BornOptions o;
    o.tol = c.get_double("born.tol", o.tol);
    o.max_iter = static_cast<int>(c.get_int("born.max_iter", o.max_iter));
    return o;
}

GridField field_of(const ExperimentConfig& c, const std::string& key, double default_support = 1.0)
{
    return c.get_recipe(key).to_grid(c.grid(), c.get_double("potential.support", default_support));
}

MeshField mesh_field(const DomainMesh& mesh, const Recipe& r)
{
    if (r.grid_only()) throw Error("DtN coefficients must be analytic recipes");
    return MeshField::sample(mesh, [&](const Vec3& x) { return r.evaluate(x); });
}

void add_check(RunReport& rep, const std::string& name, bool pass, const std::string& detail)
{
    rep.checks.push_back({name, pass, detail});
}

double slope_or_nan(const std::vector<double>& x, const std::vector<double>& y)
{
    std::vector<double> a, b;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] > 0 && y[i] > 0) a.push_back(x[i]), b.push_back(y[i]);
    return a.size() >= 2 ? loglog_slope(a, b) : std::nan("");
}

void multiplier_check(const ExperimentConfig& c, RunReport& rep)
{
    GridSpec g = c.grid();
    Frame f = frame_of(c, g.dim());
    auto samples = static_cast<std::size_t>(c.get_int("multiplier.samples", 100));
    double tol = c.get_double("multiplier.tol", 1e-12);
    Csv csv({"s", "xi_abs", "count_regularized", "min_abs_denominator", "delta_floor", "max_rel_error"});
    std::mt19937_64 rng(stream_seed(c.seed(), 0xa11));
    std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
    bool all_k0 = true;
    double worst = 0;
    KernelOptions opts;
    opts.enforce_support = false;
    for (double s : c.get_list("xi.s")) {
        ComplexFrequency xi = xi_at(f, s, g.dim());
        KernelMultiplier K(xi, g, opts);
        const auto& r = K.report();
        all_k0 = all_k0 && r.count_regularized >= 1;
        double err = 0;
        for (std::size_t t = 0; t < samples; ++t) {
            std::size_t idx;
            Vec3 k;
            cplx den;
            do {
                idx = pick(rng);
                k = g.frequency(idx);
                den = symbol(xi, k);
            } while (std::abs(den) < 1e-6 * xi.abs() * xi.abs());
            SpectralField F(g);
            F.coeffs[idx] = 1.0;
            GridField W = K.apply(from_spectral(F));
            GridField E = from_spectral(F);
            for (auto& v : E.values) v /= den;
            double m = 0, ref = 0;
            for (std::size_t i = 0; i < g.size(); ++i) {
                m = std::max(m, std::abs(W.values[i] - E.values[i]));
                ref = std::max(ref, std::abs(E.values[i]));
            }
            err = std::max(err, m / ref);
        }
        worst = std::max(worst, err);
        csv.cell(s).cell(xi.abs()).cell(static_cast<std::uint64_t>(r.count_regularized)).cell(r.min_abs_denominator)
            .cell(r.delta_floor).cell(err);
        csv.end_row();
    }
    rep.files.push_back({"multiplier-check.csv", csv.str()});
    rep.summary["max_rel_error"] = worst;
    rep.summary["samples_per_s"] = samples;
    add_check(rep, "k0_regularized", all_k0, "k = 0 lies on the characteristic set for every s");
    add_check(rep, "single_mode_exact", worst <= tol, "max relative error " + num(worst) + " vs " + num(tol));
}

void decay_scan(const ExperimentConfig& c, RunReport& rep)
{
    GridSpec g = c.grid();
    auto q = PotentialSplit::plain(field_of(c, "potential"));
    ScanNorm second = c.get_string("scan.norm", "h1") == "lcritical" ? ScanNorm::Lcritical : ScanNorm::H1;
    auto rows = vanishing_scan(q, c.get_list("xi.s"), frame_of(c, g.dim()), second, born_of(c));
    Csv csv({"s", "l2", second == ScanNorm::H1 ? "h1_b2" : "lcritical_b2", "converged", "iterations", "last_ratio"});
    std::vector<double> s, l2, sec;
    bool conv = true;
    for (const auto& r : rows) {
        csv.cell(r.s).cell(r.l2).cell(r.second).cell(r.converged).cell(r.iterations).cell(r.last_ratio);
        csv.end_row();
        s.push_back(r.s), l2.push_back(r.l2), sec.push_back(r.second);
        conv = conv && r.converged;
    }
    rep.files.push_back({"decay-scan.csv", csv.str()});
    rep.summary["slope_l2"] = number(slope_or_nan(s, l2));
    rep.summary["slope_second"] = number(slope_or_nan(s, sec));
    add_check(rep, "all_converged", conv, "every Born solve converged");
}

void born(const ExperimentConfig& c, RunReport& rep)
{
    GridSpec g = c.grid();
    GridField qf = field_of(c, "potential");
    auto q = PotentialSplit::plain(qf);
    Frame f = frame_of(c, g.dim());
    Csv csv({"s", "step", "increment", "ratio", "residual"});
    Json solves = Json::array();
    bool conv = true;
    for (double s : c.get_list("xi.s")) {
        ComplexFrequency xi = xi_at(f, s, g.dim());
        Json j;
        j["s"] = s;
        try {
            CgoSolution sol = born_solve(q, xi, born_of(c));
            for (const auto& r : sol.trace) {
                csv.cell(s).cell(r.step).cell(r.increment).cell(r.ratio).cell(r.residual);
                csv.end_row();
            }
            j["converged"] = sol.converged;
            j["iterations"] = sol.iterations;
            j["reference_norm"] = number(sol.reference_norm);
            j["w_h1_b2"] = number(h1_ball_norm(to_spectral(sol.w), 2.0));
            j["corrector_residual"] = number(corrector_residual(qf, sol.w, xi));
            j["count_regularized"] = sol.kernel.count_regularized;
            conv = conv && sol.converged;
        } catch (const BornError& e) {
            for (const auto& r : e.trace()) {
                csv.cell(s).cell(r.step).cell(r.increment).cell(r.ratio).cell(r.residual);
                csv.end_row();
            }
            j["converged"] = false;
            j["error"] = e.what();
            conv = false;
        }
        solves.push_back(j);
    }
    rep.files.push_back({"born-solve.csv", csv.str()});
    rep.summary["solves"] = solves;
    add_check(rep, "converged", conv, "every Born solve converged");
}

void ratio(const ExperimentConfig& c, RunReport& rep)
{
    GridSpec g = c.grid();
    CaseId id = parse_case(c.get_string("case"));
    EstimateCase ec = make_case(id, static_cast<int>(c.get_int("case.k", 0)), c.get_double("case.r", 1.0));
    ScanInput in;
    GridField p = field_of(c, "potential");
    if (id == CaseId::LEM1 || id == CaseId::LEM2 || id == CaseId::LEMNEW) {
        if (!c.has("weight")) throw Error(std::string(case_name(id)) + " needs a weight recipe (V)");
        in.V = field_of(c, "weight");
        if (id == CaseId::LEMNEW) {
            in.q = PotentialSplit::plain(p);
        } else {
            GridField g2 = c.has("potential2") ? field_of(c, "potential2") : GridField(g);
            in.q = PotentialSplit::div_form({p, p, p}, g2);
        }
    } else {
        in.f = p;
    }
    Frame f = frame_of(c, g.dim());
    std::vector<ComplexFrequency> xis;
    for (double s : c.get_list("xi.s")) xis.push_back(xi_at(f, s, g.dim()));
    auto rows = ratio_scan(ec, in, xis);
    Csv csv({"s", "xi_abs", "lhs", "rhs", "raw", "ratio"});
    std::vector<double> x, raw, r;
    bool finite = true;
    for (const auto& row : rows) {
        csv.cell(row.s).cell(row.xi_abs).cell(row.lhs).cell(row.rhs).cell(row.raw).cell(row.ratio);
        csv.end_row();
        x.push_back(row.xi_abs), raw.push_back(row.raw), r.push_back(row.ratio);
        finite = finite && std::isfinite(row.ratio);
    }
    rep.files.push_back({"ratio-scan.csv", csv.str()});
    rep.summary["case"] = case_name(id);
    rep.summary["lhs"] = ec.lhs_desc;
    rep.summary["rhs"] = ec.rhs_desc;
    rep.summary["expected_xi_power"] = ec.expected_xi_power;
    rep.summary["slope_raw"] = number(slope_or_nan(x, raw));
    rep.summary["slope_ratio"] = number(slope_or_nan(x, r));
    add_check(rep, "finite", finite, "every ratio is finite");
}

void avg(const ExperimentConfig& c, RunReport& rep)
{
    XiVariant v = variant_of(c);
    auto samples = static_cast<std::size_t>(c.get_int("avg.samples", 100000));
    Csv csv({"R", "p", "k_abs", "mc_samples", "value", "std_error", "bound", "ratio", "cap_hits", "flagged"});
    bool clean = true;
    Json fits = Json::array();
    for (double p : c.get_list("avg.p")) {
        double lo = INFINITY, hi = 0;
        for (double R : c.get_list("avg.R"))
            for (double k : c.get_list("avg.k")) {
                AvgEstimate e = avg_kernel_power(R, Vec3{k, 0, 0}, p, samples, c.seed(), v);
                csv.cell(e.R).cell(e.p).cell(e.k_abs).cell(static_cast<std::uint64_t>(e.mc_samples)).cell(e.value)
                    .cell(e.std_error).cell(e.bound_value).cell(e.ratio).cell(static_cast<std::uint64_t>(e.cap_hits))
                    .cell(e.flagged);
                csv.end_row();
                clean = clean && !e.flagged;
                lo = std::min(lo, e.ratio);
                hi = std::max(hi, e.ratio);
            }
        fits.push_back({{"p", p}, {"C_min", lo}, {"C_max", hi}, {"spread", hi / lo}});
    }
    rep.files.push_back({"avg-estimate.csv", csv.str()});
    rep.summary["variant"] = v == XiVariant::Xi2 ? "xi2" : "xi1";
    rep.summary["constants"] = fits;
    add_check(rep, "cap_hits", clean, "cap hits below 0.01% of samples in every cell");
}

void shells(const ExperimentConfig& c, RunReport& rep)
{
    ShellSelection sel = c.has("shell.a") ? select_shells(ShellProfile::from_sequence(c.get_list("shell.a")))
                                          : shell_select(to_spectral(field_of(c, "potential")));
    Csv csv({"n", "a_n", "b_n", "n_b_n", "selected"});
    double total = 0;
    for (std::size_t i = 0; i < sel.profile.a.size(); ++i) {
        int n = sel.profile.shell(i);
        bool in = std::find(sel.selected.begin(), sel.selected.end(), n) != sel.selected.end();
        csv.cell(n).cell(sel.profile.a[i]).cell(sel.profile.b[i]).cell(sel.profile.nb(i)).cell(in);
        csv.end_row();
        total += sel.profile.a[i];
    }
    rep.files.push_back({"shell-select.csv", csv.str()});
    rep.summary["min_n_b_n"] = sel.min_nb;
    rep.summary["argmin"] = sel.argmin;
    rep.summary["sum_a"] = total;
    rep.summary["selected"] = sel.selected;
    add_check(rep, "selected", !sel.selected.empty(), "at least one shell selected");
}

void energy(const ExperimentConfig& c, RunReport& rep)
{
    SpectralField Q = to_spectral(field_of(c, "potential"));
    auto frames = static_cast<std::size_t>(c.get_int("energy.frames", 16));
    EnergyOptions o;
    o.mid_samples = static_cast<std::size_t>(c.get_int("energy.mid_samples", o.mid_samples));
    o.near_samples = static_cast<std::size_t>(c.get_int("energy.near_samples", o.near_samples));
    Csv csv({"R", "frames", "mc_samples", "value", "std_error", "bound", "ratio", "base_term"});
    std::vector<double> Rs, vals;
    bool finite = true;
    for (double R : c.get_list("energy.R")) {
        AvgEstimate e = avg_energy_functional(R, Q, frames, c.seed(), variant_of(c), o);
        csv.cell(R).cell(static_cast<std::uint64_t>(frames)).cell(static_cast<std::uint64_t>(e.mc_samples)).cell(e.value)
            .cell(e.std_error).cell(e.bound_value).cell(e.ratio).cell(e.base_term);
        csv.end_row();
        Rs.push_back(R), vals.push_back(e.value);
        finite = finite && std::isfinite(e.value);
    }
    rep.files.push_back({"energy.csv", csv.str()});
    rep.summary["slope"] = number(slope_or_nan(Rs, vals));
    add_check(rep, "finite", finite, "every frame average is finite");
}

void dtn(const ExperimentConfig& c, RunReport& rep)
{
    DomainMesh mesh(static_cast<int>(c.get_int("dtn.dim", 3)), static_cast<int>(c.get_int("dtn.m")));
    MeshField coef = mesh_field(mesh, c.get_recipe("dtn.coefficient"));
    bool cond = c.get_string("dtn.kind") == "conductivity";
    FluxScheme scheme = c.get_string("dtn.scheme", "one-sided") == "variational" ? FluxScheme::Variational : FluxScheme::OneSided;
    Coefficient k = cond ? Coefficient(Conductivity{coef}) : Coefficient(Schrodinger{coef});
    DirichletSolver S(mesh, k);
    DtnMatrix A = assemble_dtn(mesh, k, scheme);
    std::ostringstream bin;
    write_dtn(bin, A);
    rep.files.push_back({"dtn-assemble.bin", bin.str()});
    Csv csv({"index", "face", "x0", "x1", "x2", "n0", "n1", "n2"});
    for (std::size_t i = 0; i < mesh.boundary().size(); ++i) {
        const auto& b = mesh.boundary()[i];
        Vec3 x = mesh.point(b.node);
        csv.cell(static_cast<std::uint64_t>(i)).cell(b.face).cell(x[0]).cell(x[1]).cell(x[2]).cell(b.normal[0])
            .cell(b.normal[1]).cell(b.normal[2]);
        csv.end_row();
    }
    rep.files.push_back({"dtn-nodes.csv", csv.str()});
    double asym = asymmetry(A);
    rep.summary["kind"] = cond ? "conductivity" : "schrodinger";
    rep.summary["scheme"] = scheme == FluxScheme::Variational ? "variational" : "one-sided";
    rep.summary["dim"] = mesh.dim();
    rep.summary["m"] = mesh.m();
    rep.summary["size"] = A.size;
    rep.summary["asymmetry"] = asym;
    rep.summary["pivot_ratio"] = S.pivot_ratio();
    if (scheme == FluxScheme::Variational) add_check(rep, "symmetric", asym <= 1e-8, "asymmetry " + num(asym));
}

void probe(const ExperimentConfig& c, RunReport& rep)
{
    DomainMesh mesh(3, static_cast<int>(c.get_int("dtn.m")));
    int mid = (mesh.m() + 1) / 2;
    BoundaryNodeId z{static_cast<int>(c.get_int("probe.face", 0)), static_cast<int>(c.get_int("probe.a", mid)),
                     static_cast<int>(c.get_int("probe.b", mid))};
    MeshField g1 = mesh_field(mesh, c.get_recipe("probe.gamma1")), g2 = mesh_field(mesh, c.get_recipe("probe.gamma2"));
    ProbeResult r = boundary_probe(mesh, g1, g2, z, static_cast<int>(c.get_int("probe.steps", 4)));
    Csv csv({"step", "distance", "value", "calibration", "ratio"});
    bool ok = true;
    for (std::size_t j = 0; j < r.values.size(); ++j) {
        csv.cell(static_cast<int>(j + 1)).cell(r.distances[j]).cell(r.values[j]).cell(r.calibration[j]).cell(r.ratios[j]);
        csv.end_row();
        ok = ok && r.calibration[j] > 0 && std::isfinite(r.ratios[j]);
    }
    rep.files.push_back({"boundary-probe.csv", csv.str()});
    rep.summary["z"] = vec_json(r.z);
    rep.summary["limit"] = r.limit;
    rep.summary["extrapolated"] = r.extrapolated;
    add_check(rep, "calibrated", ok, "calibration positive and ratios finite at every step");
}

void uniqueness(const ExperimentConfig& c, RunReport& rep)
{
    Theorem th = parse_theorem(c.get_string("uniqueness.theorem"));
    auto q1 = PotentialSplit::plain(field_of(c, "potential", 0.5));
    auto q2 = PotentialSplit::plain(field_of(c, "potential2", 0.5));
    auto dirs = design_directions();
    auto nd = static_cast<std::size_t>(c.get_int("uniqueness.directions", 26));
    if (nd < 1 || nd > dirs.size()) throw Error("uniqueness.directions must lie in 1..26");
    dirs.resize(nd);
    UniquenessOptions o;
    o.born = born_of(c);
    o.epsilon = c.get_double("uniqueness.epsilon", o.epsilon);
    UniquenessRun run = run_uniqueness(th, q1, q2, c.get_list("xi.s", std::vector<double>{32, 64, 128}), dirs, c.seed(), o);

    Json rows = Json::array();
    for (const auto& r : run.rows)
        rows.push_back({{"direction", r.direction},
                        {"s_nominal", r.s_nominal},
                        {"s", r.s},
                        {"sigma1", vec_json(r.frame.sigma1)},
                        {"sigma2", vec_json(r.frame.sigma2)},
                        {"sigma3", vec_json(r.frame.sigma3)},
                        {"sigma_s", vec_json(r.sigma_s)},
                        {"I_re", r.value.real()},
                        {"I_im", r.value.imag()},
                        {"moment_ref", r.moment_ref},
                        {"gap", r.gap},
                        {"converged1", r.converged1},
                        {"converged2", r.converged2},
                        {"iterations1", r.iterations1},
                        {"iterations2", r.iterations2},
                        {"w1_h1_b2", number(r.w1_norm)},
                        {"w2_h1_b2", number(r.w2_norm)},
                        {"shell_selected", r.shell_selected},
                        {"used", r.used}});
    Json limits = Json::array();
    for (const auto& L : run.limits)
        limits.push_back({{"sigma0", vec_json(L.sigma0)},
                          {"moment", L.moment},
                          {"limit_re", L.limit.real()},
                          {"limit_im", L.limit.imag()},
                          {"last_gap", L.last_gap},
                          {"gap_slope", number(L.gap_slope)},
                          {"rows_used", L.rows_used},
                          {"rows_excluded", L.rows_excluded}});
    Json out;
    out["theorem"] = theorem_name(th);
    out["seed"] = run.seed;
    out["s_list"] = run.s_list;
    out["selected_shells"] = run.selected_shells;
    out["excluded"] = run.excluded;
    out["rows"] = rows;
    out["limits"] = limits;
    rep.files.push_back({"uniqueness-run.json", out.dump(2) + "\n"});

    Csv csv({"direction", "sigma0_x", "sigma0_y", "sigma0_z", "moment"});
    for (std::size_t i = 0; i < run.moments.values.size(); ++i) {
        const Vec3& d = run.moments.directions[i];
        csv.cell(static_cast<std::uint64_t>(i)).cell(d[0]).cell(d[1]).cell(d[2]).cell(run.moments.values[i]);
        csv.end_row();
    }
    rep.files.push_back({"moments.csv", csv.str()});
    MomentInversionReport mi = moment_inversion_check(run.moments, q1.potential() - q2.potential());
    rep.summary["max_abs_moment"] = run.moments.max_abs;
    rep.summary["qdiff_l2"] = mi.qdiff_l2;
    rep.summary["margin"] = mi.margin;
    double worst = 0;
    for (const auto& L : run.limits) worst = std::max(worst, L.moment != 0 ? L.last_gap / std::abs(L.moment) : L.last_gap);
    rep.summary["worst_relative_last_gap"] = worst;
    add_check(rep, "all_rows_converged", run.excluded == 0, std::to_string(run.excluded) + " rows excluded");
}

void accept(const ExperimentConfig&, RunReport& rep, std::ostream* log)
{
    auto results = run_acceptance({}, log);
    Csv csv({"criterion", "name", "pass", "seconds", "budget_seconds", "detail"});
    for (const auto& r : results) {
        csv.cell(r.id).cell(r.name).cell(r.pass).cell(r.seconds).cell(r.budget_seconds).cell(r.detail);
        csv.end_row();
        add_check(rep, "criterion_" + std::to_string(r.id), r.pass, r.detail);
    }
    rep.files.push_back({"acceptance.csv", csv.str()});
}

}  // namespace

bool RunReport::passed() const
{
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

Json RunReport::to_json() const
{
    Json j;
    j["command"] = command;
    j["config"] = config;
    j["summary"] = summary;
    Json files_j = Json::array();
    for (const auto& f : files) files_j.push_back(f.name);
    j["outputs"] = files_j;
    Json checks_j = Json::array();
    for (const auto& c : checks) checks_j.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    j["checks"] = checks_j;
    j["passed"] = passed();
    j["tolerances"] = tolerances;
    j["wall_seconds"] = wall_seconds;
    return j;
}

std::string plan(const ExperimentConfig& c)
{
    std::ostringstream os;
    os << "command: " << c.command << "\n";
    if (c.has("grid.n") || c.has("potential")) {
        try {
            GridSpec g = c.grid();
            os << "grid: dim " << g.dim() << ", n " << g.n() << ", L " << g.L() << "\n";
        } catch (const Error&) {
        }
    }
    for (const auto& [k, v] : c.values()) os << "  " << k << " = " << v << "\n";
    const std::string& cmd = c.command;
    auto count = [&](const char* key) { return c.has(key) ? c.get_list(key).size() : std::size_t(0); };
    if (cmd == "decay-scan" || cmd == "born-solve" || cmd == "ratio-scan" || cmd == "multiplier-check")
        os << "rows: " << count("xi.s") << " values of s\n";
    else if (cmd == "avg-estimate")
        os << "rows: " << count("avg.R") * count("avg.k") * count("avg.p") << " (R, |k|, p) cells of "
           << c.get_int("avg.samples", 100000) << " samples\n";
    else if (cmd == "energy")
        os << "rows: " << count("energy.R") << " values of R, " << c.get_int("energy.frames", 16) << " frames each\n";
    else if (cmd == "uniqueness-run")
        os << "rows: " << c.get_int("uniqueness.directions", 26) << " directions x "
           << (c.has("xi.s") ? count("xi.s") : 3) << " values of s, two Born solves per row\n";
    else if (cmd == "accept")
        os << "rows: " << kCriteria << " acceptance criteria\n";
    os << "outputs: " << c.get_string("out", "cgolab-out") << "/\n";
    return os.str();
}

RunReport run(const ExperimentConfig& config, std::ostream* log)
{
    auto missing = check_required(config);
    if (!missing.empty()) throw ConfigErrors(missing);
    auto t0 = std::chrono::steady_clock::now();
    RunReport rep;
    rep.command = config.command;
    rep.config = config.serialize();
    rep.tolerances = {{"born.tol", config.get_double("born.tol", BornOptions{}.tol)},
                      {"multiplier.tol", config.get_double("multiplier.tol", 1e-12)},
                      {"kernel_power_cap", kKernelPowerCap},
                      {"dtn_pivot_threshold", kPivotThreshold},
                      {"solution_residual_tol", kSolutionResidualTol}};
    const std::string& cmd = config.command;
    try {
        if (cmd == "multiplier-check") multiplier_check(config, rep);
        else if (cmd == "decay-scan") decay_scan(config, rep);
        else if (cmd == "born-solve") born(config, rep);
        else if (cmd == "ratio-scan") ratio(config, rep);
        else if (cmd == "avg-estimate") avg(config, rep);
        else if (cmd == "shell-select") shells(config, rep);
        else if (cmd == "energy") energy(config, rep);
        else if (cmd == "dtn-assemble") dtn(config, rep);
        else if (cmd == "boundary-probe") probe(config, rep);
        else if (cmd == "uniqueness-run") uniqueness(config, rep);
        else if (cmd == "accept") accept(config, rep, log);
        else throw Error("unknown command '" + cmd + "'");
    } catch (const ConfigErrors&) {
        throw;
    } catch (const Error& e) {
        throw Error(cmd + ": " + e.what());
    }
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

void write_outputs(const RunReport& report, const std::string& dir)
{
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto put = [&](const std::string& name, const std::string& content) {
        std::ofstream out(fs::path(dir) / name, std::ios::binary);
        if (!out) throw Error("cannot write " + (fs::path(dir) / name).string());
        out << content;
    };
    for (const auto& f : report.files) put(f.name, f.content);
    put("report.json", report.to_json().dump(2) + "\n");
}

}  // namespace cgolab::cli
