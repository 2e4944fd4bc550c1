#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "degschro/bessel_oracle.hpp"
#include "degschro/core_model.hpp"
#include "degschro/diffusive_damping.hpp"
#include "degschro/errors.hpp"
#include "degschro/io.hpp"
#include "degschro/resolvent_analysis.hpp"
#include "degschro/spatial_discretization.hpp"
#include "degschro/time_evolution.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace degschro;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitThreshold = 4;

constexpr double kKernelThreshold = 1e-4;

struct UsageError : Error {
    using Error::Error;
};

// Flags shared by simulate and scan.
struct PhysicsFlags {
    std::optional<std::string> problem;
    std::optional<double> alpha;
    std::optional<std::string> kappa_file;
    std::optional<double> beta;
    std::optional<double> rho;
    std::optional<std::string> config;
    std::optional<std::size_t> nx;
    std::optional<double> grade;
    std::size_t nxi = kDefaultNxi;
    double xi_min = kDefaultXiMin;
    double xi_max = kDefaultXiMax;
};

struct Run {
    std::string command;
    std::vector<std::string> argv;
    json inputs = json::object();  // name -> git blob hash of each input file
    std::string started;
};

void add_physics(CLI::App* app, PhysicsFlags& f, bool allow_stub) {
    auto* p = app->add_option("--problem", f.problem, "P or Pprime" + std::string(allow_stub ? " (or stub)" : ""));
    if (allow_stub)
        p->check(CLI::IsMember({"P", "Pprime", "stub"}));
    else
        p->check(CLI::IsMember({"P", "Pprime"}));
    auto* a = app->add_option("--alpha", f.alpha, "kappa = x^alpha");
    auto* k = app->add_option("--kappa", f.kappa_file, "CSV with header x,kappa")->check(CLI::ExistingFile);
    a->excludes(k);
    app->add_option("--beta", f.beta, "fractional order, 0 < beta < 1");
    app->add_option("--rho", f.rho, "damping strength (default 1)");
    app->add_option("--config", f.config, "ProblemSpec JSON; flags take precedence")->check(CLI::ExistingFile);
    app->add_option("--nx", f.nx, "x cells (default 400)")->check(CLI::Range(2, 1 << 24));
    app->add_option("--grade", f.grade, "mesh grading exponent in [1, 4]")->check(CLI::Range(1.0, 4.0));
    app->add_option("--nxi", f.nxi, "xi nodes")->capture_default_str();
    app->add_option("--xi-min", f.xi_min, "smallest xi node")->capture_default_str();
    app->add_option("--xi-max", f.xi_max, "largest xi node")->capture_default_str();
}

Tabulated read_kappa_csv(const std::string& path) {
    const auto table = parse_csv(read_text_file(path));
    if (table.header != std::vector<std::string>{"x", "kappa"})
        throw UsageError("--kappa: expected header x,kappa in " + path);
    Tabulated t;
    for (const auto& row : table.rows) {
        if (row.size() != 2) throw UsageError("--kappa: each row needs two fields");
        t.x.push_back(std::stod(row[0]));
        t.kappa.push_back(std::stod(row[1]));
    }
    return t;
}

// Config JSON overlaid with the flags that were given.
json resolve_spec(const PhysicsFlags& f, Run& run) {
    json j = json::object();
    if (f.config) {
        const std::string text = read_text_file(*f.config);
        run.inputs["config"] = git_blob_hash(text);
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            throw UsageError(std::string("--config: ") + e.what());
        }
    }
    if (f.problem) j["variant"] = *f.problem;
    if (f.alpha) {
        j.erase("kappa_samples");
        j["alpha"] = *f.alpha;
    }
    if (f.kappa_file) {
        run.inputs["kappa"] = git_blob_hash(read_text_file(*f.kappa_file));
        const auto t = read_kappa_csv(*f.kappa_file);
        json samples = json::array();
        for (std::size_t i = 0; i < t.x.size(); ++i) samples.push_back({t.x[i], t.kappa[i]});
        j.erase("alpha");
        j["kappa_samples"] = samples;
    }
    if (f.beta) j["beta"] = *f.beta;
    if (f.rho) j["rho"] = *f.rho;
    if (!j.contains("rho")) j["rho"] = 1.0;
    if (!j.contains("variant")) throw UsageError("--problem is required");
    if (!j.contains("beta")) throw UsageError("--beta is required");
    return to_json(problem_spec_from_json(j));
}

json grid_params(const PhysicsFlags& f, const ProblemSpec& spec) {
    return {{"nx", f.nx.value_or(400)},
            {"grade", f.grade.value_or(default_grade(spec))},
            {"nxi", f.nxi},
            {"xi_min", f.xi_min},
            {"xi_max", f.xi_max}};
}

SystemOperator build_operator(const ProblemSpec& spec, const json& g) {
    return assemble_operator(spec, build_x_grid(g.at("nx").get<std::size_t>(), g.at("grade").get<double>()),
                             build_xi_quadrature(spec.beta(), g.at("nxi").get<std::size_t>(),
                                                 g.at("xi_min").get<double>(), g.at("xi_max").get<double>()));
}

void write_output(const fs::path& out, const std::string& name, const std::string& content, json& outputs) {
    write_text_file(out / name, content);
    outputs[name] = git_blob_hash(content);
}

void write_manifest(const fs::path& out, const Run& run, const json& spec, const json& params, const json& outputs,
                    const std::string& status, const std::string& error = {}) {
    json m;
    m["command"] = run.command;
    m["argv"] = run.argv;
    m["tool_version"] = kToolVersion;
    m["spec"] = spec;
    m["params"] = params;
    m["inputs"] = run.inputs;
    m["input_hash"] = git_blob_hash(json{{"command", run.command}, {"spec", spec}, {"params", params}}.dump());
    m["outputs"] = outputs;
    m["started_at"] = run.started;
    m["finished_at"] = utc_timestamp();
    m["status"] = status;
    if (!error.empty()) m["error"] = error;
    write_json_file(out / "manifest.json", m);
}

// ---- simulate ---------------------------------------------------------------------------------

void run_simulate(const json& spec_j, const json& p, const fs::path& out, json& outputs) {
    const auto spec = problem_spec_from_json(spec_j);
    const auto op = build_operator(spec, p.at("grid"));
    const auto preset = preset_from_string(p.at("y0").get<std::string>());
    const auto y0 = prepare_initial_state(op, preset);
    const auto& s = p.at("scheme");
    const auto trace = simulate(op, y0, s.at("t_final").get<double>(), s.at("dt").get<double>(),
                                {.samples = s.at("samples").get<std::size_t>()});
    write_output(out, "trace.csv", trace_csv(trace), outputs);

    const auto pred = theoretical_exponents(spec);
    json fit;
    fit["decay_exponent_predicted"] = pred.decay_exponent;
    fit["max_step_increase"] = trace.max_step_increase;
    fit["balance_defect"] = trace.balance_defect;
    fit["balance_defect_midstate"] = trace.balance_defect_midstate;
    fit["steps"] = trace.steps;
    if (preset == InitialPreset::Zero) {
        fit["fit"] = nullptr;
        fit["reason"] = "zero initial data";
    } else {
        const auto& w = p.at("fit_window");
        const auto d = fit_decay_exponent(trace, w.at(0).get<double>(), w.at(1).get<double>());
        fit["fit"] = {{"t_lo", d.t_lo},         {"t_hi", d.t_hi},         {"exponent", d.exponent},
                      {"intercept", d.intercept}, {"r_squared", d.r_squared}, {"samples", d.samples}};
    }
    const std::string text = fit.dump(2) + "\n";
    write_output(out, "fit.json", text, outputs);
}

std::pair<double, double> parse_window(const std::string& s) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw UsageError("--fit-window: expected LO:HI");
    try {
        return {std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1))};
    } catch (const std::exception&) {
        throw UsageError("--fit-window: expected LO:HI");
    }
}

// ---- scan -------------------------------------------------------------------------------------

// -I on nx + nxi unknowns: ||(i lambda + I)^{-1}|| = 1 / sqrt(1 + lambda^2).
ArrowMatrix stub_operator(std::size_t n, std::size_t m) {
    ArrowMatrix a;
    a.diag.assign(n, -1.0);
    a.lower.assign(n - 1, 0.0);
    a.upper.assign(n - 1, 0.0);
    a.psi_diag.assign(m, -1.0);
    a.row_coupling.assign(m, 0.0);
    a.col_coupling.assign(m, 0.0);
    return a;
}

std::vector<double> scan_lambdas(const json& p) {
    auto lam = log_space(p.at("lambda_min").get<double>(), p.at("lambda_max").get<double>(),
                         p.at("points").get<std::size_t>());
    if (p.at("side").get<std::string>() == "negative")
        for (double& l : lam) l = -l;
    return lam;
}

void run_scan(const json& spec_j, const json& p, const fs::path& out, json& outputs) {
    const auto lam = scan_lambdas(p);
    const auto regime = regime_from_string(p.at("regime").get<std::string>());
    json fit;
    ResolventScan scan;
    if (spec_j.is_null()) {
        const auto& g = p.at("grid");
        const auto a = stub_operator(g.at("nx").get<std::size_t>(), g.at("nxi").get<std::size_t>());
        std::vector<double> norms;
        double worst = 0.0;
        for (double l : lam) {
            norms.push_back(resolvent_norm_euclidean(a, l).norm);
            worst = std::max(worst, std::abs(norms.back() * std::sqrt(1.0 + l * l) - 1.0));
        }
        scan = scan_from_norms(lam, norms, regime);
        fit = {{"regime", to_string(regime)},
               {"operator", "stub"},
               {"exponent", scan.fit.exponent},
               {"r_squared", scan.fit.r_squared},
               {"stable_window", scan.stable_window},
               {"closed_form_max_rel_error", worst}};
    } else {
        const auto spec = problem_spec_from_json(spec_j);
        const auto op = build_operator(spec, p.at("grid"));
        scan = scan_resolvent(op, lam, regime, p.at("threads").get<std::size_t>());
        fit = fit_summary(scan, theoretical_exponents(spec));
        const auto full = fit_power_law(scan.lambda, scan.norm, 0, scan.lambda.size() - 1);
        fit["full_range"] = {{"exponent", full.exponent}, {"r_squared", full.r_squared}};
    }
    write_output(out, "scan.csv", scan_csv(scan), outputs);
    write_output(out, "fit.json", fit.dump(2) + "\n", outputs);
}

// ---- verify-kernel ----------------------------------------------------------------------------

bool run_verify_kernel(const json& p, const fs::path& out, json& outputs) {
    const double beta = p.at("beta").get<double>(), rho = p.at("rho").get<double>();
    derive_constants(beta, rho);
    const auto grid = build_xi_quadrature(beta, p.at("nxi").get<std::size_t>(), p.at("xi_min").get<double>(),
                                          p.at("xi_max").get<double>());
    const double lo = p.at("tau_min").get<double>(), hi = p.at("tau_max").get<double>();
    if (!(lo > 0.0 && lo < hi)) throw DomainError("tau", "need 0 < tau-min < tau-max");
    const auto taus = log_space(lo, hi, p.at("points").get<std::size_t>());
    const auto check = check_kernel(grid, taus, rho);
    write_output(out, "kernel.csv", kernel_check_csv(check), outputs);
    std::cout << "max_rel_error " << fmt_g17(check.max_rel_error) << "\n";
    return check.max_rel_error <= kKernelThreshold;
}

// ---- oracle-compare ---------------------------------------------------------------------------

std::vector<std::size_t> parse_nx_list(const std::string& s) {
    std::vector<std::size_t> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t pos = 0;
            const long n = std::stol(item, &pos);
            if (pos != item.size() || n < 2) throw std::invalid_argument(item);
            v.push_back(static_cast<std::size_t>(n));
        } catch (const std::exception&) {
            throw UsageError("--nx-list: expected comma separated integers >= 2");
        }
    }
    if (v.empty()) throw UsageError("--nx-list is empty");
    return v;
}

void run_oracle_compare(const json& spec_j, const json& p, const fs::path& out, json& outputs) {
    const auto spec = problem_spec_from_json(spec_j);
    OracleOptions opt;
    opt.grade = p.at("grade").get<double>();
    opt.nxi = p.at("nxi").get<std::size_t>();
    opt.xi_min = p.at("xi_min").get<double>();
    opt.xi_max = p.at("xi_max").get<double>();
    if (p.at("rhs").get<std::string>() == "zero") opt.f1 = [](double) { return cplx(0.0); };
    const auto nx = p.at("nx_list").get<std::vector<std::size_t>>();
    const auto c = oracle_refinement(spec, p.at("lambda").get<double>(), nx, opt);
    write_output(out, "oracle.csv", oracle_csv(c), outputs);
    std::cout << "observed_order " << (std::isnan(c.observed_order) ? std::string("nan") : fmt_g17(c.observed_order))
              << "\n";
}

// ---- dispatch ---------------------------------------------------------------------------------

int execute(const std::string& command, const json& spec, const json& params, const fs::path& out, Run run) {
    run.command = command;
    json outputs = json::object();
    try {
        fs::create_directories(out);
        bool pass = true;
        if (command == "simulate")
            run_simulate(spec, params, out, outputs);
        else if (command == "scan")
            run_scan(spec, params, out, outputs);
        else if (command == "verify-kernel")
            pass = run_verify_kernel(params, out, outputs);
        else if (command == "oracle-compare")
            run_oracle_compare(spec, params, out, outputs);
        else
            throw UsageError("unknown command '" + command + "' in manifest");
        write_manifest(out, run, spec, params, outputs, pass ? "ok" : "threshold_failure");
        return pass ? kExitOk : kExitThreshold;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        json diag = e.what();
        if (const auto* c = dynamic_cast<const SpectralCollisionError*>(&e))
            diag = {{"message", e.what()}, {"nearest_eigenvalue", {c->nearest_real(), c->nearest_imag()}}};
        write_manifest(out, run, spec, params, outputs, "numerical_failure", diag.dump());
        return kExitNumerical;
    } catch (const DegenerateDataError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        write_manifest(out, run, spec, params, outputs, "numerical_failure", e.what());
        return kExitNumerical;
    } catch (const InsufficientDataError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        write_manifest(out, run, spec, params, outputs, "numerical_failure", e.what());
        return kExitNumerical;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Degenerate Schrodinger systems with fractional boundary damping"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    Run run;
    run.started = utc_timestamp();
    for (int i = 1; i < argc; ++i) run.argv.emplace_back(argv[i]);

    std::string out;

    PhysicsFlags sim;
    double t_final = 200.0, dt = 0.005;
    std::string y0 = "smooth-bump";
    std::optional<std::string> fit_window;
    std::size_t samples = 2000;
    auto* c_sim = app.add_subcommand("simulate", "time integration, energy trace and decay fit");
    add_physics(c_sim, sim, false);
    c_sim->add_option("--t-final", t_final)->capture_default_str();
    c_sim->add_option("--dt", dt)->capture_default_str();
    c_sim->add_option("--y0", y0)->check(CLI::IsMember({"smooth-bump", "lowest-mode", "zero"}))->capture_default_str();
    c_sim->add_option("--fit-window", fit_window, "LO:HI (default: last decade)");
    c_sim->add_option("--samples", samples, "trace rows after t = 0")->capture_default_str();
    c_sim->add_option("--out", out)->required();

    PhysicsFlags sc;
    double lambda_min = 1e-4, lambda_max = 1e-1;
    std::size_t points = 25, threads = 0;
    std::string regime = "low", side = "positive";
    auto* c_scan = app.add_subcommand("scan", "resolvent norm along the imaginary axis");
    add_physics(c_scan, sc, true);
    c_scan->add_option("--lambda-min", lambda_min)->capture_default_str();
    c_scan->add_option("--lambda-max", lambda_max)->capture_default_str();
    c_scan->add_option("--points", points)->capture_default_str();
    c_scan->add_option("--regime", regime)->check(CLI::IsMember({"low", "high"}))->capture_default_str();
    c_scan->add_option("--side", side, "sign of lambda")
        ->check(CLI::IsMember({"positive", "negative"}))
        ->capture_default_str();
    c_scan->add_option("--threads", threads, "0: hardware concurrency")->capture_default_str();
    c_scan->add_option("--out", out)->required();

    double k_beta = 0.5, k_rho = 1.0, tau_min = 1e-2, tau_max = 1e2, k_xi_min = kDefaultXiMin,
           k_xi_max = kDefaultXiMax;
    std::size_t k_nxi = kDefaultNxi, k_points = 41;
    auto* c_kernel = app.add_subcommand("verify-kernel", "quadrature kernel against the closed form");
    c_kernel->add_option("--beta", k_beta)->required();
    c_kernel->add_option("--rho", k_rho)->capture_default_str();
    c_kernel->add_option("--tau-min", tau_min)->capture_default_str();
    c_kernel->add_option("--tau-max", tau_max)->capture_default_str();
    c_kernel->add_option("--points", k_points)->capture_default_str();
    c_kernel->add_option("--nxi", k_nxi)->capture_default_str();
    c_kernel->add_option("--xi-min", k_xi_min)->capture_default_str();
    c_kernel->add_option("--xi-max", k_xi_max)->capture_default_str();
    c_kernel->add_option("--out", out)->required();

    double o_alpha = 0.5, o_beta = 0.5, o_rho = 1.0, o_lambda = 1e-3, o_grade = 3.0, o_xi_min = kDefaultXiMin,
           o_xi_max = kDefaultXiMax;
    std::size_t o_nxi = kDefaultNxi;
    std::string nx_list = "100,200,400,800,1600", rhs = "one";
    auto* c_oracle = app.add_subcommand("oracle-compare", "discrete resolvent against the Bessel closed form");
    c_oracle->add_option("--alpha", o_alpha)->required();
    c_oracle->add_option("--beta", o_beta)->required();
    c_oracle->add_option("--rho", o_rho)->capture_default_str();
    c_oracle->add_option("--lambda", o_lambda)->required();
    c_oracle->add_option("--nx-list", nx_list)->capture_default_str();
    c_oracle->add_option("--grade", o_grade)->check(CLI::Range(1.0, 4.0))->capture_default_str();
    c_oracle->add_option("--nxi", o_nxi)->capture_default_str();
    c_oracle->add_option("--xi-min", o_xi_min)->capture_default_str();
    c_oracle->add_option("--xi-max", o_xi_max)->capture_default_str();
    c_oracle->add_option("--rhs", rhs, "f1 = 1 or f1 = 0")->check(CLI::IsMember({"one", "zero"}))->capture_default_str();
    c_oracle->add_option("--out", out)->required();

    std::string from;
    auto* c_rerun = app.add_subcommand("rerun", "repeat a run from its manifest");
    c_rerun->add_option("dir", from, "directory holding manifest.json")->required()->check(CLI::ExistingDirectory);
    c_rerun->add_option("--out", out, "output directory (default: the source directory)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (c_sim->parsed()) {
            const json spec = resolve_spec(sim, run);
            const auto ps = problem_spec_from_json(spec);
            if (!(dt > 0.0 && t_final > 0.0 && dt <= t_final)) throw UsageError("need 0 < dt <= t-final");
            const auto w = fit_window ? parse_window(*fit_window) : std::pair{t_final / 10.0, t_final};
            const json params = {{"grid", grid_params(sim, ps)},
                                 {"scheme", {{"name", "implicit-midpoint"}, {"t_final", t_final}, {"dt", dt}, {"samples", samples}}},
                                 {"y0", y0},
                                 {"fit_window", {w.first, w.second}}};
            return execute("simulate", spec, params, out, run);
        }
        if (c_scan->parsed()) {
            if (!(lambda_min > 0.0 && lambda_min < lambda_max)) throw UsageError("need 0 < lambda-min < lambda-max");
            json params = {{"lambda_min", lambda_min}, {"lambda_max", lambda_max}, {"points", points},
                           {"regime", regime},         {"side", side},             {"threads", threads}};
            if (sc.problem && *sc.problem == "stub") {
                params["grid"] = {{"nx", sc.nx.value_or(8)}, {"nxi", sc.nxi}};
                return execute("scan", nullptr, params, out, run);
            }
            const json spec = resolve_spec(sc, run);
            params["grid"] = grid_params(sc, problem_spec_from_json(spec));
            return execute("scan", spec, params, out, run);
        }
        if (c_kernel->parsed()) {
            const json params = {{"beta", k_beta},       {"rho", k_rho},       {"tau_min", tau_min},
                                 {"tau_max", tau_max},   {"points", k_points}, {"nxi", k_nxi},
                                 {"xi_min", k_xi_min},   {"xi_max", k_xi_max}};
            return execute("verify-kernel", nullptr, params, out, run);
        }
        if (c_oracle->parsed()) {
            const json spec = to_json(ProblemSpec(Variant::P, PowerLaw{o_alpha}, o_beta, o_rho));
            const json params = {{"lambda", o_lambda}, {"nx_list", parse_nx_list(nx_list)},
                                 {"grade", o_grade},   {"nxi", o_nxi},
                                 {"xi_min", o_xi_min}, {"xi_max", o_xi_max},
                                 {"rhs", rhs}};
            return execute("oracle-compare", spec, params, out, run);
        }
        if (c_rerun->parsed()) {
            const json m = read_json_file(fs::path(from) / "manifest.json");
            if (m.value("tool_version", "") != kToolVersion)
                std::cerr << "warning: manifest written by version " << m.value("tool_version", "?") << "\n";
            return execute(m.at("command").get<std::string>(), m.at("spec"), m.at("params"), out.empty() ? from : out,
                           run);
        }
    } catch (const Error& e) {
        // validation failures raised before any numerics run
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const json::exception& e) {
        std::cerr << "usage error: malformed manifest: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
