#include "dvi/scenario.hpp"

#include "dvi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

namespace dvi {

namespace {

[[noreturn]] void schema_error(const std::string& field, const std::string& why) {
    throw std::invalid_argument("scenario schema: field '" + field + "' " + why);
}

void check_keys(const json& j, const std::string& ctx,
                const std::vector<std::string>& required,
                const std::vector<std::string>& optional) {
    for (const auto& k : required)
        if (!j.contains(k)) schema_error(ctx + k, "is missing");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find(required.begin(), required.end(), key) == required.end() &&
            std::find(optional.begin(), optional.end(), key) == optional.end())
            schema_error(ctx + key, "is not part of the schema");
    }
}

ScenarioKind kind_from_string(const std::string& s) {
    if (s == "callable_put") return ScenarioKind::callable_put;
    if (s == "drift_diffusion") return ScenarioKind::drift_diffusion;
    if (s == "jump") return ScenarioKind::jump;
    schema_error("scenario_kind", "must be callable_put, drift_diffusion or jump");
}

const char* kind_to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::callable_put: return "callable_put";
        case ScenarioKind::drift_diffusion: return "drift_diffusion";
        case ScenarioKind::jump: return "jump";
    }
    return "?";
}

GridSpec parse_grid(const json& j) {
    check_keys(j, "grid.", {"x_min", "x_max", "n"}, {});
    GridSpec g;
    g.x_min = j.at("x_min").get<double>();
    g.x_max = j.at("x_max").get<double>();
    g.n = j.at("n").get<int>();
    return g;
}

SolverParams parse_solver(const json& j) {
    check_keys(j, "solver.", {},
               {"tol", "max_iter", "penalty_eps_schedule", "relaxation",
                "symmetric_sweeps"});
    SolverParams p;
    if (j.contains("tol")) p.tol = j.at("tol").get<double>();
    if (j.contains("max_iter")) p.max_iter = j.at("max_iter").get<long>();
    if (j.contains("penalty_eps_schedule"))
        p.penalty_eps_schedule =
            j.at("penalty_eps_schedule").get<std::vector<double>>();
    if (j.contains("relaxation")) p.relaxation = j.at("relaxation").get<double>();
    if (j.contains("symmetric_sweeps"))
        p.symmetric_sweeps = j.at("symmetric_sweeps").get<bool>();
    if (!(p.tol > 0.0)) schema_error("solver.tol", "must be > 0");
    if (!(p.relaxation > 0.0 && p.relaxation < 2.0))
        schema_error("solver.relaxation", "must be in (0,2)");
    for (size_t k = 1; k < p.penalty_eps_schedule.size(); ++k)
        if (!(p.penalty_eps_schedule[k] < p.penalty_eps_schedule[k - 1]))
            schema_error("solver.penalty_eps_schedule", "must be strictly decreasing");
    return p;
}

McSpec parse_mc(const json& j) {
    check_keys(j, "mc.", {},
               {"n_paths", "dt", "t_max", "seed", "x0", "grid_tol", "sweep"});
    McSpec mc;
    if (j.contains("n_paths")) mc.n_paths = j.at("n_paths").get<long>();
    if (j.contains("dt")) mc.dt = j.at("dt").get<double>();
    if (j.contains("t_max")) mc.t_max = j.at("t_max").get<double>();
    if (j.contains("seed")) mc.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("x0")) mc.x0 = j.at("x0").get<double>();
    if (j.contains("grid_tol")) mc.grid_tol = j.at("grid_tol").get<double>();
    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        check_keys(s, "mc.sweep.", {},
                   {"thresholds_above", "thresholds_below", "fixed_times",
                    "include_never"});
        if (s.contains("thresholds_above"))
            mc.thresholds_above = s.at("thresholds_above").get<std::vector<double>>();
        if (s.contains("thresholds_below"))
            mc.thresholds_below = s.at("thresholds_below").get<std::vector<double>>();
        if (s.contains("fixed_times"))
            mc.fixed_times = s.at("fixed_times").get<std::vector<double>>();
        if (s.contains("include_never"))
            mc.include_never = s.at("include_never").get<bool>();
    }
    if (!(mc.dt > 0.0 && mc.dt < mc.t_max))
        schema_error("mc.dt", "must satisfy 0 < dt < t_max");
    if (mc.n_paths < 1) schema_error("mc.n_paths", "must be >= 1");
    return mc;
}

ObstacleProfile parse_obstacles(const json& j) {
    check_keys(j, "coefficients.obstacles.", {},
               {"g_amplitude", "g_offset", "h_gap"});
    ObstacleProfile p;
    if (j.contains("g_amplitude")) p.g_amplitude = j.at("g_amplitude").get<double>();
    if (j.contains("g_offset")) p.g_offset = j.at("g_offset").get<double>();
    if (j.contains("h_gap")) p.h_gap = j.at("h_gap").get<double>();
    if (p.h_gap < 0.0) schema_error("coefficients.obstacles.h_gap", "must be >= 0");
    return p;
}

} // namespace

ScenarioConfig scenario_from_json(const json& j) {
    check_keys(j, "", {"name", "scenario_kind", "grid", "coefficients"},
               {"alpha", "solver", "mc", "outputs"});
    ScenarioConfig c;
    c.name = j.at("name").get<std::string>();
    c.kind = kind_from_string(j.at("scenario_kind").get<std::string>());
    c.grid = parse_grid(j.at("grid"));

    const json& coef = j.at("coefficients");
    switch (c.kind) {
        case ScenarioKind::callable_put: {
            check_keys(coef, "coefficients.", {"lambda", "mu", "strike"},
                       {"cap", "penalty", "a"});
            c.callable_put.lambda = coef.at("lambda").get<double>();
            c.callable_put.mu = coef.at("mu").get<double>();
            c.callable_put.strike = coef.at("strike").get<double>();
            c.callable_put.cap = coef.contains("cap")
                                     ? coef.at("cap").get<double>()
                                     : c.grid.x_max - 1e-9;
            c.callable_put.penalty =
                coef.contains("penalty") ? coef.at("penalty").get<double>() : 0.0;
            if (coef.contains("a")) c.callable_put.a = coef.at("a").get<double>();
            if (!(c.callable_put.strike > 0.0))
                schema_error("coefficients.strike", "must be > 0");
            if (c.callable_put.cap > c.grid.x_max)
                schema_error("coefficients.cap", "must lie inside the grid");
            if (c.callable_put.penalty < 0.0)
                schema_error("coefficients.penalty", "must be >= 0");
            if (!(c.callable_put.lambda > 0.0))
                schema_error("coefficients.lambda", "must be > 0");
            break;
        }
        case ScenarioKind::drift_diffusion: {
            check_keys(coef, "coefficients.", {"a"},
                       {"b", "d_coef", "c", "obstacles"});
            c.drift_diffusion.a = coef.at("a").get<double>();
            if (coef.contains("b")) c.drift_diffusion.b = coef.at("b").get<double>();
            if (coef.contains("d_coef"))
                c.drift_diffusion.d_coef = coef.at("d_coef").get<double>();
            if (coef.contains("c")) c.drift_diffusion.c = coef.at("c").get<double>();
            if (coef.contains("obstacles"))
                c.obstacles = parse_obstacles(coef.at("obstacles"));
            if (!(c.drift_diffusion.a > 0.0))
                schema_error("coefficients.a", "must be > 0");
            break;
        }
        case ScenarioKind::jump: {
            check_keys(coef, "coefficients.", {"kappa", "beta_exp"},
                       {"eta", "R", "obstacles"});
            c.jump.kappa = coef.at("kappa").get<double>();
            c.jump.beta_exp = coef.at("beta_exp").get<double>();
            if (coef.contains("eta")) c.jump.eta = coef.at("eta").get<double>();
            if (coef.contains("R")) c.jump.R = coef.at("R").get<double>();
            if (coef.contains("obstacles"))
                c.obstacles = parse_obstacles(coef.at("obstacles"));
            if (!(c.jump.beta_exp > 0.0 && c.jump.beta_exp < 2.0))
                schema_error("coefficients.beta_exp", "must be in (0,2)");
            break;
        }
    }

    if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
    if (j.contains("solver")) c.solver = parse_solver(j.at("solver"));
    if (j.contains("mc")) c.mc = parse_mc(j.at("mc"));
    if (j.contains("outputs")) c.outputs = j.at("outputs").get<std::string>();
    return c;
}

json scenario_to_json(const ScenarioConfig& c) {
    json j;
    j["name"] = c.name;
    j["scenario_kind"] = kind_to_string(c.kind);
    j["grid"] = json{{"x_min", c.grid.x_min}, {"x_max", c.grid.x_max}, {"n", c.grid.n}};
    json coef;
    switch (c.kind) {
        case ScenarioKind::callable_put:
            coef["lambda"] = c.callable_put.lambda;
            coef["mu"] = c.callable_put.mu;
            coef["strike"] = c.callable_put.strike;
            coef["cap"] = c.callable_put.cap;
            coef["penalty"] = c.callable_put.penalty;
            if (c.callable_put.a) coef["a"] = *c.callable_put.a;
            break;
        case ScenarioKind::drift_diffusion:
            coef["a"] = c.drift_diffusion.a;
            coef["b"] = c.drift_diffusion.b;
            coef["d_coef"] = c.drift_diffusion.d_coef;
            coef["c"] = c.drift_diffusion.c;
            coef["obstacles"] = json{{"g_amplitude", c.obstacles.g_amplitude},
                                     {"g_offset", c.obstacles.g_offset},
                                     {"h_gap", c.obstacles.h_gap}};
            break;
        case ScenarioKind::jump:
            coef["kappa"] = c.jump.kappa;
            coef["beta_exp"] = c.jump.beta_exp;
            coef["eta"] = c.jump.eta;
            coef["R"] = c.jump.R;
            coef["obstacles"] = json{{"g_amplitude", c.obstacles.g_amplitude},
                                     {"g_offset", c.obstacles.g_offset},
                                     {"h_gap", c.obstacles.h_gap}};
            break;
    }
    j["coefficients"] = coef;
    if (c.alpha) j["alpha"] = *c.alpha;
    j["solver"] = json{{"tol", c.solver.tol},
                       {"max_iter", c.solver.max_iter},
                       {"penalty_eps_schedule", c.solver.penalty_eps_schedule},
                       {"relaxation", c.solver.relaxation},
                       {"symmetric_sweeps", c.solver.symmetric_sweeps}};
    j["mc"] = json{{"n_paths", c.mc.n_paths},
                   {"dt", c.mc.dt},
                   {"t_max", c.mc.t_max},
                   {"seed", c.mc.seed},
                   {"x0", c.mc.x0},
                   {"grid_tol", c.mc.grid_tol},
                   {"sweep", json{{"thresholds_above", c.mc.thresholds_above},
                                  {"thresholds_below", c.mc.thresholds_below},
                                  {"fixed_times", c.mc.fixed_times},
                                  {"include_never", c.mc.include_never}}}};
    j["outputs"] = c.outputs;
    return j;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("load_scenario: cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("load_scenario: invalid JSON: " +
                                    std::string(e.what()));
    }
    return scenario_from_json(j);
}

void save_scenario(const ScenarioConfig& config,
                   const std::filesystem::path& path) {
    std::ofstream out(path);
    out << scenario_to_json(config).dump(2) << '\n';
}

namespace {

std::vector<StoppingRule> build_sweep(const McSpec& mc) {
    std::vector<StoppingRule> sweep;
    for (double level : mc.thresholds_above)
        sweep.push_back(rule_threshold_above(level));
    for (double level : mc.thresholds_below)
        sweep.push_back(rule_threshold_below(level));
    for (double t : mc.fixed_times) sweep.push_back(rule_fixed_time(t));
    if (mc.include_never) sweep.push_back(rule_never());
    return sweep;
}

// Assembles with the configured alpha, or alpha0_est + 1 when unset.
DiscreteForm assemble_with_alpha(
    const Grid1D& grid, const DriftDiffusionCoeffs& coeffs,
    const std::optional<double>& alpha_opt) {
    DiscreteForm probe = assemble_drift_diffusion(grid, coeffs, 1.0);
    const double alpha = alpha_opt ? *alpha_opt : probe.alpha0_est + 1.0;
    if (alpha == 1.0) return probe;
    return assemble_drift_diffusion(grid, coeffs, alpha);
}

void require_markov(const DiscreteForm& form, const DriftDiffusionCoeffs& coeffs) {
    if (check_markov_structure(form).passes) return;
    const double denom = std::abs(coeffs.b) + std::abs(coeffs.d_coef);
    std::ostringstream msg;
    msg << "scenario: assembled form fails the sign-structure check";
    if (denom > 0.0)
        msg << "; refine the grid to h <= " << coeffs.a / denom;
    throw std::invalid_argument(msg.str());
}

Eigen::VectorXd sin_profile(const Grid1D& grid, const ObstacleProfile& p) {
    Eigen::VectorXd g(grid.n);
    const double span = grid.x_max - grid.x_min;
    for (int i = 0; i < grid.n; ++i)
        g[i] = p.g_amplitude * std::sin(M_PI * (grid.node(i) - grid.x_min) / span) +
               p.g_offset;
    return g;
}

} // namespace

ScenarioInstance build_callable_put(const ScenarioConfig& config) {
    const Grid1D grid = make_grid(config.grid.x_min, config.grid.x_max, config.grid.n);
    const CallablePutCoeffs& cp = config.callable_put;

    DriftDiffusionCoeffs coeffs;
    coeffs.a = cp.a ? *cp.a : cp.lambda * cp.lambda / 2.0;
    coeffs.b = -(cp.mu - cp.lambda * cp.lambda / 2.0);

    ScenarioInstance inst;
    inst.form = assemble_with_alpha(grid, coeffs, config.alpha);
    require_markov(inst.form, coeffs);

    Eigen::VectorXd g(grid.n);
    for (int i = 0; i < grid.n; ++i) {
        const double x = grid.node(i);
        g[i] = x <= cp.cap ? std::max(0.0, std::exp(x) - cp.strike) : 0.0;
    }
    inst.data.g = g;
    inst.data.h = g + Eigen::VectorXd::Constant(grid.n, cp.penalty);

    inst.process.kind = ProcessKind::drifted_diffusion;
    inst.process.lambda = cp.lambda;
    inst.process.mu = cp.mu;
    inst.process.x0 = config.mc.x0;
    inst.process.dt = config.mc.dt;
    inst.process.t_max = config.mc.t_max;
    inst.process.alpha = inst.form.alpha;
    inst.sweep = build_sweep(config.mc);
    return inst;
}

ScenarioInstance build_drift_diffusion_scenario(const ScenarioConfig& config) {
    const Grid1D grid = make_grid(config.grid.x_min, config.grid.x_max, config.grid.n);
    const DriftDiffusionCoeffs& dd = config.drift_diffusion;

    ScenarioInstance inst;
    inst.form = assemble_with_alpha(grid, dd, config.alpha);
    require_markov(inst.form, dd);

    inst.data.g = sin_profile(grid, config.obstacles);
    inst.data.h = inst.data.g + Eigen::VectorXd::Constant(grid.n, config.obstacles.h_gap);

    // Process consistent with the assembled operator: generator
    // a u'' - (b - d_coef) u' with killing rate c on top of alpha.
    inst.process.kind = ProcessKind::drifted_diffusion;
    inst.process.lambda = std::sqrt(2.0 * dd.a);
    inst.process.mu = dd.a - dd.b + dd.d_coef;
    inst.process.x0 = config.mc.x0;
    inst.process.dt = config.mc.dt;
    inst.process.t_max = config.mc.t_max;
    inst.process.alpha = inst.form.alpha + dd.c;
    inst.sweep = build_sweep(config.mc);
    return inst;
}

ScenarioInstance build_jump_scenario(const ScenarioConfig& config) {
    const Grid1D grid = make_grid(config.grid.x_min, config.grid.x_max, config.grid.n);

    ScenarioInstance inst;
    DiscreteForm probe = assemble_jump_form(grid, config.jump, 1.0);
    const double alpha = config.alpha ? *config.alpha : probe.alpha0_est + 1.0;
    inst.form = alpha == 1.0 ? std::move(probe)
                             : assemble_jump_form(grid, config.jump, alpha);

    inst.data.g = sin_profile(grid, config.obstacles);
    inst.data.h = inst.data.g + Eigen::VectorXd::Constant(grid.n, config.obstacles.h_gap);

    // Exact path simulation of the jump process is out of scope: the jump
    // scenario is verified through the chain oracle only.
    inst.process.kind = ProcessKind::chain;
    inst.process.dt = config.mc.dt;
    inst.process.t_max = config.mc.t_max;
    inst.process.alpha = inst.form.alpha;
    return inst;
}

ScenarioInstance build_scenario(const ScenarioConfig& config) {
    switch (config.kind) {
        case ScenarioKind::callable_put: return build_callable_put(config);
        case ScenarioKind::drift_diffusion:
            return build_drift_diffusion_scenario(config);
        case ScenarioKind::jump: return build_jump_scenario(config);
    }
    throw std::logic_error("build_scenario: unreachable");
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

std::string profile_csv(const Grid1D& grid, const ObstacleData& data,
                        const VISolution& sol) {
    std::ostringstream out;
    out.precision(17);
    out << "x,g,h,v,lower_contact,upper_contact\n";
    std::vector<bool> lower(grid.n, false), upper(grid.n, false);
    for (int i : sol.contact_lower) lower[i] = true;
    for (int i : sol.contact_upper) upper[i] = true;
    for (int i = 0; i < grid.n; ++i) {
        const double h_i = (*data.h)[i];
        if (sol.v[i] < data.g[i] - 1e-10 || sol.v[i] > h_i + 1e-10)
            throw NumericError("profile_csv: solution escaped the obstacle band");
        out << grid.node(i) << ',' << data.g[i] << ',' << h_i << ',' << sol.v[i]
            << ',' << (lower[i] ? 1 : 0) << ',' << (upper[i] ? 1 : 0) << '\n';
    }
    return out.str();
}

} // namespace

int run_pipeline(const ScenarioConfig& config) {
    namespace fs = std::filesystem;
    const fs::path out_dir(config.outputs);
    fs::create_directories(out_dir);
    json errors = json::array();

    try {
        const ScenarioInstance inst = build_scenario(config);
        const MarkovReport markov = check_markov_structure(inst.form);

        const VISolution sol = solve_double_pgs(inst.form, inst.data, config.solver);
        const VISolution sol_sep =
            solve_separability_iteration(inst.form, inst.data, config.solver);
        const double method_diff = (sol.v - sol_sep.v).lpNorm<Eigen::Infinity>();
        const bool methods_pass =
            method_diff <= 1e-6 * (1.0 + sol.v.lpNorm<Eigen::Infinity>());

        const ChainDynamics dyn = build_chain_from_form(inst.form);
        const ChainGame chain = make_chain_game(
            dyn, inst.data.g, *inst.data.h, inst.data.source_or_zero(inst.form.size()));
        const ValueIterationResult vi = value_iteration(chain, 1e-13);
        const double oracle_diff = (sol.v - vi.v).lpNorm<Eigen::Infinity>();
        const bool oracle_pass = oracle_diff <= 1e-8;

        const ResidualReport residual =
            verify_vi_residual(inst.form, sol, inst.data, 1e-8);

        json report;
        report["name"] = config.name;
        report["scenario_kind"] = kind_to_string(config.kind);
        report["alpha"] = inst.form.alpha;
        report["alpha0_est"] = inst.form.alpha0_est;
        report["sector_K"] = estimate_sector_constant(inst.form);
        report["markov_pass"] = markov.passes;
        report["method_agreement"] = json{{"diff", method_diff}, {"pass", methods_pass}};
        report["oracle"] = json{{"diff", oracle_diff}, {"pass", oracle_pass}};
        report["residual_check"] = json{{"pass", residual.passes},
                                        {"worst_lower", residual.worst_lower},
                                        {"worst_upper", residual.worst_upper},
                                        {"worst_interior", residual.worst_interior}};

        bool all_pass = markov.passes && methods_pass && oracle_pass && residual.passes;

        if (config.kind == ScenarioKind::jump) {
            report["mc"] = "skipped: jump scenario is verified through the chain oracle";
        } else {
            ProcessSpec spec = inst.process;
            const SaddleReport mc = verify_saddle_mc(
                sol, spec, inst.form.grid, inst.data, inst.sweep, config.mc.n_paths,
                config.mc.seed, config.mc.grid_tol);
            report["mc"] = to_json(mc);
            all_pass = all_pass && mc.all_pass();
        }
        report["all_pass"] = all_pass;

        write_file(out_dir / "solution.json", to_json(sol).dump(2) + "\n");
        write_file(out_dir / "report.json", report.dump(2) + "\n");
        write_file(out_dir / "profile.csv",
                   profile_csv(inst.form.grid, inst.data, sol));
        write_file(out_dir / "errors.json", errors.dump(2) + "\n");
        {
            json meta;
            meta["generated_at"] = static_cast<long>(::time(nullptr));
            write_file(out_dir / "meta.json", meta.dump(2) + "\n");
        }
        return all_pass ? 0 : 2;
    } catch (const NonConvergenceError& e) {
        errors.push_back(json{{"type", "non_convergence"},
                              {"what", e.what()},
                              {"iterations", e.iterations},
                              {"residual_norm", e.residual_norm}});
        write_file(out_dir / "errors.json", errors.dump(2) + "\n");
        return 3;
    } catch (const std::exception& e) {
        errors.push_back(json{{"type", "error"}, {"what", e.what()}});
        write_file(out_dir / "errors.json", errors.dump(2) + "\n");
        return 2;
    }
}

} // namespace dvi
