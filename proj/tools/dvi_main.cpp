#include "dvi/chain_oracle.hpp"
#include "dvi/double_obstacle.hpp"
#include "dvi/errors.hpp"
#include "dvi/game_sim.hpp"
#include "dvi/scenario.hpp"
#include "dvi/serialize.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using dvi::json;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::int64_t seed = -1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "Scenario config JSON")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", opts.out_dir, "Output directory override");
    cmd->add_option("--seed", opts.seed, "Monte Carlo seed override");
}

dvi::ScenarioConfig load(const CommonOpts& opts) {
    dvi::ScenarioConfig config = dvi::load_scenario(opts.config_path);
    if (!opts.out_dir.empty()) config.outputs = opts.out_dir;
    if (opts.seed >= 0) config.mc.seed = static_cast<std::uint64_t>(opts.seed);
    return config;
}

void write_json(const fs::path& dir, const std::string& name, const json& j) {
    fs::create_directories(dir);
    std::ofstream out(dir / name, std::ios::binary);
    out << j.dump(2) << '\n';
    std::cout << "wrote " << (dir / name).string() << '\n';
}

int cmd_assemble(const CommonOpts& opts) {
    const auto config = load(opts);
    const auto inst = dvi::build_scenario(config);
    write_json(config.outputs, "form.json", dvi::to_json(inst.form));
    return 0;
}

int cmd_solve(const CommonOpts& opts) {
    const auto config = load(opts);
    const auto inst = dvi::build_scenario(config);
    const auto sol = dvi::solve_double_pgs(inst.form, inst.data, config.solver);
    auto sep = dvi::solve_separability_iteration(inst.form, inst.data, config.solver);
    json j = dvi::to_json(sol);
    j["witnesses"] = json{{"w1", dvi::vec_to_std(sep.witnesses->first)},
                          {"w2", dvi::vec_to_std(sep.witnesses->second)}};
    j["method_diff"] = (sol.v - sep.v).lpNorm<Eigen::Infinity>();
    write_json(config.outputs, "solution.json", j);
    return 0;
}

int cmd_oracle(const CommonOpts& opts) {
    const auto config = load(opts);
    const auto inst = dvi::build_scenario(config);
    const auto sol = dvi::solve_double_pgs(inst.form, inst.data, config.solver);
    const auto dyn = dvi::build_chain_from_form(inst.form);
    const auto chain = dvi::make_chain_game(dyn, inst.data.g, *inst.data.h,
                                            inst.data.source_or_zero(inst.form.size()));
    const auto vi = dvi::value_iteration(chain, 1e-12);
    const double diff = (sol.v - vi.v).lpNorm<Eigen::Infinity>();
    json j;
    j["chain"] = dvi::to_json(chain);
    j["v_solver"] = dvi::vec_to_std(sol.v);
    j["v_oracle"] = dvi::vec_to_std(vi.v);
    j["diff"] = diff;
    j["pass"] = diff <= 1e-8;
    write_json(config.outputs, "oracle.json", j);
    return j["pass"].get<bool>() ? 0 : 2;
}

int cmd_simulate(const CommonOpts& opts) {
    const auto config = load(opts);
    if (config.kind == dvi::ScenarioKind::jump) {
        std::cerr << "simulate: jump scenarios are verified through the chain "
                     "oracle only\n";
        return 2;
    }
    const auto inst = dvi::build_scenario(config);
    const auto sol = dvi::solve_double_pgs(inst.form, inst.data, config.solver);
    const auto report =
        dvi::verify_saddle_mc(sol, inst.process, inst.form.grid, inst.data,
                              inst.sweep, config.mc.n_paths, config.mc.seed,
                              config.mc.grid_tol);
    write_json(config.outputs, "mc_report.json", dvi::to_json(report));
    return report.all_pass() ? 0 : 2;
}

int cmd_verify(const CommonOpts& opts) {
    const auto config = load(opts);
    const auto inst = dvi::build_scenario(config);
    const auto sol = dvi::solve_double_pgs(inst.form, inst.data, config.solver);
    const auto sep = dvi::solve_separability_iteration(inst.form, inst.data, config.solver);
    const auto dyn = dvi::build_chain_from_form(inst.form);
    const auto chain = dvi::make_chain_game(dyn, inst.data.g, *inst.data.h,
                                            inst.data.source_or_zero(inst.form.size()));
    const auto vi = dvi::value_iteration(chain, 1e-12);
    const auto residual = dvi::verify_vi_residual(inst.form, sol, inst.data, 1e-8);

    const double oracle_diff = (sol.v - vi.v).lpNorm<Eigen::Infinity>();
    const double method_diff = (sol.v - sep.v).lpNorm<Eigen::Infinity>();
    json j;
    j["oracle_diff"] = oracle_diff;
    j["method_diff"] = method_diff;
    j["residual_pass"] = residual.passes;
    j["pass"] = oracle_diff <= 1e-8 &&
                method_diff <= 1e-6 * (1.0 + sol.v.lpNorm<Eigen::Infinity>()) &&
                residual.passes;
    write_json(config.outputs, "verify.json", j);
    return j["pass"].get<bool>() ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Double-obstacle variational inequality solver and Dynkin game verifier"};
    app.require_subcommand(1);

    CommonOpts opts;
    auto* assemble = app.add_subcommand("assemble", "Assemble the discrete form");
    auto* solve = app.add_subcommand("solve", "Solve the two-obstacle problem");
    auto* oracle = app.add_subcommand("oracle", "Cross-check against the chain oracle");
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo saddle verification");
    auto* verify = app.add_subcommand("verify", "Residual and oracle checks");
    auto* run = app.add_subcommand("run", "Full pipeline");
    for (auto* cmd : {assemble, solve, oracle, simulate, verify, run})
        add_common(cmd, opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (assemble->parsed()) return cmd_assemble(opts);
        if (solve->parsed()) return cmd_solve(opts);
        if (oracle->parsed()) return cmd_oracle(opts);
        if (simulate->parsed()) return cmd_simulate(opts);
        if (verify->parsed()) return cmd_verify(opts);
        if (run->parsed()) return dvi::run_pipeline(load(opts));
    } catch (const dvi::NonConvergenceError& e) {
        std::cerr << "non-convergence: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
