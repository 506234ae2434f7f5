#pragma once

#include "dvi/double_obstacle.hpp"
#include "dvi/game_sim.hpp"
#include "dvi/grid_forms.hpp"
#include "dvi/serialize.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace dvi {

enum class ScenarioKind { callable_put, drift_diffusion, jump };

struct GridSpec {
    double x_min = 0.0;
    double x_max = 1.0;
    int n = 3;
};

struct CallablePutCoeffs {
    double lambda = 0.4;           // volatility
    double mu = 0.08;              // drift parameter
    double strike = 1.0;           // K > 0
    double cap = 0.0;              // payoff cap N, must lie inside the grid
    double penalty = 0.0;          // constant seller penalty p >= 0
    std::optional<double> a;       // diffusion coefficient override;
                                   // defaults to lambda^2/2 (generator reading)
};

struct ObstacleProfile {
    double g_amplitude = 1.0; // g = amplitude * sin(pi * (x-x_min)/(x_max-x_min)) + offset
    double g_offset = 0.0;
    double h_gap = 0.5; // h = g + gap
};

struct McSpec {
    long n_paths = 100000;
    double dt = 1e-3;
    double t_max = 1.0;
    std::uint64_t seed = 1;
    double x0 = 0.0;
    double grid_tol = 0.02;
    std::vector<double> thresholds_above;
    std::vector<double> thresholds_below;
    std::vector<double> fixed_times;
    bool include_never = false;
};

struct ScenarioConfig {
    std::string name;
    ScenarioKind kind = ScenarioKind::callable_put;
    GridSpec grid;
    CallablePutCoeffs callable_put;      // callable_put kind
    DriftDiffusionCoeffs drift_diffusion; // drift_diffusion kind
    ObstacleProfile obstacles;           // drift_diffusion / jump kinds
    JumpKernelSpec jump;                 // jump kind
    std::optional<double> alpha;         // default: alpha0_est + 1
    SolverParams solver;
    McSpec mc;
    std::string outputs = "out";
};

ScenarioConfig load_scenario(const std::filesystem::path& path);
json scenario_to_json(const ScenarioConfig& config);
ScenarioConfig scenario_from_json(const json& j);
void save_scenario(const ScenarioConfig& config,
                   const std::filesystem::path& path);

struct ScenarioInstance {
    DiscreteForm form;
    ObstacleData data;
    ProcessSpec process;
    std::vector<StoppingRule> sweep;
};

ScenarioInstance build_callable_put(const ScenarioConfig& config);
ScenarioInstance build_drift_diffusion_scenario(const ScenarioConfig& config);
ScenarioInstance build_jump_scenario(const ScenarioConfig& config);
ScenarioInstance build_scenario(const ScenarioConfig& config);

// Full pipeline: assemble -> solve (both methods) -> oracle cross-check ->
// regions -> simulate -> verify -> write solution.json / report.json /
// profile.csv / errors.json. Returns the process exit code:
// 0 all-PASS, 2 any FAIL, 3 non-convergence.
int run_pipeline(const ScenarioConfig& config);

} // namespace dvi
