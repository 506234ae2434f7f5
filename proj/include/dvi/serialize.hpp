#pragma once

#include "dvi/chain_oracle.hpp"
#include "dvi/double_obstacle.hpp"
#include "dvi/game_sim.hpp"
#include "dvi/grid_forms.hpp"

#include <json.hpp>

namespace dvi {

using json = nlohmann::ordered_json;

json to_json(const Grid1D& grid);
Grid1D grid_from_json(const json& j);

// {grid, triplets: [[i, j, value]...], mass_diag, alpha, alpha0_est}
json to_json(const DiscreteForm& form);
DiscreteForm form_from_json(const json& j);

// {v, residual, contact_lower, contact_upper, iterations, method}
// plus {witnesses: {w1, w2}} when present and the saddle regions.
json to_json(const VISolution& sol);

// {P_triplets, r, g, h, delta}
json to_json(const ChainGame& chain);
ChainGame chain_from_json(const json& j);

json to_json(const PayoffEstimate& est);
json to_json(const SaddleReport& report);

std::vector<double> vec_to_std(const Eigen::VectorXd& v);
Eigen::VectorXd vec_from_std(const std::vector<double>& v);

} // namespace dvi
