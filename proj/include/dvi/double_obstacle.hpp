#pragma once

#include "dvi/obstacle_solver.hpp"

#include <variant>

namespace dvi {

struct SeparabilityWitness {
    Eigen::VectorXd w1;
    Eigen::VectorXd w2;
    double max_gap = 0.0; // worst violation of g <= w1 - w2 <= h
};

struct SeparabilityFailureInfo {
    int diverging_iteration = 0;
};

// Two-sided projected Gauss-Seidel: per node, the Gauss-Seidel value clamped
// to [g_i, h_i] solves the scalar two-obstacle subproblem exactly.
VISolution solve_double_pgs(const DiscreteForm& form, const ObstacleData& data,
                            const SolverParams& params);

// Alternating single-obstacle solves from (0, 0): the upper iterate chases
// the smallest supersolution above lower + g, the lower iterate the smallest
// supersolution above upper - h. Returns v = upper - lower with the pair as
// witnesses and the full iterate log.
VISolution solve_separability_iteration(const DiscreteForm& form,
                                        const ObstacleData& data,
                                        const SolverParams& params,
                                        double bound_cap = 1e12);

std::variant<SeparabilityWitness, SeparabilityFailureInfo>
check_separability(const DiscreteForm& form, const ObstacleData& data,
                   const SolverParams& params = {});

struct SaddleRegions {
    std::vector<int> tau_region;   // upper contact: seller stops
    std::vector<int> sigma_region; // lower contact: buyer stops
};

SaddleRegions extract_saddle_regions(const VISolution& sol,
                                     const ObstacleData& data);

struct ResidualReport {
    bool passes = false;
    double worst_lower = 0.0;    // max(0, -r_i) over lower-contact nodes
    double worst_upper = 0.0;    // max(0, r_i) over upper-contact nodes
    double worst_interior = 0.0; // max |r_i| over strictly interior nodes
    int worst_node = -1;
};

// Recomputes r = Bv - f and checks the complementarity signs per node class:
// r >= -tol on lower contact, r <= tol on upper contact, |r| <= tol between.
ResidualReport verify_vi_residual(const DiscreteForm& form, const VISolution& sol,
                                  const ObstacleData& data, double tol_kkt);

} // namespace dvi
