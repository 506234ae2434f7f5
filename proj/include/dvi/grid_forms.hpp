#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <optional>
#include <string>
#include <vector>

namespace dvi {

using SparseMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Uniform 1-D grid of interior nodes; zero Dirichlet data outside
// [x_min, x_max].
struct Grid1D {
    double x_min = 0.0;
    double x_max = 1.0;
    int n = 3;       // interior nodes
    double h = 0.25; // spacing = (x_max - x_min) / (n + 1)

    double node(int i) const { return x_min + (i + 1) * h; }
    // Index of the interior node closest to x (clamped at the ends).
    int nearest_node(double x) const;
};

Grid1D make_grid(double x_min, double x_max, int n);

struct DriftDiffusionCoeffs {
    double a = 1.0;      // diffusion, must be > 0
    double b = 0.0;      // drift tested against u'
    double d_coef = 0.0; // drift tested against v'
    double c = 0.0;      // zeroth-order term
};

// Truncated singular jump kernel
//   k(x,y) = kappa * |x-y|^(-1-beta_exp) * (1 + eta * sign(y-x))
// on 0 < |x-y| < R, zero beyond R. |eta| < 1 keeps k strictly positive.
struct JumpKernelSpec {
    double kappa = 1.0;
    double beta_exp = 0.5; // in (0, 2)
    double eta = 0.0;      // in (-1, 1)
    double R = 1.0;        // truncation radius
};

// Discretized bilinear form: E(u, v) ~= v^T A u, mass matrix diag(mass_diag),
// B = A + alpha * M. Immutable after assembly.
struct DiscreteForm {
    Grid1D grid;
    SparseMat A;
    Eigen::VectorXd mass_diag;
    double alpha = 0.0;
    double alpha0_est = 0.0;
    std::optional<double> sector_K;

    int size() const { return static_cast<int>(A.rows()); }
    SparseMat B() const;
    Eigen::MatrixXd B_dense() const;
};

// Builds a form directly from a dense matrix (small hand-made instances).
DiscreteForm make_form_from_dense(const Eigen::MatrixXd& A,
                                  const Eigen::VectorXd& mass_diag,
                                  double alpha);

enum class DriftScheme { upwind, centered };

DiscreteForm assemble_drift_diffusion(const Grid1D& grid,
                                      const DriftDiffusionCoeffs& coeffs,
                                      double alpha,
                                      DriftScheme scheme = DriftScheme::upwind);

DiscreteForm assemble_jump_form(const Grid1D& grid, const JumpKernelSpec& kernel,
                                double alpha);

// max(0, -lambda_min) for the generalized pencil (sym(A), M): the smallest
// shift making the symmetrized form positive semidefinite.
double estimate_alpha0(const DiscreteForm& form);

// Best constant K in |B(u,v)| <= K sqrt(S(u,u)) sqrt(S(v,v)) with S = sym(B):
// the spectral norm of S^{-1/2} B S^{-1/2}. Requires sym(B) positive definite.
double estimate_sector_constant(const DiscreteForm& form);
double sector_constant_of(const Eigen::MatrixXd& B);

struct MarkovReport {
    bool passes = false;
    // (i, j, value): positive off-diagonal when i != j, negative row sum
    // reported as (i, i, row_sum).
    std::vector<std::tuple<int, int, double>> violations;
};

// Sufficient sign-structure condition for inverse positivity of B:
// off-diagonals <= 0, row sums >= 0.
MarkovReport check_markov_structure(const DiscreteForm& form);

} // namespace dvi
