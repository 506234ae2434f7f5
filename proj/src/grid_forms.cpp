#include "dvi/grid_forms.hpp"

#include "dvi/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dvi {

int Grid1D::nearest_node(double x) const {
    int i = static_cast<int>(std::lround((x - x_min) / h)) - 1;
    return std::clamp(i, 0, n - 1);
}

Grid1D make_grid(double x_min, double x_max, int n) {
    if (!(x_min < x_max))
        throw std::invalid_argument("make_grid: x_min must be < x_max");
    if (n < 3)
        throw std::invalid_argument("make_grid: need at least 3 interior nodes");
    Grid1D g;
    g.x_min = x_min;
    g.x_max = x_max;
    g.n = n;
    g.h = (x_max - x_min) / (n + 1);
    return g;
}

SparseMat DiscreteForm::B() const {
    SparseMat b = A;
    for (int i = 0; i < size(); ++i)
        b.coeffRef(i, i) += alpha * mass_diag[i];
    b.makeCompressed();
    return b;
}

Eigen::MatrixXd DiscreteForm::B_dense() const {
    Eigen::MatrixXd b = Eigen::MatrixXd(A);
    b.diagonal() += alpha * mass_diag;
    return b;
}

DiscreteForm make_form_from_dense(const Eigen::MatrixXd& A,
                                  const Eigen::VectorXd& mass_diag,
                                  double alpha) {
    if (A.rows() != A.cols() || A.rows() != mass_diag.size())
        throw std::invalid_argument("make_form_from_dense: dimension mismatch");
    DiscreteForm form;
    form.grid.x_min = 0.0;
    form.grid.x_max = static_cast<double>(A.rows() + 1);
    form.grid.n = static_cast<int>(A.rows());
    form.grid.h = 1.0;
    form.A = A.sparseView();
    form.A.makeCompressed();
    form.mass_diag = mass_diag;
    form.alpha = alpha;
    form.alpha0_est = estimate_alpha0(form);
    return form;
}

namespace {

void validate_coeffs(const DriftDiffusionCoeffs& c) {
    if (!(c.a > 0.0))
        throw std::invalid_argument("assemble_drift_diffusion: a must be > 0");
}

// Upwind first-derivative stencil for the term coef * integral(u' v), mass
// lumped: row i gets coef * (u_i - u_{i-1}) for coef >= 0 and
// coef * (u_{i+1} - u_i) otherwise, so off-diagonals stay nonpositive.
void add_upwind_drift(std::vector<Eigen::Triplet<double>>& trip, int n,
                      double coef, bool transpose) {
    if (coef == 0.0) return;
    auto push = [&](int i, int j, double v) {
        if (transpose)
            trip.emplace_back(j, i, v);
        else
            trip.emplace_back(i, j, v);
    };
    for (int i = 0; i < n; ++i) {
        if (coef > 0.0) {
            push(i, i, coef);
            if (i > 0) push(i, i - 1, -coef);
        } else {
            push(i, i, -coef);
            if (i + 1 < n) push(i, i + 1, coef);
        }
    }
}

void add_centered_drift(std::vector<Eigen::Triplet<double>>& trip, int n,
                        double coef, bool transpose) {
    if (coef == 0.0) return;
    auto push = [&](int i, int j, double v) {
        if (transpose)
            trip.emplace_back(j, i, v);
        else
            trip.emplace_back(i, j, v);
    };
    for (int i = 0; i < n; ++i) {
        if (i + 1 < n) push(i, i + 1, coef / 2.0);
        if (i > 0) push(i, i - 1, -coef / 2.0);
    }
}

} // namespace

DiscreteForm assemble_drift_diffusion(const Grid1D& grid,
                                      const DriftDiffusionCoeffs& coeffs,
                                      double alpha, DriftScheme scheme) {
    validate_coeffs(coeffs);
    if (!(alpha > 0.0))
        throw std::invalid_argument("assemble_drift_diffusion: alpha must be > 0");

    const int n = grid.n;
    const double h = grid.h;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(5 * n));

    // a * integral(u' v'): second-difference stencil, entries a/h.
    for (int i = 0; i < n; ++i) {
        trip.emplace_back(i, i, 2.0 * coeffs.a / h);
        if (i > 0) trip.emplace_back(i, i - 1, -coeffs.a / h);
        if (i + 1 < n) trip.emplace_back(i, i + 1, -coeffs.a / h);
    }

    // b * integral(u' v) and d * integral(u v'): the d-term is the adjoint of
    // the same stencil applied to the test function.
    if (scheme == DriftScheme::upwind) {
        add_upwind_drift(trip, n, coeffs.b, /*transpose=*/false);
        add_upwind_drift(trip, n, coeffs.d_coef, /*transpose=*/true);
    } else {
        add_centered_drift(trip, n, coeffs.b, false);
        add_centered_drift(trip, n, coeffs.d_coef, true);
    }

    // c * integral(u v) with lumped mass.
    if (coeffs.c != 0.0)
        for (int i = 0; i < n; ++i) trip.emplace_back(i, i, coeffs.c * h);

    DiscreteForm form;
    form.grid = grid;
    form.A.resize(n, n);
    form.A.setFromTriplets(trip.begin(), trip.end());
    form.A.makeCompressed();
    form.mass_diag = Eigen::VectorXd::Constant(n, h);
    form.alpha = alpha;
    form.alpha0_est = estimate_alpha0(form);
    return form;
}

namespace {

// Exact integral of (y-x)^(-1-beta) over adjacent cells [0,h] x [h,2h],
// finite for beta < 1.
double adjacent_cell_integral(double h, double beta) {
    return std::pow(h, 1.0 - beta) * (2.0 - std::pow(2.0, 1.0 - beta)) /
           (beta * (1.0 - beta));
}

// For beta >= 1 the raw pairing integral diverges; the second-moment
// normalization (1/h^2) * integral of (y-x)^(1-beta) stays finite on (0,2)
// and keeps the scheme consistent for smooth functions.
double adjacent_cell_integral_moment(double h, double beta) {
    return std::pow(h, 1.0 - beta) * (std::pow(2.0, 3.0 - beta) - 2.0) /
           ((2.0 - beta) * (3.0 - beta));
}

} // namespace

DiscreteForm assemble_jump_form(const Grid1D& grid, const JumpKernelSpec& kernel,
                                double alpha) {
    if (!(kernel.beta_exp > 0.0 && kernel.beta_exp < 2.0))
        throw std::invalid_argument("assemble_jump_form: beta_exp must be in (0,2)");
    if (!(kernel.kappa > 0.0))
        throw std::invalid_argument("assemble_jump_form: kappa must be > 0");
    if (!(std::abs(kernel.eta) < 1.0))
        throw std::invalid_argument("assemble_jump_form: |eta| must be < 1");
    if (!(kernel.R > 0.0))
        throw std::invalid_argument("assemble_jump_form: R must be > 0");
    if (!(alpha > 0.0))
        throw std::invalid_argument("assemble_jump_form: alpha must be > 0");

    const int n = grid.n;
    const double h = grid.h;
    const double beta = kernel.beta_exp;

    // Symmetric weight between cells at node offset m >= 1.
    const double w_adj = kernel.kappa * (beta < 1.0
                                             ? adjacent_cell_integral(h, beta)
                                             : adjacent_cell_integral_moment(h, beta));
    auto sym_weight = [&](int m) -> double {
        const double dist = m * h;
        if (m == 1) return (kernel.R > h) ? w_adj : 0.0;
        if (dist >= kernel.R) return 0.0;
        return kernel.kappa * h * h * std::pow(dist, -1.0 - beta); // midpoint
    };
    const int max_offset = static_cast<int>(std::ceil(kernel.R / h));

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(n) * (2 * max_offset + 1));
    for (int i = 0; i < n; ++i) {
        double diag = 0.0;
        for (int m = 1; m <= max_offset; ++m) {
            const double ws = sym_weight(m);
            if (ws == 0.0) continue;
            const double w_right = ws * (1.0 + kernel.eta); // jump to the right
            const double w_left = ws * (1.0 - kernel.eta);  // jump to the left
            // Diagonal accumulates over the untruncated stencil, including
            // exterior (Dirichlet-zero) cells.
            diag += w_right + w_left;
            if (i + m < n) trip.emplace_back(i, i + m, -w_right);
            if (i - m >= 0) trip.emplace_back(i, i - m, -w_left);
        }
        trip.emplace_back(i, i, diag);
    }

    DiscreteForm form;
    form.grid = grid;
    form.A.resize(n, n);
    form.A.setFromTriplets(trip.begin(), trip.end());
    form.A.makeCompressed();
    form.mass_diag = Eigen::VectorXd::Constant(n, h);
    form.alpha = alpha;
    form.alpha0_est = estimate_alpha0(form);
    return form;
}

double estimate_alpha0(const DiscreteForm& form) {
    const Eigen::MatrixXd A = Eigen::MatrixXd(form.A);
    const Eigen::MatrixXd S = 0.5 * (A + A.transpose());
    const Eigen::MatrixXd M = form.mass_diag.asDiagonal();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(S, M,
                                                                 Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw NumericError("estimate_alpha0: generalized eigensolve failed after max iterations");
    const double lambda_min = es.eigenvalues().minCoeff();
    return std::max(0.0, -lambda_min);
}

double sector_constant_of(const Eigen::MatrixXd& B) {
    const Eigen::MatrixXd S = 0.5 * (B + B.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.info() != Eigen::Success)
        throw NumericError("sector_constant_of: eigensolve failed");
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw std::invalid_argument("sector_constant_of: sym(B) must be positive definite");
    const Eigen::VectorXd inv_sqrt = es.eigenvalues().cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd s_inv_half =
        es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose();
    const Eigen::MatrixXd N = s_inv_half * B * s_inv_half;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(N);
    return svd.singularValues()(0);
}

double estimate_sector_constant(const DiscreteForm& form) {
    return sector_constant_of(form.B_dense());
}

MarkovReport check_markov_structure(const DiscreteForm& form) {
    const SparseMat B = form.B();
    const int n = form.size();
    MarkovReport report;
    report.passes = true;
    constexpr double tol = 1e-12;
    for (int i = 0; i < n; ++i) {
        double row_sum = 0.0;
        for (SparseMat::InnerIterator it(B, i); it; ++it) {
            row_sum += it.value();
            if (it.col() != i && it.value() > tol) {
                report.passes = false;
                report.violations.emplace_back(i, static_cast<int>(it.col()),
                                               it.value());
            }
        }
        if (row_sum < -tol) {
            report.passes = false;
            report.violations.emplace_back(i, i, row_sum);
        }
    }
    return report;
}

} // namespace dvi
