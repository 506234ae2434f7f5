#include "dvi/grid_forms.hpp"

#include "dvi/errors.hpp"
#include "dvi/serialize.hpp"

#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

using namespace dvi;

namespace {

Eigen::MatrixXd dense(const DiscreteForm& f) { return Eigen::MatrixXd(f.A); }

// Reversal permutation conjugation: (P M P)_{ij} = M_{n-1-i, n-1-j}.
Eigen::MatrixXd reverse_conjugate(const Eigen::MatrixXd& m) {
    const Eigen::Index n = m.rows();
    Eigen::MatrixXd out(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) out(i, j) = m(n - 1 - i, n - 1 - j);
    return out;
}

// Independent route to the adjacent-cell integral of (y-x)^(-1-beta) over
// [0,h] x [h,2h]: reduce over level sets of t = y - x, where the pair length
// is t on (0,h) and 2h-t on (h,2h). The first piece is elementary; the
// second is regular and integrated numerically.
double adjacent_integral_oracle(double h, double beta) {
    const double first = std::pow(h, 1.0 - beta) / (1.0 - beta);
    double second = 0.0;
    const int m = 200000;
    const double dt = h / m;
    for (int k = 0; k < m; ++k) {
        const double t = h + (k + 0.5) * dt;
        second += (2.0 * h - t) * std::pow(t, -1.0 - beta) * dt;
    }
    return first + second;
}

// High-resolution cell integral of the kernel between non-adjacent cells.
double far_cell_integral_oracle(double xi, double xj, double h, double kappa,
                                double beta) {
    const int m = 400;
    double sum = 0.0;
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
            const double x = xi - h / 2 + (a + 0.5) * h / m;
            const double y = xj - h / 2 + (b + 0.5) * h / m;
            sum += kappa * std::pow(std::abs(y - x), -1.0 - beta);
        }
    return sum * (h / m) * (h / m);
}

} // namespace

TEST_CASE("make_grid basics") {
    const Grid1D g = make_grid(0.0, 1.0, 3);
    CHECK(g.h == doctest::Approx(0.25));
    CHECK(g.node(0) == doctest::Approx(0.25));
    CHECK(g.node(1) == doctest::Approx(0.5));
    CHECK(g.node(2) == doctest::Approx(0.75));
    CHECK_THROWS_AS(make_grid(0.0, 1.0, 2), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(1.0, 0.0, 5), std::invalid_argument);
    CHECK(make_grid(-2.0, 2.0, 399).h == doctest::Approx(0.01));
}

TEST_CASE("pure diffusion assembles the hat-function stiffness matrix") {
    const Grid1D grid = make_grid(0.0, 1.0, 3);
    const DiscreteForm form = assemble_drift_diffusion(grid, {1.0, 0.0, 0.0, 0.0}, 1.0);
    const Eigen::MatrixXd A = dense(form);

    // Oracle: direct quadrature of integral(u'v') for hat functions of
    // width h gives 2/h on the diagonal and -1/h off it.
    const double h = 0.25;
    for (int i = 0; i < 3; ++i) {
        CHECK(A(i, i) == doctest::Approx(2.0 / h));
        if (i > 0) CHECK(A(i, i - 1) == doctest::Approx(-1.0 / h));
        if (i < 2) CHECK(A(i, i + 1) == doctest::Approx(-1.0 / h));
    }
    CHECK((A - A.transpose()).lpNorm<Eigen::Infinity>() == doctest::Approx(0.0));
}

TEST_CASE("drift mu = lambda^2/2 cancels and the form stays symmetric") {
    const Grid1D grid = make_grid(0.0, 1.0, 9);
    const double lambda = 1.0, mu = 0.5;
    const double b = -(mu - lambda * lambda / 2.0);
    CHECK(b == doctest::Approx(0.0));
    const DiscreteForm form =
        assemble_drift_diffusion(grid, {lambda, b, 0.0, 0.0}, 1.0);
    const Eigen::MatrixXd A = dense(form);
    CHECK((A - A.transpose()).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("upwinded drift matches the one-sided stencil and stays Markov") {
    const Grid1D grid = make_grid(0.0, 1.0, 3);
    const DiscreteForm form =
        assemble_drift_diffusion(grid, {1.0, 0.5, 0.0, 0.0}, 1.0);
    const Eigen::MatrixXd A = dense(form);

    // Oracle: entrywise one-sided difference formulas, h = 0.25.
    CHECK(A(1, 1) == doctest::Approx(8.0 + 0.5));
    CHECK(A(1, 0) == doctest::Approx(-4.0 - 0.5));
    CHECK(A(1, 2) == doctest::Approx(-4.0));
    CHECK((A - A.transpose()).lpNorm<Eigen::Infinity>() > 0.1);
    CHECK(check_markov_structure(form).passes);
}

TEST_CASE("centered drift on a coarse grid breaks the sign structure") {
    const Grid1D grid = make_grid(0.0, 1.0, 3); // h = 0.25 > 2a/|b| = 1/6
    const DiscreteForm form = assemble_drift_diffusion(
        grid, {1.0, 12.0, 0.0, 0.0}, 1.0, DriftScheme::centered);
    const MarkovReport report = check_markov_structure(form);
    CHECK_FALSE(report.passes);
    bool positive_off_diag = false;
    for (const auto& [i, j, value] : report.violations)
        if (i != j && value > 0.0) positive_off_diag = true;
    CHECK(positive_off_diag);
}

TEST_CASE("estimate_alpha0 on hand instances") {
    SUBCASE("positive semidefinite symmetric part") {
        Eigen::MatrixXd A(2, 2);
        A << 1, 3, -1, 1; // sym(A) = [[1,1],[1,1]], eigenvalues {0, 2}
        const DiscreteForm form =
            make_form_from_dense(A, Eigen::VectorXd::Ones(2), 1.0);
        CHECK(estimate_alpha0(form) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("indefinite symmetric part") {
        Eigen::MatrixXd A(2, 2);
        A << 0, 2, 0, 0; // sym(A) eigenvalues +-1
        const DiscreteForm form =
            make_form_from_dense(A, Eigen::VectorXd::Ones(2), 2.0);
        CHECK(estimate_alpha0(form) == doctest::Approx(1.0));
    }
    SUBCASE("assembled diffusion form is already lower bounded") {
        const DiscreteForm form = assemble_drift_diffusion(
            make_grid(0.0, 1.0, 9), {1.0, 0.0, 0.0, 0.0}, 1.0);
        CHECK(form.alpha0_est == doctest::Approx(0.0).epsilon(1e-10));
    }
}

TEST_CASE("sector constant") {
    SUBCASE("symmetric B gives exactly 1") {
        const DiscreteForm form = assemble_drift_diffusion(
            make_grid(0.0, 1.0, 15), {1.0, 0.0, 0.0, 0.0}, 1.0);
        CHECK(estimate_sector_constant(form) == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("hand 2x2 instance") {
        Eigen::MatrixXd B(2, 2);
        B << 2, 1, -1, 2;
        // Oracle: S = 2I, so the value is the top singular value of B/2.
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(0.5 * B);
        CHECK(sector_constant_of(B) == doctest::Approx(svd.singularValues()(0)));
        CHECK(sector_constant_of(B) == doctest::Approx(std::sqrt(5.0) / 2.0));
    }
    SUBCASE("skew part forces value above 1") {
        const DiscreteForm form = assemble_drift_diffusion(
            make_grid(0.0, 1.0, 15), {1.0, 0.8, 0.0, 0.0}, 1.0);
        CHECK(estimate_sector_constant(form) > 1.0);
    }
    SUBCASE("always at least 1") {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> unif(-1.0, 1.0);
        for (int trial = 0; trial < 20; ++trial) {
            const DiscreteForm form = assemble_drift_diffusion(
                make_grid(-1.0, 1.0, 12),
                {0.5 + std::abs(unif(rng)), unif(rng), unif(rng), 0.0}, 1.5);
            CHECK(estimate_sector_constant(form) >= 1.0 - 1e-9);
        }
    }
}

TEST_CASE("jump form weights against quadrature oracles") {
    const Grid1D grid = make_grid(0.0, 1.0, 3);
    const JumpKernelSpec kernel{1.0, 0.5, 0.3, 1.0};
    const DiscreteForm form = assemble_jump_form(grid, kernel, 1.0);
    const Eigen::MatrixXd A = dense(form);
    const double h = grid.h;

    // Adjacent pair: analytic symmetric weight modulated by the asymmetry.
    const double w_adj = kernel.kappa * adjacent_integral_oracle(h, kernel.beta_exp);
    CHECK(A(0, 1) == doctest::Approx(-w_adj * (1.0 + kernel.eta)).epsilon(1e-4));
    CHECK(A(1, 0) == doctest::Approx(-w_adj * (1.0 - kernel.eta)).epsilon(1e-4));

    // Distant pair: midpoint weight within quadrature error of the exact
    // cell integral.
    const double w_far =
        far_cell_integral_oracle(grid.node(0), grid.node(2), h, kernel.kappa,
                                 kernel.beta_exp);
    CHECK(A(0, 2) == doctest::Approx(-w_far * (1.0 + kernel.eta)).epsilon(0.12));

    // Off-diagonals nonpositive for any valid kernel.
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j) CHECK(A(i, j) <= 0.0);
    CHECK(check_markov_structure(form).passes);
}

TEST_CASE("jump form edge cases") {
    const Grid1D grid = make_grid(0.0, 1.0, 9);
    SUBCASE("eta = 0 gives a symmetric matrix") {
        const DiscreteForm form = assemble_jump_form(grid, {1.0, 0.5, 0.0, 1.0}, 1.0);
        const Eigen::MatrixXd A = dense(form);
        CHECK((A - A.transpose()).lpNorm<Eigen::Infinity>() <= 1e-12);
    }
    SUBCASE("beta_exp >= 1 still assembles a Markov form") {
        const DiscreteForm form = assemble_jump_form(grid, {1.0, 1.5, 0.2, 1.0}, 1.0);
        CHECK(check_markov_structure(form).passes);
    }
    SUBCASE("invalid parameters") {
        CHECK_THROWS_AS(assemble_jump_form(grid, {1.0, 2.5, 0.0, 1.0}, 1.0),
                        std::invalid_argument);
        CHECK_THROWS_AS(assemble_jump_form(grid, {1.0, 0.5, 1.5, 1.0}, 1.0),
                        std::invalid_argument);
    }
}

TEST_CASE("mesh reflection flips the drift signs") {
    // Reflecting x -> -x negates every first-derivative coefficient, so
    // A(a, -b, -d) = P A(a, b, d) P with P the index-reversal permutation.
    SUBCASE("drift-diffusion") {
        const Grid1D grid = make_grid(-1.0, 3.0, 11);
        const DiscreteForm fwd =
            assemble_drift_diffusion(grid, {0.7, 0.4, -0.2, 0.1}, 1.0);
        const DiscreteForm rev =
            assemble_drift_diffusion(grid, {0.7, -0.4, 0.2, 0.1}, 1.0);
        CHECK((dense(fwd) - reverse_conjugate(dense(rev)))
                  .lpNorm<Eigen::Infinity>() <= 1e-12);
    }
    SUBCASE("jump: reflection negates the asymmetry eta") {
        const Grid1D grid = make_grid(0.0, 2.0, 11);
        const DiscreteForm fwd = assemble_jump_form(grid, {1.0, 0.7, 0.3, 1.5}, 1.0);
        const DiscreteForm rev = assemble_jump_form(grid, {1.0, 0.7, -0.3, 1.5}, 1.0);
        CHECK((dense(fwd) - reverse_conjugate(dense(rev)))
                  .lpNorm<Eigen::Infinity>() <= 1e-12);
    }
}

TEST_CASE("Markov forms are inverse positive on small instances") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const Grid1D grid = make_grid(0.0, 1.0, 5 + (trial % 16));
        DiscreteForm form;
        if (trial % 2 == 0)
            form = assemble_drift_diffusion(
                grid, {0.5 + unif(rng), 2.0 * unif(rng) - 1.0,
                       2.0 * unif(rng) - 1.0, 0.0}, 1.0);
        else
            form = assemble_jump_form(
                grid, {0.5 + unif(rng), 0.3 + unif(rng), unif(rng) - 0.5, 1.0}, 1.0);
        REQUIRE(check_markov_structure(form).passes);
        Eigen::VectorXd f(form.size());
        for (int i = 0; i < form.size(); ++i) f[i] = unif(rng);
        const Eigen::VectorXd w = form.B_dense().partialPivLu().solve(f);
        CHECK(w.minCoeff() >= -1e-12);
    }
}

TEST_CASE("form JSON round trip") {
    const DiscreteForm form = assemble_drift_diffusion(
        make_grid(-1.0, 1.0, 7), {1.0, 0.3, -0.1, 0.2}, 1.5);
    const DiscreteForm back = form_from_json(to_json(form));
    CHECK((dense(form) - Eigen::MatrixXd(back.A)).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(back.alpha == form.alpha);
    CHECK(back.alpha0_est == form.alpha0_est);
    CHECK((back.mass_diag - form.mass_diag).lpNorm<Eigen::Infinity>() == 0.0);
}
