#include "dvi/obstacle_solver.hpp"

#include "dvi/errors.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace dvi {

void ObstacleData::validate(int n) const {
    if (g.size() != n)
        throw std::invalid_argument("ObstacleData: g has wrong length");
    if (f.size() != 0 && f.size() != n)
        throw std::invalid_argument("ObstacleData: f has wrong length");
    if (h) {
        if (h->size() != n)
            throw std::invalid_argument("ObstacleData: h has wrong length");
        for (int i = 0; i < n; ++i)
            if (g[i] > (*h)[i])
                throw std::invalid_argument("ObstacleData: g <= h violated at node " +
                                            std::to_string(i));
    }
}

const char* method_name(Method m) {
    switch (m) {
        case Method::pgs: return "pgs";
        case Method::penalty: return "penalty";
        case Method::separability: return "separability";
    }
    return "?";
}

Eigen::VectorXd residual_of(const DiscreteForm& form, const Eigen::VectorXd& v,
                            const Eigen::VectorXd& f) {
    return form.B() * v - f;
}

void classify_contacts(VISolution& sol, const ObstacleData& data) {
    sol.contact_lower.clear();
    sol.contact_upper.clear();
    const int n = static_cast<int>(sol.v.size());
    for (int i = 0; i < n; ++i) {
        if (sol.v[i] <= data.g[i] + contact_tol(data.g[i]))
            sol.contact_lower.push_back(i);
        if (data.h && sol.v[i] >= (*data.h)[i] - contact_tol((*data.h)[i]))
            sol.contact_upper.push_back(i);
    }
}

namespace {

struct SweepWorkspace {
    const SparseMat B;
    Eigen::VectorXd diag;

    explicit SweepWorkspace(const DiscreteForm& form) : B(form.B()) {
        const int n = static_cast<int>(B.rows());
        diag.resize(n);
        for (int i = 0; i < n; ++i) {
            diag[i] = B.coeff(i, i);
            if (!(diag[i] > 0.0))
                throw std::invalid_argument(
                    "solver: B must have strictly positive diagonal");
        }
    }

    // Gauss-Seidel candidate at node i given current iterate v.
    double gs_value(const Eigen::VectorXd& v, const Eigen::VectorXd& f,
                    int i) const {
        double s = f[i];
        for (SparseMat::InnerIterator it(B, i); it; ++it)
            if (it.col() != static_cast<int>(i)) s -= it.value() * v[it.col()];
        return s / diag[i];
    }
};

double clamp_update(double old_v, double candidate, double omega, double lo,
                    double hi) {
    const double relaxed = old_v + omega * (candidate - old_v);
    return std::min(hi, std::max(lo, relaxed));
}

} // namespace

VISolution solve_single_obstacle_pgs(const DiscreteForm& form,
                                     const ObstacleData& data,
                                     const SolverParams& params) {
    const int n = form.size();
    data.validate(n);
    if (data.h)
        throw std::invalid_argument("solve_single_obstacle_pgs: h must be absent");

    SweepWorkspace ws(form);
    const Eigen::VectorXd f = data.source_or_zero(n);
    Eigen::VectorXd v = data.g.cwiseMax(0.0);
    constexpr double hi = std::numeric_limits<double>::infinity();

    for (long iter = 1; iter <= params.max_iter; ++iter) {
        double max_update = 0.0;
        auto sweep = [&](int i) {
            const double next =
                clamp_update(v[i], ws.gs_value(v, f, i), params.relaxation,
                             data.g[i], hi);
            max_update = std::max(max_update, std::abs(next - v[i]));
            v[i] = next;
        };
        for (int i = 0; i < n; ++i) sweep(i);
        if (params.symmetric_sweeps)
            for (int i = n - 1; i >= 0; --i) sweep(i);
        if (max_update < params.tol) {
            VISolution sol;
            sol.v = v;
            sol.residual = residual_of(form, v, f);
            sol.iterations = iter;
            sol.method = Method::pgs;
            classify_contacts(sol, data);
            return sol;
        }
    }
    throw NonConvergenceError("solve_single_obstacle_pgs: max_iter exceeded", v,
                              residual_of(form, v, f).lpNorm<Eigen::Infinity>(),
                              params.max_iter);
}

namespace {

// One lagged-penalty Gauss-Seidel pass: each node solves exactly the scalar
// equation B_ii v_i + (1/eps) max(g_i - v_i, 0) = rhs_i.
double penalty_node_solve(const SweepWorkspace& ws, const Eigen::VectorXd& v,
                          const Eigen::VectorXd& f, const Eigen::VectorXd& g,
                          double inv_eps, int i) {
    const double unconstrained = ws.gs_value(v, f, i);
    if (unconstrained >= g[i]) return unconstrained;
    const double diag = ws.diag[i];
    return (diag * unconstrained + inv_eps * g[i]) / (diag + inv_eps);
}

} // namespace

VISolution solve_single_obstacle_penalty(const DiscreteForm& form,
                                         const ObstacleData& data,
                                         const SolverParams& params) {
    const int n = form.size();
    data.validate(n);
    if (data.h)
        throw std::invalid_argument(
            "solve_single_obstacle_penalty: h must be absent");
    if (params.penalty_eps_schedule.empty())
        throw std::invalid_argument("penalty: empty eps schedule");
    for (size_t k = 1; k < params.penalty_eps_schedule.size(); ++k)
        if (!(params.penalty_eps_schedule[k] < params.penalty_eps_schedule[k - 1]))
            throw std::invalid_argument("penalty: eps schedule must be strictly decreasing");

    SweepWorkspace ws(form);
    const Eigen::VectorXd f = data.source_or_zero(n);
    Eigen::VectorXd v = data.g.cwiseMax(0.0);
    long total_iters = 0;

    for (double eps : params.penalty_eps_schedule) {
        const double inv_eps = 1.0 / eps;
        bool converged = false;
        for (long iter = 1; iter <= params.max_iter; ++iter) {
            double max_update = 0.0;
            for (int i = 0; i < n; ++i) {
                const double next = penalty_node_solve(ws, v, f, data.g, inv_eps, i);
                max_update = std::max(max_update, std::abs(next - v[i]));
                v[i] = next;
            }
            ++total_iters;
            if (max_update < params.tol) {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw NonConvergenceError(
                "solve_single_obstacle_penalty: inner sweeps did not converge at eps=" +
                    std::to_string(eps),
                v, residual_of(form, v, f).lpNorm<Eigen::Infinity>(),
                params.max_iter);
    }

    VISolution sol;
    sol.v = v;
    sol.residual = residual_of(form, v, f);
    sol.iterations = total_iters;
    sol.method = Method::penalty;
    classify_contacts(sol, data);
    return sol;
}

bool smallest_potential_check(const DiscreteForm& form, const Eigen::VectorXd& v,
                              const Eigen::VectorXd& g, double tol,
                              unsigned long seed) {
    const int n = form.size();
    if (v.size() != n || g.size() != n)
        throw std::invalid_argument("smallest_potential_check: size mismatch");

    const Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
    const Eigen::VectorXd r = residual_of(form, v, f);
    if (r.minCoeff() < -tol) return false;          // not a supersolution
    if (((v - g).minCoeff()) < -tol) return false;  // infeasible

    SweepWorkspace ws(form);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    constexpr double hi = std::numeric_limits<double>::infinity();

    for (int trial = 0; trial < 50; ++trial) {
        Eigen::VectorXd w = v;
        for (int i = 0; i < n; ++i) w[i] += unif(rng);
        // One projected sweep pushes the competitor toward the feasible
        // supersolution cone without crossing below the solution.
        for (int i = 0; i < n; ++i)
            w[i] = clamp_update(w[i], ws.gs_value(w, f, i), 1.0, g[i], hi);
        if (((w - v).minCoeff()) < -tol) return false;
    }
    return true;
}

} // namespace dvi
