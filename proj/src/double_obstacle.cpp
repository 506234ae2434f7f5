#include "dvi/double_obstacle.hpp"

#include "dvi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dvi {

namespace {

struct Rows {
    const SparseMat B;
    Eigen::VectorXd diag;

    explicit Rows(const DiscreteForm& form) : B(form.B()) {
        const int n = static_cast<int>(B.rows());
        diag.resize(n);
        for (int i = 0; i < n; ++i) {
            diag[i] = B.coeff(i, i);
            if (!(diag[i] > 0.0))
                throw std::invalid_argument(
                    "solve_double: B must have strictly positive diagonal");
        }
    }

    double gs_value(const Eigen::VectorXd& v, const Eigen::VectorXd& f,
                    int i) const {
        double s = f[i];
        for (SparseMat::InnerIterator it(B, i); it; ++it)
            if (it.col() != static_cast<int>(i)) s -= it.value() * v[it.col()];
        return s / diag[i];
    }
};

} // namespace

VISolution solve_double_pgs(const DiscreteForm& form, const ObstacleData& data,
                            const SolverParams& params) {
    const int n = form.size();
    data.validate(n);
    if (!data.h)
        throw std::invalid_argument("solve_double_pgs: upper obstacle required");
    const Eigen::VectorXd& g = data.g;
    const Eigen::VectorXd& h = *data.h;

    Rows rows(form);
    const Eigen::VectorXd f = data.source_or_zero(n);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n).cwiseMax(g).cwiseMin(h);
    // Nodes with g = h are pinned before sweeping.
    std::vector<bool> pinned(n, false);
    for (int i = 0; i < n; ++i)
        if (g[i] == h[i]) {
            pinned[i] = true;
            v[i] = g[i];
        }

    for (long iter = 1; iter <= params.max_iter; ++iter) {
        double max_update = 0.0;
        auto sweep = [&](int i) {
            if (pinned[i]) return;
            const double cand = rows.gs_value(v, f, i);
            const double relaxed = v[i] + params.relaxation * (cand - v[i]);
            const double next = std::min(h[i], std::max(g[i], relaxed));
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
    throw NonConvergenceError("solve_double_pgs: max_iter exceeded", v,
                              residual_of(form, v, f).lpNorm<Eigen::Infinity>(),
                              params.max_iter);
}

VISolution solve_separability_iteration(const DiscreteForm& form,
                                        const ObstacleData& data,
                                        const SolverParams& params,
                                        double bound_cap) {
    const int n = form.size();
    data.validate(n);
    if (!data.h)
        throw std::invalid_argument(
            "solve_separability_iteration: upper obstacle required");
    if (data.f.size() != 0 && data.f.lpNorm<Eigen::Infinity>() != 0.0)
        throw std::invalid_argument(
            "solve_separability_iteration: source term must be zero");

    SolverParams inner = params;
    inner.tol = params.tol / 10.0;

    Eigen::VectorXd upper = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd lower = Eigen::VectorXd::Zero(n);
    VISolution sol;
    sol.upper_iterates.push_back(upper);
    sol.lower_iterates.push_back(lower);
    long total_inner = 0;

    for (long iter = 1; iter <= params.max_iter; ++iter) {
        ObstacleData up_data{lower + data.g, std::nullopt, {}};
        ObstacleData lo_data{upper - *data.h, std::nullopt, {}};
        VISolution up = solve_single_obstacle_pgs(form, up_data, inner);
        VISolution lo = solve_single_obstacle_pgs(form, lo_data, inner);
        total_inner += up.iterations + lo.iterations;

        const double inc = std::max((up.v - upper).lpNorm<Eigen::Infinity>(),
                                    (lo.v - lower).lpNorm<Eigen::Infinity>());
        upper = std::move(up.v);
        lower = std::move(lo.v);
        sol.upper_iterates.push_back(upper);
        sol.lower_iterates.push_back(lower);

        if (upper.lpNorm<Eigen::Infinity>() > bound_cap ||
            lower.lpNorm<Eigen::Infinity>() > bound_cap)
            throw SeparabilityFailure(
                "solve_separability_iteration: iterates exceeded bound cap",
                static_cast<int>(iter));

        if (inc < params.tol) {
            sol.v = upper - lower;
            sol.residual = residual_of(form, sol.v, Eigen::VectorXd::Zero(n));
            sol.iterations = total_inner;
            sol.method = Method::separability;
            sol.witnesses = std::make_pair(upper, lower);
            classify_contacts(sol, data);
            return sol;
        }
    }
    throw NonConvergenceError("solve_separability_iteration: max_iter exceeded",
                              upper - lower, 0.0, params.max_iter);
}

std::variant<SeparabilityWitness, SeparabilityFailureInfo>
check_separability(const DiscreteForm& form, const ObstacleData& data,
                   const SolverParams& params) {
    try {
        VISolution sol = solve_separability_iteration(form, data, params);
        SeparabilityWitness w;
        w.w1 = sol.witnesses->first;
        w.w2 = sol.witnesses->second;
        const Eigen::VectorXd diff = w.w1 - w.w2;
        double gap = 0.0;
        for (int i = 0; i < diff.size(); ++i) {
            gap = std::max(gap, data.g[i] - diff[i]);
            gap = std::max(gap, diff[i] - (*data.h)[i]);
        }
        w.max_gap = std::max(0.0, gap);
        return w;
    } catch (const SeparabilityFailure& fail) {
        return SeparabilityFailureInfo{fail.diverging_iteration};
    }
}

SaddleRegions extract_saddle_regions(const VISolution& sol,
                                     const ObstacleData& data) {
    (void)data;
    return SaddleRegions{sol.contact_upper, sol.contact_lower};
}

ResidualReport verify_vi_residual(const DiscreteForm& form, const VISolution& sol,
                                  const ObstacleData& data, double tol_kkt) {
    const int n = form.size();
    const Eigen::VectorXd f = data.source_or_zero(n);
    const Eigen::VectorXd r = residual_of(form, sol.v, f);

    ResidualReport report;
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        const bool on_lower = sol.v[i] <= data.g[i] + contact_tol(data.g[i]);
        const bool on_upper =
            data.h && sol.v[i] >= (*data.h)[i] - contact_tol((*data.h)[i]);
        double violation = 0.0;
        if (on_lower && on_upper) {
            // Pinched node: any residual sign is admissible.
        } else if (on_lower) {
            violation = std::max(0.0, -r[i]);
            report.worst_lower = std::max(report.worst_lower, violation);
        } else if (on_upper) {
            violation = std::max(0.0, r[i]);
            report.worst_upper = std::max(report.worst_upper, violation);
        } else {
            violation = std::abs(r[i]);
            report.worst_interior = std::max(report.worst_interior, violation);
        }
        if (violation > worst) {
            worst = violation;
            report.worst_node = i;
        }
    }
    report.passes = worst <= tol_kkt;
    return report;
}

} // namespace dvi
