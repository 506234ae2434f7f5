#include "dvi/chain_oracle.hpp"

#include "dvi/errors.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dvi {

void ChainGame::validate() const {
    const int n = size();
    if (P.cols() != n || r.size() != n || g.size() != n || h.size() != n)
        throw std::invalid_argument("ChainGame: dimension mismatch");
    if (!(delta > 0.0))
        throw std::invalid_argument("ChainGame: delta must be > 0");
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) {
            if (P(i, j) < 0.0)
                throw std::invalid_argument("ChainGame: P must be nonnegative");
            row += P(i, j);
        }
        if (row > 1.0 - delta + 1e-12)
            throw std::invalid_argument("ChainGame: row sum exceeds 1 - delta");
        if (g[i] > h[i])
            throw std::invalid_argument("ChainGame: g <= h violated");
    }
}

std::vector<bool> RegionStrategy::mask(int n) const {
    std::vector<bool> m(n, false);
    for (int i : stop_set) {
        if (i < 0 || i >= n)
            throw std::invalid_argument("RegionStrategy: state index out of range");
        m[i] = true;
    }
    return m;
}

RegionStrategy RegionStrategy::from_mask(std::uint32_t bits, int n) {
    RegionStrategy s;
    for (int i = 0; i < n; ++i)
        if (bits & (1u << i)) s.stop_set.push_back(i);
    return s;
}

ChainDynamics build_chain_from_form(const DiscreteForm& form) {
    const MarkovReport check = check_markov_structure(form);
    if (!check.passes)
        throw std::invalid_argument(
            "build_chain_from_form: form fails the sign-structure check");

    const Eigen::MatrixXd B = form.B_dense();
    const int n = form.size();
    ChainDynamics dyn;
    dyn.diag = B.diagonal();
    dyn.P = Eigen::MatrixXd::Identity(n, n) - dyn.diag.cwiseInverse().asDiagonal() * B;
    // Clear roundoff on the diagonal.
    for (int i = 0; i < n; ++i) dyn.P(i, i) = std::max(0.0, dyn.P(i, i));
    dyn.delta = (dyn.diag.cwiseInverse().asDiagonal() * (B * Eigen::VectorXd::Ones(n)))
                    .minCoeff();
    if (!(dyn.delta > 0.0))
        throw std::invalid_argument(
            "build_chain_from_form: killing margin must be positive");
    return dyn;
}

ChainGame make_chain_game(const ChainDynamics& dyn, const Eigen::VectorXd& g,
                          const Eigen::VectorXd& h, const Eigen::VectorXd& f) {
    ChainGame chain;
    chain.P = dyn.P;
    chain.delta = dyn.delta;
    chain.g = g;
    chain.h = h;
    chain.r = f.size() == 0 ? Eigen::VectorXd::Zero(dyn.P.rows())
                            : Eigen::VectorXd(dyn.diag.cwiseInverse().cwiseProduct(f));
    chain.validate();
    return chain;
}

ValueIterationResult value_iteration(const ChainGame& chain, double tol) {
    chain.validate();
    const int n = chain.size();
    ValueIterationResult res;
    res.v = Eigen::VectorXd::Zero(n).cwiseMax(chain.g).cwiseMin(chain.h);
    Eigen::VectorXd next(n);
    while (true) {
        next = (chain.P * res.v + chain.r).cwiseMax(chain.g).cwiseMin(chain.h);
        const double inc = (next - res.v).lpNorm<Eigen::Infinity>();
        res.increments.push_back(inc);
        res.v.swap(next);
        ++res.iterations;
        if (inc < tol) break;
    }
    return res;
}

Eigen::VectorXd strategy_payoff_all(const ChainGame& chain,
                                    const RegionStrategy& s_tau,
                                    const RegionStrategy& s_sigma) {
    const int n = chain.size();
    const std::vector<bool> tau = s_tau.mask(n);
    const std::vector<bool> sigma = s_sigma.mask(n);

    Eigen::VectorXd u(n);
    std::vector<int> cont; // continuation states
    cont.reserve(n);
    for (int i = 0; i < n; ++i) {
        if (tau[i])
            u[i] = chain.h[i]; // seller stops; ties pay h
        else if (sigma[i])
            u[i] = chain.g[i];
        else
            cont.push_back(i);
    }
    if (!cont.empty()) {
        const int m = static_cast<int>(cont.size());
        Eigen::MatrixXd Acc(m, m);
        Eigen::VectorXd rhs(m);
        for (int a = 0; a < m; ++a) {
            rhs[a] = chain.r[cont[a]];
            for (int j = 0; j < n; ++j)
                if (tau[j] || sigma[j]) rhs[a] += chain.P(cont[a], j) * u[j];
            for (int b = 0; b < m; ++b)
                Acc(a, b) = (a == b ? 1.0 : 0.0) - chain.P(cont[a], cont[b]);
        }
        const Eigen::VectorXd uc = Acc.partialPivLu().solve(rhs);
        for (int a = 0; a < m; ++a) u[cont[a]] = uc[a];
    }
    return u;
}

double strategy_payoff(const ChainGame& chain, const RegionStrategy& s_tau,
                       const RegionStrategy& s_sigma, int x) {
    if (x < 0 || x >= chain.size())
        throw std::invalid_argument("strategy_payoff: start state out of range");
    return strategy_payoff_all(chain, s_tau, s_sigma)[x];
}

MinimaxResult minimax_enumerate(const ChainGame& chain, int x, bool parallel) {
    const int n = chain.size();
    if (n > 12)
        throw std::invalid_argument("minimax_enumerate: n must be <= 12");
    if (x < 0 || x >= n)
        throw std::invalid_argument("minimax_enumerate: start state out of range");
    chain.validate();

    const std::uint32_t count = 1u << n;
    // payoff[tau_bits][sigma_bits] at start state x.
    std::vector<std::vector<double>> payoff(count, std::vector<double>(count));

#pragma omp parallel for schedule(dynamic) if (parallel)
    for (std::int64_t t = 0; t < static_cast<std::int64_t>(count); ++t) {
        const RegionStrategy s_tau =
            RegionStrategy::from_mask(static_cast<std::uint32_t>(t), n);
        for (std::uint32_t s = 0; s < count; ++s) {
            const RegionStrategy s_sigma = RegionStrategy::from_mask(s, n);
            payoff[static_cast<size_t>(t)][s] =
                strategy_payoff_all(chain, s_tau, s_sigma)[x];
        }
    }

    // min over tau of max over sigma, smallest bitmask wins ties.
    MinimaxResult res;
    double minmax = std::numeric_limits<double>::infinity();
    std::uint32_t best_tau = 0;
    std::uint32_t best_sigma_inner = 0;
    for (std::uint32_t t = 0; t < count; ++t) {
        double inner = -std::numeric_limits<double>::infinity();
        std::uint32_t arg = 0;
        for (std::uint32_t s = 0; s < count; ++s)
            if (payoff[t][s] > inner) {
                inner = payoff[t][s];
                arg = s;
            }
        if (inner < minmax) {
            minmax = inner;
            best_tau = t;
            best_sigma_inner = arg;
        }
    }
    // max over sigma of min over tau.
    double maxmin = -std::numeric_limits<double>::infinity();
    std::uint32_t best_sigma = 0;
    for (std::uint32_t s = 0; s < count; ++s) {
        double inner = std::numeric_limits<double>::infinity();
        for (std::uint32_t t = 0; t < count; ++t)
            inner = std::min(inner, payoff[t][s]);
        if (inner > maxmin) {
            maxmin = inner;
            best_sigma = s;
        }
    }
    (void)best_sigma_inner;

    res.minmax = minmax;
    res.maxmin = maxmin;
    res.value = minmax;
    res.argmin_tau = RegionStrategy::from_mask(best_tau, n);
    res.argmax_sigma = RegionStrategy::from_mask(best_sigma, n);

    if (std::abs(minmax - maxmin) > 1e-10)
        throw NumericError("minimax_enumerate: min-max and max-min disagree");
    const ValueIterationResult vi = value_iteration(chain, 1e-13);
    if (std::abs(minmax - vi.v[x]) > 1e-9)
        throw NumericError("minimax_enumerate: enumeration disagrees with value iteration");
    return res;
}

std::string enumeration_csv(const ChainGame& chain, int x) {
    const int n = chain.size();
    if (n > 8)
        throw std::invalid_argument("enumeration_csv: n must be <= 8");
    const std::uint32_t count = 1u << n;
    std::ostringstream out;
    out << "s_tau,s_sigma,payoff\n";
    out.precision(17);
    for (std::uint32_t t = 0; t < count; ++t) {
        const RegionStrategy s_tau = RegionStrategy::from_mask(t, n);
        for (std::uint32_t s = 0; s < count; ++s) {
            const RegionStrategy s_sigma = RegionStrategy::from_mask(s, n);
            out << t << ',' << s << ','
                << strategy_payoff_all(chain, s_tau, s_sigma)[x] << '\n';
        }
    }
    return out.str();
}

} // namespace dvi
