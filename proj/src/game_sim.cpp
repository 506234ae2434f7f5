#include "dvi/game_sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace dvi {

void ProcessSpec::validate() const {
    if (!(dt > 0.0) || !(dt < t_max))
        throw std::invalid_argument("ProcessSpec: need 0 < dt < t_max");
    if (kind == ProcessKind::drifted_diffusion && !(lambda > 0.0))
        throw std::invalid_argument("ProcessSpec: lambda must be > 0");
    if (kind == ProcessKind::chain && !chain)
        throw std::invalid_argument("ProcessSpec: chain kind needs a ChainGame");
}

StoppingRule rule_hit_region(std::vector<int> region) {
    StoppingRule r;
    r.kind = RuleKind::hit_region;
    r.region = std::move(region);
    return r;
}
StoppingRule rule_threshold_above(double level) {
    StoppingRule r;
    r.kind = RuleKind::threshold_above;
    r.level = level;
    return r;
}
StoppingRule rule_threshold_below(double level) {
    StoppingRule r;
    r.kind = RuleKind::threshold_below;
    r.level = level;
    return r;
}
StoppingRule rule_fixed_time(double time) {
    StoppingRule r;
    r.kind = RuleKind::fixed_time;
    r.time = time;
    return r;
}
StoppingRule rule_never() { return StoppingRule{}; }

std::string StoppingRule::describe() const {
    std::ostringstream out;
    switch (kind) {
        case RuleKind::hit_region:
            out << "hit_region[" << region.size() << " nodes]";
            break;
        case RuleKind::threshold_above: out << "threshold_above " << level; break;
        case RuleKind::threshold_below: out << "threshold_below " << level; break;
        case RuleKind::fixed_time: out << "fixed_time " << time; break;
        case RuleKind::never: out << "never"; break;
    }
    return out.str();
}

double GridFunction::eval(double x) const {
    // Piecewise linear through the interior nodes with zero Dirichlet values
    // at x_min and x_max; zero outside the domain.
    if (x <= grid.x_min || x >= grid.x_max) return 0.0;
    const double s = (x - grid.x_min) / grid.h; // node i sits at s = i + 1
    const int left = static_cast<int>(std::floor(s)) - 1; // -1 => x_min cell
    const double w = s - std::floor(s);
    const double v_left = (left < 0) ? 0.0 : values[std::min(left, grid.n - 1)];
    const double v_right = (left + 1 >= grid.n) ? 0.0 : values[left + 1];
    return (1.0 - w) * v_left + w * v_right;
}

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t path_index) {
    return std::mt19937_64(splitmix64(seed ^ splitmix64(path_index)));
}

struct RegionMask {
    std::vector<bool> mask;

    RegionMask(const StoppingRule& rule, int n) : mask(n, false) {
        if (rule.kind == RuleKind::hit_region)
            for (int i : rule.region)
                if (i >= 0 && i < n) mask[i] = true;
    }
};

bool rule_fires(const StoppingRule& rule, const RegionMask& mask,
                const Grid1D& grid, double x, double t) {
    switch (rule.kind) {
        case RuleKind::hit_region: return mask.mask[grid.nearest_node(x)];
        case RuleKind::threshold_above: return x >= rule.level;
        case RuleKind::threshold_below: return x <= rule.level;
        case RuleKind::fixed_time: return t >= rule.time - 1e-15;
        case RuleKind::never: return false;
    }
    return false;
}

struct PathOutcome {
    double payoff = 0.0;
    bool truncated = false;
};

PathOutcome diffusion_path(const ProcessSpec& spec, const StoppingRule& rule_tau,
                           const StoppingRule& rule_sigma,
                           const RegionMask& tau_mask,
                           const RegionMask& sigma_mask, const Grid1D& grid,
                           const GridFunction& g_fn, const GridFunction& h_fn,
                           std::mt19937_64& rng) {
    const double drift = (spec.mu - spec.lambda * spec.lambda / 2.0) * spec.dt;
    const double vol = spec.lambda * std::sqrt(spec.dt);
    std::normal_distribution<double> normal(0.0, 1.0);

    double x = spec.x0;
    const int n_steps = spec.n_steps();
    for (int k = 0;; ++k) {
        const double t = k * spec.dt;
        if (rule_fires(rule_tau, tau_mask, grid, x, t))
            return {std::exp(-spec.alpha * t) * h_fn.eval(x), false};
        if (rule_fires(rule_sigma, sigma_mask, grid, x, t))
            return {std::exp(-spec.alpha * t) * g_fn.eval(x), false};
        if (k == n_steps)
            return {std::exp(-spec.alpha * spec.t_max) * g_fn.eval(x), true};
        x += drift + vol * normal(rng);
        // The grid problem has zero Dirichlet exterior data: paths leaving
        // the domain are killed.
        if (x <= grid.x_min || x >= grid.x_max) return {0.0, false};
    }
}

PathOutcome chain_path(const ProcessSpec& spec, const StoppingRule& rule_tau,
                       const StoppingRule& rule_sigma, std::mt19937_64& rng) {
    const ChainGame& chain = *spec.chain;
    const int n = chain.size();
    const std::vector<bool> tau =
        rule_tau.kind == RuleKind::hit_region
            ? RegionStrategy{rule_tau.region}.mask(n)
            : std::vector<bool>(n, false);
    const std::vector<bool> sigma =
        rule_sigma.kind == RuleKind::hit_region
            ? RegionStrategy{rule_sigma.region}.mask(n)
            : std::vector<bool>(n, false);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    double acc = 0.0;
    int s = spec.chain_start;
    const int n_steps = spec.n_steps();
    for (int k = 0; k < n_steps; ++k) {
        const double t = k * spec.dt;
        const bool tau_now =
            tau[s] ||
            (rule_tau.kind == RuleKind::fixed_time && t >= rule_tau.time - 1e-15);
        if (tau_now) return {acc + chain.h[s], false};
        const bool sigma_now =
            sigma[s] ||
            (rule_sigma.kind == RuleKind::fixed_time && t >= rule_sigma.time - 1e-15);
        if (sigma_now) return {acc + chain.g[s], false};
        acc += chain.r[s];
        double u = unif(rng);
        int next = -1;
        for (int j = 0; j < n; ++j) {
            u -= chain.P(s, j);
            if (u < 0.0) {
                next = j;
                break;
            }
        }
        if (next < 0) return {acc, false}; // killed: discount realized
        s = next;
    }
    return {acc + chain.g[s], true};
}

// Fixed-order pairwise summation.
double pairwise_sum(const std::vector<double>& v, size_t lo, size_t hi) {
    if (hi - lo <= 8) {
        double s = 0.0;
        for (size_t i = lo; i < hi; ++i) s += v[i];
        return s;
    }
    const size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

} // namespace

PayoffEstimate hitting_time_payoff(const ProcessSpec& spec,
                                   const StoppingRule& rule_tau,
                                   const StoppingRule& rule_sigma,
                                   const GridFunction& g_fn,
                                   const GridFunction& h_fn, long n_paths,
                                   std::uint64_t seed, Execution exec) {
    spec.validate();
    if (n_paths < 1)
        throw std::invalid_argument("hitting_time_payoff: n_paths must be >= 1");

    const Grid1D& grid = g_fn.grid;
    const RegionMask tau_mask(rule_tau, grid.n);
    const RegionMask sigma_mask(rule_sigma, grid.n);

    std::vector<double> payoffs(static_cast<size_t>(n_paths));
    std::vector<unsigned char> truncated(static_cast<size_t>(n_paths), 0);

    const bool parallel = exec == Execution::parallel;
#pragma omp parallel for schedule(static) if (parallel)
    for (long i = 0; i < n_paths; ++i) {
        std::mt19937_64 rng = path_rng(seed, static_cast<std::uint64_t>(i));
        const PathOutcome out =
            spec.kind == ProcessKind::drifted_diffusion
                ? diffusion_path(spec, rule_tau, rule_sigma, tau_mask, sigma_mask,
                                 grid, g_fn, h_fn, rng)
                : chain_path(spec, rule_tau, rule_sigma, rng);
        payoffs[static_cast<size_t>(i)] = out.payoff;
        truncated[static_cast<size_t>(i)] = out.truncated ? 1 : 0;
    }

    PayoffEstimate est;
    est.n_paths = n_paths;
    est.seed = seed;
    est.mean = pairwise_sum(payoffs, 0, payoffs.size()) / static_cast<double>(n_paths);
    if (n_paths > 1) {
        std::vector<double> sq(payoffs.size());
        for (size_t i = 0; i < payoffs.size(); ++i) {
            const double d = payoffs[i] - est.mean;
            sq[i] = d * d;
        }
        const double var = pairwise_sum(sq, 0, sq.size()) /
                           static_cast<double>(n_paths - 1);
        est.stderr_ = std::sqrt(var / static_cast<double>(n_paths));
    }
    long n_trunc = 0;
    for (unsigned char t : truncated) n_trunc += t;
    est.truncation_fraction =
        static_cast<double>(n_trunc) / static_cast<double>(n_paths);
    est.truncation_warning = est.truncation_fraction > 0.05;
    return est;
}

bool SaddleReport::all_pass() const {
    if (!equilibrium_pass) return false;
    for (const auto& c : sweep)
        if (!c.pass) return false;
    return true;
}

SaddleReport verify_saddle_mc(const VISolution& sol, const ProcessSpec& spec,
                              const Grid1D& grid, const ObstacleData& data,
                              const std::vector<StoppingRule>& sweep,
                              long n_paths, std::uint64_t seed, double grid_tol,
                              Execution exec) {
    if (sol.v.size() == 0)
        throw std::invalid_argument("verify_saddle_mc: solution is empty");
    if (!data.h)
        throw std::invalid_argument("verify_saddle_mc: two-obstacle data required");

    const SaddleRegions regions = extract_saddle_regions(sol, data);
    const StoppingRule tau_hat = rule_hit_region(regions.tau_region);
    const StoppingRule sigma_hat = rule_hit_region(regions.sigma_region);
    const GridFunction g_fn{grid, data.g};
    const GridFunction h_fn{grid, *data.h};

    SaddleReport report;
    report.v_x0 = spec.kind == ProcessKind::chain
                      ? sol.v[spec.chain_start]
                      : GridFunction{grid, sol.v}.eval(spec.x0);

    const PayoffEstimate j_hat = hitting_time_payoff(
        spec, tau_hat, sigma_hat, g_fn, h_fn, n_paths, seed, exec);
    report.J_hat = j_hat.mean;
    report.J_hat_stderr = j_hat.stderr_;
    report.truncation_fraction = j_hat.truncation_fraction;
    const double eq_tol =
        std::max(grid_tol * std::abs(report.v_x0), 3.0 * j_hat.stderr_);
    report.equilibrium_pass = std::abs(report.J_hat - report.v_x0) <= eq_tol;

    std::uint64_t sub = 1;
    for (const StoppingRule& rho : sweep) {
        // Buyer deviates: J(tau_hat, rho) must not beat J_hat.
        const PayoffEstimate j_sigma = hitting_time_payoff(
            spec, tau_hat, rho, g_fn, h_fn, n_paths, seed + sub++, exec);
        const double band_s =
            3.0 * std::sqrt(j_sigma.stderr_ * j_sigma.stderr_ +
                            j_hat.stderr_ * j_hat.stderr_);
        report.sweep.push_back({rho.describe(), "sigma", j_sigma.mean,
                                j_sigma.stderr_,
                                j_sigma.mean <= report.J_hat + band_s});
        // Seller deviates: J(rho, sigma_hat) must not drop below J_hat.
        const PayoffEstimate j_tau = hitting_time_payoff(
            spec, rho, sigma_hat, g_fn, h_fn, n_paths, seed + sub++, exec);
        const double band_t =
            3.0 * std::sqrt(j_tau.stderr_ * j_tau.stderr_ +
                            j_hat.stderr_ * j_hat.stderr_);
        report.sweep.push_back({rho.describe(), "tau", j_tau.mean, j_tau.stderr_,
                                j_tau.mean >= report.J_hat - band_t});
    }
    return report;
}

} // namespace dvi
