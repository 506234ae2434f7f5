#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace dvi {

// Thrown when an iterative solve hits its iteration cap. Carries the last
// iterate so callers can inspect (but never silently consume) it.
class NonConvergenceError : public std::runtime_error {
public:
    NonConvergenceError(std::string what, Eigen::VectorXd last_iterate,
                        double residual_norm, long iterations)
        : std::runtime_error(std::move(what)),
          last_iterate(std::move(last_iterate)),
          residual_norm(residual_norm),
          iterations(iterations) {}

    Eigen::VectorXd last_iterate;
    double residual_norm;
    long iterations;
};

// Thrown when the alternating supersolution iteration blows past its bound
// cap, i.e. no separating pair of supersolutions was found.
class SeparabilityFailure : public std::runtime_error {
public:
    SeparabilityFailure(std::string what, int diverging_iteration)
        : std::runtime_error(std::move(what)),
          diverging_iteration(diverging_iteration) {}

    int diverging_iteration;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace dvi
