#ifndef CCOPF_ERRORS_HPP
#define CCOPF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ccopf {

// Bad case files, bad samples, bad config. CLI exit code 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Optimisation problem has no feasible point. CLI exit code 3.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Solver breakdown, non-convergence, rank recovery failure. CLI exit code 4.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace ccopf

#endif
