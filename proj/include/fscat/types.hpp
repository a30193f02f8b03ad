#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace fscat {

using cplx = std::complex<double>;

inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr cplx iu{0.0, 1.0};

// Thrown when an algorithm fails to reach its accuracy target or hits a
// degenerate regime (ill-conditioned geometric reduction, singular solve, ...).
// Distinct from std::invalid_argument, which flags bad caller input.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fscat
