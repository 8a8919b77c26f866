#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mmf {

// Hard cap on the rotation order k. Jacobi sweeps and the stack-allocated
// small-matrix type are sized for this regime.
inline constexpr int kMaxRotationOrder = 16;

inline constexpr double kDefaultSymTol = 1e-9;
inline constexpr double kDefaultOrthTol = 1e-10;

/// Malformed or out-of-contract input data (bad files, asymmetric matrices,
/// invalid index sets). Maps to CLI exit code 2.
class InvalidInputError : public std::runtime_error {
 public:
  explicit InvalidInputError(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical routine failed to converge or produced non-finite values.
/// Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double value);

/// Worker count for parallel candidate scans. Honors MMF_THREADS
/// (0 or unset = auto), always at least 1.
int worker_count();

}  // namespace mmf
