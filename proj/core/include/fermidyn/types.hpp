#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace fermidyn {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::ColMajor, std::int64_t>;
using Triplet = Eigen::Triplet<Complex, std::int64_t>;
using Index = std::int64_t;

inline constexpr Complex kI{0.0, 1.0};

// Sector blocks with more rows or columns than this are stored sparse.
inline constexpr Index kDenseLimit = 1000;

// ---------------------------------------------------------------------------
// Error hierarchy. Every module error derives from fermidyn::Error so the
// experiment driver can record it as a failed check instead of crashing.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define FERMIDYN_DEFINE_ERROR(Name)                         \
  class Name : public Error {                               \
   public:                                                  \
    explicit Name(const std::string& what) : Error(what) {} \
  }

FERMIDYN_DEFINE_ERROR(OpenBoundaryClipError);
FERMIDYN_DEFINE_ERROR(ShapeError);
FERMIDYN_DEFINE_ERROR(LevelError);
FERMIDYN_DEFINE_ERROR(QuadratureNotConverged);
FERMIDYN_DEFINE_ERROR(TailBoundExceeded);
FERMIDYN_DEFINE_ERROR(KernelMismatch);
FERMIDYN_DEFINE_ERROR(FrequencyCoverageError);
FERMIDYN_DEFINE_ERROR(OverflowGuard);
FERMIDYN_DEFINE_ERROR(ConfigError);
FERMIDYN_DEFINE_ERROR(BudgetError);
FERMIDYN_DEFINE_ERROR(TruncationWarning);

#undef FERMIDYN_DEFINE_ERROR

}  // namespace fermidyn
