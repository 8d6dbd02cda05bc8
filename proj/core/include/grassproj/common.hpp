#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace grassproj {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Thrown when a caller breaks a documented precondition.
class ContractViolation : public std::invalid_argument {
public:
    explicit ContractViolation(const std::string& what) : std::invalid_argument(what) {}
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw ContractViolation(what);
}

/// Numerical tolerances shared by every module and test.
namespace tol {
inline constexpr double kFrame = 1e-12;        // frame orthonormality, offset orthogonality
inline constexpr double kProjector = 1e-10;    // ||P^2 - P||, chart round trips
inline constexpr double kMetric = 1e-9;        // triangle inequality slack
inline constexpr double kPointImage = 1e-12;   // |P_V u| below this: the line maps to a point
inline constexpr double kRank = 1e-10;         // relative rank cutoff when orthonormalizing
}  // namespace tol

/// Geometric constants of the local chart.
namespace chart {
/// Lines used in experiments make an angle at most this with the x_n axis.
inline constexpr double kMaxAngle = 0.1;
/// Offsets of local planes lie in the open ball of this radius.
inline constexpr double kMaxOffset = 0.5;
}  // namespace chart

}  // namespace grassproj
