#pragma once

#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "dncim/error.hpp"

namespace dncim {

/// Point in a model's parameter space.
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// (a - b)^T J (a - b).
inline double quadratic_form(const Vector& a, const Vector& b, const Matrix& info)
{
    const Vector d = a - b;
    return d.dot(info * d);
}

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline double min_eigenvalue(const Matrix& m)
{
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
}

/// Condition number of a symmetric matrix; infinity when not positive definite.
inline double spd_condition_number(const Matrix& m)
{
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

inline void require_same_dim(const Vector& a, const Vector& b, const char* what)
{
    if (a.size() != b.size())
        throw DomainError(std::string(what) + ": dimension mismatch (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
}

} // namespace dncim
