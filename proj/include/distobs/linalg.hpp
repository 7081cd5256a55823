#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace distobs {

/// Absolute threshold below which an entry counts as structurally zero.
inline constexpr double kZeroTol = 1e-12;
/// Rank tests drop singular values below kRankTol * sigma_max.
inline constexpr double kRankTol = 1e-9;
/// "Schur stable" means spectral radius < 1 - kSchurMargin.
inline constexpr double kSchurMargin = 1e-9;

int numerical_rank(const Eigen::MatrixXd& M, double rtol = kRankTol);
int numerical_rank(const Eigen::MatrixXcd& M, double rtol = kRankTol);

/// Rank over C of the complex matrix Re + i Im, via its real 2x2 embedding.
int complex_rank(const Eigen::MatrixXd& re, const Eigen::MatrixXd& im, double rtol = kRankTol);

bool is_zero(const Eigen::Ref<const Eigen::MatrixXd>& M, double ztol = kZeroTol);

/// Principal submatrix on `index` (rows and columns in the given order).
Eigen::MatrixXd principal(const Eigen::MatrixXd& M, std::span<const int> index);
Eigen::MatrixXd select_rows(const Eigen::MatrixXd& M, std::span<const int> index);
Eigen::MatrixXd select_cols(const Eigen::MatrixXd& M, std::span<const int> index);
Eigen::VectorXd gather(const Eigen::VectorXd& v, std::span<const int> index);

/// Permutation matrix Q whose k-th column is e_{order[k]}, so Qᵀ x lists x in
/// `order` and Qᵀ M Q is M reordered.
Eigen::MatrixXd permutation_matrix(std::span<const int> order);

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace distobs
