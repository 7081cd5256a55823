#include "distobs/linalg.hpp"

#include <Eigen/SVD>

namespace distobs {

namespace {

template <typename Matrix>
int rank_of(const Matrix& M, double rtol) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(M);
  const auto& s = svd.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  if (!(smax > 0.0)) return 0;
  int rank = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    if (s(k) > rtol * smax) ++rank;
  }
  return rank;
}

}  // namespace

int numerical_rank(const Eigen::MatrixXd& M, double rtol) { return rank_of(M, rtol); }

int numerical_rank(const Eigen::MatrixXcd& M, double rtol) { return rank_of(M, rtol); }

int complex_rank(const Eigen::MatrixXd& re, const Eigen::MatrixXd& im, double rtol) {
  Eigen::MatrixXcd M(re.rows(), re.cols());
  M.real() = re;
  M.imag() = im;
  return rank_of(M, rtol);
}

bool is_zero(const Eigen::Ref<const Eigen::MatrixXd>& M, double ztol) {
  return M.size() == 0 || M.cwiseAbs().maxCoeff() <= ztol;
}

Eigen::MatrixXd principal(const Eigen::MatrixXd& M, std::span<const int> index) {
  const auto k = static_cast<Eigen::Index>(index.size());
  Eigen::MatrixXd out(k, k);
  for (Eigen::Index r = 0; r < k; ++r) {
    for (Eigen::Index c = 0; c < k; ++c) out(r, c) = M(index[r], index[c]);
  }
  return out;
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& M, std::span<const int> index) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(index.size()), M.cols());
  for (std::size_t r = 0; r < index.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = M.row(index[r]);
  return out;
}

Eigen::MatrixXd select_cols(const Eigen::MatrixXd& M, std::span<const int> index) {
  Eigen::MatrixXd out(M.rows(), static_cast<Eigen::Index>(index.size()));
  for (std::size_t c = 0; c < index.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = M.col(index[c]);
  return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, std::span<const int> index) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(index.size()));
  for (std::size_t k = 0; k < index.size(); ++k) out(static_cast<Eigen::Index>(k)) = v(index[k]);
  return out;
}

Eigen::MatrixXd permutation_matrix(std::span<const int> order) {
  const auto n = static_cast<Eigen::Index>(order.size());
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) Q(order[k], k) = 1.0;
  return Q;
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

}  // namespace distobs
