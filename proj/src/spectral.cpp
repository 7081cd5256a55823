#include "distobs/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

namespace distobs {

namespace {

// A perturbed Jordan chain of length d spreads its eigenvalues on a circle of
// radius ~ (eps |M|)^(1/d) |M|^(1 - 1/d); 1e-3 covers d <= 5 in double.
constexpr double kClusterRadius = 1e-3;
// Eigenvectors of a perturbed chain agree to O(spread); distinct
// well-conditioned eigenvalues have clearly separated eigenvectors.
constexpr double kParallelTol = 1e-4;

int find(std::vector<int>& parent, int i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

}  // namespace

std::vector<std::complex<double>> eigenvalues(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) throw EigenError("eigenvalues: matrix is not square");
  const Eigen::Index n = M.rows();
  if (n == 0) return {};
  if (!M.allFinite()) throw EigenError("eigenvalues: non-finite entry");

  Eigen::VectorXcd values;
  Eigen::MatrixXcd vectors;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(M, /*computeEigenvectors=*/true);
  if (solver.info() == Eigen::Success) {
    values = solver.eigenvalues();
    vectors = solver.eigenvectors();
  } else {
    // The real Francis iteration occasionally stalls on highly structured
    // inputs; the complex Schur iteration uses different shifts.
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> fallback(M.cast<std::complex<double>>(), true);
    if (fallback.info() != Eigen::Success) {
      throw EigenError("eigenvalues: QR iteration did not converge");
    }
    values = fallback.eigenvalues();
    vectors = fallback.eigenvectors();
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    const double norm = vectors.col(k).norm();
    if (norm > 0.0) vectors.col(k) /= norm;
  }

  const double scale = std::max(1.0, M.norm());
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (std::abs(values(i) - values(j)) > kClusterRadius * scale) continue;
      const double overlap = std::abs(vectors.col(i).dot(vectors.col(j)));
      if (overlap < 1.0 - kParallelTol) continue;
      parent[find(parent, static_cast<int>(i))] = find(parent, static_cast<int>(j));
    }
  }

  std::vector<std::complex<double>> sum(static_cast<std::size_t>(n), 0.0);
  std::vector<int> count(static_cast<std::size_t>(n), 0);
  for (Eigen::Index k = 0; k < n; ++k) {
    const int root = find(parent, static_cast<int>(k));
    sum[root] += values(k);
    ++count[root];
  }
  std::vector<std::complex<double>> out(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    const int root = find(parent, static_cast<int>(k));
    if (count[root] == 1) {
      out[k] = values(k);
      continue;
    }
    std::complex<double> mean = sum[root] / static_cast<double>(count[root]);
    if (std::abs(mean.imag()) <= 1e-14 * scale) mean.imag(0.0);
    out[k] = mean;
  }

  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    const double ma = std::abs(a);
    const double mb = std::abs(b);
    if (ma != mb) return ma > mb;
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  return out;
}

double spectral_radius(const Eigen::MatrixXd& M) {
  double rho = 0.0;
  for (const auto& v : eigenvalues(M)) rho = std::max(rho, std::abs(v));
  return rho;
}

double hausdorff_distance(std::span<const std::complex<double>> a,
                          std::span<const std::complex<double>> b) {
  if (a.empty() && b.empty()) return 0.0;
  if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
  auto directed = [](auto from, auto to) {
    double worst = 0.0;
    for (const auto& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : to) best = std::min(best, std::abs(p - q));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

}  // namespace distobs
