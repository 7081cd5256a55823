#pragma once

#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace distobs {

class EigenError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Eigenvalues of a real square matrix, with multiplicity.
///
/// Hessenberg reduction plus Francis double-shift QR. Computed eigenvalues
/// that belong to a defective cluster (nearly equal values whose eigenvectors
/// are nearly parallel, the signature of a perturbed Jordan chain) are
/// replaced by the cluster mean, which is well conditioned where the
/// individual values are only accurate to eps^(1/d). Conjugate pairs come out
/// adjacent, positive imaginary part first; otherwise ordered by decreasing
/// modulus.
///
/// Safe to call concurrently. Throws EigenError if QR does not converge.
std::vector<std::complex<double>> eigenvalues(const Eigen::MatrixXd& M);

/// Max modulus over eigenvalues(M); 0 for an empty matrix.
double spectral_radius(const Eigen::MatrixXd& M);

/// Hausdorff distance between two finite point sets in the complex plane.
/// Zero when both are empty, +inf when exactly one is.
double hausdorff_distance(std::span<const std::complex<double>> a,
                          std::span<const std::complex<double>> b);

}  // namespace distobs
