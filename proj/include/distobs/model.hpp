#pragma once

#include <complex>
#include <compare>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "distobs/sim_config.hpp"

namespace distobs {

/// Identifies the Jordan miniblock (eigenvalue, block). Both indices are
/// zero-based; user-facing output adds one.
struct ModeId {
  int eig = 0;
  int block = 0;

  auto operator<=>(const ModeId&) const = default;
  std::string label() const;  // "l,h", one-based
};

class ModelError : public std::runtime_error {
 public:
  enum class Kind { kParse, kDimension, kInvariant };

  ModelError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

class EigenvalueSpec {
 public:
  enum class Kind { kReal, kComplexPair };

  static EigenvalueSpec Real(double a);
  /// a ± bi with b > 0; the conjugate is implicit.
  static EigenvalueSpec ComplexPair(double a, double b);

  Kind kind() const { return kind_; }
  double re() const { return re_; }
  double im() const { return im_; }
  int unit_size() const { return kind_ == Kind::kReal ? 1 : 2; }
  double modulus() const { return modulus_; }
  bool unstable() const { return modulus_ >= 1.0; }
  /// The eigenvalue with nonnegative imaginary part.
  std::complex<double> value() const { return {re_, im_}; }

 private:
  EigenvalueSpec(Kind kind, double re, double im);

  Kind kind_;
  double re_;
  double im_;
  double modulus_;
};

struct MiniblockSpec {
  int eig_index = 0;
  int block_index = 0;
  int dim_units = 1;
  int unit_size = 1;
  int state_offset = 0;

  int size() const { return dim_units * unit_size; }
  ModeId id() const { return {eig_index, block_index}; }
};

/// Plant x(t+1) = A x(t) + B u(t) with A in real Jordan form.
///
/// The constructor takes eigenvalues in any order and stores them with every
/// unstable eigenvalue (modulus >= 1) first, keeping the relative order inside
/// each group. Rows of B and columns of T follow the reordering; the recorded
/// permutations map results back to the caller's ordering.
class PlantModel {
 public:
  PlantModel(std::vector<EigenvalueSpec> eigs,
             std::vector<std::vector<int>> miniblock_dims, Eigen::MatrixXd B,
             std::optional<Eigen::MatrixXd> transform = std::nullopt);

  int n() const { return n_; }
  int m() const { return static_cast<int>(B_.cols()); }
  int num_eigs() const { return static_cast<int>(eigs_.size()); }
  int num_unstable() const { return num_unstable_; }

  const std::vector<EigenvalueSpec>& eigs() const { return eigs_; }
  const EigenvalueSpec& eig(int l) const { return eigs_.at(l); }
  const std::vector<MiniblockSpec>& miniblocks() const { return blocks_; }
  /// Miniblocks of eigenvalue l, in block order.
  std::span<const MiniblockSpec> blocks_of(int l) const;
  const MiniblockSpec& block(ModeId id) const;
  int num_blocks(int l) const { return static_cast<int>(blocks_of(l).size()); }
  /// Every (l, h) with l unstable, lexicographic.
  std::vector<ModeId> unstable_modes() const;

  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::MatrixXd& B() const { return B_; }
  const std::optional<Eigen::MatrixXd>& transform() const { return T_; }

  /// eig_user_order()[l] is the caller's index of stored eigenvalue l.
  const std::vector<int>& eig_user_order() const { return eig_user_order_; }
  /// state_user_order()[k] is the caller's index of stored state k.
  const std::vector<int>& state_user_order() const { return state_user_order_; }

  /// Reorders the columns of a matrix given in the caller's state order.
  Eigen::MatrixXd columns_from_user(const Eigen::MatrixXd& M) const;
  Eigen::VectorXd vector_from_user(const Eigen::VectorXd& v) const;
  Eigen::VectorXd vector_to_user(const Eigen::VectorXd& v) const;

  /// A block of A for miniblock `id` (size x size).
  Eigen::MatrixXd block_matrix(ModeId id) const;

 private:
  std::vector<EigenvalueSpec> eigs_;
  std::vector<MiniblockSpec> blocks_;
  std::vector<int> eig_first_block_;
  std::vector<int> eig_user_order_;
  std::vector<int> state_user_order_;
  int n_ = 0;
  int num_unstable_ = 0;
  Eigen::MatrixXd A_;
  Eigen::MatrixXd B_;
  std::optional<Eigen::MatrixXd> T_;
};

/// Real Jordan matrix for the given blocks: λ (or [[a, b], [-b, a]]) on the
/// diagonal, identity units on the superdiagonal, zero elsewhere.
Eigen::MatrixXd assemble_A(const std::vector<EigenvalueSpec>& eigs,
                           const std::vector<MiniblockSpec>& blocks, int n);
inline Eigen::MatrixXd assemble_A(const PlantModel& model) { return model.A(); }

struct SensorSuite {
  std::vector<Eigen::MatrixXd> C;

  int N() const { return static_cast<int>(C.size()); }
  /// All C_i stacked vertically.
  Eigen::MatrixXd stacked() const;
};

/// L = D - A with D the diagonal of row sums (in-degrees).
Eigen::MatrixXd laplacian_of(const Eigen::MatrixXd& adjacency);

/// Weighted digraph; [adjacency]_{i,j} > 0 means agent i receives from j.
class CommGraph {
 public:
  explicit CommGraph(Eigen::MatrixXd adjacency);

  int N() const { return static_cast<int>(adjacency_.rows()); }
  const Eigen::MatrixXd& adjacency() const { return adjacency_; }
  const Eigen::MatrixXd& laplacian() const { return laplacian_; }
  double weight(int i, int j) const { return adjacency_(i, j); }
  /// In-neighbors of i (agents it receives from), ascending.
  const std::vector<int>& neighbors(int i) const { return neighbors_.at(i); }

 private:
  Eigen::MatrixXd adjacency_;
  Eigen::MatrixXd laplacian_;
  std::vector<std::vector<int>> neighbors_;
};

struct Problem {
  PlantModel model;
  SensorSuite sensors;
  CommGraph graph;
  SimConfig sim;
};

/// Parses and validates a model document. Throws ModelError.
Problem parse_model(const std::string& json_text);
Problem load_model(const std::filesystem::path& path);
/// Writes the problem in internal (sorted) order; parse_model of the result
/// reproduces every matrix bit for bit.
std::string serialize_model(const Problem& problem);

}  // namespace distobs
