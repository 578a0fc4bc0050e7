#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "phs/mlp.hpp"
#include "phs/neural_hamiltonian.hpp"

namespace phs {

/// A port-Hamiltonian system
///
///   xdot = (J(x) - R(x)) grad H(x) + G(x) u,   y = G(x)^T grad H(x).
///
/// Implemented by the learned model and by the ground-truth benchmarks.
class PortHamiltonianSystem {
 public:
  virtual ~PortHamiltonianSystem() = default;

  virtual int state_dim() const = 0;
  virtual int input_dim() const = 0;
  virtual double hamiltonian(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::VectorXd hamiltonian_grad(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::MatrixXd interconnection(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::MatrixXd dissipation(const Eigen::VectorXd& x) const = 0;
  virtual Eigen::MatrixXd port(const Eigen::VectorXd& x) const = 0;

  /// True when x = (q, p) with J = [[0, I], [-I, 0]] for every x.
  virtual bool canonical() const = 0;

  Eigen::VectorXd dynamics(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
  Eigen::VectorXd output(const Eigen::VectorXd& x) const;
  /// -grad H^T R grad H + u^T y.
  double energy_rate(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;

 protected:
  void check_state(const Eigen::VectorXd& x) const;
  void check_input(const Eigen::VectorXd& u) const;
};

/// [[0, I_l], [-I_l, 0]] for n = 2l.
Eigen::MatrixXd canonical_interconnection(int n);

enum class StructureMode {
  kFixed,           // matrix known exactly
  kConstant,        // free entries are constant learnable coefficients
  kStateDependent,  // free entries produced by the shared structure network
};

std::string to_string(StructureMode mode);
StructureMode structure_mode_from_string(const std::string& name);

using EntryPattern = std::vector<std::pair<int, int>>;

EntryPattern strictly_lower_pattern(int n);
EntryPattern lower_pattern(int n);
EntryPattern dense_pattern(int rows, int cols);
EntryPattern diagonal_pattern(const std::vector<int>& indices);

/// One of J, R or G.
///
/// For J the free entries fill a strictly lower triangular T_J and
/// J = T_J - T_J^T. For R they fill a lower triangular T_R whose diagonal is
/// passed through softplus, and R = T_R T_R^T. For G they are the entries of G.
struct MatrixParam {
  StructureMode mode = StructureMode::kFixed;
  Eigen::MatrixXd fixed;     // kFixed only: the matrix itself
  EntryPattern pattern;      // free entry positions
  Eigen::VectorXd coeffs;    // kConstant only
  int offset = 0;            // kStateDependent: first row in the structure net output

  static MatrixParam make_fixed(Eigen::MatrixXd m);
  static MatrixParam make_constant(EntryPattern pattern, Eigen::VectorXd coeffs);
  static MatrixParam make_state_dependent(EntryPattern pattern);

  int free_count() const { return static_cast<int>(pattern.size()); }
};

enum class MatrixRole { kInterconnection, kDissipation, kPort };

class StructureParam {
 public:
  StructureParam() = default;
  /// Validates patterns against the roles; a structure net is required when
  /// any matrix is state dependent and its output width must cover all
  /// state-dependent entries.
  StructureParam(int n, int m, MatrixParam j, MatrixParam r, MatrixParam g,
                 std::optional<Mlp> net = std::nullopt);

  /// Builds an identity-output net (n -> hidden -> free entries) and assigns
  /// offsets for every state-dependent matrix.
  static StructureParam with_state_network(int n, int m, MatrixParam j, MatrixParam r,
                                           MatrixParam g, int hidden, std::mt19937_64& rng);

  int state_dim() const { return n_; }
  int input_dim() const { return m_; }
  const MatrixParam& j() const { return j_; }
  const MatrixParam& r() const { return r_; }
  const MatrixParam& g() const { return g_; }
  MatrixParam& j() { return j_; }
  MatrixParam& r() { return r_; }
  MatrixParam& g() { return g_; }
  bool has_net() const { return net_.has_value(); }
  const Mlp& net() const { return *net_; }
  Mlp& net() { return *net_; }

  Eigen::MatrixXd assemble_j(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd assemble_r(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd assemble_g(const Eigen::VectorXd& x) const;

  /// Lower-triangular factors, exposed for tests.
  Eigen::MatrixXd factor_j(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd factor_r(const Eigen::VectorXd& x) const;

  bool j_is_canonical() const;

 private:
  Eigen::VectorXd entries(const MatrixParam& p, const Eigen::VectorXd& x) const;

  int n_ = 0;
  int m_ = 0;
  MatrixParam j_;
  MatrixParam r_;
  MatrixParam g_;
  std::optional<Mlp> net_;
};

/// Learned port-Hamiltonian model: structured J, R, G and a gated neural
/// Hamiltonian.
class PHModel final : public PortHamiltonianSystem {
 public:
  PHModel(StructureParam structure, NeuralHamiltonian hamiltonian);

  int state_dim() const override { return structure_.state_dim(); }
  int input_dim() const override { return structure_.input_dim(); }
  double hamiltonian(const Eigen::VectorXd& x) const override;
  Eigen::VectorXd hamiltonian_grad(const Eigen::VectorXd& x) const override;
  Eigen::MatrixXd interconnection(const Eigen::VectorXd& x) const override;
  Eigen::MatrixXd dissipation(const Eigen::VectorXd& x) const override;
  Eigen::MatrixXd port(const Eigen::VectorXd& x) const override;
  bool canonical() const override { return structure_.j_is_canonical(); }

  StructureParam& structure() { return structure_; }
  const StructureParam& structure() const { return structure_; }
  NeuralHamiltonian& neural_hamiltonian() { return hamiltonian_; }
  const NeuralHamiltonian& neural_hamiltonian() const { return hamiltonian_; }

 private:
  StructureParam structure_;
  NeuralHamiltonian hamiltonian_;
};

/// Cholesky with a pivot threshold: true iff every pivot exceeds `threshold`.
bool positive_definite(const Eigen::MatrixXd& m, double threshold = 1e-10);

}  // namespace phs
