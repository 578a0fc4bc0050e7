#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace phs::ad {

using Matrix = Eigen::MatrixXd;

/// Handle to a node on a Tape.
struct Var {
  std::size_t id = 0;
};

/// Matrix-valued reverse-mode tape.
///
/// Every node holds a dense matrix; batched computations keep one sample per
/// column. Only first derivatives of each primitive are needed: second-order
/// quantities such as d/dtheta of grad_x H are obtained by recording grad_x H
/// itself as tape operations and differentiating that.
class Tape {
 public:
  Var constant(Matrix value);
  Var variable(Matrix value);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  /// Accumulated adjoint; a zero matrix of the right shape if untouched.
  Matrix grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Seeds d(out)/d(out) = 1 for a 1x1 output and sweeps backwards.
  void backward(Var out);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var hadamard(Var a, Var b);
  Var matmul(Var a, Var b);     // a * b
  Var matmul_tn(Var a, Var b);  // a^T * b
  Var add_col(Var a, Var col);  // a + col broadcast over columns
  Var scale(Var a, double c);
  Var add_scalar(Var a, double c);
  Var tanh(Var a);
  Var logistic(Var a);
  Var softplus(Var a);
  Var sqrt(Var a);
  /// Elementwise f with derivative df.
  Var map(Var a, const std::function<double(double)>& f, const std::function<double(double)>& df);
  Var col_sum(Var a);            // n x B -> 1 x B
  Var row_scale(Var a, Var row); // a(:, b) * row(0, b)
  Var sum(Var a);                // -> 1 x 1
  Var rows(Var a, Eigen::Index start, Eigen::Index count);
  Var vcat(Var top, Var bottom);
  /// softplus applied to the rows flagged in `mask`.
  Var softplus_rows(Var a, const std::vector<bool>& mask);

  /// Sparse factor product. T(rows x cols) has T(i_k, j_k) = entries(k, b)
  /// (entries may have one shared column or one column per sample). Returns
  /// T v per column, or T^T v when `transpose` is set.
  Var scatter_apply(Var entries, const std::vector<std::pair<int, int>>& pattern, int rows,
                    int cols, Var v, bool transpose);

 private:
  using Backward = std::function<void(Tape&, std::size_t self)>;
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    bool requires_grad = false;
  };

  Var push(Matrix value, bool requires_grad, Backward backward);
  bool any(Var a) const { return nodes_[a.id].requires_grad; }
  bool any(Var a, Var b) const { return any(a) || any(b); }
  Matrix& grad_ref(std::size_t id);
  const Matrix& upstream(std::size_t self) const { return nodes_[self].grad; }

  std::vector<Node> nodes_;
};

}  // namespace phs::ad
