#include "phs/autodiff.hpp"

#include <cmath>
#include <stdexcept>

#include "phs/mlp.hpp"

namespace phs::ad {

Var Tape::push(Matrix value, bool requires_grad, Backward backward) {
  nodes_.push_back(Node{std::move(value), Matrix(), requires_grad ? std::move(backward) : Backward(),
                        requires_grad});
  return Var{nodes_.size() - 1};
}

Var Tape::constant(Matrix value) { return push(std::move(value), false, {}); }

Var Tape::variable(Matrix value) { return push(std::move(value), true, {}); }

Matrix Tape::grad(Var v) const {
  const Node& node = nodes_[v.id];
  if (node.grad.size() == 0) return Matrix::Zero(node.value.rows(), node.value.cols());
  return node.grad;
}

Matrix& Tape::grad_ref(std::size_t id) {
  Node& node = nodes_[id];
  if (node.grad.size() == 0) node.grad = Matrix::Zero(node.value.rows(), node.value.cols());
  return node.grad;
}

void Tape::backward(Var out) {
  if (nodes_[out.id].value.size() != 1) throw std::invalid_argument("backward needs a scalar output");
  grad_ref(out.id).setOnes();
  for (std::size_t id = out.id + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.backward || node.grad.size() == 0) continue;
    node.backward(*this, id);
  }
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string("shape mismatch in ") + op);
  }
}

}  // namespace

Var Tape::add(Var a, Var b) {
  require_same_shape(value(a), value(b), "add");
  return push(value(a) + value(b), any(a, b), [a, b](Tape& t, std::size_t self) {
    if (t.any(a)) t.grad_ref(a.id) += t.upstream(self);
    if (t.any(b)) t.grad_ref(b.id) += t.upstream(self);
  });
}

Var Tape::sub(Var a, Var b) {
  require_same_shape(value(a), value(b), "sub");
  return push(value(a) - value(b), any(a, b), [a, b](Tape& t, std::size_t self) {
    if (t.any(a)) t.grad_ref(a.id) += t.upstream(self);
    if (t.any(b)) t.grad_ref(b.id) -= t.upstream(self);
  });
}

Var Tape::hadamard(Var a, Var b) {
  require_same_shape(value(a), value(b), "hadamard");
  return push(value(a).cwiseProduct(value(b)), any(a, b), [a, b](Tape& t, std::size_t self) {
    const Matrix& g = t.upstream(self);
    if (t.any(a)) t.grad_ref(a.id) += g.cwiseProduct(t.value(b));
    if (t.any(b)) t.grad_ref(b.id) += g.cwiseProduct(t.value(a));
  });
}

Var Tape::matmul(Var a, Var b) {
  if (value(a).cols() != value(b).rows()) throw std::invalid_argument("shape mismatch in matmul");
  return push(value(a) * value(b), any(a, b), [a, b](Tape& t, std::size_t self) {
    const Matrix& g = t.upstream(self);
    if (t.any(a)) t.grad_ref(a.id).noalias() += g * t.value(b).transpose();
    if (t.any(b)) t.grad_ref(b.id).noalias() += t.value(a).transpose() * g;
  });
}

Var Tape::matmul_tn(Var a, Var b) {
  if (value(a).rows() != value(b).rows()) throw std::invalid_argument("shape mismatch in matmul_tn");
  return push(value(a).transpose() * value(b), any(a, b), [a, b](Tape& t, std::size_t self) {
    const Matrix& g = t.upstream(self);
    if (t.any(a)) t.grad_ref(a.id).noalias() += t.value(b) * g.transpose();
    if (t.any(b)) t.grad_ref(b.id).noalias() += t.value(a) * g;
  });
}

Var Tape::add_col(Var a, Var col) {
  if (value(col).cols() != 1 || value(col).rows() != value(a).rows()) {
    throw std::invalid_argument("shape mismatch in add_col");
  }
  Matrix out = value(a);
  out.colwise() += value(col).col(0);
  return push(std::move(out), any(a, col), [a, col](Tape& t, std::size_t self) {
    const Matrix& g = t.upstream(self);
    if (t.any(a)) t.grad_ref(a.id) += g;
    if (t.any(col)) t.grad_ref(col.id) += g.rowwise().sum();
  });
}

Var Tape::scale(Var a, double c) {
  return push(value(a) * c, any(a), [a, c](Tape& t, std::size_t self) {
    t.grad_ref(a.id) += t.upstream(self) * c;
  });
}

Var Tape::add_scalar(Var a, double c) {
  return push(value(a).array() + c, any(a), [a](Tape& t, std::size_t self) {
    t.grad_ref(a.id) += t.upstream(self);
  });
}

Var Tape::tanh(Var a) {
  return push(value(a).array().tanh().matrix(), any(a), [a](Tape& t, std::size_t self) {
    const Matrix& y = t.value(Var{self});
    t.grad_ref(a.id).array() += t.upstream(self).array() * (1.0 - y.array().square());
  });
}

Var Tape::logistic(Var a) {
  return push(value(a).unaryExpr([](double z) { return phs::logistic(z); }), any(a),
              [a](Tape& t, std::size_t self) {
                const Matrix& y = t.value(Var{self});
                t.grad_ref(a.id).array() +=
                    t.upstream(self).array() * y.array() * (1.0 - y.array());
              });
}

Var Tape::softplus(Var a) {
  return push(value(a).unaryExpr([](double z) { return phs::softplus(z); }), any(a),
              [a](Tape& t, std::size_t self) {
                t.grad_ref(a.id).array() +=
                    t.upstream(self).array() *
                    t.value(a).unaryExpr([](double z) { return phs::logistic(z); }).array();
              });
}

Var Tape::sqrt(Var a) {
  return push(value(a).array().sqrt().matrix(), any(a), [a](Tape& t, std::size_t self) {
    const Matrix& y = t.value(Var{self});
    t.grad_ref(a.id).array() += t.upstream(self).array() / (2.0 * y.array());
  });
}

Var Tape::map(Var a, const std::function<double(double)>& f,
              const std::function<double(double)>& df) {
  Matrix out = value(a).unaryExpr(f);
  if (!any(a)) return push(std::move(out), false, {});
  Matrix slope = value(a).unaryExpr(df);
  return push(std::move(out), true, [a, slope = std::move(slope)](Tape& t, std::size_t self) {
    t.grad_ref(a.id).array() += t.upstream(self).array() * slope.array();
  });
}

Var Tape::col_sum(Var a) {
  return push(value(a).colwise().sum(), any(a), [a](Tape& t, std::size_t self) {
    t.grad_ref(a.id).rowwise() += t.upstream(self).row(0);
  });
}

Var Tape::row_scale(Var a, Var row) {
  if (value(row).rows() != 1 || value(row).cols() != value(a).cols()) {
    throw std::invalid_argument("shape mismatch in row_scale");
  }
  Matrix out = value(a) * value(row).row(0).asDiagonal();
  return push(std::move(out), any(a, row), [a, row](Tape& t, std::size_t self) {
    const Matrix& g = t.upstream(self);
    if (t.any(a)) t.grad_ref(a.id) += g * t.value(row).row(0).asDiagonal();
    if (t.any(row)) t.grad_ref(row.id) += g.cwiseProduct(t.value(a)).colwise().sum();
  });
}

Var Tape::sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = value(a).sum();
  return push(std::move(out), any(a), [a](Tape& t, std::size_t self) {
    t.grad_ref(a.id).array() += t.upstream(self)(0, 0);
  });
}

Var Tape::rows(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > value(a).rows()) {
    throw std::invalid_argument("row range out of bounds");
  }
  return push(value(a).middleRows(start, count), any(a),
              [a, start, count](Tape& t, std::size_t self) {
                t.grad_ref(a.id).middleRows(start, count) += t.upstream(self);
              });
}

Var Tape::vcat(Var top, Var bottom) {
  if (value(top).cols() != value(bottom).cols()) throw std::invalid_argument("shape mismatch in vcat");
  const Eigen::Index rt = value(top).rows();
  const Eigen::Index rb = value(bottom).rows();
  Matrix out(rt + rb, value(top).cols());
  out.topRows(rt) = value(top);
  out.bottomRows(rb) = value(bottom);
  return push(std::move(out), any(top, bottom), [top, bottom, rt, rb](Tape& t, std::size_t self) {
    const Matrix& g = t.upstream(self);
    if (t.any(top)) t.grad_ref(top.id) += g.topRows(rt);
    if (t.any(bottom)) t.grad_ref(bottom.id) += g.bottomRows(rb);
  });
}

Var Tape::softplus_rows(Var a, const std::vector<bool>& mask) {
  if (static_cast<Eigen::Index>(mask.size()) != value(a).rows()) {
    throw std::invalid_argument("mask size mismatch in softplus_rows");
  }
  Matrix out = value(a);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) continue;
    for (Eigen::Index b = 0; b < out.cols(); ++b) out(i, b) = phs::softplus(out(i, b));
  }
  return push(std::move(out), any(a), [a, mask](Tape& t, std::size_t self) {
    const Matrix& g = t.upstream(self);
    Matrix& ga = t.grad_ref(a.id);
    const Matrix& x = t.value(a);
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      const bool soft = mask[static_cast<std::size_t>(i)];
      for (Eigen::Index b = 0; b < g.cols(); ++b) {
        ga(i, b) += soft ? g(i, b) * phs::logistic(x(i, b)) : g(i, b);
      }
    }
  });
}

Var Tape::scatter_apply(Var entries, const std::vector<std::pair<int, int>>& pattern, int rows,
                        int cols, Var v, bool transpose) {
  const Matrix& e = value(entries);
  const Matrix& x = value(v);
  if (e.rows() != static_cast<Eigen::Index>(pattern.size())) {
    throw std::invalid_argument("entry count mismatch in scatter_apply");
  }
  const Eigen::Index batch = x.cols();
  const bool shared = e.cols() == 1;
  if (!shared && e.cols() != batch) throw std::invalid_argument("batch mismatch in scatter_apply");
  const int in_dim = transpose ? rows : cols;
  const int out_dim = transpose ? cols : rows;
  if (x.rows() != in_dim) throw std::invalid_argument("vector shape mismatch in scatter_apply");

  Matrix out = Matrix::Zero(out_dim, batch);
  for (std::size_t k = 0; k < pattern.size(); ++k) {
    const int o = transpose ? pattern[k].second : pattern[k].first;
    const int i = transpose ? pattern[k].first : pattern[k].second;
    const auto kk = static_cast<Eigen::Index>(k);
    if (shared) {
      out.row(o) += e(kk, 0) * x.row(i);
    } else {
      out.row(o).array() += e.row(kk).array() * x.row(i).array();
    }
  }
  return push(std::move(out), any(entries, v),
              [entries, v, pattern, transpose](Tape& t, std::size_t self) {
                const Matrix& g = t.upstream(self);
                const Matrix& ev = t.value(entries);
                const Matrix& xv = t.value(v);
                const bool shared_entries = ev.cols() == 1;
                for (std::size_t k = 0; k < pattern.size(); ++k) {
                  const int o = transpose ? pattern[k].second : pattern[k].first;
                  const int i = transpose ? pattern[k].first : pattern[k].second;
                  const auto kk = static_cast<Eigen::Index>(k);
                  if (t.any(entries)) {
                    Matrix& ge = t.grad_ref(entries.id);
                    if (shared_entries) {
                      ge(kk, 0) += g.row(o).dot(xv.row(i));
                    } else {
                      ge.row(kk).array() += g.row(o).array() * xv.row(i).array();
                    }
                  }
                  if (t.any(v)) {
                    Matrix& gx = t.grad_ref(v.id);
                    if (shared_entries) {
                      gx.row(i) += ev(kk, 0) * g.row(o);
                    } else {
                      gx.row(i).array() += ev.row(kk).array() * g.row(o).array();
                    }
                  }
                }
              });
}

}  // namespace phs::ad
