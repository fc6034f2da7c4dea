#include "dcpo/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace dcpo::ad {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Var Tape::variable(Eigen::MatrixXd value) {
  Node n;
  n.needs_grad = true;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {nodes_.size() - 1};
}

Var Tape::constant(Eigen::MatrixXd value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {nodes_.size() - 1};
}

Var Tape::scalar_constant(double value) { return constant(Eigen::MatrixXd::Constant(1, 1, value)); }

Var Tape::push(Op op, std::size_t a, std::size_t b, Eigen::MatrixXd value, double scalar) {
  Node n;
  n.op = op;
  n.a = a;
  n.b = b;
  n.scalar = scalar;
  n.value = std::move(value);
  n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  nodes_.push_back(std::move(n));
  return {nodes_.size() - 1};
}

Var Tape::matmul(Var a, Var b) {
  const auto& A = value(a);
  const auto& B = value(b);
  if (A.cols() != B.rows()) throw std::invalid_argument("ad: matmul shape mismatch");
  return push(Op::MatMul, a.index, b.index, A * B);
}

Var Tape::add(Var a, Var b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
    throw std::invalid_argument("ad: add shape mismatch");
  }
  return push(Op::Add, a.index, b.index, value(a) + value(b));
}

Var Tape::add_columnwise(Var m, Var v) {
  const auto& M = value(m);
  const auto& V = value(v);
  if (V.cols() != 1 || V.rows() != M.rows()) throw std::invalid_argument("ad: add_columnwise shape mismatch");
  Eigen::MatrixXd out = M;
  out.colwise() += V.col(0);
  return push(Op::AddColumnwise, m.index, v.index, std::move(out));
}

Var Tape::sub(Var a, Var b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
    throw std::invalid_argument("ad: sub shape mismatch");
  }
  return push(Op::Sub, a.index, b.index, value(a) - value(b));
}

Var Tape::cwise_product(Var a, Var b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
    throw std::invalid_argument("ad: cwise_product shape mismatch");
  }
  return push(Op::CwiseProduct, a.index, b.index, value(a).cwiseProduct(value(b)));
}

Var Tape::scale(Var a, double s) { return push(Op::Scale, a.index, a.index, s * value(a), s); }

Var Tape::tanh(Var a) { return push(Op::Tanh, a.index, a.index, value(a).array().tanh().matrix()); }

Var Tape::softplus(Var a) {
  return push(Op::Softplus, a.index, a.index, value(a).unaryExpr([](double x) { return ad::softplus(x); }));
}

Var Tape::column_squared_norms(Var a) {
  return push(Op::ColumnSquaredNorms, a.index, a.index, value(a).colwise().squaredNorm());
}

Var Tape::sum(Var a) { return push(Op::Sum, a.index, a.index, Eigen::MatrixXd::Constant(1, 1, value(a).sum())); }

Var Tape::mean(Var a) {
  const auto n = static_cast<double>(value(a).size());
  if (n == 0) throw std::invalid_argument("ad: mean of empty node");
  return push(Op::Mean, a.index, a.index, Eigen::MatrixXd::Constant(1, 1, value(a).sum() / n));
}

void Tape::backward(Var root) {
  if (value(root).size() != 1) throw std::invalid_argument("ad: backward root must be 1 x 1");
  for (auto& n : nodes_) {
    if (n.needs_grad) n.grad.setZero(n.value.rows(), n.value.cols());
  }
  if (!nodes_[root.index].needs_grad) return;
  nodes_[root.index].grad(0, 0) = 1.0;

  for (std::size_t i = root.index + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.op == Op::Leaf) continue;
    const Eigen::MatrixXd& g = n.grad;
    Node& A = nodes_[n.a];
    Node& B = nodes_[n.b];
    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::MatMul:
        if (A.needs_grad) A.grad.noalias() += g * B.value.transpose();
        if (B.needs_grad) B.grad.noalias() += A.value.transpose() * g;
        break;
      case Op::Add:
        if (A.needs_grad) A.grad += g;
        if (B.needs_grad) B.grad += g;
        break;
      case Op::AddColumnwise:
        if (A.needs_grad) A.grad += g;
        if (B.needs_grad) B.grad += g.rowwise().sum();
        break;
      case Op::Sub:
        if (A.needs_grad) A.grad += g;
        if (B.needs_grad) B.grad -= g;
        break;
      case Op::CwiseProduct:
        if (A.needs_grad) A.grad += g.cwiseProduct(B.value);
        if (B.needs_grad) B.grad += g.cwiseProduct(A.value);
        break;
      case Op::Scale:
        A.grad += n.scalar * g;
        break;
      case Op::Tanh:
        A.grad += g.cwiseProduct((1.0 - n.value.array().square()).matrix());
        break;
      case Op::Softplus:
        A.grad += g.cwiseProduct(A.value.unaryExpr([](double x) { return sigmoid(x); }));
        break;
      case Op::ColumnSquaredNorms:
        for (Eigen::Index c = 0; c < A.value.cols(); ++c) A.grad.col(c) += 2.0 * g(0, c) * A.value.col(c);
        break;
      case Op::Sum:
        A.grad.array() += g(0, 0);
        break;
      case Op::Mean:
        A.grad.array() += g(0, 0) / static_cast<double>(A.value.size());
        break;
    }
  }
}

}  // namespace dcpo::ad
