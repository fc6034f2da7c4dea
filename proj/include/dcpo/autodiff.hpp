#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace dcpo::ad {

/// Handle to a node on a Tape.
struct Var {
  std::size_t index = 0;
};

/// Reverse-mode tape whose nodes are dense matrices (column vectors are n x 1,
/// scalars 1 x 1). Nodes are recorded in evaluation order, so a single reverse
/// sweep from the root is a valid topological traversal.
class Tape {
 public:
  Var variable(Eigen::MatrixXd value);
  Var constant(Eigen::MatrixXd value);
  Var scalar_constant(double value);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  /// m + v * 1^T for an n x 1 column v.
  Var add_columnwise(Var m, Var v);
  Var sub(Var a, Var b);
  Var cwise_product(Var a, Var b);
  Var scale(Var a, double s);
  Var tanh(Var a);
  /// Elementwise log(1 + exp(a)), evaluated without overflow.
  Var softplus(Var a);
  /// 1 x cols row of per-column squared Euclidean norms.
  Var column_squared_norms(Var a);
  Var sum(Var a);
  Var mean(Var a);

  const Eigen::MatrixXd& value(Var v) const { return nodes_[v.index].value; }
  double scalar(Var v) const { return nodes_[v.index].value(0, 0); }

  /// Seeds d(root)/d(root) = 1 and accumulates gradients into every node that
  /// depends on a variable. Root must be 1 x 1.
  void backward(Var root);
  const Eigen::MatrixXd& gradient(Var v) const { return nodes_[v.index].grad; }

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  enum class Op {
    Leaf,
    MatMul,
    Add,
    AddColumnwise,
    Sub,
    CwiseProduct,
    Scale,
    Tanh,
    Softplus,
    ColumnSquaredNorms,
    Sum,
    Mean
  };

  struct Node {
    Op op = Op::Leaf;
    std::size_t a = 0;
    std::size_t b = 0;
    double scalar = 0.0;
    bool needs_grad = false;
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;
  };

  Var push(Op op, std::size_t a, std::size_t b, Eigen::MatrixXd value, double scalar = 0.0);

  std::vector<Node> nodes_;
};

/// Numerically stable scalar softplus and logistic function.
double softplus(double x);
double sigmoid(double x);

}  // namespace dcpo::ad
