#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace avatar::diff {

using Mat = Eigen::MatrixXd;
using MaskMat = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Reverse-mode autodiff over dense double matrices.
///
/// A Tape owns one computation graph; Var handles index into it. Leaves may
/// be parameters (grads read back after backward()) or constants. The op set
/// is exactly what the transformer forward pass needs.
class Tape {
 public:
  struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
  };

  Var leaf(Mat value);
  Var constant(Mat value);  // no gradient is accumulated

  const Mat& val(Var v) const { return nodes_[v.id].value; }
  const Mat& grad(Var v) const { return nodes_[v.id].grad; }

  Var matmul(Var a, Var b);     // a * b
  Var matmul_nt(Var a, Var b);  // a * b^T
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var hadamard(Var a, Var b);
  Var scale(Var a, double s);
  Var cmul(Var a, const Mat& c);          // elementwise by constant
  Var add_rowvec(Var a, Var row);         // broadcast 1xC row over rows
  Var rowwise_mul(Var a, Var row);        // broadcast multiply by 1xC row
  Var add_scaled_rowvec(Var a, const Eigen::VectorXd& sel, Var row);  // a.row(i) += sel(i)*row
  Var gather_rows(Var table, std::vector<int> ids);
  Var concat_rows(const std::vector<Var>& parts);
  Var concat_cols(const std::vector<Var>& parts);
  Var slice_rows(Var a, int r0, int n);
  Var slice_cols(Var a, int c0, int n);
  Var layernorm_rows(Var a, double eps = 1e-6);
  Var gelu(Var a);
  Var silu(Var a);
  /// Rotary rotation: pairs (x0,x1) rotated by per-entry cos/sin (pair-duplicated columns).
  Var rope_rotate(Var a, const Mat& cos_m, const Mat& sin_m);
  /// Row softmax over allowed entries; disallowed entries are exactly 0.
  /// Every row must have at least one allowed entry.
  Var softmax_rows_masked(Var a, const MaskMat& allow);
  Var softmax_rows(Var a);
  /// Sum of squares of (a - b) over entries where mask != 0, as a 1x1 value.
  Var masked_sq_diff_sum(Var a, const Mat& b, const Mat& mask);
  Var sum(Var a);  // 1x1

  void backward(Var scalar_loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void()> back;  // empty for leaves/constants
    bool needs_grad = true;
  };

  Var make(Mat value, std::function<void()> back);
  Mat& g(int id) { return nodes_[id].grad; }

  std::vector<Node> nodes_;
};

using Var = Tape::Var;

}  // namespace avatar::diff
