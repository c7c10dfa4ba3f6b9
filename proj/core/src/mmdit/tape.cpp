#include "avatar/mmdit/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace avatar::diff {

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
}  // namespace

Tape::Var Tape::make(Mat value, std::function<void()> back) {
  Node n;
  n.value = std::move(value);
  n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Mat value) { return make(std::move(value), nullptr); }

Var Tape::constant(Mat value) {
  Var v = make(std::move(value), nullptr);
  nodes_[v.id].needs_grad = false;
  return v;
}

Var Tape::matmul(Var a, Var b) {
  Mat y = val(a) * val(b);
  Var out = make(std::move(y), nullptr);
  nodes_[out.id].back = [this, a, b, out] {
    const Mat& gy = g(out.id);
    g(a.id).noalias() += gy * val(b).transpose();
    g(b.id).noalias() += val(a).transpose() * gy;
  };
  return out;
}

Var Tape::matmul_nt(Var a, Var b) {
  Mat y = val(a) * val(b).transpose();
  Var out = make(std::move(y), nullptr);
  nodes_[out.id].back = [this, a, b, out] {
    const Mat& gy = g(out.id);
    g(a.id).noalias() += gy * val(b);
    g(b.id).noalias() += gy.transpose() * val(a);
  };
  return out;
}

Var Tape::add(Var a, Var b) {
  Var out = make(val(a) + val(b), nullptr);
  nodes_[out.id].back = [this, a, b, out] {
    g(a.id) += g(out.id);
    g(b.id) += g(out.id);
  };
  return out;
}

Var Tape::sub(Var a, Var b) {
  Var out = make(val(a) - val(b), nullptr);
  nodes_[out.id].back = [this, a, b, out] {
    g(a.id) += g(out.id);
    g(b.id) -= g(out.id);
  };
  return out;
}

Var Tape::hadamard(Var a, Var b) {
  Var out = make(val(a).cwiseProduct(val(b)), nullptr);
  nodes_[out.id].back = [this, a, b, out] {
    g(a.id) += g(out.id).cwiseProduct(val(b));
    g(b.id) += g(out.id).cwiseProduct(val(a));
  };
  return out;
}

Var Tape::scale(Var a, double s) {
  Var out = make(val(a) * s, nullptr);
  nodes_[out.id].back = [this, a, s, out] { g(a.id) += g(out.id) * s; };
  return out;
}

Var Tape::cmul(Var a, const Mat& c) {
  Var out = make(val(a).cwiseProduct(c), nullptr);
  nodes_[out.id].back = [this, a, c, out] { g(a.id) += g(out.id).cwiseProduct(c); };
  return out;
}

Var Tape::add_rowvec(Var a, Var row) {
  Mat y = val(a);
  y.rowwise() += val(row).row(0);
  Var out = make(std::move(y), nullptr);
  nodes_[out.id].back = [this, a, row, out] {
    g(a.id) += g(out.id);
    g(row.id).row(0) += g(out.id).colwise().sum();
  };
  return out;
}

Var Tape::rowwise_mul(Var a, Var row) {
  Mat y = val(a).array().rowwise() * val(row).row(0).array();
  Var out = make(std::move(y), nullptr);
  nodes_[out.id].back = [this, a, row, out] {
    g(a.id).array() += g(out.id).array().rowwise() * val(row).row(0).array();
    g(row.id).row(0) += g(out.id).cwiseProduct(val(a)).colwise().sum();
  };
  return out;
}

Var Tape::add_scaled_rowvec(Var a, const Eigen::VectorXd& sel, Var row) {
  Mat y = val(a) + sel * val(row);
  Var out = make(std::move(y), nullptr);
  nodes_[out.id].back = [this, a, sel, row, out] {
    g(a.id) += g(out.id);
    g(row.id).noalias() += sel.transpose() * g(out.id);
  };
  return out;
}

Var Tape::gather_rows(Var table, std::vector<int> ids) {
  Mat y(static_cast<Eigen::Index>(ids.size()), val(table).cols());
  for (std::size_t i = 0; i < ids.size(); ++i) y.row(static_cast<Eigen::Index>(i)) = val(table).row(ids[i]);
  Var out = make(std::move(y), nullptr);
  nodes_[out.id].back = [this, table, ids = std::move(ids), out] {
    for (std::size_t i = 0; i < ids.size(); ++i)
      g(table.id).row(ids[i]) += g(out.id).row(static_cast<Eigen::Index>(i));
  };
  return out;
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
  Eigen::Index rows = 0;
  for (Var p : parts) rows += val(p).rows();
  Mat y(rows, parts.empty() ? 0 : val(parts[0]).cols());
  Eigen::Index r = 0;
  for (Var p : parts) {
    y.middleRows(r, val(p).rows()) = val(p);
    r += val(p).rows();
  }
  Var out = make(std::move(y), nullptr);
  nodes_[out.id].back = [this, parts, out] {
    Eigen::Index r2 = 0;
    for (Var p : parts) {
      g(p.id) += g(out.id).middleRows(r2, val(p).rows());
      r2 += val(p).rows();
    }
  };
  return out;
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  Eigen::Index cols = 0;
  for (Var p : parts) cols += val(p).cols();
  Mat y(parts.empty() ? 0 : val(parts[0]).rows(), cols);
  Eigen::Index c = 0;
  for (Var p : parts) {
    y.middleCols(c, val(p).cols()) = val(p);
    c += val(p).cols();
  }
  Var out = make(std::move(y), nullptr);
  nodes_[out.id].back = [this, parts, out] {
    Eigen::Index c2 = 0;
    for (Var p : parts) {
      g(p.id) += g(out.id).middleCols(c2, val(p).cols());
      c2 += val(p).cols();
    }
  };
  return out;
}

Var Tape::slice_rows(Var a, int r0, int n) {
  Var out = make(val(a).middleRows(r0, n), nullptr);
  nodes_[out.id].back = [this, a, r0, n, out] { g(a.id).middleRows(r0, n) += g(out.id); };
  return out;
}

Var Tape::slice_cols(Var a, int c0, int n) {
  Var out = make(val(a).middleCols(c0, n), nullptr);
  nodes_[out.id].back = [this, a, c0, n, out] { g(a.id).middleCols(c0, n) += g(out.id); };
  return out;
}

Var Tape::layernorm_rows(Var a, double eps) {
  const Mat& x = val(a);
  const Eigen::Index n = x.cols();
  Eigen::VectorXd mean = x.rowwise().mean();
  Mat centered = x.colwise() - mean;
  Eigen::VectorXd var = centered.array().square().rowwise().mean();
  Eigen::VectorXd inv_std = (var.array() + eps).rsqrt();
  Mat y = centered.array().colwise() * inv_std.array();
  Var out = make(std::move(y), nullptr);
  nodes_[out.id].back = [this, a, out, inv_std = std::move(inv_std), n] {
    const Mat& yv = val(out);
    const Mat& gy = g(out.id);
    // dx = inv_std * (gy - mean(gy) - y * mean(gy .* y)) per row
    Eigen::VectorXd gmean = gy.rowwise().mean();
    Eigen::VectorXd gymean = gy.cwiseProduct(yv).rowwise().mean();
    Mat dx = gy;
    dx.colwise() -= gmean;
    dx -= (yv.array().colwise() * gymean.array()).matrix();
    dx.array().colwise() *= inv_std.array();
    g(a.id) += dx;
    (void)n;
  };
  return out;
}

Var Tape::gelu(Var a) {
  const Mat& x = val(a);
  Mat cdf = x.unaryExpr([](double v) { return 0.5 * (1.0 + std::erf(v * kInvSqrt2)); });
  Var out = make(x.cwiseProduct(cdf), nullptr);
  nodes_[out.id].back = [this, a, out, cdf = std::move(cdf)] {
    const Mat& x2 = val(a);
    Mat pdf = (-0.5 * x2.array().square()).exp() * kInvSqrt2Pi;
    g(a.id).array() += g(out.id).array() * (cdf.array() + x2.array() * pdf.array());
  };
  return out;
}

Var Tape::silu(Var a) {
  const Mat& x = val(a);
  Mat sig = (1.0 + (-x.array()).exp()).inverse();
  Var out = make(x.cwiseProduct(sig), nullptr);
  nodes_[out.id].back = [this, a, out, sig = std::move(sig)] {
    const Mat& x2 = val(a);
    g(a.id).array() +=
        g(out.id).array() * (sig.array() + x2.array() * sig.array() * (1.0 - sig.array()));
  };
  return out;
}

Var Tape::rope_rotate(Var a, const Mat& cos_m, const Mat& sin_m) {
  const Mat& x = val(a);
  if (x.cols() % 2 != 0) throw std::invalid_argument("rope_rotate: odd column count");
  auto rot = [](const Mat& m) {
    Mat r(m.rows(), m.cols());
    for (Eigen::Index c = 0; c < m.cols(); c += 2) {
      r.col(c) = -m.col(c + 1);
      r.col(c + 1) = m.col(c);
    }
    return r;
  };
  Mat y = x.cwiseProduct(cos_m) + rot(x).cwiseProduct(sin_m);
  Var out = make(std::move(y), nullptr);
  nodes_[out.id].back = [this, a, out, cos_m, sin_m, rot] {
    const Mat& gy = g(out.id);
    g(a.id) += gy.cwiseProduct(cos_m) - rot(gy).cwiseProduct(sin_m);
  };
  return out;
}

Var Tape::softmax_rows_masked(Var a, const MaskMat& allow) {
  const Mat& x = val(a);
  Mat p(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      if (allow(i, j)) mx = std::max(mx, x(i, j));
    if (!std::isfinite(mx)) throw std::invalid_argument("softmax_rows_masked: row with no allowed entry");
    double z = 0.0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      double e = allow(i, j) ? std::exp(x(i, j) - mx) : 0.0;
      p(i, j) = e;
      z += e;
    }
    p.row(i) /= z;
  }
  Var out = make(std::move(p), nullptr);
  nodes_[out.id].back = [this, a, out] {
    const Mat& pv = val(out);
    const Mat& gy = g(out.id);
    Eigen::VectorXd dot = gy.cwiseProduct(pv).rowwise().sum();
    g(a.id) += pv.cwiseProduct((gy.array().colwise() - dot.array()).matrix());
  };
  return out;
}

Var Tape::softmax_rows(Var a) {
  MaskMat allow = MaskMat::Ones(val(a).rows(), val(a).cols());
  return softmax_rows_masked(a, allow);
}

Var Tape::masked_sq_diff_sum(Var a, const Mat& b, const Mat& mask) {
  Mat diff = (val(a) - b).cwiseProduct(mask);
  double s = diff.array().square().sum();
  Var out = make(Mat::Constant(1, 1, s), nullptr);
  nodes_[out.id].back = [this, a, out, diff = std::move(diff)] {
    g(a.id) += 2.0 * g(out.id)(0, 0) * diff;
  };
  return out;
}

Var Tape::sum(Var a) {
  Var out = make(Mat::Constant(1, 1, val(a).sum()), nullptr);
  nodes_[out.id].back = [this, a, out] { g(a.id).array() += g(out.id)(0, 0); };
  return out;
}

void Tape::backward(Var scalar_loss) {
  if (val(scalar_loss).size() != 1) throw std::invalid_argument("backward: loss must be 1x1");
  g(scalar_loss.id)(0, 0) = 1.0;
  for (int i = scalar_loss.id; i >= 0; --i) {
    if (nodes_[i].back) nodes_[i].back();
  }
}

}  // namespace avatar::diff
