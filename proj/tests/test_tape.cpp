#include <cmath>
#include <functional>

#include <doctest.h>

#include "avatar/mmdit/tape.hpp"
#include "avatar/rng.hpp"

using namespace avatar;
using diff::Mat;
using diff::MaskMat;
using diff::Tape;
using diff::Var;

namespace {

Mat random_mat(Rng& rng, int r, int c, double scale = 1.0) {
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = scale * rng.normal();
  return m;
}

// Central finite differences of a scalar-valued graph w.r.t. one leaf.
double max_rel_grad_error(const std::vector<Mat>& leaves,
                          const std::function<Var(Tape&, const std::vector<Var>&)>& build,
                          double eps = 1e-6) {
  Tape tape;
  std::vector<Var> vars;
  for (const auto& leaf : leaves) vars.push_back(tape.leaf(leaf));
  Var loss = build(tape, vars);
  REQUIRE(tape.val(loss).size() == 1);
  tape.backward(loss);

  double worst = 0.0;
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    for (Eigen::Index i = 0; i < leaves[l].rows(); ++i)
      for (Eigen::Index j = 0; j < leaves[l].cols(); ++j) {
        auto eval = [&](double delta) {
          Tape t2;
          std::vector<Var> vs;
          for (std::size_t k = 0; k < leaves.size(); ++k) {
            Mat m = leaves[k];
            if (k == l) m(i, j) += delta;
            vs.push_back(t2.leaf(m));
          }
          return t2.val(build(t2, vs))(0, 0);
        };
        const double fd = (eval(eps) - eval(-eps)) / (2 * eps);
        const double an = tape.grad(vars[l])(i, j);
        const double denom = std::max({std::abs(fd), std::abs(an), 1e-4});
        worst = std::max(worst, std::abs(fd - an) / denom);
      }
  }
  return worst;
}

}  // namespace

TEST_CASE("matmul / add / hadamard / scale gradients match finite differences") {
  Rng rng(1);
  std::vector<Mat> leaves = {random_mat(rng, 3, 4), random_mat(rng, 4, 2), random_mat(rng, 3, 2)};
  auto build = [](Tape& t, const std::vector<Var>& v) {
    Var y = t.matmul(v[0], v[1]);
    y = t.add(y, v[2]);
    y = t.hadamard(y, v[2]);
    y = t.scale(y, 0.7);
    return t.sum(y);
  };
  CHECK(max_rel_grad_error(leaves, build) < 1e-6);
}

TEST_CASE("matmul_nt / sub / row broadcast gradients match finite differences") {
  Rng rng(2);
  std::vector<Mat> leaves = {random_mat(rng, 3, 4), random_mat(rng, 5, 4), random_mat(rng, 1, 5),
                             random_mat(rng, 1, 5)};
  auto build = [](Tape& t, const std::vector<Var>& v) {
    Var y = t.matmul_nt(v[0], v[1]);               // 3x5
    y = t.add_rowvec(y, v[2]);
    y = t.rowwise_mul(y, v[3]);
    y = t.sub(y, t.scale(y, 0.25));
    return t.sum(y);
  };
  CHECK(max_rel_grad_error(leaves, build) < 1e-6);
}

TEST_CASE("layernorm / gelu / silu gradients match finite differences") {
  Rng rng(3);
  std::vector<Mat> leaves = {random_mat(rng, 4, 6)};
  auto build = [](Tape& t, const std::vector<Var>& v) {
    Var y = t.layernorm_rows(v[0]);
    y = t.gelu(y);
    y = t.silu(y);
    return t.sum(t.hadamard(y, y));
  };
  CHECK(max_rel_grad_error(leaves, build, 1e-5) < 1e-5);
}

TEST_CASE("masked softmax gradients match finite differences; masked entries are zero") {
  Rng rng(4);
  MaskMat allow(3, 5);
  allow.setOnes();
  allow(0, 2) = 0;
  allow(1, 0) = 0;
  allow(1, 4) = 0;
  {
    Tape t;
    Var p = t.softmax_rows_masked(t.leaf(random_mat(rng, 3, 5)), allow);
    CHECK(t.val(p)(0, 2) == 0.0);
    CHECK(t.val(p)(1, 0) == 0.0);
    CHECK(t.val(p).rowwise().sum().isApproxToConstant(1.0, 1e-12));
  }
  std::vector<Mat> leaves = {random_mat(rng, 3, 5), random_mat(rng, 5, 2)};
  auto build = [&allow](Tape& t, const std::vector<Var>& v) {
    Var p = t.softmax_rows_masked(v[0], allow);
    Var y = t.matmul(p, v[1]);
    return t.sum(t.hadamard(y, y));
  };
  CHECK(max_rel_grad_error(leaves, build) < 1e-6);

  Tape t;
  MaskMat empty_row = allow;
  empty_row.row(2).setZero();
  CHECK_THROWS_AS(t.softmax_rows_masked(t.leaf(random_mat(rng, 3, 5)), empty_row),
                  std::invalid_argument);
}

TEST_CASE("rope rotation gradients match finite differences and preserve norms") {
  Rng rng(5);
  const int n = 4, d = 6;
  Mat cos_m(n, d), sin_m(n, d);
  for (int i = 0; i < n; ++i)
    for (int p = 0; p < d / 2; ++p) {
      const double ang = rng.uniform(0.0, 6.28);
      cos_m(i, 2 * p) = cos_m(i, 2 * p + 1) = std::cos(ang);
      sin_m(i, 2 * p) = sin_m(i, 2 * p + 1) = std::sin(ang);
    }
  {
    Tape t;
    Mat x = random_mat(rng, n, d);
    Var y = t.rope_rotate(t.leaf(x), cos_m, sin_m);
    for (int i = 0; i < n; ++i)
      CHECK(t.val(y).row(i).norm() == doctest::Approx(x.row(i).norm()).epsilon(1e-12));
  }
  std::vector<Mat> leaves = {random_mat(rng, n, d)};
  auto build = [&](Tape& t, const std::vector<Var>& v) {
    Var y = t.rope_rotate(v[0], cos_m, sin_m);
    return t.sum(t.hadamard(y, y));
  };
  CHECK(max_rel_grad_error(leaves, build) < 1e-6);
}

TEST_CASE("slicing, concatenation, gather and selector broadcasts back-propagate") {
  Rng rng(6);
  std::vector<Mat> leaves = {random_mat(rng, 6, 4), random_mat(rng, 2, 4), random_mat(rng, 1, 4)};
  Eigen::VectorXd sel(8);
  sel << 1, 0, 1, 0, 0, 1, 0, 1;
  auto build = [&sel](Tape& t, const std::vector<Var>& v) {
    Var joined = t.concat_rows({v[0], v[1]});           // 8x4
    joined = t.add_scaled_rowvec(joined, sel, v[2]);
    Var left = t.slice_rows(joined, 1, 5);
    Var cols = t.slice_cols(left, 1, 2);
    Var gathered = t.gather_rows(v[0], {0, 3, 3, 5});
    return t.add(t.sum(t.hadamard(cols, cols)), t.sum(gathered));
  };
  CHECK(max_rel_grad_error(leaves, build) < 1e-6);
}

TEST_CASE("masked squared-difference loss gradients match finite differences") {
  Rng rng(7);
  Mat target = random_mat(rng, 4, 3);
  Mat mask = Mat::Zero(4, 3);
  mask.topRows(2).setOnes();
  std::vector<Mat> leaves = {random_mat(rng, 4, 3)};
  auto build = [&](Tape& t, const std::vector<Var>& v) {
    return t.masked_sq_diff_sum(v[0], target, mask);
  };
  CHECK(max_rel_grad_error(leaves, build) < 1e-6);

  Tape t;
  Var loss = t.masked_sq_diff_sum(t.leaf(target), target, mask);
  CHECK(t.val(loss)(0, 0) == 0.0);
}
