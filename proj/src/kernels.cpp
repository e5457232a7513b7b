#include "lexpsy/kernels.hpp"

#include <cmath>
#include <limits>

namespace lexpsy::kernels {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kSpreadTol = 1e-12;

// Two-pass mean/SD over the non-NaN entries of a strided vector.
template <class Vec>
bool standardize_observed(Vec&& v) {
  const Eigen::Index n = v.size();
  double sum = 0;
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isnan(v[i])) {
      sum += v[i];
      ++count;
    }
  }
  if (count < 2) return false;
  const double mean = sum / static_cast<double>(count);
  double ss = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isnan(v[i])) ss += (v[i] - mean) * (v[i] - mean);
  }
  const double sd = std::sqrt(ss / static_cast<double>(count - 1));
  // Equal values can leave rounding residue in the mean; that is still zero spread.
  if (!(sd > kSpreadTol * (1.0 + std::abs(mean)))) return false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isnan(v[i])) v[i] = (v[i] - mean) / sd;
  }
  return true;
}

void row_kernel(Eigen::Ref<Matrix> m, Eigen::Index r, std::vector<char>& degenerate) {
  auto row = m.row(r);
  if (!standardize_observed(row)) {
    row.setZero();
    degenerate[static_cast<std::size_t>(r)] = 1;
  } else {
    degenerate[static_cast<std::size_t>(r)] = 0;
  }
}

void column_kernel(Eigen::Ref<Matrix> m, Eigen::Index c, std::vector<char>& constant) {
  auto col = m.col(c);
  double sum = 0;
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < col.size(); ++i) {
    if (!std::isnan(col[i])) {
      sum += col[i];
      ++count;
    }
  }
  const double fill = count > 0 ? sum / static_cast<double>(count) : 0.0;
  for (Eigen::Index i = 0; i < col.size(); ++i)
    if (std::isnan(col[i])) col[i] = fill;
  if (!standardize_observed(col)) {
    col.setZero();
    constant[static_cast<std::size_t>(c)] = 1;
  } else {
    constant[static_cast<std::size_t>(c)] = 0;
  }
}

double consistency(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) return kNaN;
  return 1.0 - std::abs(a + b - 10.0) / 8.0;
}

}  // namespace

namespace serial {

void standardize_rows(Eigen::Ref<Matrix> m, std::vector<char>& degenerate) {
  degenerate.assign(static_cast<std::size_t>(m.rows()), 0);
  for (Eigen::Index r = 0; r < m.rows(); ++r) row_kernel(m, r, degenerate);
}

void impute_standardize_columns(Eigen::Ref<Matrix> m, std::vector<char>& constant) {
  constant.assign(static_cast<std::size_t>(m.cols()), 0);
  for (Eigen::Index c = 0; c < m.cols(); ++c) column_kernel(m, c, constant);
}

void pair_consistency(const Matrix& ratings, std::span<const IndexPair> pairs, Matrix& out) {
  out.resize(ratings.rows(), static_cast<Eigen::Index>(pairs.size()));
  for (Eigen::Index p = 0; p < out.cols(); ++p) {
    auto [a, b] = pairs[static_cast<std::size_t>(p)];
    for (Eigen::Index i = 0; i < ratings.rows(); ++i) out(i, p) = consistency(ratings(i, a), ratings(i, b));
  }
}

Matrix weighted_sums(const Matrix& data, const Matrix& weights) {
  Matrix out(data.rows(), weights.cols());
  for (Eigen::Index j = 0; j < weights.cols(); ++j) {
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      double s = 0;
      for (Eigen::Index k = 0; k < data.cols(); ++k) s += data(i, k) * weights(k, j);
      out(i, j) = s;
    }
  }
  return out;
}

}  // namespace serial

namespace omp {

void standardize_rows(Eigen::Ref<Matrix> m, std::vector<char>& degenerate) {
  degenerate.assign(static_cast<std::size_t>(m.rows()), 0);
  const Eigen::Index rows = m.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index r = 0; r < rows; ++r) row_kernel(m, r, degenerate);
}

void impute_standardize_columns(Eigen::Ref<Matrix> m, std::vector<char>& constant) {
  constant.assign(static_cast<std::size_t>(m.cols()), 0);
  const Eigen::Index cols = m.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < cols; ++c) column_kernel(m, c, constant);
}

void pair_consistency(const Matrix& ratings, std::span<const IndexPair> pairs, Matrix& out) {
  out.resize(ratings.rows(), static_cast<Eigen::Index>(pairs.size()));
  const Eigen::Index np = out.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index p = 0; p < np; ++p) {
    auto [a, b] = pairs[static_cast<std::size_t>(p)];
    for (Eigen::Index i = 0; i < ratings.rows(); ++i) out(i, p) = consistency(ratings(i, a), ratings(i, b));
  }
}

Matrix weighted_sums(const Matrix& data, const Matrix& weights) {
  Matrix out(data.rows(), weights.cols());
  const Eigen::Index cols = weights.cols();
  const Eigen::Index rows = data.rows();
#pragma omp parallel for collapse(2) schedule(static)
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      double s = 0;
      for (Eigen::Index k = 0; k < data.cols(); ++k) s += data(i, k) * weights(k, j);
      out(i, j) = s;
    }
  }
  return out;
}

}  // namespace omp

}  // namespace lexpsy::kernels
