#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

// Data-parallel inner loops. Every kernel has a serial reference in
// kernels::serial and an OpenMP version in kernels::omp; both visit each row
// or column independently, so their outputs are bit-identical.
namespace lexpsy::kernels {

using Matrix = Eigen::MatrixXd;
using IndexPair = std::pair<Eigen::Index, Eigen::Index>;

namespace serial {

/// z-scores each row over its non-NaN cells (SD with n-1). Rows with fewer
/// than two observations or zero SD become all zeros and are flagged.
void standardize_rows(Eigen::Ref<Matrix> m, std::vector<char>& degenerate);

/// Replaces NaN cells with the column mean of observed cells, then z-scores
/// each column (SD with n-1). Constant columns become zeros and are flagged.
void impute_standardize_columns(Eigen::Ref<Matrix> m, std::vector<char>& constant);

/// out(agent, pair) = 1 - |a + b - 10| / 8 for ratings a, b, NaN when either
/// rating is masked.
void pair_consistency(const Matrix& ratings, std::span<const IndexPair> pairs, Matrix& out);

/// Raw factor scores data * weights.
Matrix weighted_sums(const Matrix& data, const Matrix& weights);

}  // namespace serial

namespace omp {

void standardize_rows(Eigen::Ref<Matrix> m, std::vector<char>& degenerate);
void impute_standardize_columns(Eigen::Ref<Matrix> m, std::vector<char>& constant);
void pair_consistency(const Matrix& ratings, std::span<const IndexPair> pairs, Matrix& out);
Matrix weighted_sums(const Matrix& data, const Matrix& weights);

}  // namespace omp

}  // namespace lexpsy::kernels
