#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "lexpsy/survey.hpp"

namespace lexpsy::factors {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct IpsatisedMatrix {
  std::vector<long> agent_ids;
  std::vector<std::string> item_ids;
  Matrix values;
  bool within_done = false;
  bool between_done = false;
  std::vector<long> degenerate_agents;      // rows zeroed in the within step
  std::vector<std::string> constant_items;  // columns zeroed in the between step
};

/// Within-person step only: each agent row z-scored over its observed cells.
/// Masked cells stay NaN.
IpsatisedMatrix ipsatise_within(const survey::ResponseMatrix& matrix, bool parallel = true);

/// Within-person z-scores, then per-item mean imputation of masked cells,
/// then per-item z-scores. All SDs use n-1.
IpsatisedMatrix ipsatise(const survey::ResponseMatrix& matrix, bool parallel = true);

struct EigenSpectrum {
  Vector eigenvalues;    // length p, descending
  double total_variance = 0;  // p
  Matrix item_vectors;   // p x min(n, p) eigenvectors of the item correlation matrix

  Eigen::Index positive_count() const;
};

/// Eigenvalues of the item correlation matrix from the singular values of the
/// column-standardised data (lambda = s^2 / (n-1)); the p x p matrix is never formed.
EigenSpectrum eigen_spectrum(const Matrix& data);
EigenSpectrum eigen_spectrum(const IpsatisedMatrix& ipsatised);

enum class Rotation { None, Varimax, Promax };
const char* to_string(Rotation r) noexcept;

struct FactorSolution {
  int k = 0;
  std::vector<std::string> item_ids;
  Matrix pattern;             // items x k
  Matrix factor_correlation;  // k x k
  Vector explained_variance_pct;
  Rotation rotation = Rotation::None;
  double promax_power = 0;

  /// pattern * Phi * pattern^T, the common-variance matrix the solution reproduces.
  Matrix common_variance() const;
};

/// Flips each column so that its largest-magnitude entry is positive.
void fix_column_signs(Matrix& pattern, Matrix* factor_correlation = nullptr);

/// Column j = eigenvector_j * sqrt(lambda_j). Throws Error(Numerical) when k
/// exceeds the number of positive eigenvalues.
FactorSolution extract_loadings(const EigenSpectrum& spectrum, int k,
                                const std::vector<std::string>& item_ids);
FactorSolution extract_loadings(const IpsatisedMatrix& ipsatised, int k);

/// Raw varimax criterion: sum over columns of the variance of squared loadings.
double varimax_criterion(const Matrix& loadings);

struct VarimaxOptions {
  double tol = 1e-8;
  int max_iter = 500;
  bool kaiser_normalize = true;
};

struct VarimaxResult {
  FactorSolution solution;
  Matrix rotation;  // k x k orthogonal, before column reordering
  std::vector<double> criterion_trace;  // on the (normalised) loadings, start then each iterate
  int iterations = 0;
  bool converged = false;
};

/// SVD-based varimax. Columns are reordered by explained variance and
/// sign-fixed. When max_iter is reached the best iterate is returned with
/// converged = false.
VarimaxResult varimax(const FactorSolution& solution, const VarimaxOptions& options = {});

/// Oblique promax from a varimax solution: least-squares fit to the
/// sign-preserving power target, rescaled so that Phi has a unit diagonal.
FactorSolution promax(const FactorSolution& varimax_solution, double power = 4.0);

/// Per-agent weighted sums of ipsatised responses with the pattern columns as
/// weights, then column-standardised. With top_n only the top_n absolute
/// loadings of each factor carry weight.
Matrix factor_scores(const IpsatisedMatrix& ipsatised, const FactorSolution& solution,
                     std::optional<int> top_n = std::nullopt);

using ReliabilityFn = std::function<double(const FactorSolution&, int factor)>;

struct SweepEntry {
  int k = 0;
  std::vector<double> reliabilities;
  double average = 0;
  Vector explained_variance_pct;
};

struct SweepReport {
  std::vector<SweepEntry> entries;
  int best_k = 0;
};

/// extract -> varimax -> promax -> reliability, for each k in [k_min, k_max].
SweepReport solution_sweep(const IpsatisedMatrix& ipsatised, int k_min, int k_max,
                           const ReliabilityFn& reliability, double promax_power = 4.0,
                           const VarimaxOptions& options = {});
nlohmann::json to_json(const SweepReport& report);

/// Tucker congruence sum(ab) / sqrt(sum(a^2) sum(b^2)).
double congruence(const Vector& a, const Vector& b);

struct Alignment {
  std::vector<int> match;          // candidate column for each reference column
  std::vector<double> congruence;  // signed, after orientation
  std::vector<int> sign;           // +1/-1 applied to the candidate column
};

/// Greedy matching of reference columns to candidate columns by largest
/// remaining |congruence|.
Alignment align_factors(const Matrix& reference, const Matrix& candidate);

}  // namespace lexpsy::factors
