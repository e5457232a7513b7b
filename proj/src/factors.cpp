#include "lexpsy/factors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/SVD>

#include "lexpsy/error.hpp"
#include "lexpsy/kernels.hpp"

namespace lexpsy::factors {

IpsatisedMatrix ipsatise_within(const survey::ResponseMatrix& matrix, bool parallel) {
  IpsatisedMatrix out;
  out.agent_ids = matrix.agent_ids;
  out.item_ids = matrix.item_ids;
  out.values = matrix.values;
  std::vector<char> degenerate;
  if (parallel)
    kernels::omp::standardize_rows(out.values, degenerate);
  else
    kernels::serial::standardize_rows(out.values, degenerate);
  for (std::size_t i = 0; i < degenerate.size(); ++i)
    if (degenerate[i]) out.degenerate_agents.push_back(out.agent_ids[i]);
  out.within_done = true;
  return out;
}

IpsatisedMatrix ipsatise(const survey::ResponseMatrix& matrix, bool parallel) {
  auto out = ipsatise_within(matrix, parallel);
  std::vector<char> constant;
  if (parallel)
    kernels::omp::impute_standardize_columns(out.values, constant);
  else
    kernels::serial::impute_standardize_columns(out.values, constant);
  for (std::size_t j = 0; j < constant.size(); ++j)
    if (constant[j]) out.constant_items.push_back(out.item_ids[j]);
  out.between_done = true;
  return out;
}

// ---------------------------------------------------------------------------

Eigen::Index EigenSpectrum::positive_count() const {
  return (eigenvalues.array() > 0.0).count();
}

EigenSpectrum eigen_spectrum(const Matrix& data) {
  const Eigen::Index n = data.rows();
  const Eigen::Index p = data.cols();
  if (n < 2 || p < 2) throw Error(ErrorKind::EmptyData, "spectrum needs at least 2 agents and 2 items");
  if (data.array().isNaN().any()) throw Error(ErrorKind::Numerical, "spectrum input contains masked cells");

  Matrix z = data.rowwise() - data.colwise().mean();
  for (Eigen::Index j = 0; j < p; ++j) {
    double sd = std::sqrt(z.col(j).squaredNorm() / static_cast<double>(n - 1));
    if (!(sd > 0)) throw Error(ErrorKind::Numerical, "item column " + std::to_string(j) + " has zero variance");
    z.col(j) /= sd * std::sqrt(static_cast<double>(n - 1));
  }

  Eigen::BDCSVD<Matrix> svd(z, Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw Error(ErrorKind::Numerical, "SVD did not converge");

  EigenSpectrum s;
  s.total_variance = static_cast<double>(p);
  s.eigenvalues = Vector::Zero(p);
  const Vector sv = svd.singularValues();
  // Values at rounding level are exact zeros (centering removes one dimension).
  const double floor = 1e-12 * static_cast<double>(p);
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    double lambda = sv[i] * sv[i];
    s.eigenvalues[i] = lambda > floor ? lambda : 0.0;
  }
  s.item_vectors = svd.matrixV();
  return s;
}

EigenSpectrum eigen_spectrum(const IpsatisedMatrix& ipsatised) {
  return eigen_spectrum(ipsatised.values);
}

// ---------------------------------------------------------------------------

const char* to_string(Rotation r) noexcept {
  switch (r) {
    case Rotation::None: return "none";
    case Rotation::Varimax: return "varimax";
    case Rotation::Promax: return "promax";
  }
  return "?";
}

Matrix FactorSolution::common_variance() const {
  return pattern * factor_correlation * pattern.transpose();
}

void fix_column_signs(Matrix& pattern, Matrix* factor_correlation) {
  for (Eigen::Index j = 0; j < pattern.cols(); ++j) {
    Eigen::Index arg = 0;
    pattern.col(j).cwiseAbs().maxCoeff(&arg);
    if (pattern(arg, j) < 0) {
      pattern.col(j) *= -1.0;
      if (factor_correlation) {
        factor_correlation->row(j) *= -1.0;
        factor_correlation->col(j) *= -1.0;
      }
    }
  }
}

FactorSolution extract_loadings(const EigenSpectrum& spectrum, int k,
                                const std::vector<std::string>& item_ids) {
  if (k < 1 || k > spectrum.positive_count() || k > spectrum.item_vectors.cols())
    throw Error(ErrorKind::Numerical, "k=" + std::to_string(k) + " exceeds the positive spectrum (" +
                                          std::to_string(spectrum.positive_count()) + ")");
  FactorSolution s;
  s.k = k;
  s.item_ids = item_ids;
  s.pattern = spectrum.item_vectors.leftCols(k);
  for (int j = 0; j < k; ++j) s.pattern.col(j) *= std::sqrt(spectrum.eigenvalues[j]);
  fix_column_signs(s.pattern);
  s.factor_correlation = Matrix::Identity(k, k);
  s.explained_variance_pct = 100.0 * spectrum.eigenvalues.head(k) / spectrum.total_variance;
  s.rotation = Rotation::None;
  return s;
}

FactorSolution extract_loadings(const IpsatisedMatrix& ipsatised, int k) {
  return extract_loadings(eigen_spectrum(ipsatised), k, ipsatised.item_ids);
}

// ---------------------------------------------------------------------------

double varimax_criterion(const Matrix& loadings) {
  const double p = static_cast<double>(loadings.rows());
  const auto sq = loadings.array().square();
  double total = 0;
  for (Eigen::Index j = 0; j < loadings.cols(); ++j) {
    double m2 = sq.col(j).sum() / p;
    double m4 = sq.col(j).square().sum() / p;
    total += m4 - m2 * m2;
  }
  return total;
}

namespace {

// Sorts columns by explained variance (descending) and applies the same
// permutation to Phi.
void order_columns(FactorSolution& s) {
  std::vector<int> order(static_cast<std::size_t>(s.k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return s.explained_variance_pct[a] > s.explained_variance_pct[b];
  });
  Matrix pattern(s.pattern.rows(), s.k);
  Matrix phi(s.k, s.k);
  Vector pct(s.k);
  for (int a = 0; a < s.k; ++a) {
    pattern.col(a) = s.pattern.col(order[static_cast<std::size_t>(a)]);
    pct[a] = s.explained_variance_pct[order[static_cast<std::size_t>(a)]];
    for (int b = 0; b < s.k; ++b)
      phi(a, b) = s.factor_correlation(order[static_cast<std::size_t>(a)], order[static_cast<std::size_t>(b)]);
  }
  s.pattern = std::move(pattern);
  s.factor_correlation = std::move(phi);
  s.explained_variance_pct = std::move(pct);
}

// Sum over items of pattern * structure, per factor, as a share of p.
Vector oblique_explained_pct(const Matrix& pattern, const Matrix& phi) {
  const Matrix structure = pattern * phi;
  return 100.0 * (pattern.array() * structure.array()).colwise().sum().transpose() /
         static_cast<double>(pattern.rows());
}

}  // namespace

VarimaxResult varimax(const FactorSolution& solution, const VarimaxOptions& options) {
  const int k = solution.k;
  if (k < 2) throw Error(ErrorKind::Config, "varimax needs k >= 2");
  const Eigen::Index p = solution.pattern.rows();

  Vector h = Vector::Ones(p);
  Matrix a = solution.pattern;
  if (options.kaiser_normalize) {
    h = a.rowwise().norm();
    for (Eigen::Index i = 0; i < p; ++i)
      if (h[i] > 0) a.row(i) /= h[i];
  }

  VarimaxResult result;
  Matrix rot = Matrix::Identity(k, k);
  Matrix lambda = a;
  double crit = varimax_criterion(lambda);
  result.criterion_trace.push_back(crit);
  Matrix best_rot = rot;
  double best = crit;

  for (int it = 1; it <= options.max_iter; ++it) {
    Vector col_ss = lambda.array().square().colwise().sum();
    Matrix grad = lambda.array().cube().matrix() - lambda * (col_ss / static_cast<double>(p)).asDiagonal();
    Matrix b = a.transpose() * grad;
    Eigen::JacobiSVD<Matrix> svd(b, Eigen::ComputeFullU | Eigen::ComputeFullV);
    rot = svd.matrixU() * svd.matrixV().transpose();
    lambda = a * rot;
    double next = varimax_criterion(lambda);
    result.criterion_trace.push_back(next);
    result.iterations = it;
    double gain = next - crit;
    crit = next;
    if (crit > best) {
      best = crit;
      best_rot = rot;
    }
    if (gain < options.tol) {
      result.converged = true;
      break;
    }
  }

  Matrix loadings = a * best_rot;
  loadings = h.asDiagonal() * loadings;
  result.rotation = best_rot;

  FactorSolution& s = result.solution;
  s.k = k;
  s.item_ids = solution.item_ids;
  s.pattern = std::move(loadings);
  s.factor_correlation = Matrix::Identity(k, k);
  s.explained_variance_pct =
      100.0 * s.pattern.array().square().colwise().sum().transpose() / static_cast<double>(p);
  s.rotation = Rotation::Varimax;
  order_columns(s);
  fix_column_signs(s.pattern);
  return result;
}

FactorSolution promax(const FactorSolution& varimax_solution, double power) {
  if (varimax_solution.rotation != Rotation::Varimax)
    throw Error(ErrorKind::Config, "promax expects a varimax solution");
  if (!(power >= 1)) throw Error(ErrorKind::Config, "promax power must be >= 1");
  const Matrix& a = varimax_solution.pattern;
  const int k = varimax_solution.k;

  Matrix target = a.array() * a.array().abs().pow(power - 1.0);
  Matrix ata = a.transpose() * a;
  Eigen::FullPivLU<Matrix> lu(ata);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) throw Error(ErrorKind::Numerical, "promax: varimax loadings are column-degenerate (singular transform)");
  Matrix u = lu.solve(a.transpose() * target);

  Eigen::FullPivLU<Matrix> ulu(u.transpose() * u);
  if (!ulu.isInvertible()) throw Error(ErrorKind::Numerical, "promax: singular transform");
  Vector d = ulu.inverse().diagonal();
  u = u * d.cwiseSqrt().asDiagonal();

  FactorSolution s;
  s.k = k;
  s.item_ids = varimax_solution.item_ids;
  s.pattern = a * u;
  Matrix phi = (u.transpose() * u).inverse();
  s.factor_correlation = 0.5 * (phi + phi.transpose());
  s.factor_correlation.diagonal().setOnes();
  s.rotation = Rotation::Promax;
  s.promax_power = power;
  s.explained_variance_pct = oblique_explained_pct(s.pattern, s.factor_correlation);
  order_columns(s);
  fix_column_signs(s.pattern, &s.factor_correlation);
  return s;
}

// ---------------------------------------------------------------------------

Matrix factor_scores(const IpsatisedMatrix& ipsatised, const FactorSolution& solution,
                     std::optional<int> top_n) {
  if (ipsatised.item_ids != solution.item_ids || ipsatised.values.cols() != solution.pattern.rows())
    throw Error(ErrorKind::Shape, "factor solution items do not match the matrix items");
  Matrix weights = solution.pattern;
  if (top_n) {
    const Eigen::Index p = weights.rows();
    const Eigen::Index keep = std::clamp<Eigen::Index>(*top_n, 0, p);
    for (Eigen::Index j = 0; j < weights.cols(); ++j) {
      std::vector<Eigen::Index> idx(static_cast<std::size_t>(p));
      std::iota(idx.begin(), idx.end(), 0);
      std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index x, Eigen::Index y) {
        return std::abs(weights(x, j)) > std::abs(weights(y, j));
      });
      for (Eigen::Index r = keep; r < p; ++r) weights(idx[static_cast<std::size_t>(r)], j) = 0.0;
    }
  }
  Matrix scores = kernels::omp::weighted_sums(ipsatised.values, weights);
  const double n = static_cast<double>(scores.rows());
  if (scores.rows() < 2) return scores;
  for (Eigen::Index j = 0; j < scores.cols(); ++j) {
    double mean = scores.col(j).mean();
    scores.col(j).array() -= mean;
    double sd = std::sqrt(scores.col(j).squaredNorm() / (n - 1.0));
    if (sd > 0) scores.col(j) /= sd;
  }
  return scores;
}

SweepReport solution_sweep(const IpsatisedMatrix& ipsatised, int k_min, int k_max,
                           const ReliabilityFn& reliability, double promax_power,
                           const VarimaxOptions& options) {
  if (k_min < 2 || k_max < k_min) throw Error(ErrorKind::Config, "sweep range must satisfy 2 <= k_min <= k_max");
  auto spectrum = eigen_spectrum(ipsatised);
  SweepReport report;
  double best = -std::numeric_limits<double>::infinity();
  for (int k = k_min; k <= k_max; ++k) {
    auto unrotated = extract_loadings(spectrum, k, ipsatised.item_ids);
    auto rotated = promax(varimax(unrotated, options).solution, promax_power);
    SweepEntry e;
    e.k = k;
    e.explained_variance_pct = rotated.explained_variance_pct;
    for (int j = 0; j < k; ++j) e.reliabilities.push_back(reliability(rotated, j));
    e.average = std::accumulate(e.reliabilities.begin(), e.reliabilities.end(), 0.0) / k;
    if (e.average > best) {
      best = e.average;
      report.best_k = k;
    }
    report.entries.push_back(std::move(e));
  }
  return report;
}

nlohmann::json to_json(const SweepReport& report) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : report.entries) {
    std::vector<double> pct(e.explained_variance_pct.data(),
                            e.explained_variance_pct.data() + e.explained_variance_pct.size());
    entries.push_back({{"k", e.k},
                       {"reliabilities", e.reliabilities},
                       {"average_reliability", e.average},
                       {"explained_variance_pct", pct},
                       {"cumulative_explained_variance_pct", std::accumulate(pct.begin(), pct.end(), 0.0)}});
  }
  return {{"best_k", report.best_k}, {"solutions", entries}};
}

double congruence(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw Error(ErrorKind::Shape, "congruence needs equal-length columns");
  double na = a.squaredNorm();
  double nb = b.squaredNorm();
  if (na == 0 || nb == 0) throw Error(ErrorKind::EmptyData, "congruence of a zero vector");
  return a.dot(b) / std::sqrt(na * nb);
}

Alignment align_factors(const Matrix& reference, const Matrix& candidate) {
  if (reference.rows() != candidate.rows()) throw Error(ErrorKind::Shape, "alignment needs equal item counts");
  const Eigen::Index kr = reference.cols();
  const Eigen::Index kc = candidate.cols();
  Matrix phi(kr, kc);
  for (Eigen::Index i = 0; i < kr; ++i)
    for (Eigen::Index j = 0; j < kc; ++j) phi(i, j) = congruence(reference.col(i), candidate.col(j));

  Alignment out;
  out.match.assign(static_cast<std::size_t>(kr), -1);
  out.congruence.assign(static_cast<std::size_t>(kr), 0.0);
  out.sign.assign(static_cast<std::size_t>(kr), 1);
  std::vector<bool> used_r(static_cast<std::size_t>(kr)), used_c(static_cast<std::size_t>(kc));
  for (Eigen::Index step = 0; step < std::min(kr, kc); ++step) {
    double best = -1;
    Eigen::Index bi = -1, bj = -1;
    for (Eigen::Index i = 0; i < kr; ++i) {
      if (used_r[static_cast<std::size_t>(i)]) continue;
      for (Eigen::Index j = 0; j < kc; ++j) {
        if (used_c[static_cast<std::size_t>(j)]) continue;
        if (std::abs(phi(i, j)) > best) {
          best = std::abs(phi(i, j));
          bi = i;
          bj = j;
        }
      }
    }
    used_r[static_cast<std::size_t>(bi)] = true;
    used_c[static_cast<std::size_t>(bj)] = true;
    auto ui = static_cast<std::size_t>(bi);
    out.match[ui] = static_cast<int>(bj);
    out.sign[ui] = phi(bi, bj) < 0 ? -1 : 1;
    out.congruence[ui] = std::abs(phi(bi, bj));
  }
  return out;
}

}  // namespace lexpsy::factors
