#include "lexpsy/psychometrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "lexpsy/error.hpp"
#include "lexpsy/kernels.hpp"
#include "lexpsy/text.hpp"

namespace lexpsy::psychometrics {

int dimension_from_letter(std::string_view letter) {
  auto l = text::to_lower(text::trim(letter));
  static const std::string order = "hexaco";
  if (l.size() == 1 && order.find(l[0]) != std::string::npos) return static_cast<int>(order.find(l[0]));
  static const std::array<const char*, 6> names = {"honesty-humility", "emotionality", "extraversion",
                                                   "agreeableness", "conscientiousness", "openness"};
  for (std::size_t i = 0; i < names.size(); ++i)
    if (l == names[i]) return static_cast<int>(i);
  throw Error(ErrorKind::Config, "unknown HEXACO dimension '" + std::string(letter) + "'");
}

// ---------------------------------------------------------------------------

namespace {

double sample_variance(const Vector& v) {
  const double n = static_cast<double>(v.size());
  return (v.array() - v.mean()).square().sum() / (n - 1.0);
}

}  // namespace

double cronbach_alpha(const Matrix& items, std::span<const int> keying) {
  const Eigen::Index n = items.rows();
  const Eigen::Index k = items.cols();
  if (k < 2 || n < 2) throw Error(ErrorKind::DegenerateScale, "alpha needs at least 2 items and 2 agents");
  if (!keying.empty() && static_cast<Eigen::Index>(keying.size()) != k)
    throw Error(ErrorKind::Shape, "keying length differs from item count");
  Matrix keyed = items;
  if (!keying.empty())
    for (Eigen::Index j = 0; j < k; ++j) keyed.col(j) *= static_cast<double>(keying[static_cast<std::size_t>(j)]);
  double item_var = 0;
  for (Eigen::Index j = 0; j < k; ++j) item_var += sample_variance(keyed.col(j));
  Vector total = keyed.rowwise().sum();
  double total_var = sample_variance(total);
  if (!(total_var > 0)) throw Error(ErrorKind::DegenerateScale, "total score variance is zero");
  const double kk = static_cast<double>(k);
  return kk / (kk - 1.0) * (1.0 - item_var / total_var);
}

ScaleSelection scale_items_for_factor(const factors::FactorSolution& solution, int factor, int top_n) {
  const Eigen::Index p = solution.pattern.rows();
  if (factor < 0 || factor >= solution.k) throw Error(ErrorKind::Config, "factor index out of range");
  if (top_n < 1 || top_n > p) throw Error(ErrorKind::Config, "top_n must be in [1, item count]");
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(p));
  std::iota(idx.begin(), idx.end(), 0);
  const auto col = solution.pattern.col(factor);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return std::abs(col[a]) > std::abs(col[b]); });
  ScaleSelection s;
  for (int r = 0; r < top_n; ++r) {
    auto i = idx[static_cast<std::size_t>(r)];
    s.items.push_back(i);
    s.loadings.push_back(col[i]);
    s.keying.push_back(col[i] < 0 ? -1 : 1);
  }
  return s;
}

double factor_alpha(const Matrix& data, const factors::FactorSolution& solution, int factor, int top_n,
                    bool keyed) {
  if (data.cols() != solution.pattern.rows()) throw Error(ErrorKind::Shape, "data and solution item counts differ");
  auto sel = scale_items_for_factor(solution, factor, std::min<int>(top_n, static_cast<int>(data.cols())));
  Matrix slice(data.rows(), static_cast<Eigen::Index>(sel.items.size()));
  for (std::size_t j = 0; j < sel.items.size(); ++j) slice.col(static_cast<Eigen::Index>(j)) = data.col(sel.items[j]);
  if (keyed) return cronbach_alpha(slice, sel.keying);
  return cronbach_alpha(slice);
}

// ---------------------------------------------------------------------------

TermList truncate_top(TermList terms, std::size_t n) {
  std::stable_sort(terms.begin(), terms.end(), [](const WeightedTerm& a, const WeightedTerm& b) {
    return std::abs(a.loading) > std::abs(b.loading);
  });
  if (terms.size() > n) terms.resize(n);
  return terms;
}

namespace {

std::map<std::string, double> as_map(const TermList& terms) {
  std::map<std::string, double> m;
  for (const auto& t : terms) m[text::to_lower(t.term)] = t.loading;
  return m;
}

int sign_of(double v) { return (v > 0) - (v < 0); }

double oriented_jaccard(const std::map<std::string, double>& a, const std::map<std::string, double>& b,
                        double orientation) {
  double num = 0, den = 0;
  for (const auto& [term, la] : a) {
    auto it = b.find(term);
    if (it == b.end()) {
      den += std::abs(la);
      continue;
    }
    double mb = it->second;
    if (sign_of(orientation * la) == sign_of(mb)) num += std::min(std::abs(la), std::abs(mb));
    den += std::max(std::abs(la), std::abs(mb));
  }
  for (const auto& [term, mb] : b)
    if (!a.count(term)) den += std::abs(mb);
  return den > 0 ? num / den : 0.0;
}

}  // namespace

double weighted_jaccard(const TermList& factor, const TermList& reference, std::size_t top_n) {
  if (factor.empty() || reference.empty()) throw Error(ErrorKind::EmptySet, "weighted Jaccard of an empty set");
  auto a = as_map(truncate_top(factor, top_n));
  auto b = as_map(truncate_top(reference, top_n));
  return std::max(oriented_jaccard(a, b, 1.0), oriented_jaccard(a, b, -1.0));
}

double weighted_jaccard_unsigned(const TermList& factor, const TermList& reference, std::size_t top_n) {
  if (factor.empty() || reference.empty()) throw Error(ErrorKind::EmptySet, "weighted Jaccard of an empty set");
  auto a = as_map(truncate_top(factor, top_n));
  auto b = as_map(truncate_top(reference, top_n));
  double num = 0, den = 0;
  for (const auto& [term, la] : a) {
    auto it = b.find(term);
    double mb = it == b.end() ? 0.0 : std::abs(it->second);
    num += std::min(std::abs(la), mb);
    den += std::max(std::abs(la), mb);
  }
  for (const auto& [term, mb] : b)
    if (!a.count(term)) den += std::abs(mb);
  return den > 0 ? num / den : 0.0;
}

TermList factor_terms(const factors::FactorSolution& solution, int factor, std::size_t top_n) {
  TermList terms;
  for (Eigen::Index i = 0; i < solution.pattern.rows(); ++i)
    terms.push_back({solution.item_ids[static_cast<std::size_t>(i)], solution.pattern(i, factor)});
  return truncate_top(std::move(terms), top_n);
}

ReferenceLoadings load_reference_loadings(const std::filesystem::path& path) {
  ReferenceLoadings out;
  auto rows = text::read_csv(path);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (i == 0 && !r.empty() && text::to_lower(text::trim(r[0])) == "dimension") continue;
    if (r.size() < 3) throw Error(ErrorKind::Format, "reference row needs dimension,adjective,loading");
    double l = std::stod(r[2]);
    if (l == 0) throw Error(ErrorKind::Format, "reference loading must be nonzero");
    out[text::trim(r[0])].push_back({text::to_lower(text::trim(r[1])), l});
  }
  return out;
}

// ---------------------------------------------------------------------------

const Vector& EmbeddingTable::at(const std::string& term) const {
  auto it = vectors_.find(term);
  if (it == vectors_.end()) throw Error(ErrorKind::MissingTerm, "no embedding for '" + term + "'");
  return it->second;
}

void EmbeddingTable::insert(const std::string& term, const Vector& v) {
  if (v.size() != dim_) throw Error(ErrorKind::Format, "embedding dimension mismatch for " + term);
  double norm = v.norm();
  if (!(norm > 0)) throw Error(ErrorKind::Format, "zero embedding for " + term);
  vectors_[term] = v / norm;
}

std::vector<std::string> EmbeddingTable::terms() const {
  std::vector<std::string> out;
  out.reserve(vectors_.size());
  for (const auto& [t, v] : vectors_) out.push_back(t);
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

std::vector<std::string> split_parts(const std::string& term) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : term) {
    if (c == '-' || c == ' ' || c == '_') {
      if (!cur.empty()) parts.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) parts.push_back(std::move(cur));
  return parts;
}

}  // namespace

EmbeddingLoad load_embeddings(const std::filesystem::path& path, const std::vector<std::string>& vocabulary) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open embeddings " + path.string());
  std::string header;
  if (!std::getline(in, header)) throw Error(ErrorKind::Format, "embedding file is empty");
  std::istringstream hs(header);
  long count = 0;
  int dim = 0;
  if (!(hs >> count >> dim) || dim <= 0) throw Error(ErrorKind::Format, "embedding header must be 'count dim'");

  std::set<std::string> wanted;
  for (const auto& v : vocabulary) {
    wanted.insert(v);
    for (auto& part : split_parts(v)) wanted.insert(part);
  }

  std::unordered_map<std::string, Vector> raw;
  std::string line;
  long seen = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++seen;
    std::istringstream ls(line);
    std::string token;
    ls >> token;
    if (!wanted.count(token)) continue;
    Vector v(dim);
    for (int d = 0; d < dim; ++d) {
      if (!(ls >> v[d])) throw Error(ErrorKind::Format, "embedding row for '" + token + "' is short");
    }
    raw.emplace(token, std::move(v));
  }
  if (seen != count) throw Error(ErrorKind::Format, "embedding header count " + std::to_string(count) +
                                                       " differs from rows " + std::to_string(seen));

  EmbeddingLoad out{EmbeddingTable(dim), {}, {}};
  for (const auto& term : vocabulary) {
    if (out.table.contains(term)) continue;
    auto it = raw.find(term);
    if (it != raw.end() && it->second.norm() > 0) {
      out.table.insert(term, it->second);
      continue;
    }
    Vector sum = Vector::Zero(dim);
    int used = 0;
    for (const auto& part : split_parts(term)) {
      auto pi = raw.find(part);
      if (pi == raw.end() || !(pi->second.norm() > 0)) continue;
      sum += pi->second.normalized();
      ++used;
    }
    if (used > 0 && sum.norm() > 0) {
      out.table.insert(term, sum / used);
      out.composed.push_back(term);
    } else {
      out.missing.push_back(term);
    }
  }
  return out;
}

Similarity symmetric_semantic_similarity(const std::vector<std::string>& a, const std::vector<std::string>& b,
                                         const EmbeddingTable& table) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::EmptySet, "similarity of an empty set");
  auto directed = [&](const std::vector<std::string>& x, const std::vector<std::string>& y) {
    double total = 0;
    for (const auto& s : x) {
      double best = -1.0;
      for (const auto& t : y) best = std::max(best, table.at(s).dot(table.at(t)));
      total += best;
    }
    return total / static_cast<double>(x.size());
  };
  return {0.5 * (directed(a, b) + directed(b, a)), false};
}

Similarity within_set_similarity(const std::vector<std::string>& terms, const EmbeddingTable& table) {
  if (terms.empty()) throw Error(ErrorKind::EmptySet, "similarity of an empty set");
  for (const auto& t : terms) table.at(t);
  if (terms.size() == 1) return {1.0, true};
  double total = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < terms.size(); ++i)
    for (std::size_t j = i + 1; j < terms.size(); ++j) {
      total += table.at(terms[i]).dot(table.at(terms[j]));
      ++pairs;
    }
  return {total / static_cast<double>(pairs), false};
}

Similarity within_set_similarity_directional(const std::vector<std::string>& terms,
                                             const EmbeddingTable& table) {
  if (terms.empty()) throw Error(ErrorKind::EmptySet, "similarity of an empty set");
  for (const auto& t : terms) table.at(t);
  if (terms.size() == 1) return {1.0, true};
  double total = 0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    double best = -1.0;
    for (std::size_t j = 0; j < terms.size(); ++j)
      if (i != j) best = std::max(best, table.at(terms[i]).dot(table.at(terms[j])));
    total += best;
  }
  return {total / static_cast<double>(terms.size()), false};
}

MeanSd random_baseline_similarity(const std::vector<std::string>& lexicon, const EmbeddingTable& table,
                                  std::size_t set_size, int iterations, std::uint64_t seed) {
  std::vector<std::string> pool;
  for (const auto& t : lexicon)
    if (table.contains(t)) pool.push_back(t);
  if (pool.size() < set_size) throw Error(ErrorKind::EmptyData, "lexicon smaller than the baseline set size");
  if (iterations < 1) throw Error(ErrorKind::Config, "iterations must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<double> values;
  for (int it = 0; it < iterations; ++it) {
    std::vector<std::string> draw;
    std::sample(pool.begin(), pool.end(), std::back_inserter(draw), static_cast<std::ptrdiff_t>(set_size), rng);
    values.push_back(within_set_similarity(draw, table).value);
  }
  MeanSd out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

// ---------------------------------------------------------------------------

double consistency_score(int rating_a, int rating_b) {
  if (rating_a < 1 || rating_a > 9 || rating_b < 1 || rating_b > 9)
    throw Error(ErrorKind::Config, "consistency ratings must be in 1..9");
  return 1.0 - std::abs(rating_a + rating_b - 10) / 8.0;
}

void validate_pairs(const AntonymPairSet& pairs) {
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& [a, b] : pairs) {
    if (a == b) throw Error(ErrorKind::Config, "antonym pair repeats '" + a + "'");
    auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    if (!seen.insert(key).second) throw Error(ErrorKind::Config, "duplicate antonym pair " + a + "/" + b);
  }
}

AntonymPairSet load_antonym_pairs(const std::filesystem::path& path) {
  AntonymPairSet pairs;
  auto rows = text::read_csv(path);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() < 2) throw Error(ErrorKind::Format, "antonym row needs two adjectives");
    auto a = text::to_lower(text::trim(r[0]));
    auto b = text::to_lower(text::trim(r[1]));
    if (i == 0 && (a == "adjective_a" || a == "a" || a == "adjective")) continue;
    pairs.emplace_back(a, b);
  }
  validate_pairs(pairs);
  return pairs;
}

ConsistencyReport consistency_report(const survey::ResponseMatrix& ratings, const AntonymPairSet& pairs,
                                     bool parallel) {
  validate_pairs(pairs);
  if (pairs.empty()) throw Error(ErrorKind::EmptyData, "no antonym pairs");
  std::vector<kernels::IndexPair> idx;
  for (const auto& [a, b] : pairs) {
    auto ia = ratings.item_index(a);
    auto ib = ratings.item_index(b);
    if (ia < 0 || ib < 0) throw Error(ErrorKind::Config, "antonym pair " + a + "/" + b + " not in the response matrix");
    idx.emplace_back(ia, ib);
  }
  Matrix scores;
  if (parallel)
    kernels::omp::pair_consistency(ratings.values, idx, scores);
  else
    kernels::serial::pair_consistency(ratings.values, idx, scores);

  ConsistencyReport rep;
  for (Eigen::Index p = 0; p < scores.cols(); ++p) {
    double sum = 0;
    std::size_t n = 0;
    for (Eigen::Index i = 0; i < scores.rows(); ++i)
      if (!std::isnan(scores(i, p))) {
        sum += scores(i, p);
        ++n;
      }
    rep.per_pair.push_back({pairs[static_cast<std::size_t>(p)], n ? sum / static_cast<double>(n) : std::nan(""), n});
  }
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    double sum = 0;
    std::size_t n = 0;
    for (Eigen::Index p = 0; p < scores.cols(); ++p)
      if (!std::isnan(scores(i, p))) {
        sum += scores(i, p);
        ++n;
      }
    rep.per_agent.push_back({ratings.agent_ids[static_cast<std::size_t>(i)],
                             n ? sum / static_cast<double>(n) : std::nan(""), n});
  }

  auto summarise = [](auto& items, double& lo, double& hi, double* mean, double* frac) {
    std::vector<double> v;
    for (const auto& x : items)
      if (!std::isnan(x.mean)) v.push_back(x.mean);
    if (v.empty()) return;
    lo = *std::min_element(v.begin(), v.end());
    hi = *std::max_element(v.begin(), v.end());
    if (mean) *mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (frac)
      *frac = static_cast<double>(std::count_if(v.begin(), v.end(), [](double x) { return x >= 0.75; })) /
              static_cast<double>(v.size());
  };
  summarise(rep.per_pair, rep.pair_min, rep.pair_max, nullptr, &rep.fraction_pairs_at_least_075);
  summarise(rep.per_agent, rep.agent_min, rep.agent_max, &rep.agent_mean, nullptr);
  return rep;
}

nlohmann::json to_json(const ConsistencyReport& r) {
  auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : r.per_pair)
    pairs.push_back({{"a", p.pair.first}, {"b", p.pair.second}, {"mean", num(p.mean)}, {"agents", p.agents}});
  nlohmann::json agents = nlohmann::json::array();
  for (const auto& a : r.per_agent)
    agents.push_back({{"agent_id", a.agent_id}, {"mean", num(a.mean)}, {"pairs", a.pairs}});
  return {{"pair_min", r.pair_min},
          {"pair_max", r.pair_max},
          {"fraction_pairs_at_least_0.75", r.fraction_pairs_at_least_075},
          {"agent_mean", r.agent_mean},
          {"agent_min", r.agent_min},
          {"agent_max", r.agent_max},
          {"per_pair", pairs},
          {"per_agent", agents}};
}

// ---------------------------------------------------------------------------

ScaleKey load_scale_key(const std::filesystem::path& path) {
  ScaleKey key;
  std::set<std::string> seen;
  auto rows = text::read_csv(path);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (i == 0 && !r.empty() && text::to_lower(text::trim(r[0])) == "item_id") continue;
    if (r.size() < 3) throw Error(ErrorKind::Format, "scale key row needs item_id,dimension,reversed");
    ScaleKeyEntry e;
    e.item_id = text::trim(r[0]);
    e.dimension = dimension_from_letter(r[1]);
    auto rev = text::to_lower(text::trim(r[2]));
    e.reversed = rev == "1" || rev == "true" || rev == "r" || rev == "yes";
    if (!seen.insert(e.item_id).second) throw Error(ErrorKind::Config, "item keyed twice: " + e.item_id);
    key.push_back(e);
  }
  return key;
}

DimensionScores score_pir(const survey::ResponseMatrix& responses, const ScaleKey& key) {
  std::unordered_map<std::string, const ScaleKeyEntry*> lookup;
  for (const auto& e : key) lookup.emplace(e.item_id, &e);
  std::vector<const ScaleKeyEntry*> cols;
  for (const auto& item : responses.item_ids) {
    auto it = lookup.find(item);
    if (it == lookup.end()) throw Error(ErrorKind::KeyGap, "no key entry for item " + item);
    cols.push_back(it->second);
  }
  DimensionScores out;
  out.agent_ids = responses.agent_ids;
  out.scores = Matrix::Constant(responses.values.rows(), 6, std::nan(""));
  for (Eigen::Index i = 0; i < responses.values.rows(); ++i) {
    std::array<double, 6> sum{};
    std::array<int, 6> n{};
    for (Eigen::Index j = 0; j < responses.values.cols(); ++j) {
      double v = responses.values(i, j);
      if (std::isnan(v)) continue;
      const auto& e = *cols[static_cast<std::size_t>(j)];
      auto d = static_cast<std::size_t>(e.dimension);
      sum[d] += e.reversed ? 6.0 - v : v;
      ++n[d];
    }
    for (std::size_t d = 0; d < 6; ++d)
      if (n[d]) out.scores(i, static_cast<Eigen::Index>(d)) = sum[d] / n[d];
  }
  return out;
}

Correlation pearson(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) throw Error(ErrorKind::Shape, "correlation needs equal-length variables");
  const Eigen::Index n = x.size();
  if (n < 2) throw Error(ErrorKind::EmptyData, "correlation needs at least 2 observations");
  Vector dx = x.array() - x.mean();
  Vector dy = y.array() - y.mean();
  double sxx = dx.squaredNorm(), syy = dy.squaredNorm();
  if (!(sxx > 0) || !(syy > 0)) throw Error(ErrorKind::ConstantColumn, "correlation with a constant variable");
  Correlation c;
  c.n = static_cast<std::size_t>(n);
  c.r = std::clamp(dx.dot(dy) / std::sqrt(sxx * syy), -1.0, 1.0);
  if (n < 3) {
    c.p = std::nan("");
  } else if (std::abs(c.r) >= 1.0) {
    c.p = 0.0;
  } else {
    double df = static_cast<double>(n - 2);
    double t = c.r * std::sqrt(df / (1.0 - c.r * c.r));
    boost::math::students_t dist(df);
    c.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  }
  return c;
}

std::string format_p(double p) {
  if (std::isnan(p)) return "NA";
  if (p < 1e-3) return "<.001";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", p);
  return buf;
}

ValidityTable convergent_validity(const Matrix& lexical_scores, const Matrix& pir_scores,
                                  const std::vector<std::pair<int, int>>& mapping) {
  if (lexical_scores.rows() != pir_scores.rows()) throw Error(ErrorKind::Shape, "score tables have different agent counts");
  ValidityTable t;
  t.mapping = mapping;
  const Eigen::Index k = lexical_scores.cols();
  const Eigen::Index dims = pir_scores.cols();
  t.cross_r = Matrix::Constant(dims, k, std::nan(""));
  t.cross_p = Matrix::Constant(dims, k, std::nan(""));
  for (Eigen::Index d = 0; d < dims; ++d)
    for (Eigen::Index f = 0; f < k; ++f) {
      try {
        auto c = pearson(lexical_scores.col(f), pir_scores.col(d));
        t.cross_r(d, f) = c.r;
        t.cross_p(d, f) = c.p;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::ConstantColumn) throw;
      }
    }
  for (auto [f, d] : mapping) {
    if (f < 0 || f >= k || d < 0 || d >= dims) throw Error(ErrorKind::Config, "validity mapping out of range");
    t.mapped.push_back(pearson(lexical_scores.col(f), pir_scores.col(d)));
  }
  return t;
}

nlohmann::json to_json(const ValidityTable& t) {
  nlohmann::json mapped = nlohmann::json::array();
  for (std::size_t i = 0; i < t.mapping.size(); ++i) {
    const auto& c = t.mapped[i];
    mapped.push_back({{"factor", t.mapping[i].first},
                      {"dimension", kHexacoDimensions[static_cast<std::size_t>(t.mapping[i].second)]},
                      {"r", c.r},
                      {"p", format_p(c.p)},
                      {"n", c.n}});
  }
  nlohmann::json cross = nlohmann::json::array();
  for (Eigen::Index d = 0; d < t.cross_r.rows(); ++d) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index f = 0; f < t.cross_r.cols(); ++f)
      row.push_back(std::isnan(t.cross_r(d, f)) ? nlohmann::json(nullptr) : nlohmann::json(t.cross_r(d, f)));
    cross.push_back({{"dimension", kHexacoDimensions[static_cast<std::size_t>(d)]}, {"r", row}});
  }
  return {{"mapped", mapped}, {"cross", cross}};
}

LengthCorrelation biography_length_correlation(const std::vector<AgentConsistency>& per_agent,
                                               const persona::Population& population) {
  LengthCorrelation out;
  std::vector<double> xs, ys;
  for (const auto& a : per_agent) {
    if (std::isnan(a.mean)) continue;
    double len = static_cast<double>(persona::biography_length(population.agent(a.agent_id)));
    xs.push_back(len);
    ys.push_back(a.mean);
    out.scatter.emplace_back(len, a.mean);
    out.agent_ids.push_back(a.agent_id);
  }
  out.correlation = pearson(Eigen::Map<Vector>(xs.data(), static_cast<Eigen::Index>(xs.size())),
                            Eigen::Map<Vector>(ys.data(), static_cast<Eigen::Index>(ys.size())));
  return out;
}

}  // namespace lexpsy::psychometrics
