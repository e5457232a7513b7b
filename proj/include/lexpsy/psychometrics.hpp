#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "lexpsy/factors.hpp"
#include "lexpsy/persona.hpp"
#include "lexpsy/survey.hpp"

namespace lexpsy::psychometrics {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr std::array<const char*, 6> kHexacoDimensions = {"H", "E", "X", "A", "C", "O"};
int dimension_from_letter(std::string_view letter);

// --- reliability ------------------------------------------------------------

/// alpha = k/(k-1) * (1 - sum(item variances) / var(total)), variances with
/// n-1. Columns are multiplied by keying[j] (+1/-1) first; empty keying means
/// all +1. Throws Error(DegenerateScale) when the total score is constant.
double cronbach_alpha(const Matrix& items, std::span<const int> keying = {});

struct ScaleSelection {
  std::vector<Eigen::Index> items;  // row indices into the pattern
  std::vector<int> keying;          // sign of each selected loading
  std::vector<double> loadings;
};

/// Top-n items by |loading| on one factor, keyed by loading sign.
ScaleSelection scale_items_for_factor(const factors::FactorSolution& solution, int factor,
                                      int top_n = 30);

/// Alpha of a factor's top-n scale over the columns of `data` (agents x items,
/// same item order as the solution). keyed = false ignores loading signs.
double factor_alpha(const Matrix& data, const factors::FactorSolution& solution, int factor,
                    int top_n = 30, bool keyed = true);

// --- loading-set similarity -------------------------------------------------

struct WeightedTerm {
  std::string term;
  double loading = 0;
};
using TermList = std::vector<WeightedTerm>;

/// Keeps the n largest |loading| entries, stable for ties.
TermList truncate_top(TermList terms, std::size_t n = 30);

/// Signed weighted Jaccard, maximised over both orientations of `factor`.
/// Both lists are truncated to top_n first.
double weighted_jaccard(const TermList& factor, const TermList& reference, std::size_t top_n = 30);
/// Sign-blind variant: sum of min |w| over sum of max |w| across the union.
double weighted_jaccard_unsigned(const TermList& factor, const TermList& reference,
                                 std::size_t top_n = 30);

/// Factor j of a solution as a term list, top_n by |loading|.
TermList factor_terms(const factors::FactorSolution& solution, int factor, std::size_t top_n = 30);

using ReferenceLoadings = std::map<std::string, TermList>;
/// CSV dimension,adjective,loading.
ReferenceLoadings load_reference_loadings(const std::filesystem::path& path);

// --- embeddings -------------------------------------------------------------

class EmbeddingTable {
public:
  explicit EmbeddingTable(int dim = 0) : dim_(dim) {}
  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return vectors_.size(); }
  bool contains(const std::string& term) const { return vectors_.count(term) > 0; }
  const Vector& at(const std::string& term) const;
  /// Stores v normalised to unit length.
  void insert(const std::string& term, const Vector& v);
  std::vector<std::string> terms() const;

private:
  int dim_;
  std::unordered_map<std::string, Vector> vectors_;
};

struct EmbeddingLoad {
  EmbeddingTable table;
  std::vector<std::string> composed;  // built from part vectors
  std::vector<std::string> missing;   // no resolvable parts
};

/// Word-vector text format: "count dim" header, then "token v1 .. vdim".
/// Terms absent from the file are composed from their hyphen/space/underscore
/// separated parts when any part resolves.
EmbeddingLoad load_embeddings(const std::filesystem::path& path,
                              const std::vector<std::string>& vocabulary);

struct Similarity {
  double value = 0;
  bool degenerate = false;
};

/// Mean over a in A of max_b cos(a, b), averaged with the B->A direction.
Similarity symmetric_semantic_similarity(const std::vector<std::string>& a,
                                         const std::vector<std::string>& b,
                                         const EmbeddingTable& table);
/// Mean pairwise cosine over unordered distinct pairs. A singleton set is
/// reported as 1.0 with degenerate = true.
Similarity within_set_similarity(const std::vector<std::string>& terms, const EmbeddingTable& table);
/// Within-set directional variant: mean over terms of the max cosine to any other term.
Similarity within_set_similarity_directional(const std::vector<std::string>& terms,
                                             const EmbeddingTable& table);

struct MeanSd {
  double mean = 0;
  double sd = 0;
};

/// Within-set similarity of seeded uniform draws (without replacement) of
/// set_size resolvable lexicon terms, summarised over iterations.
MeanSd random_baseline_similarity(const std::vector<std::string>& lexicon, const EmbeddingTable& table,
                                  std::size_t set_size = 25, int iterations = 10,
                                  std::uint64_t seed = 0);

// --- antonym consistency ----------------------------------------------------

/// 1 - |a + b - 10| / 8 for 9-point ratings.
double consistency_score(int rating_a, int rating_b);

using AntonymPair = std::pair<std::string, std::string>;
using AntonymPairSet = std::vector<AntonymPair>;

/// CSV of adjective_a,adjective_b (header optional). Duplicates in either
/// order are rejected.
AntonymPairSet load_antonym_pairs(const std::filesystem::path& path);
void validate_pairs(const AntonymPairSet& pairs);

struct PairConsistency {
  AntonymPair pair;
  double mean = 0;
  std::size_t agents = 0;
};

struct AgentConsistency {
  long agent_id = 0;
  double mean = 0;
  std::size_t pairs = 0;
};

struct ConsistencyReport {
  std::vector<PairConsistency> per_pair;
  std::vector<AgentConsistency> per_agent;
  double pair_min = 0;
  double pair_max = 0;
  double fraction_pairs_at_least_075 = 0;
  double agent_mean = 0;
  double agent_min = 0;
  double agent_max = 0;
};

ConsistencyReport consistency_report(const survey::ResponseMatrix& ratings, const AntonymPairSet& pairs,
                                     bool parallel = true);
nlohmann::json to_json(const ConsistencyReport& r);

// --- questionnaire scoring and validity --------------------------------------

struct ScaleKeyEntry {
  std::string item_id;
  int dimension = 0;  // H,E,X,A,C,O -> 0..5
  bool reversed = false;
};
using ScaleKey = std::vector<ScaleKeyEntry>;

/// CSV item_id,dimension,reversed. Every item may appear once.
ScaleKey load_scale_key(const std::filesystem::path& path);

struct DimensionScores {
  std::vector<long> agent_ids;
  Matrix scores;  // agents x 6, NaN where an agent has no keyed response on a dimension
};

/// Reversed items map v -> 6 - v; each dimension is the mean of its keyed,
/// unmasked responses. Throws Error(KeyGap) when an item lacks a key entry.
DimensionScores score_pir(const survey::ResponseMatrix& responses, const ScaleKey& key);

struct Correlation {
  double r = 0;
  double p = 1;
  std::size_t n = 0;
};

/// Pearson r with two-sided p from Student's t on n-2 df. Throws
/// Error(ConstantColumn) when either variable is constant.
Correlation pearson(const Vector& x, const Vector& y);

/// Three significant figures; "<.001" below 1e-3.
std::string format_p(double p);

struct ValidityTable {
  std::vector<std::pair<int, int>> mapping;  // (lexical factor, HEXACO dimension)
  std::vector<Correlation> mapped;
  Matrix cross_r;  // 6 x k
  Matrix cross_p;
};

ValidityTable convergent_validity(const Matrix& lexical_scores, const Matrix& pir_scores,
                                  const std::vector<std::pair<int, int>>& mapping);
nlohmann::json to_json(const ValidityTable& t);

struct LengthCorrelation {
  Correlation correlation;
  std::vector<std::pair<double, double>> scatter;  // (biography length, consistency)
  std::vector<long> agent_ids;
};

LengthCorrelation biography_length_correlation(const std::vector<AgentConsistency>& per_agent,
                                               const persona::Population& population);

}  // namespace lexpsy::psychometrics
