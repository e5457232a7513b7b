#include <doctest.h>

#include <functional>
#include <random>

#include "lexpsy/error.hpp"
#include "lexpsy/psychometrics.hpp"
#include "support.hpp"

using namespace lexpsy;
using namespace lexpsy::psychometrics;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::Config;
}

factors::FactorSolution solution_from(const Matrix& pattern) {
  factors::FactorSolution s;
  s.k = static_cast<int>(pattern.cols());
  s.pattern = pattern;
  s.factor_correlation = Matrix::Identity(s.k, s.k);
  for (Eigen::Index i = 0; i < pattern.rows(); ++i) s.item_ids.push_back("t" + std::to_string(i));
  return s;
}

EmbeddingTable table3() {
  EmbeddingTable t(3);
  t.insert("a", Vector::Unit(3, 0));
  t.insert("b", (Vector(3) << 1, 1, 0).finished());
  t.insert("c", Vector::Unit(3, 2));
  return t;
}

}  // namespace

TEST_CASE("cronbach alpha against hand-computed values") {
  Matrix x(5, 3);
  x << 1, 2, 3, 2, 3, 3, 3, 3, 5, 4, 5, 4, 5, 4, 6;
  CHECK(cronbach_alpha(x) == doctest::Approx(0.8796992481203009).epsilon(1e-12));

  Matrix y(4, 2);
  y << 1, 5, 2, 3, 3, 4, 4, 1;
  CHECK(cronbach_alpha(y) == doctest::Approx(-8.0).epsilon(1e-12));
  std::vector<int> keys = {1, -1};
  CHECK(cronbach_alpha(y, keys) == doctest::Approx(0.8888888888888891).epsilon(1e-12));

  Matrix same(6, 4);
  for (int i = 0; i < 6; ++i) same.row(i).setConstant(i * 1.5 - 2);
  CHECK(cronbach_alpha(same) == 1.0);

  Matrix flat = Matrix::Constant(4, 3, 2.0);
  CHECK(kind_of([&] { cronbach_alpha(flat); }) == ErrorKind::DegenerateScale);
  CHECK(kind_of([&] { cronbach_alpha(Matrix::Ones(4, 1)); }) == ErrorKind::DegenerateScale);
}

TEST_CASE("keying a reversed item equals negating its column") {
  std::mt19937_64 rng(5);
  Matrix m = testing::random_ratings(rng, 40, 6, 0.0);
  std::vector<int> keys = {1, -1, 1, 1, -1, 1};
  Matrix flipped = m;
  flipped.col(1) *= -1;
  flipped.col(4) *= -1;
  CHECK(cronbach_alpha(m, keys) == doctest::Approx(cronbach_alpha(flipped)).epsilon(1e-14));
}

TEST_CASE("scale selection and factor alpha") {
  Matrix pattern(5, 2);
  pattern << 0.9, 0.1, -0.8, 0.2, 0.1, 0.7, 0.3, -0.6, 0.0, 0.5;
  auto s = solution_from(pattern);
  auto sel = scale_items_for_factor(s, 0, 3);
  CHECK(sel.items == std::vector<Eigen::Index>{0, 1, 3});
  CHECK(sel.keying == std::vector<int>{1, -1, 1});
  CHECK_THROWS_AS(scale_items_for_factor(s, 2, 3), Error);
  CHECK_THROWS_AS(scale_items_for_factor(s, 0, 6), Error);

  std::mt19937_64 rng(9);
  Matrix data = testing::random_ratings(rng, 30, 5, 0.0);
  Matrix slice(30, 3);
  slice << data.col(0), -data.col(1), data.col(3);
  CHECK(factor_alpha(data, s, 0, 3) == doctest::Approx(cronbach_alpha(slice)).epsilon(1e-14));
  slice.col(1) = data.col(1);
  CHECK(factor_alpha(data, s, 0, 3, false) == doctest::Approx(cronbach_alpha(slice)).epsilon(1e-14));
}

TEST_CASE("weighted jaccard hand case and laws") {
  TermList f = {{"a", 0.5}, {"b", 0.4}, {"c", -0.3}};
  TermList r = {{"a", 0.5}, {"b", -0.4}};
  CHECK(weighted_jaccard(f, r) == doctest::Approx(5.0 / 12.0));
  CHECK(weighted_jaccard_unsigned(f, r) == doctest::Approx(0.9 / 1.2));
  CHECK(weighted_jaccard(f, f) == doctest::Approx(1.0));
  CHECK(weighted_jaccard(f, TermList{{"x", 0.4}, {"y", 0.9}}) == 0.0);

  TermList flipped;
  for (auto t : f) flipped.push_back({t.term, -t.loading});
  CHECK(weighted_jaccard(flipped, f) == doctest::Approx(1.0));

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> w(-1, 1);
  for (int trial = 0; trial < 100; ++trial) {
    TermList x, y;
    for (int i = 0; i < 12; ++i) {
      if (rng() % 2) x.push_back({"w" + std::to_string(i), w(rng)});
      if (rng() % 2) y.push_back({"w" + std::to_string(i), w(rng)});
    }
    if (x.empty() || y.empty()) continue;
    double j = weighted_jaccard(x, y, 8);
    CHECK(j >= 0.0);
    CHECK(j <= 1.0);
    CHECK(j == doctest::Approx(weighted_jaccard(y, x, 8)));
  }
  CHECK(kind_of([&] { weighted_jaccard({}, r); }) == ErrorKind::EmptySet);
}

TEST_CASE("truncation keeps the largest magnitudes, stable on ties") {
  TermList t = {{"a", 0.1}, {"b", -0.9}, {"c", 0.5}, {"d", -0.5}};
  auto top = truncate_top(t, 3);
  REQUIRE(top.size() == 3);
  CHECK(top[0].term == "b");
  CHECK(top[1].term == "c");
  CHECK(top[2].term == "d");
}

TEST_CASE("embedding loading composes multiword terms") {
  testing::TempDir dir;
  testing::write(dir / "vec.txt", "2 3\ngentle 1 0 0\nhearted 0 1 0\n");
  auto load = load_embeddings(dir / "vec.txt", {"gentle-hearted", "gentle", "kind"});
  CHECK(load.table.size() == 2);
  CHECK(load.composed == std::vector<std::string>{"gentle-hearted"});
  CHECK(load.missing == std::vector<std::string>{"kind"});
  Vector expect = (Vector(3) << 1, 1, 0).finished().normalized();
  CHECK(load.table.at("gentle-hearted").isApprox(expect));

  testing::write(dir / "bad.txt", "3 3\ngentle 1 0 0\n");
  CHECK_THROWS_AS(load_embeddings(dir / "bad.txt", {"gentle"}), Error);
  auto none = load_embeddings(dir / "vec.txt", {});
  CHECK(none.table.size() == 0);
}

TEST_CASE("set similarity") {
  auto t = table3();
  auto w = within_set_similarity({"a", "b", "c"}, t);
  CHECK(w.value == doctest::Approx(0.2357022603955158));
  CHECK_FALSE(w.degenerate);
  auto one = within_set_similarity({"a"}, t);
  CHECK(one.value == 1.0);
  CHECK(one.degenerate);
  CHECK(within_set_similarity_directional({"a", "b", "c"}, t).value ==
        doctest::Approx(2 * std::sqrt(0.5) / 3));

  std::vector<std::string> x = {"a", "c"}, y = {"b"};
  CHECK(symmetric_semantic_similarity(x, y, t).value == symmetric_semantic_similarity(y, x, t).value);
  CHECK(symmetric_semantic_similarity(x, x, t).value == doctest::Approx(1.0));
  CHECK(kind_of([&] { within_set_similarity({"a", "zzz"}, t); }) == ErrorKind::MissingTerm);
  CHECK(kind_of([&] { symmetric_semantic_similarity({}, y, t); }) == ErrorKind::EmptySet);
}

TEST_CASE("random baseline is seeded") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  EmbeddingTable t(8);
  std::vector<std::string> lex;
  for (int i = 0; i < 60; ++i) {
    Vector v(8);
    for (auto& x : v) x = z(rng);
    lex.push_back("w" + std::to_string(i));
    t.insert(lex.back(), v);
  }
  auto a = random_baseline_similarity(lex, t, 10, 5, 42);
  auto b = random_baseline_similarity(lex, t, 10, 5, 42);
  CHECK(a.mean == b.mean);
  CHECK(a.sd == b.sd);
  CHECK(random_baseline_similarity(lex, t, 10, 1, 3).sd == 0.0);
  CHECK(kind_of([&] { random_baseline_similarity(lex, t, 61); }) == ErrorKind::EmptyData);
}

TEST_CASE("consistency score anchors and all 81 pairs") {
  CHECK(consistency_score(9, 1) == 1.0);
  CHECK(consistency_score(5, 5) == 1.0);
  CHECK(consistency_score(9, 9) == 0.0);
  CHECK(consistency_score(1, 1) == 0.0);
  CHECK(consistency_score(6, 6) == 0.75);
  for (int a = 1; a <= 9; ++a)
    for (int b = 1; b <= 9; ++b) {
      // distance of b from the mirror of a, in scale steps
      double expect = 1.0 - std::abs(b - (10 - a)) / 8.0;
      CHECK(consistency_score(a, b) == expect);
      CHECK(consistency_score(a, b) == consistency_score(b, a));
    }
  CHECK_THROWS_AS(consistency_score(0, 5), Error);
}

TEST_CASE("consistency report") {
  Eigen::MatrixXd v(3, 4);
  v << 9, 1, 5, 5,  //
      9, 9, 7, 3,   //
      1, std::nan(""), 2, 2;
  auto m = testing::to_response_matrix(v);
  AntonymPairSet pairs = {{"item0", "item1"}, {"item2", "item3"}};
  auto rep = consistency_report(m, pairs);
  REQUIRE(rep.per_pair.size() == 2);
  CHECK(rep.per_pair[0].mean == doctest::Approx(0.5));
  CHECK(rep.per_pair[0].agents == 2);
  CHECK(rep.per_pair[1].mean == doctest::Approx((1 + 1 + 0.25) / 3));
  CHECK(rep.per_agent[2].mean == 0.25);
  CHECK(rep.per_agent[2].pairs == 1);
  CHECK(rep.agent_min == 0.25);
  CHECK(rep.agent_max == 1.0);
  CHECK(rep.fraction_pairs_at_least_075 == 0.5);
  auto serial = consistency_report(m, pairs, false);
  CHECK(serial.agent_mean == rep.agent_mean);

  CHECK_THROWS_AS(consistency_report(m, {{"item0", "item1"}, {"item1", "item0"}}), Error);
  CHECK_THROWS_AS(consistency_report(m, {{"item0", "nope"}}), Error);
}

TEST_CASE("questionnaire scoring") {
  Eigen::MatrixXd v(2, 4);
  v << 3, 3, 3, 3,  //
      5, 1, 4, std::nan("");
  auto m = testing::to_response_matrix(v);
  ScaleKey key = {{"item0", 0, false}, {"item1", 0, true}, {"item2", 4, false}, {"item3", 4, true}};
  auto s = score_pir(m, key);
  CHECK((s.scores.row(0)(std::vector<int>{0, 4}).array() == 3).all());
  CHECK(std::isnan(s.scores(0, 1)));
  CHECK(s.scores(1, 0) == 5.0);
  CHECK(s.scores(1, 4) == 4.0);

  // reversing an item's key and mirroring its responses changes nothing
  auto mirrored = m;
  mirrored.values.col(1) = 6.0 - m.values.col(1).array();
  auto key2 = key;
  key2[1].reversed = false;
  CHECK(score_pir(mirrored, key2).scores.row(1).head(1) == s.scores.row(1).head(1));

  key.pop_back();
  CHECK(kind_of([&] { score_pir(m, key); }) == ErrorKind::KeyGap);
}

TEST_CASE("pearson correlation and p-values") {
  Vector x(6), y(6);
  x << 1, 2, 3, 4, 5, 6;
  y << 2, 1, 4, 3, 7, 5;
  auto c = pearson(x, y);
  CHECK(c.r == doctest::Approx(0.7917946548886297).epsilon(1e-12));
  CHECK(c.p == doctest::Approx(0.06051140336275659).epsilon(1e-9));
  CHECK(pearson(x, 3.0 * x.array() + 1).r == doctest::Approx(1.0));
  CHECK(pearson(x, -x).r == doctest::Approx(-1.0));
  CHECK(pearson(2.0 * x.array() - 7, 0.5 * y.array() + 3).r == doctest::Approx(c.r).epsilon(1e-12));
  CHECK(kind_of([&] { pearson(x, Vector::Constant(6, 2.0)); }) == ErrorKind::ConstantColumn);

  CHECK(format_p(0.0004) == "<.001");
  CHECK(format_p(0.06051140336275659) == "0.0605");
  CHECK(format_p(0.5) == "0.5");
}

TEST_CASE("convergent validity table") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z;
  Matrix pir(50, 6), lex(50, 6);
  for (auto i = 0; i < pir.size(); ++i) pir.data()[i] = z(rng);
  for (int f = 0; f < 6; ++f) lex.col(f) = 2.0 * pir.col((f + 1) % 6);
  std::vector<std::pair<int, int>> mapping;
  for (int f = 0; f < 6; ++f) mapping.emplace_back(f, (f + 1) % 6);
  auto t = convergent_validity(lex, pir, mapping);
  for (const auto& c : t.mapped) CHECK(c.r == doctest::Approx(1.0));
  CHECK(t.cross_r(2, 1) == doctest::Approx(1.0));
  CHECK(std::abs(t.cross_r(0, 0)) < 0.5);
  auto j = to_json(t);
  CHECK(j["mapped"][0]["dimension"] == "E");
  CHECK_THROWS_AS(convergent_validity(lex, pir, {{6, 0}}), Error);
}

TEST_CASE("biography length correlation") {
  persona::Population pop;
  std::vector<AgentConsistency> per_agent;
  for (long i = 0; i < 5; ++i) {
    pop.agents.push_back(testing::make_bio(i, 30, std::string(static_cast<std::size_t>(i + 1), 'x')));
    per_agent.push_back({i, 0.5 + 0.1 * static_cast<double>(i), 3});
  }
  per_agent.push_back({0, std::nan(""), 0});
  auto lc = biography_length_correlation(per_agent, pop);
  CHECK(lc.correlation.r == doctest::Approx(1.0));
  CHECK(lc.correlation.n == 5);

  for (auto& b : pop.agents) b.hobbies_interests = "same";
  CHECK(kind_of([&] { biography_length_correlation(per_agent, pop); }) == ErrorKind::ConstantColumn);
}
