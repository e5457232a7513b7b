// Acceptance run: one PASS / FAIL / NOT-RUN line per criterion.

#include <chrono>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include "lexpsy/error.hpp"
#include "lexpsy/factors.hpp"
#include "lexpsy/gateway.hpp"
#include "lexpsy/psychometrics.hpp"
#include "lexpsy/survey.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace lexpsy;
using namespace lexpsy::factors;
using Clock = std::chrono::steady_clock;

namespace {

// Records the first failed expectation of a criterion.
class Check {
public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failure_.empty()) failure_ = what;
  }
  bool ok() const { return failure_.empty(); }
  const std::string& failure() const { return failure_; }

private:
  std::string failure_;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

// 1 ----------------------------------------------------------------------------

std::string ipsatisation(Check& c) {
  auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    auto n = 2 + static_cast<Eigen::Index>(rng() % 49);
    auto p = 2 + static_cast<Eigen::Index>(rng() % 79);
    auto m = testing::to_response_matrix(testing::random_ratings(rng, n, p, 0.05));
    auto w = ipsatise_within(m);
    std::set<long> degenerate(w.degenerate_agents.begin(), w.degenerate_agents.end());
    for (Eigen::Index i = 0; i < n; ++i) {
      if (degenerate.count(i)) continue;
      double sum = 0, count = 0;
      for (Eigen::Index j = 0; j < p; ++j)
        if (!std::isnan(w.values(i, j))) sum += w.values(i, j), ++count;
      double mean = sum / count, ss = 0;
      for (Eigen::Index j = 0; j < p; ++j)
        if (!std::isnan(w.values(i, j))) ss += (w.values(i, j) - mean) * (w.values(i, j) - mean);
      c.expect(std::abs(mean) < 1e-9, "row mean");
      c.expect(std::abs(std::sqrt(ss / (count - 1)) - 1) < 1e-9, "row SD");
    }
    auto z = ipsatise(m);
    std::set<std::string> constant(z.constant_items.begin(), z.constant_items.end());
    for (Eigen::Index j = 0; j < p; ++j) {
      if (constant.count(z.item_ids[static_cast<std::size_t>(j)])) continue;
      auto col = z.values.col(j);
      double mean = col.mean();
      c.expect(std::abs(mean) < 1e-9, "column mean");
      c.expect(std::abs(std::sqrt((col.array() - mean).square().sum() / (n - 1)) - 1) < 1e-9, "column SD");
    }
  }
  double s = seconds_since(t0);
  c.expect(s < 5, "runtime " + fmt(s) + " s");
  return "1000 matrices in " + fmt(s) + " s";
}

// 2 ----------------------------------------------------------------------------

std::string spectrum(Check& c) {
  Matrix basis = Matrix::Random(40, 2);
  basis = basis.rowwise() - basis.colwise().mean();
  Eigen::HouseholderQR<Matrix> qr(basis);
  Matrix q = qr.householderQ() * Matrix::Identity(40, 2);
  double worst = 0;
  for (int step = -9; step <= 9; ++step) {
    double r = step / 10.0;
    Matrix x(40, 2);
    x.col(0) = q.col(0);
    x.col(1) = r * q.col(0) + std::sqrt(1 - r * r) * q.col(1);
    auto s = eigen_spectrum(x);
    worst = std::max({worst, std::abs(s.eigenvalues[0] - (1 + std::abs(r))), std::abs(s.eigenvalues[1] - (1 - std::abs(r)))});
  }
  c.expect(worst < 1e-10, "2x2 eigenvalue error " + fmt(worst));
  std::mt19937_64 rng(2);
  double trace_err = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto n = 3 + static_cast<Eigen::Index>(rng() % 60);
    auto p = 2 + static_cast<Eigen::Index>(rng() % 80);
    Matrix x = testing::random_ratings(rng, n, p, 0.0);
    for (Eigen::Index j = 0; j < p; ++j) x(j % n, j) += 0.5;
    auto s = eigen_spectrum(x);
    trace_err = std::max(trace_err, std::abs(s.eigenvalues.sum() - static_cast<double>(p)));
  }
  c.expect(trace_err < 1e-6, "trace error " + fmt(trace_err));
  return "max 2x2 error " + fmt(worst) + ", max trace error " + fmt(trace_err);
}

// 3 ----------------------------------------------------------------------------

std::string varimax_optimality(Check& c) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0, 0.5);
  double worst = 0;
  auto monotone = [&](const VarimaxResult& r) {
    for (std::size_t t = 1; t < r.criterion_trace.size(); ++t)
      c.expect(r.criterion_trace[t] >= r.criterion_trace[t - 1] - 1e-12, "criterion decreased");
  };
  for (int trial = 0; trial < 50; ++trial) {
    Matrix a(15 + trial % 10, 2);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = z(rng);
    auto res = varimax(testing::as_varimax(a));
    monotone(res);
    double got = varimax_criterion(testing::kaiser_normalised(res.solution.pattern));
    worst = std::max(worst, std::abs(got - testing::grid_best(testing::kaiser_normalised(a))));
  }
  c.expect(worst < 1e-6, "grid gap " + fmt(worst));

  auto t0 = Clock::now();
  Matrix x = testing::planted_data(rng, 400, 1700, 10, 0.5);
  auto unrotated = extract_loadings(eigen_spectrum(x), 10, std::vector<std::string>(1700, "i"));
  auto big = varimax(unrotated);
  monotone(big);
  double s = seconds_since(t0);
  c.expect(big.converged && big.iterations < 500, "1700x10 did not converge in 500 iterations");
  c.expect(s < 30, "1700x10 took " + fmt(s) + " s");
  return "grid gap " + fmt(worst) + "; 1700x10 in " + std::to_string(big.iterations) + " iterations, " + fmt(s) + " s";
}

// 4 ----------------------------------------------------------------------------

std::string promax_sanity(Check& c) {
  double pattern_gap = 0, phi_gap = 0;
  for (std::uint64_t seed : {11, 12, 13}) {
    std::mt19937_64 rng(seed);
    Matrix x = testing::planted_data(rng, 3000, 60, 6, 0.7);
    auto vm = varimax(extract_loadings(eigen_spectrum(x), 6, std::vector<std::string>(60, "i"))).solution;
    auto pm = promax(vm);
    pattern_gap = std::max(pattern_gap, (pm.pattern - vm.pattern).cwiseAbs().maxCoeff());
    phi_gap = std::max(phi_gap, (pm.factor_correlation - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff());
    const auto& phi = pm.factor_correlation;
    c.expect(phi == phi.transpose(), "Phi not symmetric");
    c.expect(Eigen::SelfAdjointEigenSolver<Matrix>(phi).eigenvalues().minCoeff() > 0, "Phi not positive-definite");
  }
  c.expect(pattern_gap < 0.05, "pattern gap " + fmt(pattern_gap));
  c.expect(phi_gap < 0.1, "Phi gap " + fmt(phi_gap));
  return "pattern gap " + fmt(pattern_gap) + ", Phi gap " + fmt(phi_gap);
}

// 5 ----------------------------------------------------------------------------

double recovery(double noise, std::uint64_t seed) {
  constexpr int kAgents = 120, kPerDim = 20;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  gateway::SyntheticPanel panel;
  for (long a = 0; a < kAgents; ++a) {
    gateway::TraitVector t;
    for (auto& x : t) x = u(rng);
    panel.traits[a] = t;
  }
  auto key = std::make_shared<gateway::AdjectiveKey>();
  std::vector<std::string> words;
  Matrix planted = Matrix::Zero(6 * kPerDim, 6);
  for (int d = 0; d < 6; ++d)
    for (int i = 0; i < kPerDim; ++i) {
      int polarity = i % 2 ? -1 : 1;
      words.push_back("d" + std::to_string(d) + "w" + std::to_string(i));
      (*key)[words.back()] = {d, polarity, 1.0};
      planted(static_cast<Eigen::Index>(words.size() - 1), d) = polarity;
    }
  panel.adjective_key = key;
  panel.noise_sd = noise;
  panel.seed = seed;
  gateway::Gateway gw(std::make_unique<gateway::SyntheticTransport>(panel), testing::fast_retry(), 4);

  testing::TempDir dir;
  auto pop = testing::make_population(kAgents);
  survey::AdjectiveLexicon lex(words);
  survey::SurveyOptions opt;
  opt.sync = false;
  survey::run_lexical_survey(pop, lex, gw, dir / "store.jsonl", opt);
  auto m = survey::build_matrix(survey::ResponseStore::read(dir / "store.jsonl").records, pop, lex);
  auto ips = ipsatise(m);
  auto pm = promax(varimax(extract_loadings(ips, 6)).solution);
  auto al = align_factors(planted, pm.pattern);
  double worst = 1;
  for (double g : al.congruence) worst = std::min(worst, std::abs(g));
  return worst;
}

std::string end_to_end(Check& c) {
  auto t0 = Clock::now();
  double clean = recovery(0.0, 5), noisy = recovery(1.0, 5);
  double s = seconds_since(t0);
  c.expect(clean >= 0.99, "noise 0 congruence " + fmt(clean));
  c.expect(noisy >= 0.90, "noise 1 congruence " + fmt(noisy));
  c.expect(s < 60, "runtime " + fmt(s) + " s");
  return "min |congruence| " + fmt(clean) + " (noise 0), " + fmt(noisy) + " (noise 1), " + fmt(s) + " s";
}

// 6 ----------------------------------------------------------------------------

std::string consistency(Check& c) {
  using psychometrics::consistency_score;
  c.expect(consistency_score(9, 2) == 0.875 && consistency_score(2, 9) == 0.875, "one-level discrepancy");
  c.expect(consistency_score(9, 3) == 0.75 && consistency_score(6, 6) == 0.75, "two-level discrepancy");
  for (int a = 1; a <= 9; ++a)
    for (int b = 1; b <= 9; ++b) {
      double s = consistency_score(a, b);
      c.expect(s == consistency_score(b, a), "asymmetric");
      c.expect((s == 1.0) == (a + b == 10), "maximum off the sum-to-10 line");
      c.expect(s >= 0 && s <= 1, "out of range");
    }
  return "anchors 0.875 / 0.75, 81 pairs";
}

// 7 ----------------------------------------------------------------------------

std::string reliability(Check& c) {
  std::vector<Matrix> cases;
  Matrix x(5, 3);
  x << 1, 2, 3, 2, 3, 3, 3, 3, 5, 4, 5, 4, 5, 4, 6;
  cases.push_back(x);
  Matrix neg(4, 2);
  neg << 1, 5, 2, 3, 3, 4, 4, 1;
  cases.push_back(neg);
  std::mt19937_64 rng(7);
  while (cases.size() < 20) {
    auto n = 3 + static_cast<Eigen::Index>(rng() % 8);
    auto k = 2 + static_cast<Eigen::Index>(rng() % 5);
    Matrix m = testing::random_ratings(rng, n, k, 0.0, 5);
    if ((m.rowwise().sum().array() - m.rowwise().sum().mean()).abs().maxCoeff() == 0) continue;
    cases.push_back(m);
  }
  double worst = 0;
  int negatives = 0;
  for (const auto& m : cases) {
    double got = psychometrics::cronbach_alpha(m), want = testing::alpha_oracle(m);
    worst = std::max(worst, std::abs(got - want));
    negatives += want < 0;
  }
  c.expect(std::abs(psychometrics::cronbach_alpha(neg) + 8.0) < 1e-12, "hand negative case");
  c.expect(worst < 1e-12, "oracle gap " + fmt(worst));
  c.expect(negatives > 0, "no negative case");
  Matrix same(6, 4);
  for (int i = 0; i < 6; ++i) same.row(i).setConstant(i * 0.7 + 1);
  c.expect(psychometrics::cronbach_alpha(same) == 1.0, "identical columns");
  return "20 matrices, max gap " + fmt(worst) + ", " + std::to_string(negatives) + " negative";
}

// 8 ----------------------------------------------------------------------------

// Synthetic answers with injected faults. Once `crash_after` calls have been
// made every further call throws, as if the process had died.
class FaultTransport final : public gateway::Transport {
public:
  FaultTransport(gateway::SyntheticPanel panel, std::set<std::string> flaky, std::set<std::string> filtered,
                 std::map<std::string, int>* calls, std::mutex* mu, long crash_after)
      : inner_(std::move(panel)), flaky_(std::move(flaky)), filtered_(std::move(filtered)), calls_(calls),
        mu_(mu), crash_after_(crash_after) {}

  gateway::Attempt send(const gateway::ChatRequest& r) override {
    {
      std::lock_guard lock(*mu_);
      if (made_ >= crash_after_) throw std::runtime_error("simulated crash");
      ++made_;
      int n = ++(*calls_)[r.request_key];
      if (flaky_.count(r.request_key) && n == 1) return {gateway::Outcome::TransportError, "reset", true};
    }
    if (filtered_.count(r.request_key)) return {gateway::Outcome::ContentFiltered, "", false};
    return inner_.send(r);
  }

private:
  gateway::SyntheticTransport inner_;
  std::set<std::string> flaky_, filtered_;
  std::map<std::string, int>* calls_;
  std::mutex* mu_;
  long crash_after_;
  long made_ = 0;
};

std::string durability(Check& c) {
  constexpr int kAgents = 20, kItems = 30;
  testing::TempDir dir;
  auto pop = testing::make_population(kAgents);
  std::vector<std::string> words;
  auto key = std::make_shared<gateway::AdjectiveKey>();
  for (int i = 0; i < kItems; ++i) {
    words.push_back("w" + std::to_string(i));
    (*key)[words.back()] = {i % 6, 1, 0.8};
  }
  survey::AdjectiveLexicon lex(words);
  gateway::SyntheticPanel panel;
  panel.adjective_key = key;
  panel.noise_sd = 0.5;
  for (long a = 0; a < kAgents; ++a) panel.traits[a] = {0.5, -0.5, 0.25, 0.0, -0.25, 1.0};
  auto cell = [](int a, int i) { return "lexical/" + std::to_string(a) + "/w" + std::to_string(i); };
  std::set<std::string> flaky, filtered;
  for (int t = 0; t < 10; ++t) flaky.insert(cell(2 * t, (7 * t) % kItems));
  filtered = {cell(1, 3), cell(9, 17), cell(19, 29)};

  std::map<std::string, int> calls;
  std::mutex mu;
  auto completed = [&] {
    std::set<std::string> done;
    for (const auto& r : survey::ResponseStore::read(dir / "store.jsonl").records)
      done.insert("lexical/" + std::to_string(r.agent_id) + "/" + r.item_id);
    return done;
  };

  int crashes = 0;
  std::set<std::string> done_before;
  for (long crash_after : {170L, 230L, 1L << 40}) {
    std::map<std::string, int> before;
    {
      std::lock_guard lock(mu);
      before = calls;
    }
    gateway::Gateway gw(std::make_unique<FaultTransport>(panel, flaky, filtered, &calls, &mu, crash_after),
                        testing::fast_retry(), 4);
    try {
      survey::run_lexical_survey(pop, lex, gw, dir / "store.jsonl");
    } catch (const std::runtime_error& e) {
      if (std::string(e.what()) != "simulated crash") throw;
      ++crashes;
    }
    for (const auto& k : done_before) c.expect(calls[k] == before[k], "completed cell re-requested: " + k);
    done_before = completed();
  }
  c.expect(crashes == 2, std::to_string(crashes) + " crashes");

  auto contents = survey::ResponseStore::read(dir / "store.jsonl");
  std::set<std::pair<long, std::string>> cells;
  std::size_t ok = 0, cf = 0;
  for (const auto& r : contents.records) {
    cells.insert({r.agent_id, r.item_id});
    ok += r.status == survey::ResponseStatus::Ok;
    cf += r.status == survey::ResponseStatus::ContentFiltered;
  }
  c.expect(contents.records.size() == kAgents * kItems, "record count " + std::to_string(contents.records.size()));
  c.expect(cells.size() == kAgents * kItems, "duplicate cells");
  c.expect(cf == 3, "content-filtered " + std::to_string(cf));
  int transport_errors = 0;
  for (const auto& k : flaky) transport_errors += calls[k] >= 2;
  c.expect(transport_errors == 10, "transport errors retried " + std::to_string(transport_errors));
  return std::to_string(contents.records.size()) + " records after " + std::to_string(crashes) + " crashes; " +
         std::to_string(ok) + " Ok, " + std::to_string(cf) + " ContentFiltered";
}

// 10 ---------------------------------------------------------------------------

std::string metrics(Check& c) {
  using namespace psychometrics;
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> w(-1, 1);
  auto random_list = [&](const std::string& prefix, int vocab) {
    TermList t;
    for (int i = 0; i < vocab; ++i)
      if (rng() % 3) t.push_back({prefix + std::to_string(i), w(rng)});
    if (t.empty()) t.push_back({prefix + "0", 0.5});
    return truncate_top(t, 30);
  };
  for (int trial = 0; trial < 500; ++trial) {
    auto a = random_list("t", 50), b = random_list("t", 50), d = random_list("u", 50);
    c.expect(std::abs(weighted_jaccard(a, b) - weighted_jaccard(b, a)) < 1e-15, "jaccard asymmetric");
    c.expect(std::abs(weighted_jaccard(a, a) - 1.0) < 1e-12, "identical lists");
    c.expect(weighted_jaccard(a, d) == 0.0, "disjoint lists");
  }

  EmbeddingTable table(5);
  std::normal_distribution<double> z;
  std::vector<std::string> vocab;
  for (int i = 0; i < 40; ++i) {
    Vector v(5);
    for (auto& x : v) x = z(rng);
    vocab.push_back("e" + std::to_string(i));
    table.insert(vocab.back(), v);
  }
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> a, b;
    std::sample(vocab.begin(), vocab.end(), std::back_inserter(a), 1 + static_cast<long>(rng() % 8), rng);
    std::sample(vocab.begin(), vocab.end(), std::back_inserter(b), 1 + static_cast<long>(rng() % 8), rng);
    c.expect(std::abs(symmetric_semantic_similarity(a, b, table).value -
                      symmetric_semantic_similarity(b, a, table).value) < 1e-15,
             "similarity asymmetric");
  }
  return "500 list triples, 200 set pairs";
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<std::string(Check&)> run;
  };
  std::vector<Criterion> criteria = {
      {1, "ipsatisation contract", ipsatisation},
      {2, "spectrum correctness", spectrum},
      {3, "varimax optimality", varimax_optimality},
      {4, "promax sanity", promax_sanity},
      {5, "end-to-end recovery", end_to_end},
      {6, "consistency anchors", consistency},
      {7, "reliability oracle", reliability},
      {8, "survey durability", durability},
      {9, "published-number reproduction", nullptr},
      {10, "metric properties", metrics},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    if (!cr.run) {
      std::cout << "criterion " << cr.id << ": NOT-RUN  " << cr.name << " (released response dataset not available)\n";
      continue;
    }
    Check c;
    std::string detail;
    try {
      detail = cr.run(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    std::cout << "criterion " << cr.id << ": " << (c.ok() ? "PASS" : "FAIL") << "  " << cr.name << " ("
              << (c.ok() ? detail : c.failure()) << ")\n";
    failed += !c.ok();
  }
  return failed ? 1 : 0;
}
