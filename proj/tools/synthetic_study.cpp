#include "synthetic_study.hpp"

#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "lexpsy/text.hpp"

namespace lexpsy::study {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kLetters = "HEXACO";

struct Adjective {
  std::string name;
  int dimension;
  int polarity;
  double strength;
};

std::vector<Adjective> adjectives() {
  std::vector<Adjective> out;
  for (int d = 0; d < 6; ++d) {
    int count = d < 5 ? 40 : 10;
    for (int i = 0; i < count; ++i)
      out.push_back({std::string(1, static_cast<char>(kLetters[d] | 0x20)) + "-trait-" + std::to_string(i), d,
                     i % 2 ? -1 : 1, d < 5 ? 0.6 : 1.0});
  }
  return out;
}

// Centred, mutually orthogonal trait columns scaled into [-1, 1].
Eigen::MatrixXd traits(int agents, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Eigen::MatrixXd t(agents, 6);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = z(rng);
  t = t.rowwise() - t.colwise().mean();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(t);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(agents, 6);
  return q / q.cwiseAbs().maxCoeff();
}

}  // namespace

void write_study(const fs::path& dir, const StudyOptions& o) {
  fs::create_directories(dir);
  auto adj = adjectives();

  text::write_file_atomic(dir / "census.csv", "group,proportion\nNorth,0.4\nSouth,0.35\nCoast,0.25\n");
  text::write_file_atomic(dir / "occupations.json",
                          json{{"North", {"Nurse", "Carpenter", "Accountant"}},
                               {"South", {"Teacher", "Farmer", "Electrician"}},
                               {"Coast", {"Fisher", "Chef", "Librarian"}}}
                              .dump(2));

  auto t = traits(o.agents, o.seed);
  json tj = json::object();
  for (int a = 0; a < o.agents; ++a) {
    json row = json::array();
    for (int d = 0; d < 6; ++d) row.push_back(t(a, d));
    tj[std::to_string(a)] = row;
  }
  text::write_file_atomic(dir / "traits.json", tj.dump());

  json key = json::object();
  std::string lexicon, reference = "dimension,adjective,loading\n", antonyms = "adjective_a,adjective_b\n";
  for (const auto& a : adj) {
    key[a.name] = {{"dimension", std::string(1, kLetters[a.dimension])}, {"polarity", a.polarity}, {"strength", a.strength}};
    lexicon += a.name + "\n";
    reference += text::csv_line({std::string(1, kLetters[a.dimension]), a.name,
                                 text::format_double(0.5 * a.polarity * a.strength)});
  }
  for (std::size_t i = 0; i + 1 < adj.size(); i += 2)
    if (adj[i].dimension == adj[i + 1].dimension && i % 8 == 0) antonyms += text::csv_line({adj[i].name, adj[i + 1].name});
  text::write_file_atomic(dir / "adjective_key.json", key.dump(1));
  text::write_file_atomic(dir / "lexicon.txt", lexicon);
  text::write_file_atomic(dir / "reference_loadings.csv", reference);
  text::write_file_atomic(dir / "antonyms.csv", antonyms);

  // Word vectors cluster by dimension and flip with polarity.
  std::mt19937_64 rng(o.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> z(0.0, 0.35);
  std::string vectors = std::to_string(adj.size()) + " " + std::to_string(o.embedding_dim) + "\n";
  for (const auto& a : adj) {
    vectors += a.name;
    for (int k = 0; k < o.embedding_dim; ++k) {
      double v = z(rng) + (k == a.dimension ? 1.0 : 0.0) + (k == 6 ? 0.5 * a.polarity : 0.0);
      vectors += " " + text::format_double(v);
    }
    vectors += "\n";
  }
  text::write_file_atomic(dir / "vectors.txt", vectors);

  std::string items, item_key = "item_id,dimension,reversed\n";
  int id = 1;
  for (int r = 0; r < o.pir_items_per_dimension; ++r)
    for (int d = 0; d < 6; ++d, ++id) {
      items += "Statement " + std::to_string(id) + " about trait " + kLetters[d] + ".\n";
      item_key += text::csv_line({std::to_string(id), std::string(1, kLetters[d]), r % 2 ? "1" : "0"});
    }
  text::write_file_atomic(dir / "pir_items.txt", items);
  text::write_file_atomic(dir / "pir_key.csv", item_key);

  json config = {
      {"seed", o.seed},
      {"out", "out"},
      {"backend",
       {{"kind", "synthetic"},
        {"traits", "traits.json"},
        {"adjective_key", "adjective_key.json"},
        {"item_key", "pir_key.csv"},
        {"noise_sd", o.noise_sd},
        {"seed", o.seed},
        {"max_in_flight", 4},
        {"base_delay_ms", 1},
        {"max_delay_ms", 4}}},
      {"census", "census.csv"},
      {"occupations", "occupations.json"},
      {"total_agents", o.agents},
      {"population", "population.json"},
      {"population_name", "synthetic"},
      {"lexicon", "lexicon.txt"},
      {"lexical_store", "lexical.jsonl"},
      {"pir_items", "pir_items.txt"},
      {"pir_key", "pir_key.csv"},
      {"pir_store", "pir.jsonl"},
      {"antonyms", "antonyms.csv"},
      {"embeddings", "vectors.txt"},
      {"reference_loadings", "reference_loadings.csv"},
      {"sync", false},
      {"analysis", {{"k_min", 3}, {"k_max", 9}, {"top_n", 10}, {"baseline_set_size", 10}, {"baseline_iterations", 10}}}};
  text::write_file_atomic(dir / "config.json", config.dump(2) + "\n");
}

}  // namespace lexpsy::study
