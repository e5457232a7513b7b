#include "lexpsy/cli.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <set>

#include <CLI11.hpp>

#include "lexpsy/error.hpp"
#include "lexpsy/factors.hpp"
#include "lexpsy/gateway.hpp"
#include "lexpsy/persona.hpp"
#include "lexpsy/psychometrics.hpp"
#include "lexpsy/report.hpp"
#include "lexpsy/survey.hpp"
#include "lexpsy/text.hpp"

namespace lexpsy::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config

RunConfig parse_config(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw Error(ErrorKind::Config, "config must be a JSON object");
  RunConfig c;
  c.base_dir = base_dir;
  auto path = [&](const char* key) -> fs::path {
    if (!j.contains(key) || j.at(key).is_null()) return {};
    fs::path p(j.at(key).get<std::string>());
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  };
  try {
    c.backend = j.value("backend", json::object());
    c.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("out")) c.out = path("out");
    c.population = path("population");
    c.population_name = j.value("population_name", std::string{});
    c.census = path("census");
    c.occupations = path("occupations");
    c.total_agents = j.value("total_agents", 0);
    c.substantive_flaw = j.value("substantive_flaw", false);
    c.lexicon = path("lexicon");
    c.lexical_store = path("lexical_store");
    c.pir_items = path("pir_items");
    c.pir_key = path("pir_key");
    c.pir_store = path("pir_store");
    c.antonyms = path("antonyms");
    c.embeddings = path("embeddings");
    c.reference_loadings = path("reference_loadings");
    c.workers = j.value("workers", 0);
    c.sync = j.value("sync", true);

    auto a = j.value("analysis", json::object());
    auto& p = c.analysis;
    p.k_min = a.value("k_min", p.k_min);
    p.k_max = a.value("k_max", p.k_max);
    if (a.contains("k") && !a.at("k").is_null()) p.k = a.at("k").get<int>();
    p.promax_power = a.value("promax_power", p.promax_power);
    p.top_n = a.value("top_n", p.top_n);
    p.drop_items = a.value("drop_items", std::vector<std::string>{});
    p.drop_zero_variance = a.value("drop_zero_variance", true);
    auto mode = a.value("alpha_mode", std::string("keyed"));
    if (mode != "keyed" && mode != "unkeyed") throw Error(ErrorKind::Config, "alpha_mode must be keyed or unkeyed");
    p.keyed_alpha = mode == "keyed";
    p.varimax_tol = a.value("varimax_tol", p.varimax_tol);
    p.varimax_max_iter = a.value("varimax_max_iter", p.varimax_max_iter);
    if (a.contains("score_top_n") && !a.at("score_top_n").is_null()) p.score_top_n = a.at("score_top_n").get<int>();
    p.baseline_set_size = a.value("baseline_set_size", p.baseline_set_size);
    p.baseline_iterations = a.value("baseline_iterations", p.baseline_iterations);
    if (a.contains("validity_mapping")) {
      for (const auto& [factor, dim] : a.at("validity_mapping").items())
        p.validity_mapping.emplace_back(std::stoi(factor) - 1,
                                        psychometrics::dimension_from_letter(dim.get<std::string>()));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, std::string("malformed config: ") + e.what());
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(text::read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, "bad config " + path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

namespace {

const fs::path& require(const fs::path& p, const char* what) {
  if (p.empty()) throw Error(ErrorKind::Config, std::string("config is missing '") + what + "'");
  if (!fs::exists(p)) throw Error(ErrorKind::Config, std::string(what) + " not found: " + p.string());
  return p;
}

// Outputs are staged and moved into place only when the command succeeds.
class OutputBundle {
public:
  OutputBundle(fs::path dir, const std::string& command) : dir_(std::move(dir)) {
    staging_ = dir_ / (".staging-" + command);
    fs::remove_all(staging_);
    fs::create_directories(staging_);
  }
  ~OutputBundle() {
    std::error_code ec;
    if (!committed_) fs::remove_all(staging_, ec);
  }

  void write(const std::string& name, const std::string& content) {
    text::write_file_atomic(staging_ / name, content);
    names_.push_back(name);
  }
  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  void commit() {
    for (const auto& n : names_) fs::rename(staging_ / n, dir_ / n);
    fs::remove_all(staging_);
    committed_ = true;
  }

private:
  fs::path dir_;
  fs::path staging_;
  std::vector<std::string> names_;
  bool committed_ = false;
};

std::vector<std::string> factor_labels(int k) {
  std::vector<std::string> out;
  for (int j = 1; j <= k; ++j) out.push_back("F" + std::to_string(j));
  return out;
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

struct LexicalData {
  std::optional<persona::Population> population;
  survey::AdjectiveLexicon lexicon;
  survey::ResponseMatrix raw;
  survey::ResponseMatrix filtered;
  survey::ExclusionReport exclusions;
  std::size_t records = 0;
  std::map<std::string, std::size_t> status_counts;
};

std::vector<long> agent_order(const std::optional<persona::Population>& pop,
                              const std::vector<survey::ResponseRecord>& records) {
  std::vector<long> ids;
  if (pop) {
    for (const auto& a : pop->agents) ids.push_back(a.agent_id);
    return ids;
  }
  std::set<long> seen;
  for (const auto& r : records) seen.insert(r.agent_id);
  return {seen.begin(), seen.end()};
}

LexicalData load_lexical(const RunConfig& c, bool need_population) {
  LexicalData d;
  d.lexicon = survey::AdjectiveLexicon::load(require(c.lexicon, "lexicon"));
  if (need_population || !c.population.empty())
    d.population = persona::load_population(require(c.population, "population"));
  auto contents = survey::ResponseStore::read(require(c.lexical_store, "lexical_store"));
  if (contents.header.item_hash != d.lexicon.hash())
    throw Error(ErrorKind::Config, "lexical store was collected with a different lexicon");
  d.records = contents.records.size();
  for (const auto& r : contents.records) ++d.status_counts[survey::to_string(r.status)];
  d.raw = survey::build_matrix(contents.records, agent_order(d.population, contents.records),
                               d.lexicon.adjectives(), "lexical9");
  if (d.raw.values.size() == 0 || d.raw.masked_count() == static_cast<std::size_t>(d.raw.values.size()))
    throw Error(ErrorKind::EmptyData, "no usable responses");
  auto [filtered, excl] = survey::filter_items(d.raw, c.analysis.drop_items, c.analysis.drop_zero_variance);
  d.filtered = std::move(filtered);
  d.exclusions = std::move(excl);
  if (d.filtered.values.cols() < 2 || d.filtered.values.rows() < 2)
    throw Error(ErrorKind::EmptyData, "no usable responses after item filtering");
  return d;
}

factors::VarimaxOptions varimax_options(const AnalysisParams& p) {
  return factors::VarimaxOptions{p.varimax_tol, p.varimax_max_iter, true};
}

factors::ReliabilityFn reliability_fn(const factors::IpsatisedMatrix& ips, const AnalysisParams& p) {
  return [&ips, &p](const factors::FactorSolution& s, int j) {
    return psychometrics::factor_alpha(ips.values, s, j, p.top_n, p.keyed_alpha);
  };
}

struct Solved {
  factors::SweepReport sweep;
  int k = 0;
  factors::FactorSolution solution;
};

Solved solve(const factors::IpsatisedMatrix& ips, const AnalysisParams& p) {
  Solved s;
  int max_k = static_cast<int>(eigen_spectrum(ips).positive_count());
  int k_max = std::min(p.k_max, max_k);
  s.sweep = factors::solution_sweep(ips, p.k_min, k_max, reliability_fn(ips, p), p.promax_power, varimax_options(p));
  s.k = p.k.value_or(s.sweep.best_k);
  auto unrotated = factors::extract_loadings(ips, s.k);
  s.solution = factors::promax(factors::varimax(unrotated, varimax_options(p)).solution, p.promax_power);
  return s;
}

json exclusions_json(const survey::ExclusionReport& r) {
  json arr = json::array();
  for (const auto& e : r) arr.push_back({{"item", e.item}, {"reason", e.reason}});
  return arr;
}

void write_scree(OutputBundle& out, const factors::EigenSpectrum& spec) {
  std::string csv = "component,eigenvalue,explained_pct,cumulative_pct\n";
  double cum = 0;
  for (Eigen::Index i = 0; i < spec.eigenvalues.size(); ++i) {
    double pct = 100.0 * spec.eigenvalues[i] / spec.total_variance;
    cum += pct;
    csv += text::csv_line({std::to_string(i + 1), text::format_double(spec.eigenvalues[i]),
                           text::format_double(pct), text::format_double(cum)});
  }
  out.write("scree.csv", csv);
  out.write("scree.svg", report::scree_svg("Scree plot of unrotated eigenvalues", spec.eigenvalues));
}

}  // namespace

// ---------------------------------------------------------------------------
// Commands

void cmd_generate(const RunConfig& c) {
  auto targets = persona::load_census_csv(require(c.census, "census"), c.total_agents);
  auto pool = persona::load_occupation_pool(require(c.occupations, "occupations"));
  if (c.population.empty()) throw Error(ErrorKind::Config, "config is missing 'population' (output path)");
  auto gw = gateway::make_gateway(c.backend, c.base_dir);
  persona::GenerationOptions opt;
  opt.name = c.population_name.empty() ? c.population.stem().string() : c.population_name;
  opt.seed = c.seed;
  opt.substantive_flaw = c.substantive_flaw;
  opt.workers = c.workers;
  persona::GenerationLog log;
  auto pop = persona::generate_population(targets, pool, *gw, opt, &log);
  fs::create_directories(c.out);
  OutputBundle out(c.out, "generate");
  auto stats = persona::to_json(persona::population_stats(pop));
  stats["generation_attempts"] = log.attempts;
  out.write_json("population_stats.json", stats);
  persona::save_population(c.population, pop);
  out.commit();
}

void cmd_survey(const RunConfig& c, const std::string& which) {
  auto pop = persona::load_population(require(c.population, "population"));
  auto gw = gateway::make_gateway(c.backend, c.base_dir);
  survey::SurveyOptions opt;
  opt.workers = c.workers;
  opt.sync = c.sync;
  survey::SurveyRunSummary s;
  if (which == "lexical") {
    auto lex = survey::AdjectiveLexicon::load(require(c.lexicon, "lexicon"));
    if (c.lexical_store.empty()) throw Error(ErrorKind::Config, "config is missing 'lexical_store'");
    s = survey::run_lexical_survey(pop, lex, *gw, c.lexical_store, opt);
  } else if (which == "pir") {
    auto items = survey::load_questionnaire(require(c.pir_items, "pir_items"));
    if (c.pir_store.empty()) throw Error(ErrorKind::Config, "config is missing 'pir_store'");
    s = survey::run_pir_survey(pop, items, *gw, c.pir_store, opt);
  } else {
    throw Error(ErrorKind::Config, "survey must be 'lexical' or 'pir'");
  }
  fs::create_directories(c.out);
  OutputBundle out(c.out, "survey-" + which);
  out.write_json("survey_" + which + "_run.json", {{"issued", s.issued},
                                                   {"skipped", s.skipped},
                                                   {"ok", s.ok},
                                                   {"content_filtered", s.content_filtered},
                                                   {"missing", s.missing},
                                                   {"unparseable", s.unparseable}});
  out.commit();
}

void cmd_sweep(const RunConfig& c) {
  auto d = load_lexical(c, false);
  auto ips = factors::ipsatise(d.filtered);
  fs::create_directories(c.out);
  OutputBundle out(c.out, "sweep");
  auto spec = factors::eigen_spectrum(ips);
  write_scree(out, spec);
  int k_max = std::min(c.analysis.k_max, static_cast<int>(spec.positive_count()));
  auto sweep = factors::solution_sweep(ips, c.analysis.k_min, k_max, reliability_fn(ips, c.analysis),
                                       c.analysis.promax_power, varimax_options(c.analysis));
  auto j = factors::to_json(sweep);
  j["alpha_mode"] = c.analysis.keyed_alpha ? "keyed" : "unkeyed";
  out.write_json("sweep.json", j);
  out.commit();
}

void cmd_analyze(const RunConfig& c) {
  const auto& p = c.analysis;
  auto d = load_lexical(c, false);
  auto ips = factors::ipsatise(d.filtered);
  auto spec = factors::eigen_spectrum(ips);
  auto solved = solve(ips, p);
  const auto& sol = solved.solution;
  const int k = solved.k;
  const std::string tag = "k" + std::to_string(k);
  auto labels = factor_labels(k);

  fs::create_directories(c.out);
  OutputBundle out(c.out, "analyze");
  write_scree(out, spec);
  auto sweep_json = factors::to_json(solved.sweep);
  sweep_json["alpha_mode"] = p.keyed_alpha ? "keyed" : "unkeyed";
  out.write_json("sweep.json", sweep_json);

  std::string excl = "item,reason\n";
  for (const auto& e : d.exclusions) excl += text::csv_line({e.item, e.reason});
  out.write("exclusions.csv", excl);

  out.write("loadings_" + tag + ".csv", report::matrix_csv("item", sol.item_ids, labels, sol.pattern));
  out.write("factor_correlation_" + tag + ".csv", report::matrix_csv("factor", labels, labels, sol.factor_correlation));

  std::vector<double> alphas;
  std::string top = "factor,rank,adjective,loading\n";
  std::string alpha_csv = "factor,alpha,explained_variance_pct\n";
  for (int j = 0; j < k; ++j) {
    auto terms = psychometrics::factor_terms(sol, j, static_cast<std::size_t>(p.top_n));
    for (std::size_t r = 0; r < terms.size(); ++r)
      top += text::csv_line({labels[static_cast<std::size_t>(j)], std::to_string(r + 1), terms[r].term,
                             text::format_double(terms[r].loading)});
    double a = psychometrics::factor_alpha(ips.values, sol, j, p.top_n, p.keyed_alpha);
    alphas.push_back(a);
    alpha_csv += text::csv_line({labels[static_cast<std::size_t>(j)], text::format_double(a),
                                 text::format_double(sol.explained_variance_pct[j])});
  }
  out.write("top_terms_" + tag + ".csv", top);
  out.write("alpha_" + tag + ".csv", alpha_csv);

  auto scores = factors::factor_scores(ips, sol, p.score_top_n);
  std::vector<std::string> agent_labels;
  for (long id : ips.agent_ids) agent_labels.push_back(std::to_string(id));
  out.write("scores_" + tag + ".csv", report::matrix_csv("agent_id", agent_labels, labels, scores));

  json summary;
  std::optional<psychometrics::ReferenceLoadings> reference;
  if (!c.reference_loadings.empty()) {
    reference = psychometrics::load_reference_loadings(require(c.reference_loadings, "reference_loadings"));
    std::vector<std::string> dims;
    for (const auto& [dim, _] : *reference) dims.push_back(dim);
    Eigen::MatrixXd wj(k, static_cast<Eigen::Index>(dims.size()));
    Eigen::MatrixXd wj_unsigned(k, static_cast<Eigen::Index>(dims.size()));
    for (int j = 0; j < k; ++j) {
      auto terms = psychometrics::factor_terms(sol, j, static_cast<std::size_t>(p.top_n));
      for (std::size_t r = 0; r < dims.size(); ++r) {
        const auto& ref = reference->at(dims[r]);
        wj(j, static_cast<Eigen::Index>(r)) = psychometrics::weighted_jaccard(terms, ref, static_cast<std::size_t>(p.top_n));
        wj_unsigned(j, static_cast<Eigen::Index>(r)) =
            psychometrics::weighted_jaccard_unsigned(terms, ref, static_cast<std::size_t>(p.top_n));
      }
    }
    out.write("jaccard_" + tag + ".csv", report::matrix_csv("factor", labels, dims, wj));
    out.write("jaccard_unsigned_" + tag + ".csv", report::matrix_csv("factor", labels, dims, wj_unsigned));
    out.write("jaccard_" + tag + ".svg", report::heatmap_svg("Weighted Jaccard similarity", labels, dims, wj));
  }

  if (!c.embeddings.empty()) {
    std::vector<std::string> vocab = d.lexicon.adjectives();
    if (reference)
      for (const auto& [_, terms] : *reference)
        for (const auto& t : terms) vocab.push_back(t.term);
    auto emb = psychometrics::load_embeddings(require(c.embeddings, "embeddings"), vocab);
    auto resolvable = [&](const psychometrics::TermList& terms) {
      std::vector<std::string> out_terms;
      for (const auto& t : terms)
        if (emb.table.contains(t.term)) out_terms.push_back(t.term);
      return out_terms;
    };
    std::vector<std::vector<std::string>> factor_sets;
    std::string sim = "factor,within_similarity,within_directional,terms\n";
    for (int j = 0; j < k; ++j) {
      factor_sets.push_back(resolvable(psychometrics::factor_terms(sol, j, static_cast<std::size_t>(p.top_n))));
      const auto& set = factor_sets.back();
      std::string w = "", wd = "";
      if (!set.empty()) {
        w = text::format_double(psychometrics::within_set_similarity(set, emb.table).value);
        wd = text::format_double(psychometrics::within_set_similarity_directional(set, emb.table).value);
      }
      sim += text::csv_line({labels[static_cast<std::size_t>(j)], w, wd, std::to_string(set.size())});
    }
    out.write("similarity_" + tag + ".csv", sim);
    auto baseline = psychometrics::random_baseline_similarity(d.filtered.item_ids, emb.table, p.baseline_set_size,
                                                              p.baseline_iterations, c.seed);
    summary["random_baseline_similarity"] = {{"mean", baseline.mean}, {"sd", baseline.sd},
                                             {"set_size", p.baseline_set_size}, {"iterations", p.baseline_iterations}};
    summary["embedding_terms_composed"] = emb.composed;
    summary["embedding_terms_missing"] = emb.missing;
    if (reference) {
      std::vector<std::string> dims;
      Eigen::MatrixXd cross(k, static_cast<Eigen::Index>(reference->size()));
      Eigen::Index r = 0;
      for (const auto& [dim, terms] : *reference) {
        dims.push_back(dim);
        auto ref_set = resolvable(terms);
        for (int j = 0; j < k; ++j)
          cross(j, r) = factor_sets[static_cast<std::size_t>(j)].empty() || ref_set.empty()
                            ? std::nan("")
                            : psychometrics::symmetric_semantic_similarity(factor_sets[static_cast<std::size_t>(j)],
                                                                           ref_set, emb.table)
                                  .value;
        ++r;
      }
      out.write("similarity_reference_" + tag + ".csv", report::matrix_csv("factor", labels, dims, cross));
      out.write("similarity_reference_" + tag + ".svg",
                report::heatmap_svg("Symmetric semantic similarity", labels, dims, cross));
    }
  }

  summary["agents"] = d.filtered.agent_ids.size();
  summary["items_surveyed"] = d.raw.item_ids.size();
  summary["items_analysed"] = d.filtered.item_ids.size();
  summary["records"] = d.records;
  summary["status_counts"] = d.status_counts;
  summary["masked_cells_analysed"] = d.filtered.masked_count();
  summary["exclusions"] = exclusions_json(d.exclusions);
  summary["degenerate_agents"] = ips.degenerate_agents;
  summary["constant_items"] = ips.constant_items;
  summary["ipsatisation"] = {{"order", "within-then-between"},
                             {"sd", "n-1"},
                             {"masked_cells", "item-mean imputation after the within step"}};
  summary["flagged_k"] = k;
  summary["sweep_best_k"] = solved.sweep.best_k;
  summary["rotation"] = "promax";
  summary["promax_power"] = p.promax_power;
  summary["explained_variance_pct"] = to_vec(sol.explained_variance_pct);
  summary["cumulative_explained_variance_pct"] = sol.explained_variance_pct.sum();
  summary["alpha_mode"] = p.keyed_alpha ? "keyed" : "unkeyed";
  summary["alphas"] = alphas;
  summary["average_alpha"] = std::accumulate(alphas.begin(), alphas.end(), 0.0) / k;
  out.write_json("summary.json", summary);
  out.commit();
}

void cmd_validity(const RunConfig& c) {
  const auto& p = c.analysis;
  auto d = load_lexical(c, true);
  auto ips = factors::ipsatise(d.filtered);
  auto solved = solve(ips, p);
  auto scores = factors::factor_scores(ips, solved.solution, p.score_top_n);

  auto items = survey::load_questionnaire(require(c.pir_items, "pir_items"));
  auto key = psychometrics::load_scale_key(require(c.pir_key, "pir_key"));
  auto contents = survey::ResponseStore::read(require(c.pir_store, "pir_store"));
  if (contents.header.item_hash != survey::questionnaire_hash(items))
    throw Error(ErrorKind::Config, "questionnaire store was collected with different items");
  std::vector<std::string> item_ids;
  for (const auto& it : items) item_ids.push_back(it.id);
  auto pir_matrix = survey::build_matrix(contents.records, ips.agent_ids, item_ids, "pir5");
  auto dims = psychometrics::score_pir(pir_matrix, key);

  // Agents lacking any dimension score are dropped from both tables.
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < dims.scores.rows(); ++i)
    if (!dims.scores.row(i).array().isNaN().any()) rows.push_back(i);
  if (rows.size() < 3) throw Error(ErrorKind::EmptyData, "no usable questionnaire responses");
  Eigen::MatrixXd lex(static_cast<Eigen::Index>(rows.size()), scores.cols());
  Eigen::MatrixXd pir(static_cast<Eigen::Index>(rows.size()), 6);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    lex.row(static_cast<Eigen::Index>(r)) = scores.row(rows[r]);
    pir.row(static_cast<Eigen::Index>(r)) = dims.scores.row(rows[r]);
  }

  auto mapping = p.validity_mapping;
  if (mapping.empty()) {
    auto full = psychometrics::convergent_validity(lex, pir, {});
    std::vector<bool> used_f(static_cast<std::size_t>(lex.cols())), used_d(6);
    for (int step = 0; step < std::min<int>(6, static_cast<int>(lex.cols())); ++step) {
      double best = -1;
      int bf = -1, bd = -1;
      for (int dd = 0; dd < 6; ++dd)
        for (int f = 0; f < lex.cols(); ++f) {
          double r = full.cross_r(dd, f);
          if (used_d[static_cast<std::size_t>(dd)] || used_f[static_cast<std::size_t>(f)] || std::isnan(r)) continue;
          if (std::abs(r) > best) {
            best = std::abs(r);
            bf = f;
            bd = dd;
          }
        }
      if (bf < 0) break;
      used_f[static_cast<std::size_t>(bf)] = used_d[static_cast<std::size_t>(bd)] = true;
      mapping.emplace_back(bf, bd);
    }
    std::sort(mapping.begin(), mapping.end(), [](auto a, auto b) { return a.second < b.second; });
  }
  auto table = psychometrics::convergent_validity(lex, pir, mapping);
  auto labels = factor_labels(static_cast<int>(lex.cols()));
  std::vector<std::string> dim_labels(psychometrics::kHexacoDimensions.begin(), psychometrics::kHexacoDimensions.end());

  fs::create_directories(c.out);
  OutputBundle out(c.out, "validity");
  auto j = psychometrics::to_json(table);
  j["k"] = solved.k;
  j["agents"] = rows.size();
  j["mapping_source"] = p.validity_mapping.empty() ? "greedy-max-abs-r" : "config";
  out.write_json("validity.json", j);
  std::string t1 = "dimension,factor,r,p\n";
  for (std::size_t i = 0; i < mapping.size(); ++i)
    t1 += text::csv_line({dim_labels[static_cast<std::size_t>(mapping[i].second)],
                          labels[static_cast<std::size_t>(mapping[i].first)], text::format_double(table.mapped[i].r),
                          psychometrics::format_p(table.mapped[i].p)});
  out.write("validity_table.csv", t1);
  out.write("validity_cross.csv", report::matrix_csv("dimension", dim_labels, labels, table.cross_r));
  out.write("validity_cross.svg", report::heatmap_svg("Lexical factors vs questionnaire dimensions (r)", dim_labels,
                                                      labels, table.cross_r));
  std::vector<std::string> agent_labels;
  for (long id : dims.agent_ids) agent_labels.push_back(std::to_string(id));
  out.write("pir_scores.csv", report::matrix_csv("agent_id", agent_labels, dim_labels, dims.scores));
  out.commit();
}

void cmd_consistency(const RunConfig& c) {
  auto d = load_lexical(c, true);
  auto pairs = psychometrics::load_antonym_pairs(require(c.antonyms, "antonyms"));
  auto rep = psychometrics::consistency_report(d.raw, pairs);
  auto bio = psychometrics::biography_length_correlation(rep.per_agent, *d.population);

  fs::create_directories(c.out);
  OutputBundle out(c.out, "consistency");
  auto j = psychometrics::to_json(rep);
  j["biography_length"] = {{"r", bio.correlation.r},
                           {"p", psychometrics::format_p(bio.correlation.p)},
                           {"n", bio.correlation.n}};
  out.write_json("consistency.json", j);
  std::string pairs_csv = "adjective_a,adjective_b,mean,agents\n";
  for (const auto& pc : rep.per_pair)
    pairs_csv += text::csv_line({pc.pair.first, pc.pair.second, std::isnan(pc.mean) ? "" : text::format_double(pc.mean),
                                 std::to_string(pc.agents)});
  out.write("consistency_pairs.csv", pairs_csv);
  std::string agents_csv = "agent_id,mean,pairs\n";
  for (const auto& a : rep.per_agent)
    agents_csv += text::csv_line({std::to_string(a.agent_id), std::isnan(a.mean) ? "" : text::format_double(a.mean),
                                  std::to_string(a.pairs)});
  out.write("consistency_agents.csv", agents_csv);
  std::string scatter = "agent_id,biography_length,consistency\n";
  for (std::size_t i = 0; i < bio.scatter.size(); ++i)
    scatter += text::csv_line({std::to_string(bio.agent_ids[i]), text::format_double(bio.scatter[i].first),
                               text::format_double(bio.scatter[i].second)});
  out.write("bio_length.csv", scatter);
  out.write("bio_length.svg", report::scatter_svg("Agent consistency vs biography length", bio.scatter,
                                                  "Biography length (characters)", "Mean consistency"));
  out.commit();
}

// ---------------------------------------------------------------------------

namespace {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyData:
    case ErrorKind::EmptySet:
      return kNoData;
    case ErrorKind::Numerical:
    case ErrorKind::DegenerateScale:
    case ErrorKind::ConstantColumn:
    case ErrorKind::Shape:
      return kNumericalFailure;
    default:
      return kConfigError;
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Lexical personality-structure workbench for generative-agent populations"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--seed", seed, "Override the configured seed");
  app.add_option("--out", out_dir, "Override the output directory");

  auto* gen = app.add_subcommand("generate", "Generate a census-aligned population");
  auto* srv = app.add_subcommand("survey", "Administer a survey through the configured backend");
  std::string which;
  srv->add_option("which", which, "lexical or pir")->required()->check(CLI::IsMember({"lexical", "pir"}));
  auto* ana = app.add_subcommand("analyze", "Factor analysis and report bundle");
  auto* val = app.add_subcommand("validity", "Convergent validity against the questionnaire");
  auto* con = app.add_subcommand("consistency", "Antonym-pair consistency report");
  auto* swp = app.add_subcommand("sweep", "Reliability sweep over factor counts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    auto cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!out_dir.empty()) cfg.out = out_dir;
    if (gen->parsed()) cmd_generate(cfg);
    else if (srv->parsed()) cmd_survey(cfg, which);
    else if (ana->parsed()) cmd_analyze(cfg);
    else if (val->parsed()) cmd_validity(cfg);
    else if (con->parsed()) cmd_consistency(cfg);
    else if (swp->parsed()) cmd_sweep(cfg);
    return kOk;
  } catch (const Error& e) {
    err << "lexpsy: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "lexpsy: " << e.what() << "\n";
    return kConfigError;
  }
}

}  // namespace lexpsy::cli
