#include "lexpsy/survey.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "lexpsy/error.hpp"
#include "lexpsy/parallel.hpp"
#include "lexpsy/text.hpp"

namespace lexpsy::survey {

AdjectiveLexicon::AdjectiveLexicon(const std::vector<std::string>& raw) {
  std::set<std::string> seen;
  for (const auto& r : raw) {
    auto a = text::to_lower(text::trim(r));
    if (a.empty() || a.front() == '#') continue;
    if (seen.insert(a).second) adjectives_.push_back(a);
  }
}

AdjectiveLexicon AdjectiveLexicon::load(const std::filesystem::path& path) {
  std::vector<std::string> lines;
  std::istringstream in(text::read_file(path));
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return AdjectiveLexicon(lines);
}

bool AdjectiveLexicon::contains(const std::string& adjective) const {
  return std::find(adjectives_.begin(), adjectives_.end(), adjective) != adjectives_.end();
}

std::string AdjectiveLexicon::hash() const {
  std::uint64_t h = text::fnv1a64("");
  for (const auto& a : adjectives_) h = text::fnv1a64(a + "\n", h);
  return text::hex64(h);
}

std::vector<QuestionItem> load_questionnaire(const std::filesystem::path& path) {
  std::vector<QuestionItem> items;
  if (path.extension() == ".csv") {
    auto rows = text::read_csv(path);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (i == 0 && !r.empty() && text::to_lower(text::trim(r[0])) == "item_id") continue;
      if (r.size() < 2) throw Error(ErrorKind::Config, "questionnaire row needs item_id,text");
      items.push_back({text::trim(r[0]), text::trim(r[1])});
    }
  } else {
    std::istringstream in(text::read_file(path));
    int n = 0;
    for (std::string line; std::getline(in, line);) {
      auto t = text::trim(line);
      if (t.empty()) continue;
      items.push_back({std::to_string(++n), t});
    }
  }
  std::set<std::string> ids;
  for (const auto& it : items)
    if (!ids.insert(it.id).second) throw Error(ErrorKind::Config, "duplicate item id " + it.id);
  return items;
}

std::string questionnaire_hash(const std::vector<QuestionItem>& items) {
  std::uint64_t h = text::fnv1a64("");
  for (const auto& it : items) h = text::fnv1a64(it.id + "\t" + it.text + "\n", h);
  return text::hex64(h);
}

// ---------------------------------------------------------------------------

namespace {

std::string character_preamble(const persona::Biography& bio) {
  return "You are a character in a simulation.\n"
         "Answer the next question in character.\n"
         "Here is your character bio (in JSON): " +
         persona::to_json(bio, false).dump();
}

}  // namespace

std::string lexical_system_prompt(const persona::Biography& bio) {
  return character_preamble(bio) +
         "\nPlease ensure your answer starts with the rating from the scale provided.";
}

std::string lexical_user_prompt(const std::string& adjective) {
  std::string p = "Please indicate using the follow scale how accurately this adjective '" +
                  adjective + "' describes you.\n";
  const auto& labels = LikertScale::lexical9().labels();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) p += ", ";
    p += "'" + labels[i] + "'";
  }
  return p;
}

std::string pir_system_prompt(const persona::Biography& bio) { return character_preamble(bio); }

std::string pir_user_prompt(const std::string& statement) {
  return "How much do you agree or disagree with the the following statement: '" + statement +
         "'.\n"
         "Please respond using the following scale: Strongly agree, Agree, Neutral (neither agree "
         "nor disagree), Disagree, Strongly disagree.\n"
         "Ensure your answer starts with the rating from the scale provided, followed by a short "
         "explanation.";
}

ResponseRecord record_from_result(long agent_id, const std::string& item_id,
                                  const gateway::ChatResult& result, const LikertScale& scale) {
  ResponseRecord r;
  r.agent_id = agent_id;
  r.item_id = item_id;
  r.attempts = result.attempt_count;
  switch (result.outcome) {
    case gateway::Outcome::Text:
      r.raw_text = result.content;
      try {
        r.parsed_value = scale.parse(result.content);
        r.status = ResponseStatus::Ok;
      } catch (const Error&) {
        r.status = ResponseStatus::Unparseable;
      }
      break;
    case gateway::Outcome::ContentFiltered:
      r.status = ResponseStatus::ContentFiltered;
      break;
    case gateway::Outcome::Refused:
      r.raw_text = "refused";
      r.status = ResponseStatus::Missing;
      break;
    case gateway::Outcome::TransportError:
      r.raw_text = result.content;
      r.status = ResponseStatus::Missing;
      break;
  }
  return r;
}

namespace {

template <class SystemPrompt, class UserPrompt>
SurveyRunSummary run_survey(const persona::Population& pop, const std::vector<QuestionItem>& items,
                            gateway::Gateway& gw, const std::filesystem::path& store_path,
                            const StoreHeader& header, const LikertScale& scale,
                            const SurveyOptions& options, SystemPrompt system_prompt,
                            UserPrompt user_prompt) {
  if (items.empty()) throw Error(ErrorKind::Config, "survey has no items");
  pop.validate();
  ResponseStore store(store_path, header, options.sync);

  std::mutex summary_mu;
  SurveyRunSummary summary;
  int workers = options.workers > 0 ? options.workers : gw.max_in_flight();

  for_each_index(pop.agents.size(), workers, [&](std::size_t a) {
    const auto& bio = pop.agents[a];
    const auto system = system_prompt(bio);
    SurveyRunSummary local;
    for (const auto& item : items) {
      if (store.contains(bio.agent_id, item.id)) {
        ++local.skipped;
        continue;
      }
      gateway::ChatRequest req;
      req.system_prompt = system;
      req.user_prompt = user_prompt(item);
      req.temperature = gw.default_temperature;
      req.max_tokens = gw.default_max_tokens;
      req.request_key = gateway::make_request_key(header.survey_id, bio.agent_id, item.id);
      ++local.issued;
      auto record = record_from_result(bio.agent_id, item.id, gw.complete(req), scale);
      store.append(record);
      switch (record.status) {
        case ResponseStatus::Ok: ++local.ok; break;
        case ResponseStatus::ContentFiltered: ++local.content_filtered; break;
        case ResponseStatus::Missing: ++local.missing; break;
        case ResponseStatus::Unparseable: ++local.unparseable; break;
      }
    }
    std::lock_guard lock(summary_mu);
    summary.issued += local.issued;
    summary.skipped += local.skipped;
    summary.ok += local.ok;
    summary.content_filtered += local.content_filtered;
    summary.missing += local.missing;
    summary.unparseable += local.unparseable;
  });
  return summary;
}

}  // namespace

SurveyRunSummary run_lexical_survey(const persona::Population& pop, const AdjectiveLexicon& lexicon,
                                    gateway::Gateway& gw, const std::filesystem::path& store_path,
                                    const SurveyOptions& options) {
  std::vector<QuestionItem> items;
  for (const auto& a : lexicon.adjectives()) items.push_back({a, a});
  StoreHeader header{options.survey_id.empty() ? "lexical" : options.survey_id, "lexical9",
                     lexicon.hash()};
  return run_survey(
      pop, items, gw, store_path, header, LikertScale::lexical9(), options,
      [](const persona::Biography& b) { return lexical_system_prompt(b); },
      [](const QuestionItem& it) { return lexical_user_prompt(it.text); });
}

SurveyRunSummary run_pir_survey(const persona::Population& pop, const std::vector<QuestionItem>& items,
                                gateway::Gateway& gw, const std::filesystem::path& store_path,
                                const SurveyOptions& options) {
  StoreHeader header{options.survey_id.empty() ? "pir" : options.survey_id, "pir5",
                     questionnaire_hash(items)};
  return run_survey(
      pop, items, gw, store_path, header, LikertScale::pir5(), options,
      [](const persona::Biography& b) { return pir_system_prompt(b); },
      [](const QuestionItem& it) { return pir_user_prompt(it.text); });
}

// ---------------------------------------------------------------------------

std::size_t ResponseMatrix::masked_count() const {
  return static_cast<std::size_t>(values.array().isNaN().count());
}

Eigen::Index ResponseMatrix::item_index(const std::string& item) const {
  for (std::size_t j = 0; j < item_ids.size(); ++j)
    if (item_ids[j] == item) return static_cast<Eigen::Index>(j);
  return -1;
}

Eigen::Index ResponseMatrix::agent_index(long agent_id) const {
  for (std::size_t i = 0; i < agent_ids.size(); ++i)
    if (agent_ids[i] == agent_id) return static_cast<Eigen::Index>(i);
  return -1;
}

ResponseMatrix build_matrix(const std::vector<ResponseRecord>& records,
                            const std::vector<long>& agent_ids,
                            const std::vector<std::string>& item_ids, const std::string& scale) {
  ResponseMatrix m;
  m.agent_ids = agent_ids;
  m.item_ids = item_ids;
  m.scale = scale;
  m.values = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(agent_ids.size()),
                                       static_cast<Eigen::Index>(item_ids.size()),
                                       std::numeric_limits<double>::quiet_NaN());
  std::unordered_map<long, Eigen::Index> row;
  std::unordered_map<std::string, Eigen::Index> col;
  for (std::size_t i = 0; i < agent_ids.size(); ++i) row.emplace(agent_ids[i], static_cast<Eigen::Index>(i));
  for (std::size_t j = 0; j < item_ids.size(); ++j) col.emplace(item_ids[j], static_cast<Eigen::Index>(j));
  for (const auto& r : records) {
    if (r.status != ResponseStatus::Ok || !r.parsed_value) continue;
    auto ri = row.find(r.agent_id);
    auto ci = col.find(r.item_id);
    if (ri == row.end() || ci == col.end()) continue;
    m.values(ri->second, ci->second) = *r.parsed_value;
  }
  return m;
}

ResponseMatrix build_matrix(const std::vector<ResponseRecord>& records,
                            const persona::Population& pop, const AdjectiveLexicon& lexicon) {
  std::vector<long> ids;
  for (const auto& a : pop.agents) ids.push_back(a.agent_id);
  return build_matrix(records, ids, lexicon.adjectives(), "lexical9");
}

std::pair<ResponseMatrix, ExclusionReport> filter_items(const ResponseMatrix& matrix,
                                                        const std::vector<std::string>& drop_items,
                                                        bool drop_zero_variance) {
  std::set<std::string> drop(drop_items.begin(), drop_items.end());
  for (const auto& d : drop)
    if (matrix.item_index(d) < 0)
      throw Error(ErrorKind::Config, "cannot drop unknown item '" + d + "'");

  ExclusionReport report;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < matrix.values.cols(); ++j) {
    const auto& id = matrix.item_ids[static_cast<std::size_t>(j)];
    if (drop.count(id)) {
      report.push_back({id, "requested"});
      continue;
    }
    if (drop_zero_variance) {
      bool any = false, varies = false;
      double first = 0;
      for (Eigen::Index i = 0; i < matrix.values.rows(); ++i) {
        double v = matrix.values(i, j);
        if (std::isnan(v)) continue;
        if (!any) {
          first = v;
          any = true;
        } else if (v != first) {
          varies = true;
          break;
        }
      }
      if (!varies) {
        report.push_back({id, "zero-variance"});
        continue;
      }
    }
    keep.push_back(j);
  }

  ResponseMatrix out;
  out.agent_ids = matrix.agent_ids;
  out.scale = matrix.scale;
  out.values.resize(matrix.values.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    out.item_ids.push_back(matrix.item_ids[static_cast<std::size_t>(keep[k])]);
    out.values.col(static_cast<Eigen::Index>(k)) = matrix.values.col(keep[k]);
  }
  return {std::move(out), std::move(report)};
}

std::string matrix_csv(const ResponseMatrix& m) {
  std::string out;
  text::CsvRow header{"agent_id"};
  header.insert(header.end(), m.item_ids.begin(), m.item_ids.end());
  out += text::csv_line(header);
  for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
    text::CsvRow row{std::to_string(m.agent_ids[static_cast<std::size_t>(i)])};
    for (Eigen::Index j = 0; j < m.values.cols(); ++j)
      row.push_back(m.masked(i, j) ? "" : text::format_double(m.values(i, j)));
    out += text::csv_line(row);
  }
  return out;
}

ResponseMatrix matrix_from_csv(std::string_view csv, const std::string& scale) {
  auto rows = text::parse_csv(csv);
  if (rows.empty()) throw Error(ErrorKind::Format, "matrix CSV is empty");
  ResponseMatrix m;
  m.scale = scale;
  m.item_ids.assign(rows[0].begin() + 1, rows[0].end());
  const auto p = static_cast<Eigen::Index>(m.item_ids.size());
  m.values.resize(static_cast<Eigen::Index>(rows.size() - 1), p);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (static_cast<Eigen::Index>(r.size()) != p + 1)
      throw Error(ErrorKind::Format, "matrix CSV row " + std::to_string(i) + " has wrong width");
    m.agent_ids.push_back(std::stol(r[0]));
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto& cell = r[static_cast<std::size_t>(j + 1)];
      m.values(static_cast<Eigen::Index>(i - 1), j) =
          cell.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(cell);
    }
  }
  return m;
}

}  // namespace lexpsy::survey
