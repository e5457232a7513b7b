#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "lexpsy/gateway.hpp"
#include "lexpsy/likert.hpp"
#include "lexpsy/persona.hpp"

namespace lexpsy::survey {

/// Ordered, lower-cased, de-duplicated adjective list.
class AdjectiveLexicon {
public:
  AdjectiveLexicon() = default;
  explicit AdjectiveLexicon(const std::vector<std::string>& raw);
  static AdjectiveLexicon load(const std::filesystem::path& path);

  const std::vector<std::string>& adjectives() const noexcept { return adjectives_; }
  std::size_t size() const noexcept { return adjectives_.size(); }
  bool contains(const std::string& adjective) const;
  std::string hash() const;

private:
  std::vector<std::string> adjectives_;
};

struct QuestionItem {
  std::string id;
  std::string text;
};

/// CSV (item_id,text) when the extension is .csv, otherwise one statement per
/// line with 1-based line numbers as ids.
std::vector<QuestionItem> load_questionnaire(const std::filesystem::path& path);
std::string questionnaire_hash(const std::vector<QuestionItem>& items);

enum class ResponseStatus { Ok, ContentFiltered, Missing, Unparseable };

const char* to_string(ResponseStatus s) noexcept;
ResponseStatus response_status_from_string(std::string_view s);

struct ResponseRecord {
  long agent_id = 0;
  std::string item_id;
  std::string raw_text;
  std::optional<int> parsed_value;
  ResponseStatus status = ResponseStatus::Missing;
  int attempts = 0;

  bool operator==(const ResponseRecord&) const = default;
};

struct StoreHeader {
  std::string survey_id;
  std::string scale;  // LikertScale name
  std::string item_hash;

  bool operator==(const StoreHeader&) const = default;
};

/// Append-only JSON-lines store. Line 1 is the header; each further line is a
/// record carrying a checksum over its own content. A trailing line without a
/// newline is a torn write from an interrupted run and is discarded on open.
class ResponseStore {
public:
  /// Opens or creates the store for appending. An existing store whose header
  /// differs from `header` is a configuration error.
  ResponseStore(std::filesystem::path path, const StoreHeader& header, bool sync = true);
  ~ResponseStore();
  ResponseStore(const ResponseStore&) = delete;
  ResponseStore& operator=(const ResponseStore&) = delete;

  struct Contents {
    StoreHeader header;
    std::vector<ResponseRecord> records;
    std::size_t torn_bytes = 0;
  };
  /// Read-only load with full validation. Throws Error(StoreCorrupt).
  static Contents read(const std::filesystem::path& path);

  void append(const ResponseRecord& record);
  bool contains(long agent_id, const std::string& item_id) const;
  std::size_t size() const;
  std::vector<ResponseRecord> records() const;
  const StoreHeader& header() const noexcept { return header_; }

private:
  std::filesystem::path path_;
  StoreHeader header_;
  bool sync_;
  std::FILE* file_ = nullptr;
  mutable std::mutex mu_;
  std::vector<ResponseRecord> records_;
  std::map<std::pair<long, std::string>, std::size_t> index_;
};

std::string encode_record(const ResponseRecord& r);
ResponseRecord decode_record(std::string_view line);

std::string lexical_system_prompt(const persona::Biography& bio);
std::string lexical_user_prompt(const std::string& adjective);
std::string pir_system_prompt(const persona::Biography& bio);
std::string pir_user_prompt(const std::string& statement);

/// Maps a gateway result to a stored record, parsing Likert text.
ResponseRecord record_from_result(long agent_id, const std::string& item_id,
                                  const gateway::ChatResult& result, const LikertScale& scale);

struct SurveyOptions {
  std::string survey_id;  // defaults to "lexical" / "pir"
  int workers = 0;        // concurrent agents; 0 uses the gateway's in-flight cap
  bool sync = true;       // fsync after each append
};

struct SurveyRunSummary {
  std::size_t issued = 0;   // gateway calls made by this run
  std::size_t skipped = 0;  // cells already present in the store
  std::size_t ok = 0;
  std::size_t content_filtered = 0;
  std::size_t missing = 0;
  std::size_t unparseable = 0;
};

/// One gateway call per (agent, adjective) not already stored. Agents run
/// concurrently, each agent's items in lexicon order. Every outcome is
/// appended before that agent's next request.
SurveyRunSummary run_lexical_survey(const persona::Population& pop, const AdjectiveLexicon& lexicon,
                                    gateway::Gateway& gw, const std::filesystem::path& store_path,
                                    const SurveyOptions& options = {});

SurveyRunSummary run_pir_survey(const persona::Population& pop, const std::vector<QuestionItem>& items,
                                gateway::Gateway& gw, const std::filesystem::path& store_path,
                                const SurveyOptions& options = {});

/// Agents x items grid; masked cells hold NaN.
struct ResponseMatrix {
  std::vector<long> agent_ids;
  std::vector<std::string> item_ids;
  Eigen::MatrixXd values;
  std::string scale = "lexical9";

  bool masked(Eigen::Index r, Eigen::Index c) const { return std::isnan(values(r, c)); }
  std::size_t masked_count() const;
  Eigen::Index item_index(const std::string& item) const;  // -1 when absent
  Eigen::Index agent_index(long agent_id) const;            // -1 when absent
};

/// Ok records fill cells in population x item order; every other status and
/// every absent record stays masked. Records for unknown agents or items are ignored.
ResponseMatrix build_matrix(const std::vector<ResponseRecord>& records,
                            const std::vector<long>& agent_ids,
                            const std::vector<std::string>& item_ids, const std::string& scale);
ResponseMatrix build_matrix(const std::vector<ResponseRecord>& records,
                            const persona::Population& pop, const AdjectiveLexicon& lexicon);

struct Exclusion {
  std::string item;
  std::string reason;  // "requested" | "zero-variance"
};
using ExclusionReport = std::vector<Exclusion>;

/// Removes the named items, then (optionally) every item whose observed
/// values are all identical.
std::pair<ResponseMatrix, ExclusionReport> filter_items(const ResponseMatrix& matrix,
                                                        const std::vector<std::string>& drop_items,
                                                        bool drop_zero_variance);

/// Agents as rows, items as columns, empty cell = masked.
std::string matrix_csv(const ResponseMatrix& m);
ResponseMatrix matrix_from_csv(std::string_view csv, const std::string& scale = "lexical9");

}  // namespace lexpsy::survey
