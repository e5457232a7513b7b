#include <doctest.h>

#include <atomic>
#include <fstream>
#include <set>

#include "lexpsy/error.hpp"
#include "lexpsy/survey.hpp"
#include "support.hpp"

using namespace lexpsy;
using namespace lexpsy::survey;
using nlohmann::json;

namespace {

// Answers from a script, but throws (as if the process died) once `crash_after` calls were made.
class CrashingTransport final : public gateway::Transport {
public:
  CrashingTransport(json script, int crash_after, std::atomic<int>* calls)
      : inner_(gateway::ScriptedTransport::from_json(script)), crash_after_(crash_after), calls_(calls) {}
  gateway::Attempt send(const gateway::ChatRequest& r) override {
    if (calls_->fetch_add(1) >= crash_after_) throw std::runtime_error("simulated crash");
    return inner_.send(r);
  }

private:
  gateway::ScriptedTransport inner_;
  int crash_after_;
  std::atomic<int>* calls_;
};

gateway::Gateway counting_gateway(const json& script, std::atomic<int>* calls, int crash_after = 1 << 30) {
  return gateway::Gateway(std::make_unique<CrashingTransport>(script, crash_after, calls), testing::fast_retry(), 1);
}

ResponseRecord rec(long agent, const std::string& item, std::optional<int> v,
                   ResponseStatus s = ResponseStatus::Ok) {
  return ResponseRecord{agent, item, v ? LikertScale::lexical9().label(*v) : "", v, s, 1};
}

}  // namespace

TEST_CASE("lexicon normalisation and hashing") {
  AdjectiveLexicon lex({"Kind", " kind ", "# comment", "", "Sly"});
  CHECK(lex.adjectives() == std::vector<std::string>{"kind", "sly"});
  CHECK(lex.hash() == AdjectiveLexicon({"kind", "sly"}).hash());
  CHECK(lex.hash() != AdjectiveLexicon({"sly", "kind"}).hash());
}

TEST_CASE("questionnaire loading") {
  testing::TempDir dir;
  testing::write(dir / "items.txt", "I would be quite bored by a visit to an art gallery.\n\nI plan ahead.\n");
  auto items = load_questionnaire(dir / "items.txt");
  REQUIRE(items.size() == 2);
  CHECK(items[1].id == "2");
  testing::write(dir / "items.csv", "item_id,text\n10,\"Hello, world\"\n10,dup\n");
  CHECK_THROWS_AS(load_questionnaire(dir / "items.csv"), Error);
}

TEST_CASE("prompts carry the biography and the verbatim scale") {
  auto bio = testing::make_bio(0);
  auto sys = lexical_system_prompt(bio);
  CHECK(sys.find("\"Full Name\":\"Agent 0\"") != std::string::npos);
  CHECK(sys.find("Agent ID") == std::string::npos);
  auto user = lexical_user_prompt("sly");
  CHECK(user.find("'sly'") != std::string::npos);
  CHECK(user.find("'Extremely Inaccurate'") != std::string::npos);
  CHECK(user.find("'Neither Accurate Nor Inaccurate'") != std::string::npos);
  CHECK(pir_user_prompt("I plan ahead.").find("'I plan ahead.'") != std::string::npos);
}

TEST_CASE("record mapping from gateway outcomes") {
  const auto& s = LikertScale::lexical9();
  gateway::ChatResult text{gateway::Outcome::Text, "Very Accurate - yes", {}, 2};
  auto r = record_from_result(1, "kind", text, s);
  CHECK(r.status == ResponseStatus::Ok);
  CHECK(r.parsed_value == 8);
  CHECK(r.attempts == 2);
  text.content = "I think a 7/9 fits";
  CHECK(record_from_result(1, "kind", text, s).status == ResponseStatus::Unparseable);
  CHECK_FALSE(record_from_result(1, "kind", text, s).parsed_value);
  CHECK(record_from_result(1, "k", {gateway::Outcome::ContentFiltered, "", {}, 1}, s).status ==
        ResponseStatus::ContentFiltered);
  CHECK(record_from_result(1, "k", {gateway::Outcome::TransportError, "x", {}, 6}, s).status ==
        ResponseStatus::Missing);
  CHECK(record_from_result(1, "k", {gateway::Outcome::Refused, "", {}, 1}, s).status == ResponseStatus::Missing);
}

TEST_CASE("store records round-trip and checksums catch corruption") {
  auto r = rec(3, "kind", 7);
  CHECK(decode_record(encode_record(r)) == r);
  auto line = encode_record(r);
  auto pos = line.find("\"kind\"");
  line.replace(pos, 6, "\"kine\"");
  CHECK_THROWS_AS(decode_record(line), Error);
}

TEST_CASE("2 agents x 3 adjectives, scripted backend: complete sweep") {
  testing::TempDir dir;
  auto pop = testing::make_population(2);
  AdjectiveLexicon lex({"kind", "sly", "calm"});
  json script = {{"*", "Moderately Accurate - because I plan ahead."}};
  std::atomic<int> calls{0};
  auto gw = counting_gateway(script, &calls);
  auto s = run_lexical_survey(pop, lex, gw, dir / "store.jsonl");
  CHECK(s.issued == 6);
  CHECK(s.ok == 6);
  auto contents = ResponseStore::read(dir / "store.jsonl");
  CHECK(contents.records.size() == 6);
  CHECK(contents.header.item_hash == lex.hash());
  auto m = build_matrix(contents.records, pop, lex);
  CHECK(m.values.rows() == 2);
  CHECK(m.values.cols() == 3);
  CHECK(m.masked_count() == 0);
  CHECK((m.values.array() == 7).all());

  // An identical rerun is a no-op.
  auto again = run_lexical_survey(pop, lex, gw, dir / "store.jsonl");
  CHECK(again.issued == 0);
  CHECK(again.skipped == 6);
  CHECK(calls.load() == 6);
}

TEST_CASE("content filter recorded per cell") {
  testing::TempDir dir;
  auto pop = testing::make_population(5);
  AdjectiveLexicon lex({"kind", "niggardly"});
  json script = {{"*", "Slightly Accurate"}};
  for (int a = 0; a < 3; ++a) script["lexical/" + std::to_string(a) + "/niggardly"] = {{"error", "content_filter"}};
  std::atomic<int> calls{0};
  auto gw = counting_gateway(script, &calls);
  auto s = run_lexical_survey(pop, lex, gw, dir / "store.jsonl");
  CHECK(s.content_filtered == 3);
  auto m = build_matrix(ResponseStore::read(dir / "store.jsonl").records, pop, lex);
  CHECK(m.masked_count() == 3);
}

TEST_CASE("resume after a crash issues only the missing calls") {
  testing::TempDir dir;
  auto pop = testing::make_population(2);
  AdjectiveLexicon lex({"kind", "sly", "calm"});
  json script = {{"*", "Slightly Inaccurate"}};
  std::atomic<int> calls{0};
  {
    auto gw = counting_gateway(script, &calls, 4);
    SurveyOptions opt;
    opt.workers = 1;
    CHECK_THROWS(run_lexical_survey(pop, lex, gw, dir / "store.jsonl", opt));
  }
  CHECK(ResponseStore::read(dir / "store.jsonl").records.size() == 4);
  {
    // a torn trailing write from the dead process
    std::ofstream f(dir / "store.jsonl", std::ios::app | std::ios::binary);
    f << R"({"agent_id":1,"item_id":"ca)";
  }
  CHECK(ResponseStore::read(dir / "store.jsonl").torn_bytes > 0);
  std::atomic<int> resumed{0};
  auto gw = counting_gateway(script, &resumed);
  auto s = run_lexical_survey(pop, lex, gw, dir / "store.jsonl");
  CHECK(resumed.load() == 2);
  CHECK(s.issued == 2);
  CHECK(s.skipped == 4);
  auto contents = ResponseStore::read(dir / "store.jsonl");
  CHECK(contents.records.size() == 6);
  CHECK(contents.torn_bytes == 0);
  std::set<std::pair<long, std::string>> cells;
  for (const auto& r : contents.records) cells.insert({r.agent_id, r.item_id});
  CHECK(cells.size() == 6);
}

TEST_CASE("store header mismatch and mid-file corruption") {
  testing::TempDir dir;
  { ResponseStore s(dir / "s.jsonl", StoreHeader{"lexical", "lexical9", "abc"}); }
  CHECK_THROWS_AS(ResponseStore(dir / "s.jsonl", StoreHeader{"lexical", "lexical9", "def"}), Error);
  {
    ResponseStore s(dir / "s.jsonl", StoreHeader{"lexical", "lexical9", "abc"});
    s.append(rec(0, "kind", 5));
    s.append(rec(0, "kind", 6));  // duplicate cell ignored
    s.append(rec(0, "sly", 4));
    CHECK(s.size() == 2);
  }
  auto data = testing::slurp(dir / "s.jsonl");
  data[data.find("\"sly\"") + 2] = 'x';
  testing::write(dir / "s.jsonl", data);
  try {
    ResponseStore::read(dir / "s.jsonl");
    FAIL("expected StoreCorrupt");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::StoreCorrupt);
  }
}

TEST_CASE("pir survey: 1 agent x 100 items") {
  testing::TempDir dir;
  std::vector<QuestionItem> items;
  for (int i = 1; i <= 100; ++i) items.push_back({std::to_string(i), "Statement " + std::to_string(i)});
  std::atomic<int> calls{0};
  auto gw = counting_gateway(json{{"*", "Agree. Mostly."}}, &calls);
  auto s = run_pir_survey(testing::make_population(1), items, gw, dir / "pir.jsonl");
  CHECK(s.ok == 100);
  auto contents = ResponseStore::read(dir / "pir.jsonl");
  CHECK(contents.header.scale == "pir5");
  for (const auto& r : contents.records) CHECK(r.parsed_value == 4);
}

TEST_CASE("build_matrix masks non-Ok records and replay is bit-identical") {
  auto pop = testing::make_population(2);
  AdjectiveLexicon lex({"a", "b", "c"});
  std::vector<ResponseRecord> recs = {rec(0, "a", 1), rec(0, "b", 2),
                                      rec(0, "c", std::nullopt, ResponseStatus::Missing),
                                      rec(1, "a", 4), rec(1, "b", 5), rec(1, "c", 6), rec(9, "a", 3)};
  auto m = build_matrix(recs, pop, lex);
  CHECK(m.masked_count() == 1);
  CHECK(m.masked(0, 2));
  auto back = matrix_from_csv(matrix_csv(m));
  CHECK(back.item_ids == m.item_ids);
  CHECK(back.agent_ids == m.agent_ids);
  for (Eigen::Index i = 0; i < 2; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) {
      CHECK(back.masked(i, j) == m.masked(i, j));
      if (!m.masked(i, j)) CHECK(back.values(i, j) == m.values(i, j));
    }
}

TEST_CASE("filter_items: named, zero-variance, idempotent") {
  Eigen::MatrixXd v(3, 4);
  v << 1, 2, 5, 9,  //
      1, 3, 5, 8,   //
      1, 4, std::nan(""), 7;
  auto m = testing::to_response_matrix(v);
  auto [f, report] = filter_items(m, {"item3"}, true);
  CHECK(f.item_ids == std::vector<std::string>{"item1"});
  REQUIRE(report.size() == 3);
  CHECK(report[0].item == "item0");
  CHECK(report[0].reason == "zero-variance");
  CHECK(report[2].reason == "requested");
  auto [g, report2] = filter_items(f, {}, true);
  CHECK(g.item_ids == f.item_ids);
  CHECK(report2.empty());
  CHECK_THROWS_AS(filter_items(m, {"nope"}, true), Error);
  auto [h, r3] = filter_items(m, {}, false);
  CHECK(h.item_ids.size() == 4);
}
