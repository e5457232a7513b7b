#include "lexpsy/persona.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lexpsy/error.hpp"
#include "lexpsy/parallel.hpp"
#include "lexpsy/text.hpp"

namespace lexpsy::persona {

using nlohmann::json;

json to_json(const Biography& bio, bool with_agent_id) {
  json j;
  if (with_agent_id) j["Agent ID"] = bio.agent_id;
  j["Full Name"] = bio.full_name;
  j["Age"] = bio.age;
  j["Occupation"] = bio.occupation;
  j["Hobbies/interests"] = bio.hobbies_interests;
  j["Personality Facts"] = {{"Positive Fact 1", bio.positive_fact_1},
                            {"Positive Fact 2", bio.positive_fact_2},
                            {"Negative Fact", bio.negative_fact}};
  return j;
}

namespace {

const json* find_key(const json& obj, std::string_view key) {
  if (!obj.is_object()) return nullptr;
  auto want = text::to_lower(key);
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (text::to_lower(text::trim(it.key())) == want) return &it.value();
  }
  return nullptr;
}

std::string string_field(const json& obj, std::string_view key) {
  const json* v = find_key(obj, key);
  if (!v) throw Error(ErrorKind::Format, "biography missing field '" + std::string(key) + "'");
  if (v->is_string()) return text::trim(v->get<std::string>());
  if (v->is_array()) {
    std::string joined;
    for (const auto& e : *v) {
      if (!joined.empty()) joined += ", ";
      joined += e.is_string() ? e.get<std::string>() : e.dump();
    }
    return joined;
  }
  throw Error(ErrorKind::Format, "biography field '" + std::string(key) + "' is not text");
}

}  // namespace

Biography biography_from_json(const json& j, long agent_id) {
  if (!j.is_object()) throw Error(ErrorKind::Format, "biography must be a JSON object");
  Biography b;
  b.agent_id = agent_id;
  b.full_name = string_field(j, "Full Name");
  const json* age = find_key(j, "Age");
  if (!age) throw Error(ErrorKind::Format, "biography missing field 'Age'");
  if (age->is_number_integer()) {
    b.age = age->get<int>();
  } else if (age->is_number()) {
    b.age = static_cast<int>(std::lround(age->get<double>()));
  } else if (age->is_string()) {
    try {
      b.age = std::stoi(age->get<std::string>());
    } catch (const std::exception&) {
      throw Error(ErrorKind::Format, "biography age is not a number");
    }
  } else {
    throw Error(ErrorKind::Format, "biography age is not a number");
  }
  b.occupation = string_field(j, "Occupation");
  b.hobbies_interests = string_field(j, "Hobbies/interests");

  const json* facts = find_key(j, "Personality Facts");
  if (facts && facts->is_object()) {
    b.positive_fact_1 = string_field(*facts, "Positive Fact 1");
    b.positive_fact_2 = string_field(*facts, "Positive Fact 2");
    b.negative_fact = string_field(*facts, "Negative Fact");
  } else if (facts && facts->is_array() && facts->size() == 3) {
    for (const auto& f : *facts)
      if (!f.is_string()) throw Error(ErrorKind::Format, "personality facts must be text");
    b.positive_fact_1 = text::trim((*facts)[0].get<std::string>());
    b.positive_fact_2 = text::trim((*facts)[1].get<std::string>());
    b.negative_fact = text::trim((*facts)[2].get<std::string>());
  } else {
    b.positive_fact_1 = string_field(j, "Positive Fact 1");
    b.positive_fact_2 = string_field(j, "Positive Fact 2");
    b.negative_fact = string_field(j, "Negative Fact");
  }

  if (b.age < 16 || b.age > 60)
    throw Error(ErrorKind::Format, "biography age " + std::to_string(b.age) + " outside [16,60]");
  for (const auto* f : {&b.full_name, &b.occupation, &b.hobbies_interests, &b.positive_fact_1,
                        &b.positive_fact_2, &b.negative_fact}) {
    if (f->empty()) throw Error(ErrorKind::Format, "biography has an empty text field");
  }
  return b;
}

void Population::validate() const {
  std::vector<bool> seen(agents.size(), false);
  for (const auto& a : agents) {
    if (a.agent_id < 0 || static_cast<std::size_t>(a.agent_id) >= agents.size() ||
        seen[static_cast<std::size_t>(a.agent_id)])
      throw Error(ErrorKind::Config, "population agent ids must be unique and dense, bad id " +
                                         std::to_string(a.agent_id));
    seen[static_cast<std::size_t>(a.agent_id)] = true;
  }
}

const Biography& Population::agent(long agent_id) const {
  for (const auto& a : agents)
    if (a.agent_id == agent_id) return a;
  throw Error(ErrorKind::Config, "no agent " + std::to_string(agent_id) + " in " + name);
}

Population load_population(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(text::read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, "bad population file " + path.string() + ": " + e.what());
  }
  if (!j.is_array()) throw Error(ErrorKind::Config, "population file must be a JSON array");
  Population pop;
  pop.name = path.stem().string();
  for (std::size_t i = 0; i < j.size(); ++i) {
    long id = static_cast<long>(i);
    if (const json* v = find_key(j[i], "Agent ID")) id = v->get<long>();
    pop.agents.push_back(biography_from_json(j[i], id));
  }
  pop.validate();
  return pop;
}

std::string population_json(const Population& pop) {
  json arr = json::array();
  for (const auto& a : pop.agents) arr.push_back(to_json(a));
  return arr.dump(2) + "\n";
}

void save_population(const std::filesystem::path& path, const Population& pop) {
  text::write_file_atomic(path, population_json(pop));
}

void CensusTargets::validate() const {
  if (total_agents < 1) throw Error(ErrorKind::Config, "total_agents must be positive");
  if (groups.empty()) throw Error(ErrorKind::Config, "census targets are empty");
  double sum = 0;
  for (const auto& g : groups) {
    if (!(g.proportion >= 0)) throw Error(ErrorKind::Config, "negative proportion for " + g.group);
    sum += g.proportion;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw Error(ErrorKind::Config, "census proportions sum to " + text::format_double(sum));
}

CensusTargets load_census_csv(const std::filesystem::path& path, int total_agents) {
  CensusTargets t;
  t.total_agents = total_agents;
  auto rows = text::read_csv(path);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (i == 0 && !r.empty() && text::to_lower(text::trim(r[0])) == "group") continue;
    if (r.size() < 2) throw Error(ErrorKind::Config, "census row needs group,proportion");
    try {
      t.groups.push_back({text::trim(r[0]), std::stod(r[1])});
    } catch (const std::invalid_argument&) {
      throw Error(ErrorKind::Config, "bad proportion '" + r[1] + "'");
    }
  }
  t.validate();
  return t;
}

std::vector<int> allocate_largest_remainder(const CensusTargets& targets) {
  targets.validate();
  const auto n = targets.groups.size();
  std::vector<int> counts(n);
  std::vector<double> remainder(n);
  int assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double quota = targets.groups[i].proportion * targets.total_agents;
    counts[i] = static_cast<int>(std::floor(quota));
    remainder[i] = quota - counts[i];
    assigned += counts[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < targets.total_agents; ++k, ++assigned) ++counts[order[k % n]];
  return counts;
}

OccupationPool load_occupation_pool(const std::filesystem::path& path) {
  OccupationPool pool;
  if (path.extension() == ".json") {
    json j;
    try {
      j = json::parse(text::read_file(path));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Config, "bad occupation pool: " + std::string(e.what()));
    }
    for (const auto& [g, list] : j.items()) pool[g] = list.get<std::vector<std::string>>();
    return pool;
  }
  auto rows = text::read_csv(path);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (i == 0 && !r.empty() && text::to_lower(text::trim(r[0])) == "group") continue;
    if (r.size() < 2) throw Error(ErrorKind::Config, "occupation row needs group,occupation");
    pool[text::trim(r[0])].push_back(text::trim(r[1]));
  }
  return pool;
}

std::string biography_system_prompt() {
  return "You are a character generator AI.\n"
         "Your responses should be json objects.\n"
         "Do not use names of famous people.\n"
         "Ages should be between 16 and 60.\n"
         "Occupations can also include unpaid activities, e.g. student, stay at home mum, job "
         "seeker etc.";
}

std::string biography_user_prompt(const std::string& occupation, bool substantive_flaw) {
  std::string p =
      "Complete this character bio, where an occupation has already been given:\n"
      "Full Name: [Full Name]\n"
      "Age: [Age]\n"
      "Occupation: " +
      occupation +
      "\n"
      "Hobbies/Interests: [Hobbies/Interests]\n"
      "Personality Facts:\n"
      "- [Positive Fact 1]\n"
      "- [Positive Fact 2]\n";
  p += substantive_flaw ? "- [Negative Fact: a substantive character flaw, not a mild weakness]"
                        : "- [Negative Fact]";
  return p;
}

namespace {

// Replies may wrap the object in prose or a fenced block.
json extract_json_object(const std::string& reply) {
  auto first = reply.find('{');
  auto last = reply.rfind('}');
  if (first == std::string::npos || last == std::string::npos || last < first)
    throw Error(ErrorKind::Format, "reply contains no JSON object");
  try {
    return json::parse(reply.substr(first, last - first + 1));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace

Population generate_population(const CensusTargets& targets, const OccupationPool& pool,
                               gateway::Gateway& gw, const GenerationOptions& options,
                               GenerationLog* log) {
  targets.validate();
  for (const auto& g : targets.groups) {
    auto it = pool.find(g.group);
    if (it == pool.end() || it->second.empty())
      throw Error(ErrorKind::Config, "occupation pool does not cover group '" + g.group + "'");
  }
  auto counts = allocate_largest_remainder(targets);

  // Sampling happens up front, in slot order, so results do not depend on
  // completion order.
  std::mt19937_64 rng(options.seed);
  std::vector<std::string> occupations;
  occupations.reserve(static_cast<std::size_t>(targets.total_agents));
  for (std::size_t g = 0; g < targets.groups.size(); ++g) {
    const auto& list = pool.at(targets.groups[g].group);
    std::uniform_int_distribution<std::size_t> pick(0, list.size() - 1);
    for (int c = 0; c < counts[g]; ++c) occupations.push_back(list[pick(rng)]);
  }

  const std::size_t n = occupations.size();
  std::vector<Biography> bios(n);
  std::vector<int> attempts(n, 0);
  int workers = options.workers > 0 ? options.workers : gw.max_in_flight();
  for_each_index(n, workers, [&](std::size_t slot) {
    gateway::ChatRequest req;
    req.system_prompt = biography_system_prompt();
    req.user_prompt = biography_user_prompt(occupations[slot], options.substantive_flaw);
    req.temperature = gw.default_temperature;
    req.max_tokens = gw.default_max_tokens;
    std::string last_problem;
    for (int attempt = 1; attempt <= options.max_rerequests + 1; ++attempt) {
      req.request_key =
          gateway::make_request_key("generate", static_cast<long>(slot), std::to_string(attempt));
      auto res = gw.complete(req);
      attempts[slot] = attempt;
      if (!res.ok()) {
        last_problem = std::string(gateway::to_string(res.outcome)) + " " + res.content;
        continue;
      }
      try {
        bios[slot] = biography_from_json(extract_json_object(res.content), static_cast<long>(slot));
        return;
      } catch (const Error& e) {
        last_problem = e.what();
      }
    }
    throw Error(ErrorKind::GenerationFailed,
                "agent slot " + std::to_string(slot) + ": " + last_problem);
  });

  if (log) {
    log->attempts = attempts;
    log->occupations = occupations;
  }
  Population pop{options.name, std::move(bios)};
  pop.validate();
  return pop;
}

namespace {

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace

Gender infer_gender(const Biography& bio, const GenderLexicon& names) {
  static const std::set<std::string> male = {"he",   "him",     "his",     "himself", "mr",
                                             "man",  "husband", "father",  "son",     "brother",
                                             "dad",  "boyfriend", "gentleman", "sir"};
  static const std::set<std::string> female = {"she",    "her",    "hers",    "herself", "mrs",
                                               "ms",     "miss",   "woman",   "wife",    "mother",
                                               "daughter", "sister", "mum",   "mom",     "girlfriend",
                                               "lady"};
  int m = 0, f = 0;
  for (const auto* field : {&bio.full_name, &bio.occupation, &bio.hobbies_interests,
                            &bio.positive_fact_1, &bio.positive_fact_2, &bio.negative_fact}) {
    for (const auto& w : words(*field)) {
      m += male.count(w) ? 1 : 0;
      f += female.count(w) ? 1 : 0;
    }
  }
  if (m > f) return Gender::Male;
  if (f > m) return Gender::Female;
  if (m == 0) {
    auto name_words = words(bio.full_name);
    if (!name_words.empty()) {
      const auto& first = name_words.front();
      bool is_m = names.male_names.count(first) > 0;
      bool is_f = names.female_names.count(first) > 0;
      if (is_m && !is_f) return Gender::Male;
      if (is_f && !is_m) return Gender::Female;
    }
  }
  return Gender::Undetermined;
}

namespace {

std::size_t utf8_length(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

}  // namespace

std::size_t biography_length(const Biography& bio) {
  return utf8_length(bio.hobbies_interests) + utf8_length(bio.positive_fact_1) +
         utf8_length(bio.positive_fact_2) + utf8_length(bio.negative_fact);
}

PopulationStats population_stats(const Population& pop, const GenderLexicon& names) {
  if (pop.agents.empty()) throw Error(ErrorKind::EmptyData, "population is empty");
  PopulationStats s;
  s.n = pop.agents.size();
  double sum = 0;
  s.min_age = pop.agents.front().age;
  s.max_age = s.min_age;
  std::set<std::string> occupations;
  for (const auto& a : pop.agents) {
    sum += a.age;
    s.min_age = std::min(s.min_age, a.age);
    s.max_age = std::max(s.max_age, a.age);
    occupations.insert(text::to_lower(text::trim(a.occupation)));
    switch (infer_gender(a, names)) {
      case Gender::Male: ++s.male; break;
      case Gender::Female: ++s.female; break;
      case Gender::Undetermined: ++s.undetermined; break;
    }
    s.biography_lengths.push_back(biography_length(a));
  }
  s.mean_age = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0;
    for (const auto& a : pop.agents) ss += (a.age - s.mean_age) * (a.age - s.mean_age);
    s.sd_age = std::sqrt(ss / static_cast<double>(s.n - 1));
    s.sd_defined = true;
  }
  s.unique_occupations = occupations.size();
  return s;
}

json to_json(const PopulationStats& s) {
  return json{{"n", s.n},
              {"mean_age", s.mean_age},
              {"sd_age", s.sd_age},
              {"sd_defined", s.sd_defined},
              {"age_range", {s.min_age, s.max_age}},
              {"unique_occupations", s.unique_occupations},
              {"inferred_gender", {{"male", s.male}, {"female", s.female}, {"undetermined", s.undetermined}}},
              {"biography_lengths", s.biography_lengths}};
}

}  // namespace lexpsy::persona
