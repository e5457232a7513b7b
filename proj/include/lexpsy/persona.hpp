#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lexpsy/gateway.hpp"

namespace lexpsy::persona {

struct Biography {
  long agent_id = 0;
  std::string full_name;
  int age = 0;
  std::string occupation;
  std::string hobbies_interests;
  std::string positive_fact_1;
  std::string positive_fact_2;
  std::string negative_fact;

  bool operator==(const Biography&) const = default;
};

/// Appendix-style record: "Full Name", "Age", "Occupation", "Hobbies/interests",
/// "Personality Facts": {"Positive Fact 1", "Positive Fact 2", "Negative Fact"}.
/// "Agent ID" is added when writing population files.
nlohmann::json to_json(const Biography& bio, bool with_agent_id = true);

/// Parses a generated or stored biography and checks its invariants
/// (age in [16,60], non-empty text). Key matching is case-insensitive.
Biography biography_from_json(const nlohmann::json& j, long agent_id);

struct Population {
  std::string name;
  std::vector<Biography> agents;

  /// Agent ids must be unique and dense (0..n-1 in some order).
  void validate() const;
  const Biography& agent(long agent_id) const;
};

Population load_population(const std::filesystem::path& path);
void save_population(const std::filesystem::path& path, const Population& pop);
std::string population_json(const Population& pop);

struct CensusGroup {
  std::string group;
  double proportion = 0;
};

struct CensusTargets {
  std::vector<CensusGroup> groups;
  int total_agents = 0;

  void validate() const;
};

/// CSV with header group,proportion.
CensusTargets load_census_csv(const std::filesystem::path& path, int total_agents);

/// Largest-remainder apportionment: floors first, then one extra agent per
/// group in decreasing remainder order (ties broken by group order).
std::vector<int> allocate_largest_remainder(const CensusTargets& targets);

using OccupationPool = std::map<std::string, std::vector<std::string>>;

/// JSON object group -> [occupation, ...], or CSV group,occupation.
OccupationPool load_occupation_pool(const std::filesystem::path& path);

std::string biography_system_prompt();
/// With substantive_flaw the negative fact is requested as a real character flaw.
std::string biography_user_prompt(const std::string& occupation, bool substantive_flaw = false);

struct GenerationOptions {
  std::string name = "population";
  std::uint64_t seed = 0;
  bool substantive_flaw = false;
  int max_rerequests = 3;
  int workers = 0;  // 0: use the gateway's in-flight cap
};

struct GenerationLog {
  std::vector<int> attempts;  // per agent slot, gateway calls made
  std::vector<std::string> occupations;
};

/// Allocates slots by largest remainder, samples an occupation uniformly
/// within each slot's group, and asks the gateway for one biography per slot.
/// Replies that are not valid biography JSON are re-requested.
Population generate_population(const CensusTargets& targets, const OccupationPool& pool,
                               gateway::Gateway& gw, const GenerationOptions& options,
                               GenerationLog* log = nullptr);

enum class Gender { Male, Female, Undetermined };

struct GenderLexicon {
  std::set<std::string> male_names;
  std::set<std::string> female_names;
};

/// Pronoun and title counts over all biography text; optional first-name lists
/// break the tie when no pronoun or title is present.
Gender infer_gender(const Biography& bio, const GenderLexicon& names = {});

/// Character count (code points) of hobbies/interests plus the three facts.
std::size_t biography_length(const Biography& bio);

struct PopulationStats {
  std::size_t n = 0;
  double mean_age = 0;
  double sd_age = 0;
  bool sd_defined = false;  // false when n == 1
  int min_age = 0;
  int max_age = 0;
  std::size_t unique_occupations = 0;
  std::size_t male = 0;
  std::size_t female = 0;
  std::size_t undetermined = 0;
  std::vector<std::size_t> biography_lengths;
};

PopulationStats population_stats(const Population& pop, const GenderLexicon& names = {});
nlohmann::json to_json(const PopulationStats& stats);

}  // namespace lexpsy::persona
