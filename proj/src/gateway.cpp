#include "lexpsy/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "lexpsy/error.hpp"
#include "lexpsy/likert.hpp"
#include "lexpsy/text.hpp"

namespace lexpsy::gateway {

using nlohmann::json;

const char* to_string(Outcome o) noexcept {
  switch (o) {
    case Outcome::Text: return "Text";
    case Outcome::ContentFiltered: return "ContentFiltered";
    case Outcome::Refused: return "Refused";
    case Outcome::TransportError: return "TransportError";
  }
  return "?";
}

std::string make_request_key(std::string_view survey_id, long agent_id, std::string_view item_id) {
  std::string key(survey_id);
  key += '/';
  key += std::to_string(agent_id);
  key += '/';
  key += item_id;
  return key;
}

std::optional<RequestKeyParts> parse_request_key(std::string_view key) {
  auto a = key.find('/');
  if (a == std::string_view::npos) return std::nullopt;
  auto b = key.find('/', a + 1);
  if (b == std::string_view::npos) return std::nullopt;
  RequestKeyParts parts;
  parts.survey_id = std::string(key.substr(0, a));
  auto agent = std::string(key.substr(a + 1, b - a - 1));
  try {
    std::size_t used = 0;
    parts.agent_id = std::stol(agent, &used);
    if (used != agent.size()) return std::nullopt;
  } catch (const std::exception&) {
    return std::nullopt;
  }
  parts.item_id = std::string(key.substr(b + 1));
  return parts;
}

// ---------------------------------------------------------------------------

std::chrono::milliseconds RetryPolicy::delay_before_retry(int retry_index) const {
  double d = static_cast<double>(base_delay.count()) * std::pow(multiplier, retry_index);
  d = std::min(d, static_cast<double>(max_delay.count()));
  return std::chrono::milliseconds(static_cast<long long>(d));
}

RateLimiter::RateLimiter(int max_in_flight, double requests_per_minute)
    : max_in_flight_(max_in_flight) {
  if (max_in_flight < 1) throw Error(ErrorKind::Config, "max_in_flight must be >= 1");
  if (requests_per_minute > 0) {
    interval_ = std::chrono::nanoseconds(static_cast<long long>(60e9 / requests_per_minute));
  }
}

RateLimiter::Permit RateLimiter::acquire() {
  std::chrono::steady_clock::time_point slot;
  {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_flight_ < max_in_flight_; });
    ++in_flight_;
    int now_in_flight = in_flight_;
    int prev = peak_.load();
    while (now_in_flight > prev && !peak_.compare_exchange_weak(prev, now_in_flight)) {
    }
    auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_start_);
    next_start_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
  return Permit(this);
}

void RateLimiter::release() {
  {
    std::lock_guard lock(mu_);
    --in_flight_;
  }
  cv_.notify_one();
}

Gateway::Gateway(std::unique_ptr<Transport> transport, RetryPolicy retry, int max_in_flight,
                 double requests_per_minute)
    : transport_(std::move(transport)),
      retry_(retry),
      limiter_(max_in_flight, requests_per_minute) {
  if (!transport_) throw Error(ErrorKind::Config, "gateway needs a transport");
  if (retry_.max_retries < 0) throw Error(ErrorKind::Config, "max_retries must be >= 0");
}

ChatResult Gateway::complete(const ChatRequest& request) {
  if (request.system_prompt.empty() || request.user_prompt.empty())
    throw Error(ErrorKind::Config, "chat request prompts must be non-empty");
  completions_.fetch_add(1);
  auto start = std::chrono::steady_clock::now();
  ChatResult result;
  for (int attempt = 0;; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(retry_.delay_before_retry(attempt - 1));
    Attempt a;
    {
      auto permit = limiter_.acquire();
      attempts_.fetch_add(1);
      a = transport_->send(request);
    }
    result.attempt_count = attempt + 1;
    result.outcome = a.outcome;
    result.content = std::move(a.content);
    if (a.outcome == Outcome::Text && result.content.empty()) {
      result.outcome = Outcome::Refused;
    }
    bool retry = result.outcome == Outcome::TransportError && a.retryable &&
                 attempt < retry_.max_retries;
    if (!retry) break;
  }
  result.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - start);
  return result;
}

// ---------------------------------------------------------------------------
// Scripted

namespace {

Attempt attempt_from_json(const std::string& key, const json& v) {
  Attempt a;
  if (v.is_string()) {
    a.outcome = Outcome::Text;
    a.content = v.get<std::string>();
    return a;
  }
  if (v.is_object()) {
    if (v.contains("text")) {
      a.outcome = Outcome::Text;
      a.content = v.at("text").get<std::string>();
      return a;
    }
    if (v.contains("error")) {
      auto code = v.at("error").get<std::string>();
      if (code == "content_filter") {
        a.outcome = Outcome::ContentFiltered;
      } else if (code == "refused") {
        a.outcome = Outcome::Refused;
      } else if (code == "transport") {
        a.outcome = Outcome::TransportError;
        a.content = "scripted transport error";
        a.retryable = false;
      } else {
        throw Error(ErrorKind::Config, "unknown scripted error code '" + code + "' for " + key);
      }
      return a;
    }
  }
  throw Error(ErrorKind::Config, "malformed scripted entry for " + key);
}

}  // namespace

ScriptedTransport::ScriptedTransport(std::map<std::string, Attempt> script)
    : script_(std::move(script)) {}

ScriptedTransport ScriptedTransport::from_json(const json& script) {
  if (!script.is_object()) throw Error(ErrorKind::Config, "script must be a JSON object");
  std::map<std::string, Attempt> m;
  for (const auto& [k, v] : script.items()) m.emplace(k, attempt_from_json(k, v));
  return ScriptedTransport(std::move(m));
}

ScriptedTransport ScriptedTransport::from_file(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(text::read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, "bad script " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

Attempt ScriptedTransport::send(const ChatRequest& request) {
  auto it = script_.find(request.request_key);
  if (it == script_.end()) it = script_.find("*");
  if (it == script_.end()) {
    return Attempt{Outcome::TransportError, "no scripted reply for " + request.request_key, false};
  }
  return it->second;
}

// ---------------------------------------------------------------------------
// Synthetic respondent

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finaliser over the combined words
  std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double draw_noise(std::uint64_t seed, std::string_view item, double sd) {
  if (sd <= 0) return 0.0;
  std::mt19937_64 rng(mix(seed, text::fnv1a64(item)));
  std::normal_distribution<double> dist(0.0, sd);
  return dist(rng);
}

int clamp_round(double v, int lo, int hi) {
  return std::clamp(static_cast<int>(std::lround(v)), lo, hi);
}

}  // namespace

int synth_rating(const std::string& adjective, const SyntheticRespondentConfig& config) {
  if (!config.adjective_key) throw Error(ErrorKind::Config, "synthetic respondent has no key");
  auto it = config.adjective_key->find(adjective);
  if (it == config.adjective_key->end())
    throw Error(ErrorKind::UnknownAdjective, "adjective not in key: " + adjective);
  const auto& e = it->second;
  double eps = draw_noise(config.seed, adjective, config.noise_sd);
  double v = 5.0 + 4.0 * e.polarity * e.strength * config.trait[static_cast<std::size_t>(e.dimension)] + eps;
  return clamp_round(v, 1, 9);
}

int synth_item_rating(const std::string& item_id, const TraitVector& trait, const ItemKey& key,
                      double noise_sd, std::uint64_t seed) {
  auto it = key.find(item_id);
  if (it == key.end()) throw Error(ErrorKind::UnknownAdjective, "item not in key: " + item_id);
  double sign = it->second.reversed ? -1.0 : 1.0;
  double eps = draw_noise(seed, item_id, noise_sd);
  double v = 3.0 + 2.0 * sign * trait[static_cast<std::size_t>(it->second.dimension)] + eps;
  return clamp_round(v, 1, 5);
}

SyntheticRespondentConfig SyntheticPanel::respondent(long agent_id) const {
  auto it = traits.find(agent_id);
  if (it == traits.end())
    throw Error(ErrorKind::Config, "no trait vector for agent " + std::to_string(agent_id));
  return SyntheticRespondentConfig{it->second, adjective_key, noise_sd,
                                   mix(seed, static_cast<std::uint64_t>(agent_id))};
}

SyntheticTransport::SyntheticTransport(SyntheticPanel panel) : panel_(std::move(panel)) {}

namespace {

std::string synthetic_biography(long slot, const std::string& user_prompt, std::uint64_t seed) {
  static const char* first[] = {"Alex", "Sam", "Jordan", "Robin", "Casey", "Morgan", "Taylor", "Jamie"};
  static const char* last[] = {"Hale", "Marsh", "Quinn", "Ellis", "Baker", "Reid", "Shaw", "Lowe"};
  static const char* hobbies[] = {"hiking", "chess", "gardening", "baking", "cycling", "reading",
                                  "photography", "football"};
  std::string occupation = "Job seeker";
  auto pos = user_prompt.find("Occupation:");
  if (pos != std::string::npos) {
    auto end = user_prompt.find('\n', pos);
    occupation = text::trim(user_prompt.substr(pos + 11, end == std::string::npos ? end : end - pos - 11));
  }
  std::mt19937_64 rng(mix(seed, static_cast<std::uint64_t>(slot)));
  auto pick = [&](auto& arr) { return arr[rng() % std::size(arr)]; };
  json bio = {
      {"Full Name", std::string(pick(first)) + " " + pick(last)},
      {"Age", 16 + static_cast<int>(rng() % 45)},
      {"Occupation", occupation},
      {"Hobbies/interests", std::string(pick(hobbies)) + ", " + pick(hobbies)},
      {"Personality Facts",
       {{"Positive Fact 1", "Reliable"},
        {"Positive Fact 2", "Curious"},
        {"Negative Fact", "Can be impatient"}}},
  };
  return bio.dump();
}

}  // namespace

Attempt SyntheticTransport::send(const ChatRequest& request) {
  auto parts = parse_request_key(request.request_key);
  if (!parts) throw Error(ErrorKind::Config, "synthetic backend cannot route key " + request.request_key);
  Attempt a;
  a.outcome = Outcome::Text;
  if (parts->survey_id == "generate") {
    a.content = synthetic_biography(parts->agent_id, request.user_prompt, panel_.seed);
    return a;
  }
  auto cfg = panel_.respondent(parts->agent_id);
  if (panel_.adjective_key && panel_.adjective_key->count(parts->item_id)) {
    int v = synth_rating(parts->item_id, cfg);
    a.content = LikertScale::lexical9().label(v) + " - synthetic respondent.";
    return a;
  }
  if (panel_.item_key && panel_.item_key->count(parts->item_id)) {
    int v = synth_item_rating(parts->item_id, cfg.trait, *panel_.item_key, panel_.noise_sd, cfg.seed);
    a.content = LikertScale::pir5().label(v) + ". Synthetic respondent.";
    return a;
  }
  throw Error(ErrorKind::UnknownAdjective, "synthetic key has no entry for " + parts->item_id);
}

// ---------------------------------------------------------------------------
// Loaders

namespace {

int dimension_index(const json& v) {
  if (v.is_number_integer()) {
    int d = v.get<int>();
    if (d < 0 || d > 5) throw Error(ErrorKind::Config, "dimension index out of range");
    return d;
  }
  auto s = text::to_lower(v.get<std::string>());
  static const std::string letters = "hexaco";
  if (s.size() == 1 && letters.find(s[0]) != std::string::npos)
    return static_cast<int>(letters.find(s[0]));
  throw Error(ErrorKind::Config, "bad dimension '" + s + "'");
}

json parse_json_file(const std::filesystem::path& path) {
  try {
    return json::parse(text::read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, "bad JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace

AdjectiveKey load_adjective_key(const std::filesystem::path& path) {
  auto j = parse_json_file(path);
  if (!j.is_object()) throw Error(ErrorKind::Config, "adjective key must be an object");
  AdjectiveKey key;
  for (const auto& [adj, e] : j.items()) {
    AdjectiveKeyEntry entry;
    try {
      entry.dimension = dimension_index(e.at("dimension"));
      entry.polarity = e.at("polarity").get<int>();
      entry.strength = e.value("strength", 1.0);
    } catch (const json::exception& ex) {
      throw Error(ErrorKind::Config, "bad adjective key entry '" + adj + "': " + ex.what());
    }
    if (entry.polarity != 1 && entry.polarity != -1)
      throw Error(ErrorKind::Config, "polarity must be +1 or -1 for " + adj);
    if (!(entry.strength > 0 && entry.strength <= 1))
      throw Error(ErrorKind::Config, "strength must be in (0,1] for " + adj);
    key.emplace(text::to_lower(adj), entry);
  }
  return key;
}

std::map<long, TraitVector> load_traits(const std::filesystem::path& path) {
  auto j = parse_json_file(path);
  std::map<long, TraitVector> out;
  if (!j.is_object()) throw Error(ErrorKind::Config, "traits file must map agent_id -> [6 reals]");
  for (const auto& [id, v] : j.items()) {
    if (!v.is_array() || v.size() != 6)
      throw Error(ErrorKind::Config, "trait vector for " + id + " must have 6 entries");
    TraitVector t{};
    for (std::size_t i = 0; i < 6; ++i) {
      t[i] = v[i].get<double>();
      if (t[i] < -1 || t[i] > 1) throw Error(ErrorKind::Config, "trait out of [-1,1] for " + id);
    }
    out.emplace(std::stol(id), t);
  }
  return out;
}

ItemKey load_item_key_csv(const std::filesystem::path& path) {
  auto rows = text::read_csv(path);
  ItemKey key;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (i == 0 && !r.empty() && text::to_lower(text::trim(r[0])) == "item_id") continue;
    if (r.size() < 3) throw Error(ErrorKind::Config, "item key row needs item_id,dimension,reversed");
    ItemKeyEntry e;
    e.dimension = dimension_index(json(text::trim(r[1])));
    auto rev = text::to_lower(text::trim(r[2]));
    e.reversed = rev == "1" || rev == "true" || rev == "r" || rev == "yes";
    key.emplace(text::trim(r[0]), e);
  }
  return key;
}

// ---------------------------------------------------------------------------

std::unique_ptr<Gateway> make_gateway(const json& backend, const std::filesystem::path& base_dir) {
  if (!backend.is_object()) throw Error(ErrorKind::Config, "backend config must be an object");
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  };
  std::unique_ptr<Transport> transport;
  std::string kind;
  try {
    kind = backend.at("kind").get<std::string>();
    if (kind == "http") {
      HttpConfig http;
      http.base_url = backend.at("base_url").get<std::string>();
      http.model = backend.at("model").get<std::string>();
      http.api_key = backend.value("api_key", "");
      http.api_key_env = backend.value("api_key_env", "");
      http.auth_header = backend.value("auth_header", "Authorization");
      http.api_version = backend.value("api_version", "");
      http.timeout = std::chrono::milliseconds(backend.value("timeout_ms", 60000));
      transport = std::make_unique<HttpTransport>(std::move(http));
    } else if (kind == "scripted") {
      transport = std::make_unique<ScriptedTransport>(
          ScriptedTransport::from_file(resolve(backend.at("script").get<std::string>())));
    } else if (kind == "synthetic") {
      SyntheticPanel panel;
      panel.traits = load_traits(resolve(backend.at("traits").get<std::string>()));
      if (backend.contains("adjective_key"))
        panel.adjective_key = std::make_shared<AdjectiveKey>(
            load_adjective_key(resolve(backend.at("adjective_key").get<std::string>())));
      if (backend.contains("item_key"))
        panel.item_key = std::make_shared<ItemKey>(
            load_item_key_csv(resolve(backend.at("item_key").get<std::string>())));
      panel.noise_sd = backend.value("noise_sd", 0.0);
      panel.seed = backend.value("seed", std::uint64_t{0});
      if (panel.noise_sd < 0) throw Error(ErrorKind::Config, "noise_sd must be >= 0");
      transport = std::make_unique<SyntheticTransport>(std::move(panel));
    } else {
      throw Error(ErrorKind::Config, "unknown backend kind '" + kind + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, std::string("malformed backend config: ") + e.what());
  }

  RetryPolicy retry;
  retry.max_retries = backend.value("max_retries", 5);
  retry.base_delay = std::chrono::milliseconds(backend.value("base_delay_ms", 500));
  retry.max_delay = std::chrono::milliseconds(backend.value("max_delay_ms", 30000));
  auto gw = std::make_unique<Gateway>(std::move(transport), retry, backend.value("max_in_flight", 4),
                                      backend.value("requests_per_minute", 0.0));
  gw->default_temperature = backend.value("temperature", 0.7);
  gw->default_max_tokens = backend.value("max_tokens", 512);
  if (gw->default_temperature < 0 || gw->default_temperature > 2)
    throw Error(ErrorKind::Config, "temperature must be in [0,2]");
  if (gw->default_max_tokens < 1) throw Error(ErrorKind::Config, "max_tokens must be positive");
  return gw;
}

}  // namespace lexpsy::gateway
