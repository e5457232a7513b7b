#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace lexpsy::gateway {

struct ChatRequest {
  std::string system_prompt;
  std::string user_prompt;
  double temperature = 0.7;
  int max_tokens = 512;
  /// Idempotency key, unique per (survey, agent, item). See make_request_key.
  std::string request_key;
};

enum class Outcome { Text, ContentFiltered, Refused, TransportError };

const char* to_string(Outcome o) noexcept;

struct ChatResult {
  Outcome outcome = Outcome::TransportError;
  /// Reply text for Text, failure detail for TransportError, empty otherwise.
  std::string content;
  std::chrono::milliseconds latency{0};
  int attempt_count = 0;

  bool ok() const noexcept { return outcome == Outcome::Text; }
  bool operator==(const ChatResult&) const = default;
};

/// "<survey>/<agent>/<item>"; item may itself contain '/'.
std::string make_request_key(std::string_view survey_id, long agent_id, std::string_view item_id);

struct RequestKeyParts {
  std::string survey_id;
  long agent_id = 0;
  std::string item_id;
};
std::optional<RequestKeyParts> parse_request_key(std::string_view key);

/// Result of a single wire attempt.
struct Attempt {
  Outcome outcome = Outcome::TransportError;
  std::string content;
  bool retryable = true;  // only meaningful for TransportError
};

/// One backend attempt, no retry or pacing. Implementations must be safe to
/// call from several threads at once.
class Transport {
public:
  virtual ~Transport() = default;
  virtual Attempt send(const ChatRequest& request) = 0;
};

struct RetryPolicy {
  int max_retries = 5;
  std::chrono::milliseconds base_delay{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_delay{30000};

  std::chrono::milliseconds delay_before_retry(int retry_index) const;
};

/// Caps concurrent requests and spaces request starts so that no more than
/// requests_per_minute begin in any minute. rpm <= 0 disables pacing.
class RateLimiter {
public:
  RateLimiter(int max_in_flight, double requests_per_minute);

  class Permit {
  public:
    explicit Permit(RateLimiter* owner) : owner_(owner) {}
    Permit(Permit&& o) noexcept : owner_(std::exchange(o.owner_, nullptr)) {}
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;
    Permit& operator=(Permit&&) = delete;
    ~Permit() {
      if (owner_) owner_->release();
    }

  private:
    RateLimiter* owner_;
  };

  Permit acquire();
  int max_in_flight() const noexcept { return max_in_flight_; }
  int peak_in_flight() const noexcept { return peak_.load(); }

private:
  void release();

  int max_in_flight_;
  std::chrono::nanoseconds interval_{0};
  std::mutex mu_;
  std::condition_variable cv_;
  int in_flight_ = 0;
  std::atomic<int> peak_{0};
  std::chrono::steady_clock::time_point next_start_{};
};

/// Retrying, rate-limited front end over a Transport.
class Gateway {
public:
  Gateway(std::unique_ptr<Transport> transport, RetryPolicy retry = {}, int max_in_flight = 4,
          double requests_per_minute = 0.0);

  /// Exactly one ChatResult per call. TransportError is retried up to
  /// max_retries times with exponential backoff; ContentFiltered and Refused
  /// are returned on first sight.
  ChatResult complete(const ChatRequest& request);

  std::uint64_t completions() const noexcept { return completions_.load(); }
  std::uint64_t attempts() const noexcept { return attempts_.load(); }
  const RateLimiter& limiter() const noexcept { return limiter_; }
  int max_in_flight() const noexcept { return limiter_.max_in_flight(); }
  double default_temperature = 0.7;
  int default_max_tokens = 512;

private:
  std::unique_ptr<Transport> transport_;
  RetryPolicy retry_;
  RateLimiter limiter_;
  std::atomic<std::uint64_t> completions_{0};
  std::atomic<std::uint64_t> attempts_{0};
};

// ---------------------------------------------------------------------------
// Backends

struct HttpConfig {
  std::string base_url;          // e.g. https://api.openai.com/v1
  std::string model;
  std::string api_key;           // literal key; prefer api_key_env
  std::string api_key_env;       // environment variable holding the key
  std::string auth_header = "Authorization";  // "api-key" for Azure
  std::string api_version;       // appended as ?api-version= when set
  std::chrono::milliseconds timeout{60000};
};

class HttpTransport final : public Transport {
public:
  explicit HttpTransport(HttpConfig config);
  Attempt send(const ChatRequest& request) override;

  /// Classifies an HTTP status and body into an attempt. Exposed for tests.
  static Attempt classify_response(int status, const std::string& body);

private:
  HttpConfig config_;
  std::string scheme_host_port_;
  std::string endpoint_path_;
  std::string resolved_key_;
};

/// Replays canned replies keyed by request_key. Script values are either a
/// reply string or {"error": "content_filter"|"refused"|"transport"} or
/// {"text": "..."}. The key "*" supplies a fallback.
class ScriptedTransport final : public Transport {
public:
  explicit ScriptedTransport(std::map<std::string, Attempt> script);
  static ScriptedTransport from_json(const nlohmann::json& script);
  static ScriptedTransport from_file(const std::filesystem::path& path);

  Attempt send(const ChatRequest& request) override;

private:
  std::map<std::string, Attempt> script_;
};

struct AdjectiveKeyEntry {
  int dimension = 0;  // 0..5 in H,E,X,A,C,O order
  int polarity = 1;   // -1 or +1
  double strength = 1.0;  // (0, 1]
};

using AdjectiveKey = std::map<std::string, AdjectiveKeyEntry>;
using TraitVector = std::array<double, 6>;

struct SyntheticRespondentConfig {
  TraitVector trait{};
  std::shared_ptr<const AdjectiveKey> adjective_key;
  double noise_sd = 0.0;
  std::uint64_t seed = 0;
};

/// clamp(round(5 + 4 * polarity * strength * trait[dim] + eps), 1, 9), with
/// eps ~ N(0, noise_sd) drawn from a generator seeded by (seed, adjective).
int synth_rating(const std::string& adjective, const SyntheticRespondentConfig& config);

/// 5-point analogue for questionnaire items:
/// clamp(round(3 + 2 * sign * trait[dim] + eps), 1, 5), sign = -1 for reversed items.
struct ItemKeyEntry {
  int dimension = 0;
  bool reversed = false;
};
using ItemKey = std::map<std::string, ItemKeyEntry>;
int synth_item_rating(const std::string& item_id, const TraitVector& trait, const ItemKey& key,
                      double noise_sd, std::uint64_t seed);

struct SyntheticPanel {
  std::map<long, TraitVector> traits;  // agent_id -> trait vector
  std::shared_ptr<const AdjectiveKey> adjective_key;
  std::shared_ptr<const ItemKey> item_key;  // optional
  double noise_sd = 0.0;
  std::uint64_t seed = 0;

  /// Per-agent respondent configuration; the seed is mixed with agent_id so
  /// agents draw independent noise.
  SyntheticRespondentConfig respondent(long agent_id) const;
};

/// Deterministic respondent driven by planted trait vectors. Routes by the
/// request key: survey items are answered from the adjective or item key,
/// "generate/..." keys receive a templated biography.
class SyntheticTransport final : public Transport {
public:
  explicit SyntheticTransport(SyntheticPanel panel);
  Attempt send(const ChatRequest& request) override;

private:
  SyntheticPanel panel_;
};

AdjectiveKey load_adjective_key(const std::filesystem::path& path);
std::map<long, TraitVector> load_traits(const std::filesystem::path& path);
ItemKey load_item_key_csv(const std::filesystem::path& path);

/// Builds a gateway from a backend config object. Relative paths resolve
/// against base_dir. Throws Error(Config) on malformed specs.
///
///   {"kind": "http"|"scripted"|"synthetic",
///    "base_url", "model", "api_key_env", "auth_header", "api_version", "timeout_ms",
///    "script",
///    "traits", "adjective_key", "item_key", "noise_sd", "seed",
///    "max_retries", "base_delay_ms", "max_delay_ms",
///    "max_in_flight", "requests_per_minute", "temperature", "max_tokens"}
std::unique_ptr<Gateway> make_gateway(const nlohmann::json& backend,
                                      const std::filesystem::path& base_dir = {});

}  // namespace lexpsy::gateway
