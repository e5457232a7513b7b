#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lexpsy/gateway.hpp"
#include "lexpsy/persona.hpp"
#include "lexpsy/survey.hpp"

namespace testing {

namespace fs = std::filesystem;

class TempDir {
public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("lexpsy-test-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

private:
  fs::path path_;
};

inline void write(const fs::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  f << content;
}

inline std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

/// Likert-like integer matrix with a fraction of cells set to NaN.
inline Eigen::MatrixXd random_ratings(std::mt19937_64& rng, Eigen::Index n, Eigen::Index p, double mask_frac,
                                      int levels = 9) {
  std::uniform_int_distribution<int> v(1, levels);
  std::bernoulli_distribution mask(mask_frac);
  Eigen::MatrixXd m(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) m(i, j) = mask(rng) ? std::nan("") : v(rng);
  return m;
}

inline lexpsy::survey::ResponseMatrix to_response_matrix(const Eigen::MatrixXd& values) {
  lexpsy::survey::ResponseMatrix m;
  for (Eigen::Index i = 0; i < values.rows(); ++i) m.agent_ids.push_back(i);
  for (Eigen::Index j = 0; j < values.cols(); ++j) m.item_ids.push_back("item" + std::to_string(j));
  m.values = values;
  return m;
}

inline lexpsy::persona::Biography make_bio(long id, int age = 30, const std::string& hobbies = "reading") {
  lexpsy::persona::Biography b;
  b.agent_id = id;
  b.full_name = "Agent " + std::to_string(id);
  b.age = age;
  b.occupation = "Teacher";
  b.hobbies_interests = hobbies;
  b.positive_fact_1 = "Kind";
  b.positive_fact_2 = "Curious";
  b.negative_fact = "Stubborn";
  return b;
}

inline lexpsy::persona::Population make_population(long n) {
  lexpsy::persona::Population pop;
  pop.name = "test";
  for (long i = 0; i < n; ++i) pop.agents.push_back(make_bio(i, 20 + static_cast<int>(i % 40)));
  return pop;
}

/// Counts calls and forwards to an inner transport.
class CountingTransport final : public lexpsy::gateway::Transport {
public:
  CountingTransport(std::unique_ptr<lexpsy::gateway::Transport> inner, std::atomic<int>* counter)
      : inner_(std::move(inner)), counter_(counter) {}
  lexpsy::gateway::Attempt send(const lexpsy::gateway::ChatRequest& r) override {
    counter_->fetch_add(1);
    return inner_->send(r);
  }

private:
  std::unique_ptr<lexpsy::gateway::Transport> inner_;
  std::atomic<int>* counter_;
};

inline lexpsy::gateway::RetryPolicy fast_retry(int retries = 5) {
  lexpsy::gateway::RetryPolicy r;
  r.max_retries = retries;
  r.base_delay = std::chrono::milliseconds(1);
  r.max_delay = std::chrono::milliseconds(4);
  return r;
}

}  // namespace testing
