#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace lexpsy {

/// Ordered response labels; label i (0-based) has value i + 1.
class LikertScale {
public:
  LikertScale(std::string name, std::vector<std::string> labels);

  /// "Extremely Inaccurate"(1) .. "Extremely Accurate"(9).
  static const LikertScale& lexical9();
  /// "Strongly disagree"(1) .. "Strongly agree"(5).
  static const LikertScale& pir5();
  static const LikertScale& by_name(std::string_view name);

  const std::string& name() const noexcept { return name_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  int size() const noexcept { return static_cast<int>(labels_.size()); }
  int min_value() const noexcept { return 1; }
  int max_value() const noexcept { return size(); }
  const std::string& label(int value) const;

  /// Longest case-insensitive label prefix after stripping quotes, whitespace,
  /// and markdown emphasis. Throws Error(Unparseable) when no label matches.
  int parse(std::string_view reply) const;

private:
  std::string name_;
  std::vector<std::string> labels_;
};

}  // namespace lexpsy
