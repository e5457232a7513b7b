#include "lexpsy/likert.hpp"

#include <cctype>
#include <set>

#include "lexpsy/error.hpp"
#include "lexpsy/text.hpp"

namespace lexpsy {

LikertScale::LikertScale(std::string name, std::vector<std::string> labels)
    : name_(std::move(name)), labels_(std::move(labels)) {
  if (labels_.size() < 2) throw Error(ErrorKind::Config, "scale needs at least two labels");
  std::set<std::string> seen;
  for (const auto& l : labels_) {
    if (!seen.insert(text::to_lower(l)).second)
      throw Error(ErrorKind::Config, "duplicate scale label: " + l);
  }
}

const LikertScale& LikertScale::lexical9() {
  static const LikertScale scale("lexical9",
                                 {"Extremely Inaccurate", "Very Inaccurate", "Moderately Inaccurate",
                                  "Slightly Inaccurate", "Neither Accurate Nor Inaccurate",
                                  "Slightly Accurate", "Moderately Accurate", "Very Accurate",
                                  "Extremely Accurate"});
  return scale;
}

const LikertScale& LikertScale::pir5() {
  static const LikertScale scale(
      "pir5", {"Strongly disagree", "Disagree", "Neutral", "Agree", "Strongly agree"});
  return scale;
}

const LikertScale& LikertScale::by_name(std::string_view name) {
  if (name == "lexical9") return lexical9();
  if (name == "pir5") return pir5();
  throw Error(ErrorKind::Config, "unknown scale: " + std::string(name));
}

const std::string& LikertScale::label(int value) const {
  if (value < 1 || value > size())
    throw Error(ErrorKind::Config, "scale value out of range: " + std::to_string(value));
  return labels_[static_cast<std::size_t>(value - 1)];
}

int LikertScale::parse(std::string_view reply) const {
  // Strip leading decoration: whitespace, quotes, markdown emphasis and bullets.
  auto is_decoration = [](char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == '"' || c == '\'' || c == '`' ||
           c == '*' || c == '_' || c == '#' || c == '>' || c == '-';
  };
  while (!reply.empty() && is_decoration(reply.front())) reply.remove_prefix(1);
  // Typographic quotes arrive as UTF-8 multi-byte sequences.
  for (std::string_view q : {"\xE2\x80\x98", "\xE2\x80\x99", "\xE2\x80\x9C", "\xE2\x80\x9D"}) {
    if (reply.substr(0, q.size()) == q) {
      reply.remove_prefix(q.size());
      while (!reply.empty() && is_decoration(reply.front())) reply.remove_prefix(1);
    }
  }

  int best = 0;
  std::size_t best_len = 0;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const auto& l = labels_[i];
    if (l.size() > best_len && text::iequals_prefix(reply, l)) {
      // Reject matches that continue into a longer word ("Agreeable" is not "Agree").
      if (reply.size() > l.size() && std::isalpha(static_cast<unsigned char>(reply[l.size()])))
        continue;
      best = static_cast<int>(i) + 1;
      best_len = l.size();
    }
  }
  if (best == 0) throw Error(ErrorKind::Unparseable, "no scale label prefixes reply");
  return best;
}

}  // namespace lexpsy
