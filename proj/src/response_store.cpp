#include <unistd.h>

#include <fstream>

#include "lexpsy/error.hpp"
#include "lexpsy/survey.hpp"
#include "lexpsy/text.hpp"

namespace lexpsy::survey {

using nlohmann::json;

const char* to_string(ResponseStatus s) noexcept {
  switch (s) {
    case ResponseStatus::Ok: return "Ok";
    case ResponseStatus::ContentFiltered: return "ContentFiltered";
    case ResponseStatus::Missing: return "Missing";
    case ResponseStatus::Unparseable: return "Unparseable";
  }
  return "?";
}

ResponseStatus response_status_from_string(std::string_view s) {
  if (s == "Ok") return ResponseStatus::Ok;
  if (s == "ContentFiltered") return ResponseStatus::ContentFiltered;
  if (s == "Missing") return ResponseStatus::Missing;
  if (s == "Unparseable") return ResponseStatus::Unparseable;
  throw Error(ErrorKind::StoreCorrupt, "unknown response status '" + std::string(s) + "'");
}

namespace {

json record_body(const ResponseRecord& r) {
  json j = {{"agent_id", r.agent_id},
            {"item_id", r.item_id},
            {"raw", r.raw_text},
            {"status", to_string(r.status)},
            {"attempts", r.attempts}};
  j["value"] = r.parsed_value ? json(*r.parsed_value) : json(nullptr);
  return j;
}

std::string header_line(const StoreHeader& h) {
  json j = {{"type", "header"},
            {"version", 1},
            {"survey_id", h.survey_id},
            {"scale", h.scale},
            {"item_hash", h.item_hash}};
  return j.dump();
}

StoreHeader decode_header(std::string_view line) {
  try {
    auto j = json::parse(line);
    if (j.value("type", "") != "header") throw Error(ErrorKind::StoreCorrupt, "first line is not a store header");
    return StoreHeader{j.at("survey_id").get<std::string>(), j.at("scale").get<std::string>(),
                       j.at("item_hash").get<std::string>()};
  } catch (const json::exception& e) {
    throw Error(ErrorKind::StoreCorrupt, std::string("bad store header: ") + e.what());
  }
}

}  // namespace

std::string encode_record(const ResponseRecord& r) {
  auto body = record_body(r);
  auto crc = text::hex64(text::fnv1a64(body.dump()));
  body["crc"] = crc;
  return body.dump();
}

ResponseRecord decode_record(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::StoreCorrupt, std::string("unparseable store line: ") + e.what());
  }
  if (!j.is_object() || !j.contains("crc")) throw Error(ErrorKind::StoreCorrupt, "store line without checksum");
  auto crc = j.at("crc").get<std::string>();
  j.erase("crc");
  if (text::hex64(text::fnv1a64(j.dump())) != crc)
    throw Error(ErrorKind::StoreCorrupt, "store checksum mismatch");
  ResponseRecord r;
  try {
    r.agent_id = j.at("agent_id").get<long>();
    r.item_id = j.at("item_id").get<std::string>();
    r.raw_text = j.at("raw").get<std::string>();
    r.status = response_status_from_string(j.at("status").get<std::string>());
    r.attempts = j.at("attempts").get<int>();
    if (!j.at("value").is_null()) r.parsed_value = j.at("value").get<int>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::StoreCorrupt, std::string("bad store record: ") + e.what());
  }
  if (r.parsed_value.has_value() != (r.status == ResponseStatus::Ok))
    throw Error(ErrorKind::StoreCorrupt, "record value present iff status Ok violated");
  return r;
}

ResponseStore::Contents ResponseStore::read(const std::filesystem::path& path) {
  auto data = text::read_file(path);
  Contents out;
  auto complete = data.rfind('\n');
  std::string_view body = data;
  if (complete == std::string::npos) {
    out.torn_bytes = data.size();
    body = {};
  } else {
    out.torn_bytes = data.size() - complete - 1;
    body = std::string_view(data).substr(0, complete + 1);
  }
  if (body.empty()) throw Error(ErrorKind::StoreCorrupt, "store has no header: " + path.string());
  std::size_t pos = 0;
  bool first = true;
  while (pos < body.size()) {
    auto nl = body.find('\n', pos);
    auto line = body.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    if (first) {
      out.header = decode_header(line);
      first = false;
    } else {
      out.records.push_back(decode_record(line));
    }
  }
  return out;
}

ResponseStore::ResponseStore(std::filesystem::path path, const StoreHeader& header, bool sync)
    : path_(std::move(path)), header_(header), sync_(sync) {
  bool fresh = !std::filesystem::exists(path_) || std::filesystem::file_size(path_) == 0;
  if (!fresh) {
    auto contents = read(path_);
    if (!(contents.header == header_))
      throw Error(ErrorKind::Config, "store " + path_.string() + " belongs to survey '" +
                                         contents.header.survey_id + "' with a different header");
    if (contents.torn_bytes > 0) {
      auto size = std::filesystem::file_size(path_);
      std::filesystem::resize_file(path_, size - contents.torn_bytes);
    }
    records_ = std::move(contents.records);
    for (std::size_t i = 0; i < records_.size(); ++i)
      index_.emplace(std::make_pair(records_[i].agent_id, records_[i].item_id), i);
  } else if (path_.has_parent_path()) {
    std::filesystem::create_directories(path_.parent_path());
  }
  file_ = std::fopen(path_.c_str(), fresh ? "wb" : "ab");
  if (!file_) throw Error(ErrorKind::Config, "cannot open store " + path_.string());
  if (fresh) {
    auto line = header_line(header_) + "\n";
    std::fwrite(line.data(), 1, line.size(), file_);
    std::fflush(file_);
    if (sync_) ::fsync(::fileno(file_));
  }
}

ResponseStore::~ResponseStore() {
  if (file_) std::fclose(file_);
}

void ResponseStore::append(const ResponseRecord& record) {
  auto line = encode_record(record) + "\n";
  std::lock_guard lock(mu_);
  auto key = std::make_pair(record.agent_id, record.item_id);
  if (index_.count(key)) return;
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0)
    throw Error(ErrorKind::Config, "write to store failed: " + path_.string());
  if (sync_) ::fsync(::fileno(file_));
  index_.emplace(key, records_.size());
  records_.push_back(record);
}

bool ResponseStore::contains(long agent_id, const std::string& item_id) const {
  std::lock_guard lock(mu_);
  return index_.count(std::make_pair(agent_id, item_id)) > 0;
}

std::size_t ResponseStore::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

std::vector<ResponseRecord> ResponseStore::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

}  // namespace lexpsy::survey
