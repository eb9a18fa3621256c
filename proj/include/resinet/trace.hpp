#pragma once

#include <fstream>
#include <utility>

#include <json.hpp>

#include "resinet/common.hpp"

namespace resinet {

// JSONL event sink. Events go to a file, an in-memory buffer, or both;
// tests use the buffer, the CLI uses the file.
class TraceWriter {
 public:
  TraceWriter() = default;

  explicit TraceWriter(const std::string& path, bool keep_in_memory = false)
      : keep_(keep_in_memory) {
    file_.open(path, std::ios::trunc);
    if (!file_) throw Error(cat("cannot open trace file: ", path));
  }

  static TraceWriter in_memory() {
    TraceWriter w;
    w.keep_ = true;
    return w;
  }

  void event(nlohmann::json e) {
    e["seq"] = seq_++;
    if (file_.is_open()) {
      file_ << e.dump() << '\n';
      file_.flush();
    }
    if (keep_) events_.push_back(std::move(e));
  }

  const std::vector<nlohmann::json>& events() const { return events_; }
  int64_t count() const { return seq_; }

 private:
  std::ofstream file_;
  bool keep_ = false;
  int64_t seq_ = 0;
  std::vector<nlohmann::json> events_;
};

inline std::vector<nlohmann::json> read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(cat("cannot open trace file: ", path));
  std::vector<nlohmann::json> events;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      events.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(cat("trace line ", lineno, ": ", e.what()));
    }
  }
  return events;
}

}  // namespace resinet
