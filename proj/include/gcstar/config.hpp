#pragma once

#include <map>
#include <string>
#include <vector>

namespace gcstar {

// Flat key-value configuration with INI-style [section] grouping; keys are
// stored as "section.key".  Values keep their raw text; typed accessors
// parse on demand.
class Config {
public:
  static Config parse(const std::string& text, const std::string& origin = "<memory>");
  static Config load(const std::string& path);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  // Comma-separated list value.
  std::vector<std::string> get_list(const std::string& key) const;

  void set(const std::string& key, const std::string& value);
  const std::map<std::string, std::string>& entries() const { return entries_; }

  // Normalized re-emission (sorted keys, [section] grouping).
  std::string emit() const;

private:
  std::map<std::string, std::string> entries_;
};

}  // namespace gcstar
