#include "gcstar/config.hpp"

#include <fstream>
#include <sstream>

#include "gcstar/errors.hpp"

namespace gcstar {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& origin) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw DomainError(origin + ":" + std::to_string(line_no) + ": unterminated section");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DomainError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw DomainError(origin + ":" + std::to_string(line_no) + ": empty key");
    }
    cfg.entries_[section.empty() ? key : section + "." + key] = value;
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DomainError("cannot open config file " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return parse(buf.str(), path);
}

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

std::string Config::require_string(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw DomainError("config: required key '" + key + "' missing");
  return it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw DomainError("config: key '" + key + "': cannot parse '" + it->second +
                      "' as a number");
  }
}

long Config::get_long(const std::string& key, long fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    size_t used = 0;
    const long v = std::stol(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw DomainError("config: key '" + key + "': cannot parse '" + it->second +
                      "' as an integer");
  }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw DomainError("config: key '" + key + "': cannot parse '" + v + "' as a boolean");
}

std::vector<std::string> Config::get_list(const std::string& key) const {
  std::vector<std::string> out;
  auto it = entries_.find(key);
  if (it == entries_.end()) return out;
  std::string cur;
  for (char ch : it->second) {
    if (ch == ',') {
      const std::string item = trim(cur);
      if (!item.empty()) out.push_back(item);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  const std::string item = trim(cur);
  if (!item.empty()) out.push_back(item);
  return out;
}

void Config::set(const std::string& key, const std::string& value) {
  entries_[key] = value;
}

std::string Config::emit() const {
  std::ostringstream out;
  std::string section;
  bool first = true;
  for (const auto& [key, value] : entries_) {
    const auto dot = key.rfind('.');
    const std::string sec = dot == std::string::npos ? "" : key.substr(0, dot);
    const std::string name = dot == std::string::npos ? key : key.substr(dot + 1);
    if (sec != section || first) {
      if (!first) out << "\n";
      if (!sec.empty()) out << "[" << sec << "]\n";
      section = sec;
      first = false;
    }
    out << name << " = " << value << "\n";
  }
  return out.str();
}

}  // namespace gcstar
