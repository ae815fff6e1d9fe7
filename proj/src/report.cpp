#include "sdiag/report.hpp"

#include <cstdio>
#include <ctime>
#include <sstream>

namespace sdiag {

std::string format_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.9e", v);
  return buf;
}

void Report::add(const std::string& key, const std::string& value) {
  lines_.emplace_back(key, value);
}

void Report::add(const std::string& key, double value) {
  lines_.emplace_back(key, format_double(value));
}

void Report::add_int(const std::string& key, long long value) {
  lines_.emplace_back(key, std::to_string(value));
}

std::string Report::render(bool with_timestamp) const {
  std::ostringstream out;
  out << "sdiag-report 1\n";
  for (const auto& [k, v] : lines_) out << k << ' ' << v << '\n';
  if (with_timestamp) {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    out << "timestamp " << buf << '\n';
  }
  return out.str();
}

std::string Report::value(const std::string& key) const {
  for (const auto& [k, v] : lines_)
    if (k == key) return v;
  return "";
}

}  // namespace sdiag
