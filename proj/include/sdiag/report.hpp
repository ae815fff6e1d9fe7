#pragma once

#include <string>
#include <utility>
#include <vector>

namespace sdiag {

inline constexpr const char* kToolVersion = "0.1.0";

// Line-oriented report: "key value" pairs in insertion order. Rendering is
// deterministic; the timestamp is the single wall-clock line and sits last so
// comparisons can drop it.
class Report {
 public:
  void add(const std::string& key, const std::string& value);
  void add(const std::string& key, double value);       // %.9e
  void add_int(const std::string& key, long long value);

  // Renders all lines, then "timestamp <iso8601>" unless with_timestamp is
  // false.
  std::string render(bool with_timestamp = true) const;

  const std::vector<std::pair<std::string, std::string>>& lines() const {
    return lines_;
  }
  // First value for a key, empty when absent.
  std::string value(const std::string& key) const;

 private:
  std::vector<std::pair<std::string, std::string>> lines_;
};

std::string format_double(double v);  // the %.9e used in reports

}  // namespace sdiag
