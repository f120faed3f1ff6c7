#pragma once

#include "aris/scene.hpp"

#include <stdexcept>
#include <string>

namespace aris {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error("config field '" + field + "': " + what),
        field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Key-value scenario file. M, K, N are required; everything else defaults
// to the stock simulation values. dB-valued fields accept "dB"/"dBm"
// suffixes, power fields additionally "mW"/"W"/"uW". Per-user fields take
// either one value (broadcast) or K comma-separated values.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& text);

// One line per field with units; written next to the README.
std::string scenario_schema_doc();

}  // namespace aris
