#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "brw/deviation.hpp"

namespace brw {

// Value in the TOML-style config subset: scalars, arrays, inline tables.
struct ConfigValue;
using ConfigArray = std::vector<ConfigValue>;
using ConfigTable = std::map<std::string, ConfigValue>;

struct ConfigValue {
  std::variant<bool, double, std::string, ConfigArray, ConfigTable> v;

  bool is_table() const { return std::holds_alternative<ConfigTable>(v); }
  bool is_array() const { return std::holds_alternative<ConfigArray>(v); }
  bool is_number() const { return std::holds_alternative<double>(v); }
  bool is_string() const { return std::holds_alternative<std::string>(v); }
  bool is_bool() const { return std::holds_alternative<bool>(v); }

  double number(const std::string& what) const;
  const std::string& string(const std::string& what) const;
  bool boolean(const std::string& what) const;
  const ConfigArray& array(const std::string& what) const;
  const ConfigTable& table(const std::string& what) const;
};

// Parses the experiment-config document: [section] and [section.sub]
// headers, key = value lines, #-comments, strings, numbers, booleans,
// arrays and inline tables (both may span lines).
struct ParsedConfig {
  ConfigTable model;
  ConfigTable output;
  std::vector<std::pair<std::string, ConfigTable>> tasks;  // in file order
};

ParsedConfig parse_config_text(const std::string& text);

struct TaskSpec {
  std::string name;
  std::string kind;
  ConfigTable params;
};

struct ExperimentConfig {
  ConfigTable model;
  std::string output_dir = "out";
  std::uint64_t seed = 1;
  int jobs = 1;
  std::vector<TaskSpec> tasks;

  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig parse_file(const std::string& path);

  // Canonical serialization: fixed section order, sorted keys, shortest
  // round-trip number formatting. parse(canonical()) reproduces the config
  // and canonical() is a fixed point, so the hash is stable.
  std::string canonical() const;
  // FNV-1a 64 (hex) over the model, seed and tasks. The output directory and
  // job count do not change what is computed, so they stay out of the hash.
  std::string hash() const;

  ModelSpec build_model() const;
  // Builds a model with the overrides (same shape as [model]) applied on top.
  ModelSpec build_model_with(const ConfigTable& overrides) const;
};

// Model construction from a [model]-shaped table; shared with variants.
OffspringLaw offspring_from_config(const ConfigValue& v);
StepLaw step_from_config(const ConfigValue& v);

std::string format_double(double v);  // shortest round-trip, integers bare

}  // namespace brw
