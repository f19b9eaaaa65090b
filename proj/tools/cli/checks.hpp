#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"

namespace robustpath::cli {

struct CheckResult {
  std::string name;
  /// False when the instance does not meet the statement's hypotheses; the
  /// check then passes vacuously and `note` says why.
  bool applicable = true;
  bool pass = false;
  double bound = 0.0;
  double observed = 0.0;
  std::string note;
  nlohmann::json details = nlohmann::json::object();

  nlohmann::json to_json() const;
};

const std::vector<std::string>& known_checks();

/// Throws InputError for an unknown name.
CheckResult run_check(const std::string& name, const InstanceConfig& cfg);

}  // namespace robustpath::cli
