#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "robustpath/path_engine.hpp"

namespace robustpath::cli {

struct InstanceConfig {
  nlohmann::json raw;
  std::shared_ptr<const ProblemInstance> instance;
  StepSchedule schedule;
  StopRule stop;
  std::optional<std::vector<double>> omegas;
  std::optional<Vector> start;
  std::uint64_t seed = 0;
};

/// Validates against the instance schema, then builds the instance.
/// Throws SchemaError (schema or consistency problems) or InputError.
InstanceConfig parse_config(const nlohmann::json& doc);
InstanceConfig load_config(const std::string& path);

GaugeSet parse_shape(const nlohmann::json& j, Eigen::Index n, const std::string& path);

/// Log-spaced grid from `from` down to `to`.
std::vector<double> log_grid(double from, double to, int points);

}  // namespace robustpath::cli
