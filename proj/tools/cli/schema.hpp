#pragma once

// A small JSON Schema subset: type, const, enum, properties, required,
// additionalProperties, items, minItems/maxItems, numeric bounds, anyOf,
// oneOf and local $ref. oneOf branches that pin "kind" with const are
// dispatched on the instance's kind so errors point into the right branch.

#include <string>

#include <json.hpp>

#include "robustpath/error.hpp"

namespace robustpath::cli {

class SchemaError : public InputError {
 public:
  SchemaError(const std::string& path, const std::string& message)
      : InputError(path + ": " + message), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Throws SchemaError for the first violation found.
void validate(const nlohmann::json& doc, const nlohmann::json& schema);

/// The instance schema shipped as docs/schema.json.
const nlohmann::json& instance_schema();

}  // namespace robustpath::cli
