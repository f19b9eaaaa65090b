#include "schema.hpp"

#include <cmath>
#include <optional>

#include "schema_text.hpp"

namespace robustpath::cli {

namespace {

using nlohmann::json;

std::string type_name(const json& v) {
  switch (v.type()) {
    case json::value_t::object:
      return "object";
    case json::value_t::array:
      return "array";
    case json::value_t::string:
      return "string";
    case json::value_t::boolean:
      return "boolean";
    case json::value_t::null:
      return "null";
    case json::value_t::number_integer:
    case json::value_t::number_unsigned:
      return "integer";
    case json::value_t::number_float:
      return "number";
    default:
      return "value";
  }
}

bool has_type(const json& v, const std::string& t) {
  if (t == "number") return v.is_number();
  if (t == "integer") {
    if (v.is_number_integer()) return true;
    return v.is_number_float() && std::floor(v.get<double>()) == v.get<double>();
  }
  return type_name(v) == t;
}

class Validator {
 public:
  explicit Validator(const json& root) : root_(root) {}

  // Returns the first error as (path, message), or nullopt.
  std::optional<std::pair<std::string, std::string>> check(const json& v, const json& s, const std::string& path) const {
    if (s.contains("$ref")) return check(v, resolve(s["$ref"].get<std::string>()), path);

    if (s.contains("type")) {
      const json& t = s["type"];
      bool ok = false;
      if (t.is_array()) {
        for (const auto& x : t) ok = ok || has_type(v, x.get<std::string>());
      } else {
        ok = has_type(v, t.get<std::string>());
      }
      if (!ok) return err(path, "expected " + (t.is_array() ? t.dump() : t.get<std::string>()) + ", found " + type_name(v));
    }
    if (s.contains("const") && v != s["const"]) return err(path, "expected " + s["const"].dump() + ", found " + v.dump());
    if (s.contains("enum")) {
      bool found = false;
      for (const auto& e : s["enum"]) found = found || v == e;
      if (!found) return err(path, v.dump() + " is not one of " + s["enum"].dump());
    }
    if (v.is_number()) {
      const double x = v.get<double>();
      if (s.contains("minimum") && x < s["minimum"].get<double>())
        return err(path, "must be >= " + s["minimum"].dump());
      if (s.contains("exclusiveMinimum") && x <= s["exclusiveMinimum"].get<double>())
        return err(path, "must be > " + s["exclusiveMinimum"].dump());
      if (s.contains("maximum") && x > s["maximum"].get<double>())
        return err(path, "must be <= " + s["maximum"].dump());
      if (s.contains("exclusiveMaximum") && x >= s["exclusiveMaximum"].get<double>())
        return err(path, "must be < " + s["exclusiveMaximum"].dump());
    }
    if (v.is_array()) {
      if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>())
        return err(path, "needs at least " + s["minItems"].dump() + " items");
      if (s.contains("maxItems") && v.size() > s["maxItems"].get<std::size_t>())
        return err(path, "allows at most " + s["maxItems"].dump() + " items");
      if (s.contains("items")) {
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (auto e = check(v[i], s["items"], path + "[" + std::to_string(i) + "]")) return e;
        }
      }
    }
    if (v.is_object()) {
      if (s.contains("required")) {
        for (const auto& r : s["required"]) {
          if (!v.contains(r.get<std::string>())) return err(path, "missing required key '" + r.get<std::string>() + "'");
        }
      }
      const json* props = s.contains("properties") ? &s["properties"] : nullptr;
      for (auto it = v.begin(); it != v.end(); ++it) {
        const std::string child = path + "." + it.key();
        if (props != nullptr && props->contains(it.key())) {
          if (auto e = check(it.value(), (*props)[it.key()], child)) return e;
        } else if (s.contains("additionalProperties") && s["additionalProperties"] == false) {
          return err(child, "unknown key");
        }
      }
    }
    if (s.contains("anyOf")) {
      std::optional<std::pair<std::string, std::string>> first;
      for (const auto& branch : s["anyOf"]) {
        auto e = check(v, branch, path);
        if (!e) return std::nullopt;
        if (!first) first = e;
      }
      return err(path, "does not match any allowed form (" + first->first + ": " + first->second + ")");
    }
    if (s.contains("oneOf")) return check_one_of(v, s["oneOf"], path);
    return std::nullopt;
  }

 private:
  static std::optional<std::pair<std::string, std::string>> err(const std::string& path, const std::string& msg) {
    return std::make_pair(path, msg);
  }

  const json& resolve(const std::string& ref) const {
    if (ref.rfind("#/", 0) != 0) throw std::logic_error("schema: only local references are supported: " + ref);
    return root_.at(json::json_pointer(ref.substr(1)));
  }

  static const json* kind_const(const json& branch) {
    if (!branch.contains("properties")) return nullptr;
    const json& p = branch["properties"];
    if (!p.contains("kind") || !p["kind"].contains("const")) return nullptr;
    return &p["kind"]["const"];
  }

  std::optional<std::pair<std::string, std::string>> check_one_of(const json& v, const json& branches,
                                                                  const std::string& path) const {
    bool dispatch = true;
    json kinds = json::array();
    for (const auto& b : branches) {
      const json* k = kind_const(b);
      if (k == nullptr) {
        dispatch = false;
        break;
      }
      kinds.push_back(*k);
    }
    if (dispatch) {
      if (!v.is_object()) return err(path, "expected object, found " + type_name(v));
      if (!v.contains("kind")) return err(path, "missing required key 'kind'");
      for (const auto& b : branches) {
        if (*kind_const(b) == v["kind"]) return check(v, b, path);
      }
      return err(path + ".kind", v["kind"].dump() + " is not one of " + kinds.dump());
    }
    int matches = 0;
    std::optional<std::pair<std::string, std::string>> first;
    for (const auto& b : branches) {
      auto e = check(v, b, path);
      if (!e) {
        ++matches;
      } else if (!first) {
        first = e;
      }
    }
    if (matches == 1) return std::nullopt;
    if (matches == 0) return err(path, "does not match any allowed form (" + first->first + ": " + first->second + ")");
    return err(path, "matches more than one allowed form");
  }

  const json& root_;
};

}  // namespace

void validate(const nlohmann::json& doc, const nlohmann::json& schema) {
  Validator v(schema);
  if (auto e = v.check(doc, schema, "$")) throw SchemaError(e->first, e->second);
}

const nlohmann::json& instance_schema() {
  static const nlohmann::json schema = nlohmann::json::parse(kInstanceSchemaText);
  return schema;
}

}  // namespace robustpath::cli
