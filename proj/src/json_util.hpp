#pragma once

// Schema-checked accessors over nlohmann::json. Failures become
// Error{kSchemaError} naming the offending path.

#include <json.hpp>

#include <optional>
#include <string>
#include <string_view>

#include "tcfaudit/error.hpp"

namespace tcfaudit::detail {

using Json = nlohmann::json;

[[noreturn]] inline void SchemaFail(std::string_view path,
                                    std::string_view what) {
  throw Error(ErrorCode::kSchemaError,
              std::string(path) + ": " + std::string(what));
}

inline Json ParseJson(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    SchemaFail(what, std::string("malformed JSON: ") + e.what());
  }
}

inline const Json& Field(const Json& obj, const char* key,
                         std::string_view path) {
  if (!obj.is_object()) SchemaFail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) {
    SchemaFail(path, std::string("missing required field '") + key + "'");
  }
  return *it;
}

inline const Json* OptionalField(const Json& obj, const char* key) {
  if (!obj.is_object()) return nullptr;
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

inline std::string Path(std::string_view base, std::string_view key) {
  return std::string(base) + "." + std::string(key);
}

inline std::string Path(std::string_view base, std::size_t index) {
  return std::string(base) + "[" + std::to_string(index) + "]";
}

inline std::int64_t AsInt(const Json& v, std::string_view path) {
  if (!v.is_number_integer()) SchemaFail(path, "expected an integer");
  return v.get<std::int64_t>();
}

inline bool AsBool(const Json& v, std::string_view path) {
  if (!v.is_boolean()) SchemaFail(path, "expected a boolean");
  return v.get<bool>();
}

inline const std::string& AsString(const Json& v, std::string_view path) {
  if (!v.is_string()) SchemaFail(path, "expected a string");
  return v.get_ref<const std::string&>();
}

inline const Json& AsArray(const Json& v, std::string_view path) {
  if (!v.is_array()) SchemaFail(path, "expected an array");
  return v;
}

inline std::int64_t IntField(const Json& obj, const char* key,
                             std::string_view path) {
  return AsInt(Field(obj, key, path), Path(path, key));
}

inline std::string StringField(const Json& obj, const char* key,
                               std::string_view path) {
  return AsString(Field(obj, key, path), Path(path, key));
}

inline std::optional<std::int64_t> OptionalInt(const Json& obj,
                                               const char* key,
                                               std::string_view path) {
  const Json* v = OptionalField(obj, key);
  if (!v) return std::nullopt;
  return AsInt(*v, Path(path, key));
}

inline std::optional<bool> OptionalBool(const Json& obj, const char* key,
                                        std::string_view path) {
  const Json* v = OptionalField(obj, key);
  if (!v) return std::nullopt;
  return AsBool(*v, Path(path, key));
}

inline std::optional<std::string> OptionalString(const Json& obj,
                                                 const char* key,
                                                 std::string_view path) {
  const Json* v = OptionalField(obj, key);
  if (!v) return std::nullopt;
  return AsString(*v, Path(path, key));
}

}  // namespace tcfaudit::detail
