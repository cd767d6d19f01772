#ifndef ATLA_COMMON_JSON_UTIL_H_
#define ATLA_COMMON_JSON_UTIL_H_

#include <set>
#include <string>

#include "atla/common/error.h"
#include "json.hpp"

namespace atla {

// Strict reader for configuration objects: values are read into existing
// defaults, and Finish() rejects any key that was never read.
class JsonReader {
 public:
  JsonReader(const nlohmann::json& doc, std::string context)
      : doc_(doc), context_(std::move(context)) {
    if (!doc_.is_null() && !doc_.is_object()) {
      throw ValidationError("'" + context_ + "' must be a JSON object");
    }
  }

  bool Has(const std::string& key) const {
    return doc_.is_object() && doc_.contains(key);
  }

  // Returns the raw value (marking it as read), or null when absent.
  const nlohmann::json* Get(const std::string& key) {
    if (!Has(key)) return nullptr;
    used_.insert(key);
    return &doc_.at(key);
  }

  template <typename T>
  void Read(const std::string& key, T& out) {
    const nlohmann::json* v = Get(key);
    if (v == nullptr) return;
    try {
      out = v->get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ValidationError("config key '" + Path(key) + "' has the wrong type: " +
                            v->dump());
    }
  }

  std::string Path(const std::string& key) const {
    return context_.empty() ? key : context_ + "." + key;
  }

  void Finish() const {
    if (!doc_.is_object()) return;
    for (const auto& [key, value] : doc_.items()) {
      if (!used_.count(key)) {
        throw ValidationError("unknown config key '" + Path(key) + "'");
      }
    }
  }

 private:
  const nlohmann::json& doc_;
  std::string context_;
  std::set<std::string> used_;
};

}  // namespace atla

#endif  // ATLA_COMMON_JSON_UTIL_H_
