#pragma once

#include <set>
#include <string>
#include <utility>

#include "error.hpp"
#include "json.hpp"

namespace patrol {

// Strict object reader: typed lookups mark keys as seen, finish() rejects
// everything unseen so config typos cannot silently fall back to defaults.
class JsonSection {
 public:
  JsonSection(const nlohmann::json& j, std::string name)
      : j_(j), name_(std::move(name)) {
    if (!j_.is_object())
      fail(Err::bad_config, "section '" + name_ + "' must be a JSON object");
  }

  void number(const char* key, double& out) {
    if (const auto* v = visit(key)) {
      if (!v->is_number())
        fail(Err::bad_config, where(key) + " must be a number");
      out = v->get<double>();
    }
  }

  void integer(const char* key, int& out) {
    if (const auto* v = visit(key)) {
      if (!v->is_number_integer())
        fail(Err::bad_config, where(key) + " must be an integer");
      out = v->get<int>();
    }
  }

  void unsigned64(const char* key, uint64_t& out) {
    if (const auto* v = visit(key)) {
      const bool ok = v->is_number_unsigned() ||
                      (v->is_number_integer() && v->get<int64_t>() >= 0);
      if (!ok)
        fail(Err::bad_config, where(key) + " must be a non-negative integer");
      out = v->get<uint64_t>();
    }
  }

  void boolean(const char* key, bool& out) {
    if (const auto* v = visit(key)) {
      if (!v->is_boolean())
        fail(Err::bad_config, where(key) + " must be a boolean");
      out = v->get<bool>();
    }
  }

  void text(const char* key, std::string& out) {
    if (const auto* v = visit(key)) {
      if (!v->is_string())
        fail(Err::bad_config, where(key) + " must be a string");
      out = v->get<std::string>();
    }
  }

  // Two-element [lo, hi] number array.
  void number_range(const char* key, double& lo, double& hi) {
    if (const auto* v = visit(key)) {
      if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() ||
          !(*v)[1].is_number())
        fail(Err::bad_config, where(key) + " must be a [lo, hi] number pair");
      lo = (*v)[0].get<double>();
      hi = (*v)[1].get<double>();
    }
  }

  void integer_range(const char* key, int& lo, int& hi) {
    if (const auto* v = visit(key)) {
      if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number_integer() ||
          !(*v)[1].is_number_integer())
        fail(Err::bad_config, where(key) + " must be a [lo, hi] integer pair");
      lo = (*v)[0].get<int>();
      hi = (*v)[1].get<int>();
    }
  }

  const nlohmann::json* visit(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void ignore(const char* key) { seen_.insert(key); }

  std::string where(const char* key) const { return name_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key))
        fail(Err::bad_config, "unknown key '" + name_ + "." + key + "'");
  }

 private:
  const nlohmann::json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

}  // namespace patrol
