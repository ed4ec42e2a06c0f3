#pragma once

#include <array>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "imukit/calibration.hpp"
#include "imukit/pgo.hpp"

namespace imukit {

/// Minimal TOML subset: comments, [section] headers, bare keys, numbers,
/// booleans, quoted strings, flat arrays and one level of array nesting
/// (enough for `masks = [[t0, t1], ...]`). Keys are flattened to
/// "section.key".
struct TomlValue {
  enum class Kind { kNumber, kBool, kString, kArray };
  Kind kind = Kind::kNumber;
  double number = 0.0;
  bool boolean = false;
  std::string str;
  std::vector<TomlValue> array;
};

using TomlTable = std::map<std::string, TomlValue>;

namespace toml_detail {

inline void skip_ws(const std::string& s, std::size_t& i) {
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
}

inline TomlValue parse_value(const std::string& s, std::size_t& i,
                             const std::string& context);

inline TomlValue parse_array(const std::string& s, std::size_t& i,
                             const std::string& context) {
  TomlValue v;
  v.kind = TomlValue::Kind::kArray;
  ++i;  // consume '['
  skip_ws(s, i);
  while (i < s.size() && s[i] != ']') {
    v.array.push_back(parse_value(s, i, context));
    skip_ws(s, i);
    if (i < s.size() && s[i] == ',') {
      ++i;
      skip_ws(s, i);
    }
  }
  if (i >= s.size() || s[i] != ']') {
    throw std::runtime_error(context + ": unterminated array");
  }
  ++i;
  return v;
}

inline TomlValue parse_value(const std::string& s, std::size_t& i,
                             const std::string& context) {
  skip_ws(s, i);
  if (i >= s.size()) {
    throw std::runtime_error(context + ": missing value");
  }
  TomlValue v;
  if (s[i] == '[') {
    return parse_array(s, i, context);
  }
  if (s[i] == '"') {
    v.kind = TomlValue::Kind::kString;
    ++i;
    while (i < s.size() && s[i] != '"') v.str.push_back(s[i++]);
    if (i >= s.size()) {
      throw std::runtime_error(context + ": unterminated string");
    }
    ++i;
    return v;
  }
  std::size_t start = i;
  while (i < s.size() && s[i] != ',' && s[i] != ']' && s[i] != '#' &&
         s[i] != ' ' && s[i] != '\t') {
    ++i;
  }
  const std::string token = s.substr(start, i - start);
  if (token == "true" || token == "false") {
    v.kind = TomlValue::Kind::kBool;
    v.boolean = token == "true";
    return v;
  }
  try {
    std::size_t used = 0;
    v.number = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
  } catch (const std::exception&) {
    throw std::runtime_error(context + ": malformed value '" + token + "'");
  }
  return v;
}

}  // namespace toml_detail

inline TomlTable parse_toml(std::istream& in, const std::string& name = "toml") {
  TomlTable table;
  std::string line;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string context = name + ":" + std::to_string(lineno);
    // strip comment (naive: '#' inside strings is not supported)
    if (const auto pos = line.find('#'); pos != std::string::npos) {
      line.erase(pos);
    }
    std::size_t i = 0;
    toml_detail::skip_ws(line, i);
    if (i >= line.size() || line[i] == '\r') continue;
    if (line[i] == '[') {
      const auto close = line.find(']', i);
      if (close == std::string::npos) {
        throw std::runtime_error(context + ": unterminated section header");
      }
      section = line.substr(i + 1, close - i - 1);
      continue;
    }
    const auto eq = line.find('=', i);
    if (eq == std::string::npos) {
      throw std::runtime_error(context + ": expected key = value");
    }
    std::string key = line.substr(i, eq - i);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) {
      key.pop_back();
    }
    for (char c : key) {
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
            c == '-' || c == '.')) {
        throw std::runtime_error(context + ": malformed key '" + key + "'");
      }
    }
    std::size_t vi = eq + 1;
    const TomlValue value = toml_detail::parse_value(line, vi, context);
    table[section.empty() ? key : section + "." + key] = value;
  }
  return table;
}

inline TomlTable parse_toml_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error(path + ": cannot open config");
  }
  return parse_toml(in, path);
}

inline double toml_number(const TomlTable& t, const std::string& key,
                          double fallback) {
  const auto it = t.find(key);
  if (it == t.end()) return fallback;
  if (it->second.kind != TomlValue::Kind::kNumber) {
    throw std::runtime_error("config key '" + key + "' is not a number");
  }
  return it->second.number;
}

/// Application config: calibration, solver, and mask settings.
struct AppConfig {
  CalibConfig calib;
  SolveOptions solve;
  std::vector<std::array<double, 2>> masks;
};

inline AppConfig app_config_from_table(const TomlTable& t) {
  AppConfig cfg;
  cfg.calib.lr = toml_number(t, "calib.lr", cfg.calib.lr);
  cfg.calib.weight_decay =
      toml_number(t, "calib.weight_decay", cfg.calib.weight_decay);
  cfg.calib.epochs =
      static_cast<int>(toml_number(t, "calib.epochs", cfg.calib.epochs));
  cfg.calib.huber_delta =
      toml_number(t, "calib.huber_delta", cfg.calib.huber_delta);
  cfg.calib.epsilon = toml_number(t, "calib.epsilon", cfg.calib.epsilon);
  if (const auto it = t.find("calib.loss_weights"); it != t.end()) {
    const auto& arr = it->second.array;
    if (it->second.kind != TomlValue::Kind::kArray || arr.size() != 3) {
      throw std::runtime_error("calib.loss_weights must be [wr, wv, wp]");
    }
    cfg.calib.loss_weights = {arr[0].number, arr[1].number, arr[2].number};
  }

  cfg.solve.lambda0 = toml_number(t, "solve.lambda0", cfg.solve.lambda0);
  cfg.solve.max_iters =
      static_cast<int>(toml_number(t, "solve.max_iters", cfg.solve.max_iters));
  cfg.solve.cost_tol = toml_number(t, "solve.cost_tol", cfg.solve.cost_tol);
  cfg.solve.step_tol = toml_number(t, "solve.step_tol", cfg.solve.step_tol);

  if (const auto it = t.find("masks"); it != t.end()) {
    if (it->second.kind != TomlValue::Kind::kArray) {
      throw std::runtime_error("masks must be an array of [t0, t1] pairs");
    }
    for (const auto& w : it->second.array) {
      if (w.kind != TomlValue::Kind::kArray || w.array.size() != 2) {
        throw std::runtime_error("masks must be an array of [t0, t1] pairs");
      }
      cfg.masks.push_back({w.array[0].number, w.array[1].number});
    }
  }
  return cfg;
}

inline AppConfig load_app_config(const std::string& path) {
  return app_config_from_table(parse_toml_file(path));
}

}  // namespace imukit
