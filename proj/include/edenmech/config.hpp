#pragma once

// SystemConfig JSON ingestion and the built-in templates.
//
// {
//   "template": "heisenberg" | "knife_edge" | "free_particle" | "custom",
//   "name": "...",                                  (optional)
//   "dimension": 3,
//   "metric": "identity" | {"diagonal": [e1..en]} | {"full": [[..],..]},
//   "potential": "alpha*z",
//   "constraints": [[e11..e1n], ...],
//   "parameters": {"alpha": 0.5},
//   "sample_box": [lo, hi] | [[lo1, hi1], ...],
//   "mechanical_observables": ["p1 + q2*p3"]        (optional)
// }
//
// Template fields may be overridden; "parameters" are merged.

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "edenmech/mech_system.hpp"

namespace edenmech {

/// A validated system together with the config it came from.
struct LoadedSystem {
  SystemConfig config;
  MechanicalSystem system;
  std::vector<std::string> mechanical_observables;  // known to satisfy the mechanical condition
};

struct TemplateInfo {
  SystemConfig config;
  std::vector<std::string> mechanical_observables;
};

inline const std::vector<std::string>& template_names() {
  static const std::vector<std::string> names = {"heisenberg", "knife_edge", "free_particle"};
  return names;
}

inline TemplateInfo template_info(const std::string& name) {
  TemplateInfo t;
  SystemConfig& c = t.config;
  c.name = name;
  c.dimension = 3;
  c.potential = "alpha*z";
  if (name == "heisenberg") {
    c.metric_kind = MetricKind::Identity;
    c.constraints = {{"-q2", "0", "1"}};
    c.parameters = {{"alpha", 0.5}};
    t.mechanical_observables = {"p1 + q2*p3"};
  } else if (name == "knife_edge") {
    c.metric_kind = MetricKind::Diagonal;
    c.metric = {"m", "m", "J"};
    c.constraints = {{"sin(q3)", "-cos(q3)", "0"}};
    c.parameters = {{"m", 1.0}, {"J", 0.5}, {"alpha", 0.5}};
    t.mechanical_observables = {"cos(q3)*p1 + sin(q3)*p2", "p3"};
  } else if (name == "free_particle") {
    c.metric_kind = MetricKind::Identity;
    c.parameters = {{"alpha", 0.0}};
  } else {
    throw Error(ErrorKind::ConfigError, "unknown template '" + name + "'");
  }
  return t;
}

namespace detail {

inline std::string entry_text(const nlohmann::json& j, const std::string& where) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number()) return format_double(j.get<double>());
  throw Error(ErrorKind::ConfigError, where + " entries must be strings or numbers");
}

inline std::vector<std::string> entry_list(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array()) throw Error(ErrorKind::ConfigError, where + " must be an array");
  std::vector<std::string> out;
  for (const auto& e : j) out.push_back(entry_text(e, where));
  return out;
}

}  // namespace detail

/// Turn a config JSON document into a validated system. Parameter overrides
/// (e.g. from the command line) are applied last.
inline LoadedSystem load_system(const nlohmann::json& doc, const std::map<std::string, double>& overrides = {}) {
  using nlohmann::json;
  if (!doc.is_object()) throw Error(ErrorKind::ConfigError, "config must be a JSON object");
  static const std::set<std::string> known = {"template", "name", "dimension", "metric", "potential",
                                              "constraints", "parameters", "sample_box", "mechanical_observables"};
  for (const auto& [key, _] : doc.items()) {
    if (!known.count(key)) throw Error(ErrorKind::ConfigError, "unknown config key '" + key + "'");
  }

  const std::string tmpl = doc.value("template", std::string("custom"));
  TemplateInfo base;
  if (tmpl == "custom") {
    base.config.name = "custom";
  } else {
    base = template_info(tmpl);
  }
  SystemConfig cfg = base.config;
  std::vector<std::string> mech = base.mechanical_observables;

  try {
    if (doc.contains("name")) cfg.name = doc.at("name").get<std::string>();
    if (doc.contains("dimension")) {
      const int n = doc.at("dimension").get<int>();
      if (tmpl != "custom" && tmpl != "free_particle" && n != cfg.dimension) {
        throw Error(ErrorKind::ConfigError, "template " + tmpl + " has fixed dimension " + std::to_string(cfg.dimension));
      }
      cfg.dimension = n;
    } else if (tmpl == "custom") {
      throw Error(ErrorKind::ConfigError, "custom systems need a dimension");
    }
    if (doc.contains("metric")) {
      const json& m = doc.at("metric");
      cfg.metric.clear();
      if (m.is_string() && m.get<std::string>() == "identity") {
        cfg.metric_kind = MetricKind::Identity;
      } else if (m.is_object() && m.contains("diagonal") && m.size() == 1) {
        cfg.metric_kind = MetricKind::Diagonal;
        cfg.metric = detail::entry_list(m.at("diagonal"), "metric.diagonal");
      } else if (m.is_object() && m.contains("full") && m.size() == 1) {
        cfg.metric_kind = MetricKind::Full;
        const json& rows = m.at("full");
        if (!rows.is_array()) throw Error(ErrorKind::ConfigError, "metric.full must be an array of rows");
        for (const auto& row : rows) {
          auto entries = detail::entry_list(row, "metric.full");
          if (entries.size() != static_cast<std::size_t>(cfg.dimension)) {
            throw Error(ErrorKind::ConfigError, "metric.full rows need " + std::to_string(cfg.dimension) + " entries");
          }
          cfg.metric.insert(cfg.metric.end(), entries.begin(), entries.end());
        }
      } else {
        throw Error(ErrorKind::ConfigError, "metric must be \"identity\", {\"diagonal\": [...]} or {\"full\": [[...]]}");
      }
    }
    if (doc.contains("potential")) cfg.potential = detail::entry_text(doc.at("potential"), "potential");
    if (doc.contains("constraints")) {
      const json& rows = doc.at("constraints");
      if (!rows.is_array()) throw Error(ErrorKind::ConfigError, "constraints must be an array of rows");
      cfg.constraints.clear();
      for (const auto& row : rows) cfg.constraints.push_back(detail::entry_list(row, "constraints"));
    }
    if (doc.contains("parameters")) {
      const json& ps = doc.at("parameters");
      if (!ps.is_object()) throw Error(ErrorKind::ConfigError, "parameters must be an object");
      for (const auto& [k, v] : ps.items()) {
        if (!v.is_number()) throw Error(ErrorKind::ConfigError, "parameter '" + k + "' must be a number");
        cfg.parameters[k] = v.get<double>();
      }
    }
    if (doc.contains("sample_box")) {
      const json& b = doc.at("sample_box");
      cfg.sample_box.clear();
      if (b.is_array() && b.size() == 2 && b[0].is_number() && b[1].is_number()) {
        cfg.sample_box.assign(static_cast<std::size_t>(cfg.dimension), {b[0].get<double>(), b[1].get<double>()});
      } else if (b.is_array()) {
        for (const auto& iv : b) {
          if (!iv.is_array() || iv.size() != 2) throw Error(ErrorKind::ConfigError, "sample_box intervals are [lo, hi]");
          cfg.sample_box.emplace_back(iv[0].get<double>(), iv[1].get<double>());
        }
      } else {
        throw Error(ErrorKind::ConfigError, "sample_box must be [lo, hi] or a list of intervals");
      }
    }
    if (doc.contains("mechanical_observables")) {
      mech = detail::entry_list(doc.at("mechanical_observables"), "mechanical_observables");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigError, e.what());
  }

  for (const auto& [k, v] : overrides) cfg.parameters[k] = v;

  MechanicalSystem sys = build_system(cfg);
  for (const auto& src : mech) parse_expr(src, cfg.dimension, cfg.parameters);
  return {cfg, std::move(sys), mech};
}

inline LoadedSystem load_template(const std::string& name, const std::map<std::string, double>& overrides = {}) {
  return load_system(nlohmann::json{{"template", name}}, overrides);
}

inline LoadedSystem load_system_file(const std::string& path, const std::map<std::string, double>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigError, path + ": " + e.what());
  }
  return load_system(doc, overrides);
}

}  // namespace edenmech
