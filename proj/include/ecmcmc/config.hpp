// Copyright 2026 The ecmcmc Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Experiment configuration: a JSON document with sections `model`,
// `sampler`, `protocol`, `run`, `output` and an optional `arms` list whose
// entries override the top-level sampler / protocol / run sections field by
// field. See README.md for the grammar and defaults.

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecmcmc/core.hpp"
#include "ecmcmc/dynamics.hpp"
#include "ecmcmc/harness.hpp"

namespace ecmcmc {

using Json = nlohmann::json;

/// Invalid configuration; `path()` names the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& msg)
      : std::runtime_error(path.empty() ? msg : path + ": " + msg), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct ModelConfig {
  std::string kind = "gaussian";  // gaussian | bowl | classifier
  // gaussian
  ParamVector mean{0.0, 0.0};
  std::vector<std::vector<double>> covariance{{1.0, 0.0}, {0.0, 1.0}};
  Diagonal grad_noise{0.0, 0.0};
  // bowl
  std::size_t dim = 2;
  // classifier
  std::size_t features = 10;
  std::size_t hidden = 0;
  std::size_t points = 500;
  std::size_t eval_points = 500;
  double separation = 2.0;
  std::uint64_t data_seed = 1;
  std::string csv;
  std::string eval_csv;
  double prior_precision = 1e-5;
  std::size_t batch_size = 100;
  bool with_replacement = false;

  std::size_t param_dim() const {
    if (kind == "gaussian") return mean.size();
    if (kind == "bowl") return dim;
    return NetworkShape{features, hidden, 2}.param_count();
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct SamplerConfig {
  std::string kind = "sghmc";  // sghmc | ec_sghmc | ec_momentum | eamsgd
  double epsilon = 1e-2;
  Diagonal mass;
  Diagonal grad_noise;    // V
  Diagonal center_noise;  // C
  double alpha = 1.0;
  NoiseScaling noise_scaling = NoiseScaling::linear;
  WorkerNoise worker_noise = WorkerNoise::gradient;
  double friction = 0.1;  // ec_momentum / eamsgd

  bool optimizer() const { return kind == "ec_momentum" || kind == "eamsgd"; }

  friend bool operator==(const SamplerConfig&, const SamplerConfig&) = default;
};

struct DelayConfig {
  DelayKind kind = DelayKind::constant;
  double jitter = 0.0;
  double latency = 0.0;
  std::vector<double> speeds;

  friend bool operator==(const DelayConfig&, const DelayConfig&) = default;
};

struct ProtocolSection {
  Scheme scheme = Scheme::independent;
  std::size_t workers = 1;
  std::size_t comm_period = 1;
  std::size_t wait_count = 1;
  DelayConfig delay;

  friend bool operator==(const ProtocolSection&, const ProtocolSection&) = default;
};

struct RunSection {
  std::uint64_t steps = 1000;
  std::uint64_t burn_in = 0;
  std::uint64_t thin = 1;
  std::uint64_t trace_every = 10;
  double max_time = 0.0;
  std::uint64_t seed = 0;
  ParamVector init;
  double init_scale = 0.0;
  bool keep_samples = true;

  friend bool operator==(const RunSection&, const RunSection&) = default;
};

struct OutputConfig {
  std::string dir = "out";
  bool trace = true;
  bool samples = true;

  friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

struct ArmConfig {
  std::string name;
  SamplerConfig sampler;
  ProtocolSection protocol;
  RunSection run;

  friend bool operator==(const ArmConfig&, const ArmConfig&) = default;
};

struct ExperimentConfig {
  std::string name = "experiment";
  ModelConfig model;
  std::vector<ArmConfig> arms;
  OutputConfig output;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// ---------------------------------------------------------------------------
// Conversions
// ---------------------------------------------------------------------------

inline std::string to_string(NoiseScaling s) { return s == NoiseScaling::linear ? "linear" : "quadratic"; }
inline std::string to_string(WorkerNoise w) { return w == WorkerNoise::gradient ? "gradient" : "gradient_plus_center"; }
inline std::string to_string(DelayKind d) { return d == DelayKind::constant ? "constant" : "uniform_jitter"; }
inline std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::independent: return "independent";
    case Scheme::naive_async: return "naive_async";
    case Scheme::elastic: return "elastic";
  }
  return "?";
}

namespace detail {

// Reads one section. Keys are looked up in `over` first (an arm's own
// section), then in `base` (the top-level section); every key present in
// either must be consumed, otherwise it is reported as unknown.
class Section {
 public:
  Section(const Json* base, std::string base_path, const Json* over, std::string over_path)
      : base_(base), over_(over), base_path_(std::move(base_path)), over_path_(std::move(over_path)) {
    check_object(base_, base_path_);
    check_object(over_, over_path_);
  }

  bool has(const std::string& key) const { return find(key) != nullptr; }

  std::string path(const std::string& key) const {
    if (over_ && over_->contains(key)) return join(over_path_, key);
    return join(base_path_, key);
  }

  const Json* find(const std::string& key) const {
    if (over_ && over_->contains(key)) return &(*over_)[key];
    if (base_ && base_->contains(key)) return &(*base_)[key];
    return nullptr;
  }

  double number(const std::string& key, double def) {
    seen_.insert(key);
    const Json* v = find(key);
    if (!v) return def;
    if (!v->is_number()) throw ConfigError(path(key), "expected a number");
    const double d = v->get<double>();
    if (!std::isfinite(d)) throw ConfigError(path(key), "must be finite");
    return d;
  }

  std::uint64_t count(const std::string& key, std::uint64_t def) {
    seen_.insert(key);
    const Json* v = find(key);
    if (!v) return def;
    if (v->is_number_unsigned()) return v->get<std::uint64_t>();
    if (v->is_number_integer()) {
      const auto i = v->get<std::int64_t>();
      if (i < 0) throw ConfigError(path(key), "must be >= 0");
      return static_cast<std::uint64_t>(i);
    }
    throw ConfigError(path(key), "expected a non-negative integer");
  }

  bool flag(const std::string& key, bool def) {
    seen_.insert(key);
    const Json* v = find(key);
    if (!v) return def;
    if (!v->is_boolean()) throw ConfigError(path(key), "expected true or false");
    return v->get<bool>();
  }

  std::string text(const std::string& key, const std::string& def) {
    seen_.insert(key);
    const Json* v = find(key);
    if (!v) return def;
    if (!v->is_string()) throw ConfigError(path(key), "expected a string");
    return v->get<std::string>();
  }

  std::string choice(const std::string& key, const std::string& def, std::initializer_list<const char*> allowed) {
    const std::string s = text(key, def);
    std::string list;
    for (const char* a : allowed) {
      if (s == a) return s;
      list += list.empty() ? a : std::string(", ") + a;
    }
    throw ConfigError(path(key), "unknown value \"" + s + "\" (expected one of: " + list + ")");
  }

  std::vector<double> vector(const std::string& key, std::vector<double> def) {
    seen_.insert(key);
    const Json* v = find(key);
    if (!v || v->is_null()) return def;
    if (!v->is_array()) throw ConfigError(path(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const auto& e = (*v)[i];
      if (!e.is_number() || !std::isfinite(e.get<double>()))
        throw ConfigError(path(key) + "[" + std::to_string(i) + "]", "expected a finite number");
      out.push_back(e.get<double>());
    }
    return out;
  }

  /// A scalar broadcast to `n` entries or an array of length `n`.
  Diagonal diagonal(const std::string& key, double def, std::size_t n) {
    seen_.insert(key);
    const Json* v = find(key);
    if (!v) return Diagonal(n, def);
    if (v->is_number()) return Diagonal(n, number(key, def));
    Diagonal d = vector(key, {});
    if (d.size() != n)
      throw ConfigError(path(key), "expected " + std::to_string(n) + " entries, got " + std::to_string(d.size()));
    return d;
  }

  std::vector<std::vector<double>> matrix(const std::string& key, std::vector<std::vector<double>> def) {
    seen_.insert(key);
    const Json* v = find(key);
    if (!v) return def;
    if (!v->is_array()) throw ConfigError(path(key), "expected an array of rows");
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const auto& row = (*v)[i];
      if (!row.is_array()) throw ConfigError(path(key) + "[" + std::to_string(i) + "]", "expected an array");
      std::vector<double> r;
      for (const auto& e : row) {
        if (!e.is_number()) throw ConfigError(path(key) + "[" + std::to_string(i) + "]", "expected numbers");
        r.push_back(e.get<double>());
      }
      out.push_back(std::move(r));
    }
    return out;
  }

  Section sub(const std::string& key) {
    seen_.insert(key);
    const Json* b = base_ && base_->contains(key) ? &(*base_)[key] : nullptr;
    const Json* o = over_ && over_->contains(key) ? &(*over_)[key] : nullptr;
    return Section(b, join(base_path_, key), o, join(over_path_, key));
  }

  void finish() const {
    for (const auto* src : {over_, base_}) {
      if (!src) continue;
      for (auto it = src->begin(); it != src->end(); ++it)
        if (!seen_.count(it.key()))
          throw ConfigError(join(src == over_ ? over_path_ : base_path_, it.key()), "unknown key");
    }
  }

 private:
  static std::string join(const std::string& a, const std::string& b) { return a.empty() ? b : a + "." + b; }

  static void check_object(const Json* j, const std::string& path) {
    if (j && !j->is_object()) throw ConfigError(path, "expected an object");
  }

  const Json* base_;
  const Json* over_;
  std::string base_path_, over_path_;
  std::set<std::string> seen_;
};

inline ModelConfig parse_model(Section s) {
  ModelConfig m;
  m.kind = s.choice("kind", "gaussian", {"gaussian", "bowl", "classifier"});
  if (m.kind == "gaussian") {
    m.mean = s.vector("mean", {0.0, 0.0});
    if (m.mean.empty()) throw ConfigError(s.path("mean"), "must not be empty");
    const std::size_t n = m.mean.size();
    std::vector<std::vector<double>> eye(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) eye[i][i] = 1.0;
    m.covariance = s.matrix("covariance", eye);
    m.grad_noise = s.diagonal("grad_noise", 0.0, n);
    try {
      GaussianTarget(m.mean, m.covariance, m.grad_noise);
    } catch (const ContractError& e) {
      throw ConfigError(s.path("covariance"), e.what());
    }
  } else if (m.kind == "bowl") {
    m.dim = s.count("dim", 2);
    if (m.dim < 1) throw ConfigError(s.path("dim"), "must be >= 1");
  } else {
    m.csv = s.text("csv", "");
    m.eval_csv = s.text("eval_csv", "");
    m.features = s.count("features", 10);
    m.hidden = s.count("hidden", 0);
    m.points = s.count("points", 500);
    m.eval_points = s.count("eval_points", 500);
    m.separation = s.number("separation", 2.0);
    m.data_seed = s.count("data_seed", 1);
    m.prior_precision = s.number("prior_precision", 1e-5);
    m.batch_size = s.count("batch_size", 100);
    m.with_replacement = s.flag("with_replacement", false);
    if (m.features < 1) throw ConfigError(s.path("features"), "must be >= 1");
    if (m.points < 1) throw ConfigError(s.path("points"), "must be >= 1");
    if (m.eval_points < 1) throw ConfigError(s.path("eval_points"), "must be >= 1");
    if (!(m.prior_precision > 0.0)) throw ConfigError(s.path("prior_precision"), "must be > 0");
    if (m.batch_size < 1) throw ConfigError(s.path("batch_size"), "must be >= 1");
    if (m.csv.empty() && !m.with_replacement && m.batch_size > m.points)
      throw ConfigError(s.path("batch_size"), "exceeds points");
  }
  s.finish();
  return m;
}

inline SamplerConfig parse_sampler(Section s, std::size_t n) {
  SamplerConfig c;
  c.kind = s.choice("kind", "sghmc", {"sghmc", "ec_sghmc", "ec_momentum", "eamsgd"});
  c.epsilon = s.number("epsilon", c.optimizer() ? 0.01 : 1e-2);
  if (!(c.epsilon > 0.0)) throw ConfigError(s.path("epsilon"), "must be > 0");
  c.alpha = s.number("alpha", 1.0);
  if (!(c.alpha >= 0.0)) throw ConfigError(s.path("alpha"), "must be >= 0");
  if (c.optimizer()) {
    c.friction = s.number("friction", 0.1);
    if (!(c.friction >= 0.0)) throw ConfigError(s.path("friction"), "must be >= 0");
  } else {
    c.mass = s.diagonal("mass", 1.0, n);
    c.grad_noise = s.diagonal("grad_noise", 1.0, n);
    for (double m : c.mass)
      if (!(m > 0.0)) throw ConfigError(s.path("mass"), "entries must be > 0");
    for (double v : c.grad_noise)
      if (!(v >= 0.0)) throw ConfigError(s.path("grad_noise"), "entries must be >= 0");
    c.noise_scaling = s.choice("noise_scaling", "linear", {"linear", "quadratic"}) == "linear" ? NoiseScaling::linear
                                                                                              : NoiseScaling::quadratic;
    if (c.kind == "ec_sghmc") {
      c.center_noise = s.diagonal("center_noise", 1.0, n);
      for (double v : c.center_noise)
        if (!(v >= 0.0)) throw ConfigError(s.path("center_noise"), "entries must be >= 0");
      c.worker_noise = s.choice("worker_noise", "gradient", {"gradient", "gradient_plus_center"}) == "gradient"
                           ? WorkerNoise::gradient
                           : WorkerNoise::gradient_plus_center;
    }
  }
  s.finish();
  return c;
}

inline ProtocolSection parse_protocol(Section s, const SamplerConfig& sampler) {
  ProtocolSection p;
  const std::string def = sampler.kind == "sghmc" ? "independent" : "elastic";
  const std::string scheme = s.choice("scheme", def, {"independent", "naive_async", "elastic"});
  p.scheme = scheme == "independent" ? Scheme::independent
             : scheme == "naive_async" ? Scheme::naive_async
                                       : Scheme::elastic;
  if (sampler.kind == "sghmc" && p.scheme == Scheme::elastic)
    throw ConfigError(s.path("scheme"), "sampler sghmc runs with independent or naive_async");
  if (sampler.kind != "sghmc" && p.scheme != Scheme::elastic)
    throw ConfigError(s.path("scheme"), "sampler " + sampler.kind + " requires the elastic scheme");
  p.workers = s.count("workers", 1);
  if (p.workers < 1) throw ConfigError(s.path("workers"), "must be >= 1");
  p.comm_period = s.count("comm_period", 1);
  if (p.comm_period < 1) throw ConfigError(s.path("comm_period"), "must be >= 1");
  p.wait_count = s.count("wait_count", p.scheme == Scheme::naive_async ? p.workers : 1);
  if (p.wait_count < 1 || p.wait_count > p.workers)
    throw ConfigError(s.path("wait_count"), "must lie in [1, workers]");
  Section d = s.sub("delay");
  p.delay.kind = d.choice("kind", "constant", {"constant", "uniform_jitter"}) == "constant" ? DelayKind::constant
                                                                                           : DelayKind::uniform_jitter;
  p.delay.jitter = d.number("jitter", 0.0);
  if (!(p.delay.jitter >= 0.0 && p.delay.jitter < 1.0)) throw ConfigError(d.path("jitter"), "must lie in [0, 1)");
  p.delay.latency = d.number("latency", 0.0);
  if (!(p.delay.latency >= 0.0)) throw ConfigError(d.path("latency"), "must be >= 0");
  p.delay.speeds = d.vector("speeds", {});
  if (!p.delay.speeds.empty() && p.delay.speeds.size() != p.workers)
    throw ConfigError(d.path("speeds"), "expected one entry per worker");
  for (double v : p.delay.speeds)
    if (!(v > 0.0)) throw ConfigError(d.path("speeds"), "entries must be > 0");
  d.finish();
  s.finish();
  return p;
}

inline RunSection parse_run(Section s, std::size_t n) {
  RunSection r;
  r.steps = s.count("steps", 1000);
  r.burn_in = s.count("burn_in", 0);
  if (r.burn_in > r.steps) throw ConfigError(s.path("burn_in"), "exceeds steps");
  r.thin = s.count("thin", 1);
  if (r.thin < 1) throw ConfigError(s.path("thin"), "must be >= 1");
  r.trace_every = s.count("trace_every", 10);
  r.max_time = s.number("max_time", 0.0);
  if (!(r.max_time >= 0.0)) throw ConfigError(s.path("max_time"), "must be >= 0");
  r.seed = s.count("seed", 0);
  r.init = s.vector("init", {});
  if (!r.init.empty() && r.init.size() != n)
    throw ConfigError(s.path("init"), "expected " + std::to_string(n) + " entries");
  r.init_scale = s.number("init_scale", 0.0);
  if (!(r.init_scale >= 0.0)) throw ConfigError(s.path("init_scale"), "must be >= 0");
  r.keep_samples = s.flag("keep_samples", true);
  s.finish();
  return r;
}

inline OutputConfig parse_output(Section s) {
  OutputConfig o;
  o.dir = s.text("dir", "out");
  o.trace = s.flag("trace", true);
  o.samples = s.flag("samples", true);
  s.finish();
  return o;
}

inline const Json* member(const Json& j, const char* key) { return j.contains(key) ? &j[key] : nullptr; }

}  // namespace detail

/// Parses and fully validates a configuration document.
inline ExperimentConfig parse_config(const Json& doc) {
  using detail::Section;
  using detail::member;
  if (!doc.is_object()) throw ConfigError("", "configuration must be a JSON object");
  static const std::set<std::string> top{"name", "model", "sampler", "protocol", "run", "output", "arms"};
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!top.count(it.key())) throw ConfigError(it.key(), "unknown key");

  ExperimentConfig cfg;
  if (const Json* n = member(doc, "name")) {
    if (!n->is_string()) throw ConfigError("name", "expected a string");
    cfg.name = n->get<std::string>();
  }
  cfg.model = detail::parse_model(Section(member(doc, "model"), "model", nullptr, ""));
  cfg.output = detail::parse_output(Section(member(doc, "output"), "output", nullptr, ""));
  const std::size_t n = cfg.model.param_dim();

  auto make_arm = [&](const Json* arm, const std::string& prefix, std::string name) {
    auto own = [&](const char* key) { return arm ? member(*arm, key) : nullptr; };
    ArmConfig a;
    a.name = std::move(name);
    a.sampler = detail::parse_sampler(Section(member(doc, "sampler"), "sampler", own("sampler"), prefix + "sampler"), n);
    a.protocol = detail::parse_protocol(
        Section(member(doc, "protocol"), "protocol", own("protocol"), prefix + "protocol"), a.sampler);
    a.run = detail::parse_run(Section(member(doc, "run"), "run", own("run"), prefix + "run"), n);
    return a;
  };

  const Json* arms = member(doc, "arms");
  if (!arms) {
    cfg.arms.push_back(make_arm(nullptr, "", cfg.name));
  } else {
    if (!arms->is_array() || arms->empty()) throw ConfigError("arms", "expected a non-empty array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < arms->size(); ++i) {
      const Json& a = (*arms)[i];
      const std::string prefix = "arms[" + std::to_string(i) + "].";
      if (!a.is_object()) throw ConfigError("arms[" + std::to_string(i) + "]", "expected an object");
      for (auto it = a.begin(); it != a.end(); ++it)
        if (it.key() != "name" && it.key() != "model" && it.key() != "sampler" && it.key() != "protocol" &&
            it.key() != "run")
          throw ConfigError(prefix + it.key(), "unknown key");
      std::string name = "arm" + std::to_string(i);
      if (const Json* nm = member(a, "name")) {
        if (!nm->is_string()) throw ConfigError(prefix + "name", "expected a string");
        name = nm->get<std::string>();
      }
      if (!names.insert(name).second) throw ConfigError(prefix + "name", "duplicate arm name \"" + name + "\"");
      if (const Json* m = member(a, "model")) {
        const ModelConfig own = detail::parse_model(Section(m, prefix + "model", nullptr, ""));
        if (!(own == cfg.model)) throw ConfigError(prefix + "model", "arms must share the model spec");
      }
      cfg.arms.push_back(make_arm(&a, prefix, name));
    }
  }
  return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

// ---------------------------------------------------------------------------
// Serialization of the resolved configuration
// ---------------------------------------------------------------------------

inline Json to_json(const ModelConfig& m) {
  Json j{{"kind", m.kind}};
  if (m.kind == "gaussian") {
    j["mean"] = m.mean;
    j["covariance"] = m.covariance;
    j["grad_noise"] = m.grad_noise;
  } else if (m.kind == "bowl") {
    j["dim"] = m.dim;
  } else {
    j["csv"] = m.csv;
    j["eval_csv"] = m.eval_csv;
    j["features"] = m.features;
    j["hidden"] = m.hidden;
    j["points"] = m.points;
    j["eval_points"] = m.eval_points;
    j["separation"] = m.separation;
    j["data_seed"] = m.data_seed;
    j["prior_precision"] = m.prior_precision;
    j["batch_size"] = m.batch_size;
    j["with_replacement"] = m.with_replacement;
  }
  return j;
}

inline Json to_json(const SamplerConfig& s) {
  Json j{{"kind", s.kind}, {"epsilon", s.epsilon}, {"alpha", s.alpha}};
  if (s.optimizer()) {
    j["friction"] = s.friction;
  } else {
    j["mass"] = s.mass;
    j["grad_noise"] = s.grad_noise;
    j["noise_scaling"] = to_string(s.noise_scaling);
    if (s.kind == "ec_sghmc") {
      j["center_noise"] = s.center_noise;
      j["worker_noise"] = to_string(s.worker_noise);
    }
  }
  return j;
}

inline Json to_json(const ProtocolSection& p) {
  return Json{{"scheme", to_string(p.scheme)},
              {"workers", p.workers},
              {"comm_period", p.comm_period},
              {"wait_count", p.wait_count},
              {"delay",
               {{"kind", to_string(p.delay.kind)},
                {"jitter", p.delay.jitter},
                {"latency", p.delay.latency},
                {"speeds", p.delay.speeds}}}};
}

inline Json to_json(const RunSection& r) {
  return Json{{"steps", r.steps},         {"burn_in", r.burn_in},       {"thin", r.thin},
              {"trace_every", r.trace_every}, {"max_time", r.max_time}, {"seed", r.seed},
              {"init", r.init},           {"init_scale", r.init_scale}, {"keep_samples", r.keep_samples}};
}

inline Json to_json(const ExperimentConfig& c) {
  Json arms = Json::array();
  for (const auto& a : c.arms)
    arms.push_back(Json{{"name", a.name}, {"sampler", to_json(a.sampler)}, {"protocol", to_json(a.protocol)},
                        {"run", to_json(a.run)}});
  return Json{{"name", c.name},
              {"model", to_json(c.model)},
              {"output", {{"dir", c.output.dir}, {"trace", c.output.trace}, {"samples", c.output.samples}}},
              {"arms", arms}};
}

// ---------------------------------------------------------------------------
// Harness views
// ---------------------------------------------------------------------------

inline DelayModel delay_model(const DelayConfig& d) { return DelayModel{d.kind, d.jitter, d.latency, d.speeds}; }

inline ProtocolConfig protocol_config(const ProtocolSection& p) {
  return ProtocolConfig{p.scheme, p.workers, p.comm_period, p.wait_count, delay_model(p.delay)};
}

inline SghmcConfig sghmc_config(const SamplerConfig& s) {
  SghmcConfig c;
  c.epsilon = s.epsilon;
  c.mass = s.mass;
  c.grad_noise = s.grad_noise;
  c.noise_scaling = s.noise_scaling;
  return c;
}

inline EcConfig ec_config(const SamplerConfig& s, std::size_t workers) {
  EcConfig e;
  e.base = sghmc_config(s);
  e.alpha = s.alpha;
  e.center_noise = s.center_noise;
  e.workers = workers;
  e.worker_noise = s.worker_noise;
  return e;
}

inline OptimizerConfig optimizer_config(const SamplerConfig& s) { return OptimizerConfig{s.epsilon, s.alpha, s.friction}; }

inline RunSpec run_spec(const ArmConfig& a) {
  RunSpec r;
  r.arm = a.name;
  r.steps = a.run.steps;
  r.burn_in = a.run.burn_in;
  r.thin = a.run.thin;
  r.trace_every = a.run.trace_every;
  r.max_time = a.run.max_time;
  r.seed = a.run.seed;
  r.init = a.run.init;
  r.init_scale = a.run.init_scale;
  r.keep_samples = a.run.keep_samples;
  return r;
}

}  // namespace ecmcmc
