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

// Runs configured experiments and writes their artifacts:
//   trace.csv      run_id,arm,worker,step,virtual_time,metric,value
//   samples.jsonl  one retained theta per line with provenance
//   summary.json   per-arm counters, final metrics, moments, ESS
//   manifest.json  resolved config, seed, status, artifact checksums
// Artifacts are written under temporary names and renamed only once every
// arm has finished; on failure they are removed and the manifest is marked
// incomplete.

#include <openssl/evp.h>

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ecmcmc/config.hpp"
#include "ecmcmc/diagnostics.hpp"
#include "ecmcmc/harness.hpp"
#include "ecmcmc/model.hpp"
#include "ecmcmc/threads.hpp"

namespace ecmcmc {

enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitConfig = 2, kExitRuntime = 3 };

enum class Mode { virtual_time, threads };

inline std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

/// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

class BuiltModel {
 public:
  explicit BuiltModel(const ModelConfig& cfg) : cfg_(cfg) {
    if (cfg.kind == "gaussian") {
      gaussian_ = std::make_unique<GaussianTarget>(cfg.mean, cfg.covariance, cfg.grad_noise);
    } else if (cfg.kind == "bowl") {
      gaussian_ = std::make_unique<GaussianTarget>(GaussianTarget::standard(cfg.dim));
    } else {
      DataSet train = cfg.csv.empty() ? make_two_blobs(cfg.features, cfg.points, cfg.separation, cfg.data_seed)
                                      : load_csv_dataset(cfg.csv);
      eval_ = cfg.eval_csv.empty()
                  ? (cfg.csv.empty() ? make_two_blobs(cfg.features, cfg.eval_points, cfg.separation,
                                                      derive_seed(cfg.data_seed, 1, Stream::dataset))
                                     : train)
                  : load_csv_dataset(cfg.eval_csv);
      if (train.n_features != cfg.features)
        throw ConfigError("model.features", "dataset has " + std::to_string(train.n_features) + " features");
      if (!cfg.with_replacement && cfg.batch_size > train.size())
        throw ConfigError("model.batch_size", "exceeds the number of observations");
      const int classes = std::max(2, train.n_classes());
      classifier_ = std::make_unique<ClassifierPosterior>(
          NetworkShape{cfg.features, cfg.hidden, static_cast<std::size_t>(classes)}, std::move(train),
          cfg.prior_precision, MinibatchSpec{cfg.batch_size, cfg.with_replacement});
    }
  }
  BuiltModel(const BuiltModel&) = delete;
  BuiltModel& operator=(const BuiltModel&) = delete;

  const TargetModel& target() const {
    if (gaussian_) return *gaussian_;
    return *classifier_;
  }
  const GaussianTarget* gaussian() const { return gaussian_.get(); }
  const ClassifierPosterior* classifier() const { return classifier_.get(); }
  const DataSet& eval() const { return eval_; }
  const ModelConfig& config() const { return cfg_; }

  std::vector<Metric> metrics() const {
    if (classifier_) return {nll_metric(*classifier_, eval_)};
    return {potential_metric(*gaussian_)};
  }

 private:
  ModelConfig cfg_;
  std::unique_ptr<GaussianTarget> gaussian_;
  std::unique_ptr<ClassifierPosterior> classifier_;
  DataSet eval_;
};

inline std::size_t thread_cap_from_env() {
  if (const char* v = std::getenv("ECMCMC_THREADS")) {
    char* end = nullptr;
    const unsigned long n = std::strtoul(v, &end, 10);
    if (end != v && n > 0) return n;
  }
  return 0;
}

/// Runs one arm. Optimizer arms always run in lock step (no threaded variant).
inline RunResult run_arm(const BuiltModel& model, const ArmConfig& arm, Mode mode, std::size_t max_threads = 0) {
  RunSpec run = run_spec(arm);
  run.metrics = model.metrics();
  const ProtocolConfig proto = protocol_config(arm.protocol);
  const ThreadOptions opts{max_threads};
  const auto& s = arm.sampler;
  if (s.optimizer())
    return run_optimizer_arm(model.target(), s.kind == "ec_momentum" ? OptimizerVariant::ec_momentum : OptimizerVariant::eamsgd,
                             optimizer_config(s), proto, run);
  if (s.kind == "ec_sghmc") {
    const EcConfig ec = ec_config(s, proto.workers);
    return mode == Mode::threads ? run_elastic_threads(model.target(), ec, proto, run, opts)
                                 : run_elastic(model.target(), ec, proto, run);
  }
  const SghmcConfig cfg = sghmc_config(s);
  if (proto.scheme == Scheme::naive_async)
    return mode == Mode::threads ? run_naive_async_threads(model.target(), cfg, proto, run, opts)
                                 : run_naive_async(model.target(), cfg, proto, run);
  return mode == Mode::threads ? run_independent_threads(model.target(), cfg, proto, run, opts)
                               : run_independent(model.target(), cfg, proto, run);
}

// ---------------------------------------------------------------------------
// Summaries
// ---------------------------------------------------------------------------

/// Mean over workers of each metric's last recorded value. Server records are
/// used only when no worker recorded the metric.
inline std::map<std::string, double> final_metrics(const RunResult& r) {
  std::map<std::string, std::map<std::int64_t, std::pair<std::uint64_t, double>>> last;
  std::map<std::string, bool> has_worker;
  for (const auto& t : r.traces)
    if (t.worker != kServerWorker) has_worker[t.metric] = true;
  for (const auto& t : r.traces) {
    if (has_worker[t.metric] && t.worker == kServerWorker) continue;
    auto& slot = last[t.metric][t.worker];
    if (t.step >= slot.first) slot = {t.step, t.value};
  }
  std::map<std::string, double> out;
  for (const auto& [m, per] : last) {
    double s = 0.0;
    for (const auto& [w, v] : per) s += v.second;
    out[m] = s / static_cast<double>(per.size());
  }
  return out;
}

inline Json summarize_arm(const BuiltModel& model, const ArmConfig& arm, const RunResult& r) {
  Json j;
  j["arm"] = arm.name;
  j["seed"] = r.seed;
  j["sampler"] = arm.sampler.kind;
  j["scheme"] = to_string(arm.protocol.scheme);
  j["workers"] = arm.protocol.workers;
  j["comm_period"] = arm.protocol.comm_period;
  j["counters"] = {{"worker_steps", r.counters.worker_steps},
                   {"server_steps", r.counters.server_steps},
                   {"messages", r.counters.messages},
                   {"round_trips", r.counters.round_trips},
                   {"volume", r.counters.volume}};
  j["end_time"] = r.end_time;
  j["max_age"] = r.max_age;
  Json st = Json::object();
  for (const auto& [lag, c] : r.staleness) st[std::to_string(lag)] = c;
  j["staleness"] = st;
  j["final"] = final_metrics(r);
  j["samples"] = r.samples.size();
  if (r.samples.size() >= 2) {
    const auto pool = thetas(r.samples);
    MomentReport m = model.gaussian() && model.config().kind == "gaussian" ? moments(pool, *model.gaussian())
                                                                           : moments(pool);
    Json mj{{"mean", m.mean}, {"covariance", m.covariance}, {"count", m.count}};
    if (m.mean_error) mj["mean_error"] = *m.mean_error;
    if (m.covariance_rel_error) mj["covariance_rel_error"] = *m.covariance_rel_error;
    j["moments"] = mj;
    std::map<std::int64_t, std::vector<ParamVector>> chains;
    for (const auto& s : r.samples) chains[s.worker].push_back(s.theta);
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& [w, c] : chains)
      if (c.size() >= 10) worst = std::min(worst, ess_min(c).ess);
    if (std::isfinite(worst)) j["ess_min"] = worst;
  }
  if (arm.sampler.optimizer()) {
    const auto steps = steps_to_threshold(r, "U", 1e-6);
    j["steps_to_threshold"] = {{"metric", "U"}, {"threshold", 1e-6}, {"steps", steps ? Json(*steps) : Json()}};
  }
  return j;
}

// ---------------------------------------------------------------------------
// Artifact files
// ---------------------------------------------------------------------------

namespace detail {

class ArtifactSet {
 public:
  explicit ArtifactSet(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }

  /// Writes everything under temporary names, then renames into place.
  Json commit() {
    std::filesystem::create_directories(dir_);
    Json list = Json::array();
    std::vector<std::pair<std::filesystem::path, std::filesystem::path>> moves;
    try {
      for (const auto& [name, content] : files_) {
        const auto tmp = dir_ / ("." + name + ".partial");
        write_file(tmp, content);
        moves.emplace_back(tmp, dir_ / name);
        list.push_back({{"path", name}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
      }
    } catch (...) {
      for (const auto& [tmp, dst] : moves) std::filesystem::remove(tmp);
      throw;
    }
    for (const auto& [tmp, dst] : moves) std::filesystem::rename(tmp, dst);
    return list;
  }

  static void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << content;
    out.close();
    if (!out) throw std::runtime_error("short write to " + p.string());
  }

  static void write_atomic(const std::filesystem::path& p, const std::string& content) {
    std::filesystem::create_directories(p.parent_path().empty() ? "." : p.parent_path());
    auto tmp = p;
    tmp += ".partial";
    write_file(tmp, content);
    std::filesystem::rename(tmp, p);
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

inline std::string trace_csv(const std::string& run_id, const std::vector<RunResult>& results) {
  std::string s = "run_id,arm,worker,step,virtual_time,metric,value\n";
  for (const auto& r : results)
    for (const auto& t : r.traces) {
      s += run_id;
      s += ',' + t.arm + ',' + std::to_string(t.worker) + ',' + std::to_string(t.step) + ',' +
           format_double(t.time) + ',' + t.metric + ',' + format_double(t.value) + '\n';
    }
  return s;
}

inline std::string samples_jsonl(const std::string& run_id, const std::vector<RunResult>& results) {
  std::string s;
  for (const auto& r : results)
    for (const auto& smp : r.samples) {
      Json j{{"run_id", run_id}, {"arm", r.arm},   {"seed", r.seed},        {"worker", smp.worker},
             {"step", smp.step}, {"time", smp.time}, {"theta", smp.theta}};
      s += j.dump() + '\n';
    }
  return s;
}

}  // namespace detail

inline const std::vector<std::string>& artifact_names() {
  static const std::vector<std::string> names{"trace.csv",   "samples.jsonl",   "summary.json",
                                              "aligned.csv", "comparison.json", "manifest.json"};
  return names;
}

struct RunOptions {
  std::optional<std::uint64_t> seed;
  Mode mode = Mode::virtual_time;
  std::optional<std::string> out;
  bool quiet = false;
  std::size_t max_threads = 0;
};

inline void apply_overrides(ExperimentConfig& cfg, const RunOptions& opts) {
  if (opts.seed)
    for (auto& a : cfg.arms) a.run.seed = *opts.seed;
  if (opts.out) cfg.output.dir = *opts.out;
}

/// Identifies the experiment independently of where its output goes.
inline std::string run_id_of(const Json& resolved) {
  Json j = resolved;
  if (j.contains("output")) j["output"].erase("dir");
  return sha256_hex(j.dump()).substr(0, 16);
}

// ---------------------------------------------------------------------------
// Comparison tables
// ---------------------------------------------------------------------------

struct AlignedPoint {
  std::string metric;
  std::uint64_t step = 0;
  double time = 0.0;  // mean over the contributing records
  double value = 0.0;
  std::size_t workers = 0;
};

/// Mean over workers at every traced step, ordered by metric then step.
/// Server records count only for metrics no worker recorded.
inline std::vector<AlignedPoint> aligned_series(const RunResult& r) {
  std::map<std::string, bool> has_worker;
  for (const auto& t : r.traces)
    if (t.worker != kServerWorker) has_worker[t.metric] = true;
  std::map<std::pair<std::string, std::uint64_t>, AlignedPoint> acc;
  for (const auto& t : r.traces) {
    if (has_worker[t.metric] && t.worker == kServerWorker) continue;
    auto& a = acc[{t.metric, t.step}];
    a.time += t.time;
    a.value += t.value;
    ++a.workers;
  }
  std::vector<AlignedPoint> out;
  for (auto& [key, a] : acc) {
    const double n = static_cast<double>(a.workers);
    out.push_back({key.first, key.second, a.time / n, a.value / n, a.workers});
  }
  return out;
}

/// First virtual time at which the aligned `metric` series is at or below `thr`.
inline std::optional<double> time_to_threshold(const std::vector<AlignedPoint>& series, const std::string& metric,
                                               double thr) {
  std::optional<double> best;
  for (const auto& p : series)
    if (p.metric == metric && p.value <= thr && (!best || p.time < *best)) best = p.time;
  return best;
}

inline std::string aligned_csv(const std::vector<RunResult>& results) {
  std::string s = "arm,step,virtual_time,metric,value,workers\n";
  for (const auto& r : results)
    for (const auto& p : aligned_series(r))
      s += r.arm + ',' + std::to_string(p.step) + ',' + format_double(p.time) + ',' + p.metric + ',' +
           format_double(p.value) + ',' + std::to_string(p.workers) + '\n';
  return s;
}

inline Json comparison_table(const ExperimentConfig& cfg, const std::vector<RunResult>& results) {
  Json j;
  Json names = Json::array();
  for (const auto& a : cfg.arms) names.push_back(a.name);
  j["arms"] = names;
  Json metrics = Json::object();
  std::map<std::string, std::map<std::string, double>> finals;
  for (const auto& r : results)
    for (const auto& [m, v] : final_metrics(r)) finals[m][r.arm] = v;
  for (const auto& [m, per] : finals) {
    std::string best;
    double bv = std::numeric_limits<double>::infinity();
    for (const auto& a : cfg.arms) {
      auto it = per.find(a.name);
      if (it != per.end() && it->second < bv) {
        bv = it->second;
        best = a.name;
      }
    }
    metrics[m] = {{"final", per}, {"winner", best}, {"lower_is_better", true}};
  }
  j["metrics"] = metrics;
  Json thr = Json::object();
  std::string best;
  std::uint64_t bs = std::numeric_limits<std::uint64_t>::max();
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!cfg.arms[i].sampler.optimizer()) continue;
    const auto st = steps_to_threshold(results[i], "U", 1e-6);
    thr[results[i].arm] = st ? Json(*st) : Json();
    if (st && *st < bs) {
      bs = *st;
      best = results[i].arm;
    }
  }
  if (!thr.empty()) j["steps_to_threshold"] = {{"metric", "U"}, {"threshold", 1e-6}, {"steps", thr}, {"winner", best}};
  return j;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace detail {

inline void remove_artifacts(const std::filesystem::path& dir) {
  std::error_code ec;
  for (const auto& n : artifact_names()) {
    std::filesystem::remove(dir / n, ec);
    std::filesystem::remove(dir / ("." + n + ".partial"), ec);
  }
}

inline int write_failure(const std::filesystem::path& dir, const Json& resolved, const std::string& run_id,
                         const Json& error, std::ostream& err) {
  remove_artifacts(dir);
  Json manifest{{"run_id", run_id}, {"status", "incomplete"}, {"config", resolved}, {"artifacts", Json::array()},
                {"error", error}};
  try {
    ArtifactSet::write_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
  } catch (const std::exception& e) {
    err << "error: could not write manifest: " << e.what() << "\n";
  }
  return kExitRuntime;
}

}  // namespace detail

/// Executes every arm and writes the artifacts. With `compare` set, also
/// writes aligned.csv and comparison.json (requires at least two arms).
inline int execute(ExperimentConfig cfg, const RunOptions& opts, bool compare, std::ostream& log, std::ostream& err) {
  apply_overrides(cfg, opts);
  if (compare && cfg.arms.size() < 2) {
    err << "config error: arms: compare needs at least two arms\n";
    return kExitConfig;
  }
  const Json resolved = to_json(cfg);
  const std::string run_id = run_id_of(resolved);
  const std::filesystem::path dir(cfg.output.dir);

  std::unique_ptr<BuiltModel> model;
  try {
    model = std::make_unique<BuiltModel>(cfg.model);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "config error: model: " << e.what() << "\n";
    return kExitConfig;
  }

  std::vector<RunResult> results;
  Json summaries = Json::array();
  for (const auto& arm : cfg.arms) {
    if (!opts.quiet) log << "arm " << arm.name << ": " << arm.sampler.kind << ", " << to_string(arm.protocol.scheme)
                         << ", K=" << arm.protocol.workers << ", s=" << arm.protocol.comm_period << "\n";
    try {
      results.push_back(run_arm(*model, arm, opts.mode, opts.max_threads));
    } catch (const NumericalFailure& f) {
      err << "runtime error in arm " << arm.name << ": " << f.what() << "\n";
      return detail::write_failure(dir, resolved, run_id,
                                   Json{{"kind", "numerical_failure"}, {"arm", arm.name}, {"worker", f.worker()},
                                        {"step", f.step()}, {"message", f.what()}},
                                   err);
    } catch (const ContractError& e) {
      err << "config error in arm " << arm.name << ": " << e.what() << "\n";
      return kExitConfig;
    } catch (const std::exception& e) {
      err << "runtime error in arm " << arm.name << ": " << e.what() << "\n";
      return detail::write_failure(dir, resolved, run_id,
                                   Json{{"kind", "runtime_error"}, {"arm", arm.name}, {"message", e.what()}}, err);
    }
    summaries.push_back(summarize_arm(*model, arm, results.back()));
    if (!opts.quiet) {
      for (const auto& [m, v] : final_metrics(results.back())) log << "  final " << m << " = " << v << "\n";
      log << "  worker steps " << results.back().counters.worker_steps << ", round trips "
          << results.back().counters.round_trips << ", samples " << results.back().samples.size() << "\n";
    }
  }

  try {
    detail::remove_artifacts(dir);
    detail::ArtifactSet files(dir);
    if (cfg.output.trace) files.add("trace.csv", detail::trace_csv(run_id, results));
    if (cfg.output.samples) files.add("samples.jsonl", detail::samples_jsonl(run_id, results));
    files.add("summary.json", Json{{"run_id", run_id}, {"name", cfg.name}, {"arms", summaries}}.dump(2) + "\n");
    if (compare) {
      files.add("aligned.csv", aligned_csv(results));
      files.add("comparison.json", comparison_table(cfg, results).dump(2) + "\n");
    }
    Json seeds = Json::object();
    for (const auto& a : cfg.arms) seeds[a.name] = a.run.seed;
    const Json artifacts = files.commit();
    const Json manifest{{"run_id", run_id},
                        {"status", "complete"},
                        {"mode", opts.mode == Mode::threads ? "threads" : "virtual"},
                        {"seeds", seeds},
                        {"config", resolved},
                        {"artifacts", artifacts}};
    detail::ArtifactSet::write_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
    if (!opts.quiet) log << "wrote " << artifacts.size() << " artifacts to " << dir.string() << " (run " << run_id << ")\n";
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << "\n";
    return detail::write_failure(dir, resolved, run_id, Json{{"kind", "io_error"}, {"message", e.what()}}, err);
  }
  return kExitOk;
}

inline Json read_json_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  return Json::parse(in);
}

/// Converts a completed run directory's samples into samples.csv and
/// per-arm diagnostics.json.
inline int export_run(const std::filesystem::path& dir, const std::filesystem::path& out, std::ostream& log,
                      std::ostream& err, bool quiet = false) {
  try {
    const Json manifest = read_json_file(dir / "manifest.json");
    if (manifest.value("status", "") != "complete") {
      err << "export: run in " << dir.string() << " is not complete\n";
      return kExitRuntime;
    }
    std::ifstream in(dir / "samples.jsonl");
    if (!in) {
      err << "export: no samples.jsonl in " << dir.string() << "\n";
      return kExitRuntime;
    }
    struct ArmData {
      std::vector<ParamVector> pool;
      std::map<std::int64_t, std::vector<ParamVector>> chains;
    };
    std::map<std::string, ArmData> arms;
    std::vector<std::string> order;
    std::string csv;
    std::string line;
    std::size_t dim = 0;
    std::string rows;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const Json j = Json::parse(line);
      const auto theta = j.at("theta").get<ParamVector>();
      dim = theta.size();
      const std::string arm = j.at("arm").get<std::string>();
      if (!arms.count(arm)) order.push_back(arm);
      auto& a = arms[arm];
      a.pool.push_back(theta);
      a.chains[j.at("worker").get<std::int64_t>()].push_back(theta);
      rows += j.at("run_id").get<std::string>() + ',' + arm + ',' + std::to_string(j.at("seed").get<std::uint64_t>()) +
              ',' + std::to_string(j.at("worker").get<std::int64_t>()) + ',' +
              std::to_string(j.at("step").get<std::uint64_t>()) + ',' + format_double(j.at("time").get<double>());
      for (double v : theta) rows += ',' + format_double(v);
      rows += '\n';
    }
    csv = "run_id,arm,seed,worker,step,virtual_time";
    for (std::size_t i = 0; i < dim; ++i) csv += ",theta_" + std::to_string(i);
    csv += '\n' + rows;

    Json diag = Json::object();
    for (const auto& name : order) {
      const auto& a = arms[name];
      Json d{{"count", a.pool.size()}};
      if (a.pool.size() >= 2) {
        const auto m = moments(a.pool);
        d["mean"] = m.mean;
        d["covariance"] = m.covariance;
      }
      Json per = Json::object();
      double worst = std::numeric_limits<double>::infinity();
      for (const auto& [w, c] : a.chains) {
        if (c.size() < 10) continue;
        const auto e = ess_min(c);
        per[std::to_string(w)] = {{"ess_min", e.ess}, {"degenerate", e.degenerate}, {"length", c.size()}};
        worst = std::min(worst, e.ess);
      }
      d["chains"] = per;
      if (std::isfinite(worst)) d["ess_min"] = worst;
      diag[name] = d;
    }
    detail::ArtifactSet files(out);
    files.add("samples.csv", csv);
    files.add("diagnostics.json", Json{{"run_id", manifest.value("run_id", "")}, {"arms", diag}}.dump(2) + "\n");
    files.commit();
    if (!quiet) log << "exported " << order.size() << " arm(s) to " << out.string() << "\n";
  } catch (const std::exception& e) {
    err << "export: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace ecmcmc
