#ifndef OPINET_SCENARIO_HPP
#define OPINET_SCENARIO_HPP

// Scenario files are JSON documents that reference plain-text matrix files
// (paths relative to the scenario). See scenarios/README.md for the schema.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "opinet/access_logic.hpp"
#include "opinet/core_model.hpp"
#include "opinet/dynamics.hpp"
#include "opinet/detection.hpp"
#include "opinet/matrix_io.hpp"

namespace opinet {

struct LogicSource {
  enum class Kind { File, AccessCounts, SyntheticAccess };
  Kind kind = Kind::File;
  std::string path;
  bool normalize = false;
  // SyntheticAccess
  std::vector<long> components;
  std::map<long, double> rates;
  double cross_rate = 0.0;
  std::uint64_t seed = 0;
};

struct AssignmentRun {
  std::string logic;
  std::size_t count = 0;
};

struct Epoch {
  std::string name;
  std::vector<AssignmentRun> assignment;
  std::size_t steps = 5000;
};

struct InjectionEdgeSpec {
  std::size_t target = 0;  // 0-based
  std::size_t source = 0;  // 0-based
  double multiplier = 1.0;
};

struct InjectionSchedule {
  std::size_t epoch = 0;
  std::string base;
  std::vector<std::size_t> agents;  // 0-based
  double row_mass = 1.0;
  std::vector<InjectionEdgeSpec> edges;
  double weight = 1.0;
  std::vector<double> sweep;
};

struct InitialOpinions {
  std::optional<std::string> file;
  double low = -1.0;
  double high = 1.0;
};

struct DetectionSettings {
  double prior = 0.1;
  double scale = 1.0;
  double exponent = 1.0;
  std::optional<double> frobenius_delta;
};

struct Scenario {
  std::string name;
  std::filesystem::path base_dir;
  std::string influence_path;
  bool influence_normalize = false;
  std::map<std::string, LogicSource> logic;
  InitialOpinions initial;
  std::uint64_t seed = 42;
  RunConfig run;
  std::size_t max_iters = 20;
  std::vector<Epoch> timeline;
  std::optional<InjectionSchedule> injection;
  DetectionSettings detection;

  std::string resolve(const std::string& p) const {
    std::filesystem::path path(p);
    return path.is_absolute() ? p : (base_dir / path).string();
  }
};

namespace detail {

using nlohmann::json;

inline std::size_t line_of_offset(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : it->get<T>();
}

inline const json& require_key(const json& j, const char* key, const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(ctx + ": missing '" + key + "'");
  return *it;
}

inline std::size_t one_based(const json& j, const std::string& ctx) {
  const auto v = j.get<long long>();
  if (v < 1) throw ValidationError(ctx + ": indices are 1-based, got " + std::to_string(v));
  return static_cast<std::size_t>(v - 1);
}

inline std::vector<AssignmentRun> parse_assignment(const json& j, const std::string& ctx) {
  std::vector<AssignmentRun> runs;
  for (const auto& item : j) {
    AssignmentRun r;
    r.logic = require_key(item, "logic", ctx).get<std::string>();
    r.count = get_or<std::size_t>(item, "count", 1);
    runs.push_back(r);
  }
  return runs;
}

}  // namespace detail

inline Scenario parse_scenario(const std::string& text, const std::string& source,
                               const std::filesystem::path& base_dir) {
  using detail::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source, detail::line_of_offset(text, e.byte), e.what());
  }

  Scenario s;
  s.base_dir = base_dir;
  try {
    s.name = detail::get_or<std::string>(j, "name", source);
    const auto& infl = detail::require_key(j, "influence", source);
    s.influence_path = detail::require_key(infl, "file", source + ": influence").get<std::string>();
    s.influence_normalize = detail::get_or<bool>(infl, "normalize", false);

    for (const auto& [name, spec] : detail::require_key(j, "logic", source).items()) {
      LogicSource src;
      const std::string ctx = source + ": logic '" + name + "'";
      if (spec.contains("file")) {
        src.kind = LogicSource::Kind::File;
        src.path = spec["file"].get<std::string>();
        src.normalize = detail::get_or<bool>(spec, "normalize", false);
      } else if (spec.contains("access_counts")) {
        src.kind = LogicSource::Kind::AccessCounts;
        src.path = spec["access_counts"].get<std::string>();
      } else if (spec.contains("synthetic_access")) {
        const auto& syn = spec["synthetic_access"];
        src.kind = LogicSource::Kind::SyntheticAccess;
        src.components = detail::require_key(syn, "components", ctx).get<std::vector<long>>();
        for (const auto& [label, rate] : detail::require_key(syn, "rates", ctx).items()) {
          src.rates[std::stol(label)] = rate.get<double>();
        }
        src.cross_rate = detail::get_or<double>(syn, "cross_rate", 0.0);
        src.seed = detail::get_or<std::uint64_t>(syn, "seed", 0);
      } else {
        throw ValidationError(ctx + ": needs 'file', 'access_counts' or 'synthetic_access'");
      }
      s.logic.emplace(name, std::move(src));
    }

    if (auto it = j.find("initial"); it != j.end()) {
      if (it->contains("file")) s.initial.file = (*it)["file"].get<std::string>();
      if (it->contains("uniform")) {
        const auto range = (*it)["uniform"].get<std::vector<double>>();
        if (range.size() != 2 || !(range[0] <= range[1])) {
          throw ValidationError(source + ": initial.uniform must be [low, high]");
        }
        s.initial.low = range[0];
        s.initial.high = range[1];
      }
    }
    s.seed = detail::get_or<std::uint64_t>(j, "seed", 42);

    if (auto it = j.find("run"); it != j.end()) {
      s.run.settle_tol = detail::get_or<double>(*it, "settle_tol", s.run.settle_tol);
      s.run.consensus_tol = detail::get_or<double>(*it, "consensus_tol", s.run.consensus_tol);
      s.run.settle_window = detail::get_or<std::size_t>(*it, "settle_window", s.run.settle_window);
      s.run.history_stride = detail::get_or<std::size_t>(*it, "history_stride", s.run.history_stride);
      s.max_iters = detail::get_or<std::size_t>(*it, "max_iters", s.max_iters);
    }

    for (const auto& e : detail::require_key(j, "timeline", source)) {
      Epoch ep;
      ep.name = detail::get_or<std::string>(e, "name", "epoch" + std::to_string(s.timeline.size()));
      ep.assignment = detail::parse_assignment(detail::require_key(e, "assignment", source + ": epoch"),
                                               source + ": epoch '" + ep.name + "'");
      ep.steps = detail::get_or<std::size_t>(e, "steps", 5000);
      if (ep.steps < 1) throw ValidationError(source + ": epoch '" + ep.name + "' needs steps >= 1");
      s.timeline.push_back(std::move(ep));
    }
    if (s.timeline.empty()) throw ValidationError(source + ": timeline is empty");

    if (auto it = j.find("injection"); it != j.end()) {
      const std::string ctx = source + ": injection";
      InjectionSchedule inj;
      inj.epoch = detail::require_key(*it, "epoch", ctx).get<std::size_t>();
      inj.base = detail::require_key(*it, "base", ctx).get<std::string>();
      for (const auto& a : detail::require_key(*it, "agents", ctx)) {
        inj.agents.push_back(detail::one_based(a, ctx + " agents"));
      }
      inj.row_mass = detail::get_or<double>(*it, "row_mass", 1.0);
      for (const auto& e : detail::require_key(*it, "edges", ctx)) {
        InjectionEdgeSpec es;
        es.target = detail::one_based(detail::require_key(e, "target", ctx), ctx + " target");
        es.source = detail::one_based(detail::require_key(e, "source", ctx), ctx + " source");
        es.multiplier = detail::get_or<double>(e, "multiplier", 1.0);
        inj.edges.push_back(es);
      }
      inj.weight = detail::get_or<double>(*it, "weight", 1.0);
      inj.sweep = detail::get_or<std::vector<double>>(*it, "sweep", {});
      s.injection = std::move(inj);
    }

    if (auto it = j.find("detection"); it != j.end()) {
      s.detection.prior = detail::get_or<double>(*it, "prior", 0.1);
      s.detection.scale = detail::get_or<double>(*it, "scale", 1.0);
      s.detection.exponent = detail::get_or<double>(*it, "exponent", 1.0);
      if (it->contains("frobenius_delta")) {
        s.detection.frobenius_delta = (*it)["frobenius_delta"].get<double>();
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(source + ": " + e.what());
  }
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path,
                        std::filesystem::path(path).parent_path());
}

// Uniform double in [0, 1) from the top 53 bits, identical on every
// standard library.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Everything a scenario refers to, loaded and validated.
struct ResolvedScenario {
  Scenario spec;
  InfluenceMatrix w;
  std::map<std::string, LogicMatrix> logic;
  Matrix x0;

  Index n() const { return w.n(); }
  Index m() const { return logic.begin()->second.m(); }

  AgentLogicAssignment assignment(const std::vector<AssignmentRun>& runs) const {
    std::vector<LogicMatrix> per_agent;
    for (const auto& r : runs) {
      auto it = logic.find(r.logic);
      if (it == logic.end()) throw ValidationError("unknown logic matrix '" + r.logic + "'");
      for (std::size_t k = 0; k < r.count; ++k) per_agent.push_back(it->second);
    }
    if (static_cast<Index>(per_agent.size()) != n()) {
      throw DimensionMismatch("assignment covers " + std::to_string(per_agent.size()) +
                              " agents, influence matrix has " + std::to_string(n()));
    }
    return AgentLogicAssignment(std::move(per_agent));
  }

  // Base logic with the injection edges scaled by wt.
  LogicMatrix injected_logic(double wt) const {
    const auto& inj = *spec.injection;
    std::vector<InjectionEdge> edges;
    for (const auto& e : inj.edges) edges.push_back({e.target, e.source, e.multiplier * wt});
    return inject_cross_influence(logic.at(inj.base), edges, inj.row_mass);
  }

  // Assignment of epoch k, with injected agents switched to the perturbed
  // logic when k is the injection epoch.
  AgentLogicAssignment epoch_assignment(std::size_t k, std::optional<double> wt) const {
    AgentLogicAssignment base = assignment(spec.timeline.at(k).assignment);
    if (!spec.injection || k != spec.injection->epoch || !wt) return base;
    std::vector<LogicMatrix> agents = base.agents();
    const LogicMatrix bar = injected_logic(*wt);
    for (auto a : spec.injection->agents) {
      if (a >= agents.size()) throw IndexOutOfRange(a, agents.size());
      agents[a] = bar;
    }
    return AgentLogicAssignment(std::move(agents));
  }
};

inline LogicMatrix load_logic(const Scenario& s, const LogicSource& src) {
  switch (src.kind) {
    case LogicSource::Kind::File: {
      Matrix c = io::read_matrix_file(s.resolve(src.path));
      return validate_logic(src.normalize ? normalize_rows(c) : c);
    }
    case LogicSource::Kind::AccessCounts: {
      auto raw = io::read_access_counts_file(s.resolve(src.path));
      return logic_from_access(AccessCounts(raw.counts, raw.component_labels));
    }
    case LogicSource::Kind::SyntheticAccess: {
      std::mt19937_64 rng(src.seed);
      return logic_from_access(
          synthetic_access_counts(src.components, src.rates, src.cross_rate, rng));
    }
  }
  throw ConfigurationError("unknown logic source");
}

// `seed` overrides the scenario's seed for seeded initial opinions.
inline ResolvedScenario resolve(const Scenario& s, std::optional<std::uint64_t> seed = {}) {
  Matrix wraw = io::read_matrix_file(s.resolve(s.influence_path));
  InfluenceMatrix w = validate_influence(s.influence_normalize ? normalize_rows(wraw) : wraw);
  std::map<std::string, LogicMatrix> logic;
  for (const auto& [name, src] : s.logic) logic.emplace(name, load_logic(s, src));
  if (logic.empty()) throw ValidationError(s.name + ": no logic matrices");
  const Index m = logic.begin()->second.m();
  for (const auto& [name, c] : logic) {
    if (c.m() != m) throw DimensionMismatch("logic '" + name + "' has m=" + std::to_string(c.m()));
  }

  Matrix x0;
  if (s.initial.file) {
    x0 = io::read_matrix_file(s.resolve(*s.initial.file));
    if (x0.rows() != w.n() || x0.cols() != m) {
      throw DimensionMismatch("initial opinions are " + shape_of(x0) + ", expected " +
                              std::to_string(w.n()) + "x" + std::to_string(m));
    }
  } else {
    std::mt19937_64 rng(seed.value_or(s.seed));
    x0.resize(w.n(), m);
    for (Index i = 0; i < x0.rows(); ++i) {
      for (Index p = 0; p < x0.cols(); ++p) {
        x0(i, p) = s.initial.low + (s.initial.high - s.initial.low) * unit_uniform(rng);
      }
    }
  }

  ResolvedScenario r{s, std::move(w), std::move(logic), std::move(x0)};
  for (std::size_t k = 0; k < s.timeline.size(); ++k) (void)r.assignment(s.timeline[k].assignment);
  if (s.injection) {
    const auto& inj = *s.injection;
    if (inj.epoch >= s.timeline.size()) {
      throw ValidationError("injection epoch " + std::to_string(inj.epoch) +
                            " outside timeline of " + std::to_string(s.timeline.size()));
    }
    if (!r.logic.contains(inj.base)) throw ValidationError("unknown injection base '" + inj.base + "'");
    (void)r.epoch_assignment(inj.epoch, inj.weight);
    for (double wt : inj.sweep) (void)r.injected_logic(wt);
  }
  return r;
}

}  // namespace opinet

#endif  // OPINET_SCENARIO_HPP
