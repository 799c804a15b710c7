#ifndef OPINET_COMMANDS_HPP
#define OPINET_COMMANDS_HPP

// Scenario-level pipelines behind the `opinet` CLI subcommands. Each cmd_*
// returns the process exit code and writes human-readable progress to `log`.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "opinet/detection.hpp"
#include "opinet/scc_analysis.hpp"
#include "opinet/scenario.hpp"
#include "opinet/scheduler.hpp"

namespace opinet {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitRuntime = 2, kExitIo = 3 };

enum class ModeSelection { Static, Online, Both };

struct CommandOptions {
  std::optional<std::uint64_t> seed;
  std::string out_dir = "opinet-out";
  std::optional<std::size_t> max_steps;
  ModeSelection mode = ModeSelection::Both;
};

struct EpochRun {
  std::string name;
  std::optional<double> injected_wt;
  AgentLogicAssignment logic;
  BlockAnalysis analysis;
  ScheduleOutcome outcome;
  // Global time axis; the first state is the epoch's starting point.
  std::vector<OpinionState> trajectory;
  Matrix final_state;
};

inline RunConfig epoch_config(const ResolvedScenario& rs, const Epoch& ep,
                              const CommandOptions& opt) {
  RunConfig cfg = rs.spec.run;
  cfg.t_max = opt.max_steps ? std::min(ep.steps, *opt.max_steps) : ep.steps;
  return cfg;
}

inline EpochRun run_epoch(const ResolvedScenario& rs, std::size_t k,
                          std::optional<double> wt, const Matrix& start,
                          std::size_t t_offset, const RunConfig& cfg) {
  EpochRun er{rs.spec.timeline.at(k).name, wt, rs.epoch_assignment(k, wt), {}, {}, {}, {}};
  er.analysis = analyze(er.logic);
  er.outcome = run_all(er.analysis, rs.w, er.logic, start, cfg, rs.spec.max_iters);
  er.trajectory = assemble_trajectory(er.outcome, start);
  for (auto& s : er.trajectory) s.t += t_offset;
  er.final_state = final_state(er.outcome, start);
  return er;
}

// Runs the whole timeline; the injection (if any) uses its configured weight.
inline std::vector<EpochRun> run_timeline(const ResolvedScenario& rs, const CommandOptions& opt) {
  std::vector<EpochRun> runs;
  Matrix x = rs.x0;
  std::size_t t = 0;
  for (std::size_t k = 0; k < rs.spec.timeline.size(); ++k) {
    std::optional<double> wt;
    if (rs.spec.injection && rs.spec.injection->epoch == k) wt = rs.spec.injection->weight;
    auto er = run_epoch(rs, k, wt, x, t, epoch_config(rs, rs.spec.timeline[k], opt));
    x = er.final_state;
    t = er.trajectory.back().t;
    runs.push_back(std::move(er));
  }
  return runs;
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& p) {
  std::error_code ec;
  std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write '" + p.string() + "'");
  return out;
}

template <typename Fn>
int guarded(std::ostream& log, Fn&& fn) {
  try {
    return fn();
  } catch (const IoError& e) {
    log << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ValidationError& e) {
    log << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const RuntimeError& e) {
    log << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace detail

// Loads every matrix and checks the schema. Reports all problems it can find
// rather than stopping at the first.
inline int cmd_validate(const std::string& path, std::ostream& log) {
  return detail::guarded(log, [&] {
    const Scenario s = load_scenario(path);
    int status = kExitOk;
    auto check = [&](const std::string& what, auto&& fn) {
      try {
        fn();
        log << "ok      " << what << '\n';
      } catch (const IoError& e) {
        log << "FAIL    " << what << ": " << e.what() << '\n';
        status = status == kExitOk ? kExitIo : status;
      } catch (const Error& e) {
        log << "FAIL    " << what << ": " << e.what() << '\n';
        if (status == kExitOk || status == kExitIo) status = kExitValidation;
      }
    };

    check("influence " + s.influence_path, [&] {
      Matrix w = io::read_matrix_file(s.resolve(s.influence_path));
      const auto valid = validate_influence(s.influence_normalize ? normalize_rows(w) : w);
      const auto adv = check_aperiodicity(valid);
      if (!valid.positive_diagonal()) log << "note    influence: some w_ii = 0\n";
      if (!adv.sufficient()) {
        log << "note    influence: strong connectivity + positive diagonal not both present;"
               " convergence of closed singletons is not assured\n";
      }
    });
    for (const auto& [name, src] : s.logic) {
      check("logic '" + name + "'", [&] {
        const LogicMatrix c = load_logic(s, src);
        const auto blocks = decompose(c);
        std::vector<std::vector<std::size_t>> parts;
        for (const auto& b : blocks) parts.push_back(b.topics);
        for (const auto& a : symmetry_report(c, parts)) {
          log << "note    logic '" << name << "': asymmetric pair (" << a.p + 1 << ", " << a.q + 1
              << "): " << a.c_pq << " vs " << a.c_qp << '\n';
        }
      });
    }
    if (status == kExitOk) {
      check("scenario schema", [&] { (void)resolve(s); });
    }
    log << (status == kExitOk ? "valid\n" : "invalid\n");
    return status;
  });
}

inline int cmd_decompose(const std::string& path, const CommandOptions& opt, std::ostream& out,
                         std::ostream& log) {
  return detail::guarded(log, [&] {
    const ResolvedScenario rs = resolve(load_scenario(path), opt.seed);
    auto section = [&](const std::string& title, const BlockAnalysis& a) {
      out << "## " << title << '\n';
      write_block_report(out, a);
      out << '\n';
    };
    for (const auto& [name, c] : rs.logic) section("logic " + name, analyze(c));
    for (std::size_t k = 0; k < rs.spec.timeline.size(); ++k) {
      std::optional<double> wt;
      if (rs.spec.injection && rs.spec.injection->epoch == k) wt = rs.spec.injection->weight;
      std::string title = "epoch " + std::to_string(k) + " " + rs.spec.timeline[k].name;
      if (wt) title += " (injected, wt=" + io::format_real(*wt) + ")";
      section(title, analyze(rs.epoch_assignment(k, wt)));
    }
    return kExitOk;
  });
}

inline int cmd_simulate(const std::string& path, const CommandOptions& opt, std::ostream& log) {
  return detail::guarded(log, [&] {
    const ResolvedScenario rs = resolve(load_scenario(path), opt.seed);
    const auto runs = run_timeline(rs, opt);

    const std::filesystem::path dir(opt.out_dir);
    auto traj = detail::open_output(dir / "trajectory.csv");
    auto simple = detail::open_output(dir / "results_simple.csv");
    std::vector<std::size_t> labels(static_cast<std::size_t>(rs.m()));
    for (std::size_t p = 0; p < labels.size(); ++p) labels[p] = p;

    int status = kExitOk;
    for (std::size_t k = 0; k < runs.size(); ++k) {
      const auto& er = runs[k];
      std::vector<OpinionState> rows(er.trajectory.begin() + (k == 0 ? 0 : 1), er.trajectory.end());
      write_trajectory_csv(traj, rows, labels, k == 0);
      write_results_simple_csv(simple, er.outcome, er.name, k == 0);

      log << "epoch " << k << " '" << er.name << "'";
      if (er.injected_wt) log << " injected wt=" << io::format_real(*er.injected_wt);
      log << ": " << er.outcome.sweeps << " sweep(s)\n";
      for (const auto& row : summarize_topics(er.outcome)) {
        log << "  topic " << row.topic + 1 << "  B" << row.block_id + 1 << "  "
            << to_string(row.rule) << "  " << to_string(row.kind) << "  mean "
            << io::format_real(row.consensus) << "  spread "
            << io::format_real(row.spread) << '\n';
      }
      for (const auto& [id, res] : er.outcome.results) {
        if (res.verdict.overflow) {
          log << "  error: block B" << id + 1 << " overflowed\n";
          status = kExitRuntime;
        }
      }
      if (er.outcome.early_terminated) {
        log << "  warning: early termination after " << er.outcome.sweeps << " sweeps\n";
        status = kExitRuntime;
      }
      if (k > 0 && rs.spec.detection.frobenius_delta) {
        for (Index i = 0; i < rs.n(); ++i) {
          const auto d = frobenius_drift(runs[k - 1].logic[i], er.logic[i],
                                         *rs.spec.detection.frobenius_delta);
          if (d.flagged) {
            log << "  drift: agent " << i + 1 << " logic changed by "
                << io::format_real(d.norm) << " (Frobenius) > delta\n";
          }
        }
      }
    }
    log << "wrote " << (dir / "trajectory.csv").string() << " and "
        << (dir / "results_simple.csv").string() << '\n';
    return status;
  });
}

struct SweepResult {
  Matrix baseline;
  std::vector<AnomalyTimeline> timelines;  // one per (wt, mode)
};

// Settles the pre-injection epochs once, then replays the injection epoch for
// every sweep weight and scores each of its steps against the settled
// baseline.
inline SweepResult run_sweep(const ResolvedScenario& rs, const CommandOptions& opt,
                             std::ostream* log = nullptr) {
  if (!rs.spec.injection) throw ValidationError("scenario has no injection schedule");
  const auto& inj = *rs.spec.injection;
  if (inj.sweep.empty()) throw ValidationError("injection has no sweep weights");
  if (inj.epoch == 0) throw ValidationError("sweep needs at least one pre-injection epoch");

  Matrix x = rs.x0;
  std::size_t t = 0;
  for (std::size_t k = 0; k < inj.epoch; ++k) {
    auto er = run_epoch(rs, k, std::nullopt, x, t, epoch_config(rs, rs.spec.timeline[k], opt));
    for (const auto& [id, res] : er.outcome.results) {
      if (!res.verdict.settled && log) {
        *log << "warning: epoch " << k << " block B" << id + 1 << " did not settle\n";
      }
    }
    x = er.final_state;
    t = er.trajectory.back().t;
  }

  SweepResult out;
  out.baseline = x;
  const Epoch& ep = rs.spec.timeline[inj.epoch];
  RunConfig cfg = epoch_config(rs, ep, opt);
  cfg.history_stride = 1;

  std::vector<PriorMode> modes;
  if (opt.mode != ModeSelection::Online) modes.push_back(PriorMode::Static);
  if (opt.mode != ModeSelection::Static) modes.push_back(PriorMode::Online);

  for (double wt : inj.sweep) {
    auto er = run_epoch(rs, inj.epoch, wt, x, 0, cfg);
    std::vector<Matrix> states;
    std::size_t k = 0;
    for (std::size_t step = 1; step <= cfg.t_max; ++step) {
      while (k + 1 < er.trajectory.size() && er.trajectory[k + 1].t <= step) ++k;
      states.push_back(er.trajectory[k].x);
    }
    for (auto mode : modes) {
      ScoreConfig sc{rs.spec.detection.prior, rs.spec.detection.scale,
                     rs.spec.detection.exponent, mode};
      out.timelines.push_back(score_against_baseline(x, states, sc, wt));
    }
    if (log) {
      const auto& base = rs.logic.at(inj.base);
      const auto drift = frobenius_drift(base, rs.injected_logic(wt),
                                         rs.spec.detection.frobenius_delta.value_or(0.0));
      *log << "wt=" << io::format_real(wt) << "  logic drift " << io::format_real(drift.norm);
      for (std::size_t j = out.timelines.size() - modes.size(); j < out.timelines.size(); ++j) {
        const auto& last = out.timelines[j].entries.back();
        *log << "  " << to_string(last.mode) << " posterior " << io::format_real(last.posterior);
      }
      *log << '\n';
    }
  }
  return out;
}

inline int cmd_sweep(const std::string& path, const CommandOptions& opt, std::ostream& log) {
  return detail::guarded(log, [&] {
    const ResolvedScenario rs = resolve(load_scenario(path), opt.seed);
    const auto res = run_sweep(rs, opt, &log);
    const auto file = std::filesystem::path(opt.out_dir) / "scores.csv";
    auto out = detail::open_output(file);
    for (std::size_t j = 0; j < res.timelines.size(); ++j) res.timelines[j].write_csv(out, j == 0);
    log << "wrote " << file.string() << '\n';
    return kExitOk;
  });
}

}  // namespace opinet

#endif  // OPINET_COMMANDS_HPP
