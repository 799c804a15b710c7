#ifndef OPINET_SCHEDULER_HPP
#define OPINET_SCHEDULER_HPP

#include <map>
#include <ostream>
#include <set>
#include <vector>

#include "opinet/dynamics.hpp"
#include "opinet/scc_analysis.hpp"

namespace opinet {

struct EvaluationPlan {
  std::set<std::size_t> pending;
  std::set<std::size_t> completed;
  ExternalConsensus external_values;
  std::size_t iteration = 0;
  std::size_t max_iters = 20;

  static EvaluationPlan for_blocks(const std::vector<SccBlock>& blocks,
                                   std::size_t max_iters = 20) {
    EvaluationPlan plan;
    for (const auto& b : blocks) plan.pending.insert(b.id);
    plan.max_iters = max_iters;
    return plan;
  }
};

// Pending blocks whose DAG predecessors have all completed.
inline std::set<std::size_t> ready_blocks(const EvaluationPlan& plan,
                                          const BlockDag& dag) {
  std::set<std::size_t> ready;
  for (auto id : plan.pending) {
    bool ok = true;
    if (auto it = dag.predecessors.find(id); it != dag.predecessors.end()) {
      for (auto pred : it->second) {
        if (!plan.completed.contains(pred)) {
          ok = false;
          break;
        }
      }
    }
    if (ok) ready.insert(id);
  }
  return ready;
}

struct BlockResult {
  std::size_t block_id = 0;
  std::vector<std::size_t> topics;
  Rule rule = Rule::ClosedSingleton;
  // Stepper actually run; an open singleton fed a per-agent external is
  // evaluated with the open multi-topic stepper.
  Rule dispatched = Rule::ClosedSingleton;
  ConvergenceVerdict verdict;
  Matrix final_state;
  OpinionHistory history;
};

struct ScheduleOutcome {
  std::map<std::size_t, BlockResult> results;
  std::vector<std::size_t> evaluation_order;
  ExternalConsensus external_values;
  std::size_t sweeps = 0;
  bool early_terminated = false;
};

namespace detail {

inline Matrix block_columns(const Matrix& x, const std::vector<std::size_t>& topics) {
  Matrix out(x.rows(), static_cast<Index>(topics.size()));
  for (std::size_t a = 0; a < topics.size(); ++a) {
    out.col(static_cast<Index>(a)) = x.col(static_cast<Index>(topics[a]));
  }
  return out;
}

inline Matrix logic_sub_block(const LogicMatrix& c, const std::vector<std::size_t>& topics) {
  const auto r = static_cast<Index>(topics.size());
  Matrix sub(r, r);
  for (Index a = 0; a < r; ++a) {
    for (Index b = 0; b < r; ++b) {
      sub(a, b) = c(static_cast<Index>(topics[static_cast<std::size_t>(a)]),
                    static_cast<Index>(topics[static_cast<std::size_t>(b)]));
    }
  }
  return sub;
}

}  // namespace detail

// Builds the stepper a block's rule calls for, given the consensus values
// published by already-completed blocks.
inline BlockStepper stepper_for_block(const SccBlock& block,
                                      const InfluenceMatrix& w,
                                      const AgentLogicAssignment& logic,
                                      const ExternalConsensus& known,
                                      Rule* dispatched = nullptr) {
  if (!block.rule) {
    throw ConfigurationError("block " + std::to_string(block.id) +
                             " has no update rule assigned");
  }
  ExternalConsensus externals;
  bool all_scalar = true;
  for (auto q : block.external_deps) {
    auto it = known.find(q);
    if (it == known.end()) throw MissingExternal(q);
    externals.emplace(q, it->second);
    all_scalar = all_scalar && is_scalar(it->second);
  }

  Rule used = *block.rule;
  if (used == Rule::OpenSingleton && !all_scalar) used = Rule::OpenMultiTopic;
  if (dispatched) *dispatched = used;

  const std::size_t p = block.topics.front();
  switch (used) {
    case Rule::ClosedMultiTopic:
      return closed_multitopic_stepper(w, detail::logic_sub_block(logic[0], block.topics));
    case Rule::ClosedSingleton:
      return singleton_stepper(w, gamma_of(logic, p, p));
    case Rule::OpenSingleton: {
      SingletonExternals ext;
      for (const auto& [q, alpha] : externals) {
        ext.emplace(q, SingletonExternal{alpha, gamma_of(logic, p, q)});
      }
      return open_singleton_stepper(w, gamma_of(logic, p, p), ext);
    }
    case Rule::OpenMultiTopic:
      return open_multitopic_stepper(w, block.topics, logic, externals);
  }
  throw ConfigurationError("unhandled rule");
}

// Evaluates blocks sweep by sweep in DAG order. Consensus topics publish a
// scalar, the rest publish their per-agent vector; values become visible to
// other blocks at the end of the sweep that produced them.
inline ScheduleOutcome run_all(const std::vector<SccBlock>& blocks,
                               const BlockDag& dag, const InfluenceMatrix& w,
                               const AgentLogicAssignment& logic,
                               const Matrix& x0, const RunConfig& cfg = {},
                               std::size_t max_iters = 20) {
  if (logic.n() != w.n()) {
    throw DimensionMismatch("logic assignment has " + std::to_string(logic.n()) +
                            " agents, influence matrix " + std::to_string(w.n()));
  }
  if (x0.rows() != w.n() || x0.cols() != logic.m()) {
    throw DimensionMismatch("initial opinions are " + shape_of(x0) + ", expected " +
                            std::to_string(w.n()) + "x" + std::to_string(logic.m()));
  }
  std::map<std::size_t, const SccBlock*> by_id;
  for (const auto& b : blocks) by_id[b.id] = &b;

  EvaluationPlan plan = EvaluationPlan::for_blocks(blocks, max_iters);
  ScheduleOutcome out;
  while (!plan.pending.empty() && plan.iteration < plan.max_iters) {
    ++plan.iteration;
    const auto ready = ready_blocks(plan, dag);
    if (ready.empty()) throw DeadlockError(plan.pending.size());

    ExternalConsensus published;
    for (auto id : ready) {
      const SccBlock& block = *by_id.at(id);
      BlockResult res;
      res.block_id = id;
      res.topics = block.topics;
      res.rule = *block.rule;
      const auto step = stepper_for_block(block, w, logic, plan.external_values,
                                          &res.dispatched);
      auto run = run_to_verdict(OpinionState{detail::block_columns(x0, block.topics), 0},
                                step, cfg);
      res.verdict = std::move(run.verdict);
      res.final_state = run.final_state();
      res.history = std::move(run.history);

      for (std::size_t a = 0; a < block.topics.size(); ++a) {
        const auto col = static_cast<Index>(a);
        if (res.verdict.topic_kinds[a] == VerdictKind::Consensus) {
          published[block.topics[a]] = res.verdict.consensus(col);
        } else {
          published[block.topics[a]] = Vector(res.final_state.col(col));
        }
      }
      out.evaluation_order.push_back(id);
      out.results.emplace(id, std::move(res));
    }
    for (auto& [q, v] : published) plan.external_values.insert_or_assign(q, std::move(v));
    for (auto id : ready) {
      plan.pending.erase(id);
      plan.completed.insert(id);
    }
  }
  out.sweeps = plan.iteration;
  out.early_terminated = !plan.pending.empty();
  out.external_values = std::move(plan.external_values);
  return out;
}

inline ScheduleOutcome run_all(const BlockAnalysis& analysis,
                               const InfluenceMatrix& w,
                               const AgentLogicAssignment& logic,
                               const Matrix& x0, const RunConfig& cfg = {},
                               std::size_t max_iters = 20) {
  return run_all(analysis.blocks, analysis.dag, w, logic, x0, cfg, max_iters);
}

// Full n x m states over the epoch. Each block contributes its latest
// snapshot at or before every recorded time, so blocks that settled early
// hold their final value.
inline std::vector<OpinionState> assemble_trajectory(const ScheduleOutcome& out,
                                                     const Matrix& x0) {
  std::set<std::size_t> times;
  for (const auto& [id, res] : out.results) {
    for (const auto& s : res.history.snapshots) times.insert(s.t);
  }
  std::vector<OpinionState> states;
  states.reserve(times.size());
  std::map<std::size_t, std::size_t> cursor;
  for (auto t : times) {
    Matrix x = x0;
    for (const auto& [id, res] : out.results) {
      const auto& snaps = res.history.snapshots;
      auto& k = cursor[id];
      while (k + 1 < snaps.size() && snaps[k + 1].t <= t) ++k;
      for (std::size_t a = 0; a < res.topics.size(); ++a) {
        x.col(static_cast<Index>(res.topics[a])) = snaps[k].x.col(static_cast<Index>(a));
      }
    }
    states.push_back({std::move(x), t});
  }
  return states;
}

inline Matrix final_state(const ScheduleOutcome& out, const Matrix& x0) {
  Matrix x = x0;
  for (const auto& [id, res] : out.results) {
    for (std::size_t a = 0; a < res.topics.size(); ++a) {
      x.col(static_cast<Index>(res.topics[a])) = res.final_state.col(static_cast<Index>(a));
    }
  }
  return x;
}

struct TopicSummary {
  std::size_t topic = 0;
  std::size_t block_id = 0;
  Rule rule = Rule::ClosedSingleton;
  Rule dispatched = Rule::ClosedSingleton;
  VerdictKind kind = VerdictKind::NonConvergent;
  double consensus = 0.0;
  double spread = 0.0;
  Vector agent_values;
};

inline std::vector<TopicSummary> summarize_topics(const ScheduleOutcome& out) {
  std::vector<TopicSummary> rows;
  for (const auto& [id, res] : out.results) {
    for (std::size_t a = 0; a < res.topics.size(); ++a) {
      const auto col = static_cast<Index>(a);
      rows.push_back({res.topics[a], id, res.rule, res.dispatched,
                      res.verdict.topic_kinds[a], res.verdict.consensus(col),
                      res.verdict.spread(col), res.final_state.col(col)});
    }
  }
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.topic < b.topic; });
  return rows;
}

// Per-topic summary CSV; agent values are ';'-separated.
inline void write_results_simple_csv(std::ostream& os, const ScheduleOutcome& out,
                                     const std::string& epoch = "0", bool header = true) {
  if (header) os << "epoch,topic,block,rule,dispatched,verdict,consensus,spread,agent_values\n";
  for (const auto& row : summarize_topics(out)) {
    os << epoch << ',' << row.topic + 1 << ",B" << row.block_id + 1 << ','
       << to_string(row.rule) << ',' << to_string(row.dispatched) << ','
       << to_string(row.kind) << ',' << io::format_real(row.consensus) << ','
       << io::format_real(row.spread) << ',';
    for (Index i = 0; i < row.agent_values.size(); ++i) {
      if (i) os << ';';
      os << io::format_real(row.agent_values(i));
    }
    os << '\n';
  }
}

}  // namespace opinet

#endif  // OPINET_SCHEDULER_HPP
