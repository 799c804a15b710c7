#ifndef OPINET_SCC_ANALYSIS_HPP
#define OPINET_SCC_ANALYSIS_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "opinet/core_model.hpp"
#include "opinet/graph.hpp"

namespace opinet {

// Update rule attached to a topic block. The names follow the block shape:
//   ClosedMultiTopic  - several topics, no outside deps, shared agent logic
//   ClosedSingleton   - one topic, no outside deps
//   OpenSingleton     - one topic fed by converged outside topics
//   OpenMultiTopic    - everything else (outside deps or mixed agent logic)
enum class Rule { ClosedMultiTopic, ClosedSingleton, OpenSingleton, OpenMultiTopic };

enum class BlockStatus { Closed, Open };

inline std::string_view to_string(Rule r) {
  switch (r) {
    case Rule::ClosedMultiTopic: return "closed-multitopic";
    case Rule::ClosedSingleton: return "closed-singleton";
    case Rule::OpenSingleton: return "open-singleton";
    case Rule::OpenMultiTopic: return "open-multitopic";
  }
  return "?";
}

inline std::string_view to_string(BlockStatus s) {
  return s == BlockStatus::Closed ? "closed" : "open";
}

// Dependency digraph over topics: p -> q when some c[p][q] is nonzero.
class DependencyPattern {
 public:
  explicit DependencyPattern(Index m)
      : m_(m), edge_(static_cast<std::size_t>(m * m), false) {}

  explicit DependencyPattern(const LogicMatrix& c) : DependencyPattern(c.m()) {
    add(c);
  }

  // Union of the agents' patterns.
  explicit DependencyPattern(const AgentLogicAssignment& assignment)
      : DependencyPattern(assignment.m()) {
    for (const auto& c : assignment.agents()) add(c);
  }

  Index m() const noexcept { return m_; }

  bool depends(std::size_t p, std::size_t q) const {
    return edge_[p * static_cast<std::size_t>(m_) + q];
  }

  graph::Adjacency adjacency() const {
    const auto m = static_cast<std::size_t>(m_);
    graph::Adjacency adj(m);
    for (std::size_t p = 0; p < m; ++p) {
      for (std::size_t q = 0; q < m; ++q) {
        if (depends(p, q)) adj[p].push_back(q);
      }
    }
    return adj;
  }

 private:
  void add(const LogicMatrix& c) {
    if (c.m() != m_) throw DimensionMismatch("pattern size");
    for (Index p = 0; p < m_; ++p) {
      for (Index q = 0; q < m_; ++q) {
        if (p != q && std::abs(c(p, q)) > kEdgeThreshold) {
          edge_[static_cast<std::size_t>(p * m_ + q)] = true;
        }
      }
    }
  }

  Index m_;
  std::vector<bool> edge_;
};

struct SccBlock {
  std::size_t id = 0;
  std::vector<std::size_t> topics;  // sorted
  BlockStatus status = BlockStatus::Closed;
  std::map<std::size_t, std::vector<std::size_t>> local_deps;
  std::vector<std::size_t> external_deps;  // sorted
  std::optional<Rule> rule;

  bool contains(std::size_t topic) const {
    return std::binary_search(topics.begin(), topics.end(), topic);
  }
  std::size_t size() const noexcept { return topics.size(); }
};

// Blocks are the SCCs of the pattern, ordered by smallest topic.
inline std::vector<SccBlock> decompose(const DependencyPattern& pattern) {
  auto comps = graph::strongly_connected_components(pattern.adjacency());
  std::vector<SccBlock> blocks;
  blocks.reserve(comps.size());
  for (std::size_t j = 0; j < comps.size(); ++j) {
    SccBlock b;
    b.id = j;
    b.topics = std::move(comps[j]);
    blocks.push_back(std::move(b));
  }
  return blocks;
}

inline std::vector<SccBlock> decompose(const LogicMatrix& c) {
  return decompose(DependencyPattern(c));
}

inline std::vector<SccBlock> classify(std::vector<SccBlock> blocks,
                                      const DependencyPattern& pattern) {
  const auto m = static_cast<std::size_t>(pattern.m());
  for (auto& b : blocks) {
    b.local_deps.clear();
    std::set<std::size_t> external;
    for (auto p : b.topics) {
      if (p >= m) throw IndexOutOfRange(p, m);
      auto& deps = b.local_deps[p];
      for (std::size_t q = 0; q < m; ++q) {
        if (q != p && pattern.depends(p, q)) {
          deps.push_back(q);
          if (!b.contains(q)) external.insert(q);
        }
      }
    }
    b.external_deps.assign(external.begin(), external.end());
    b.status = b.external_deps.empty() ? BlockStatus::Closed : BlockStatus::Open;
  }
  return blocks;
}

inline std::vector<SccBlock> classify(std::vector<SccBlock> blocks,
                                      const LogicMatrix& c) {
  return classify(std::move(blocks), DependencyPattern(c));
}

struct BlockDag {
  std::vector<std::size_t> nodes;
  // (from, to): block `to` depends on a topic of block `from`.
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::map<std::size_t, std::vector<std::size_t>> predecessors;
  std::vector<std::size_t> topo_order;
};

inline BlockDag build_dag(const std::vector<SccBlock>& blocks) {
  BlockDag dag;
  std::map<std::size_t, std::size_t> owner;  // topic -> block id
  for (const auto& b : blocks) {
    dag.nodes.push_back(b.id);
    dag.predecessors[b.id];
    for (auto t : b.topics) {
      if (!owner.emplace(t, b.id).second) {
        throw ValidationError("topic " + std::to_string(t) +
                              " belongs to two blocks");
      }
    }
  }
  std::set<std::pair<std::size_t, std::size_t>> edge_set;
  for (const auto& b : blocks) {
    for (auto q : b.external_deps) {
      auto it = owner.find(q);
      if (it == owner.end()) {
        throw ValidationError("block " + std::to_string(b.id) +
                              " depends on topic " + std::to_string(q) +
                              " that no block owns");
      }
      if (it->second != b.id) edge_set.emplace(it->second, b.id);
    }
  }
  dag.edges.assign(edge_set.begin(), edge_set.end());

  std::map<std::size_t, std::size_t> indegree;
  std::map<std::size_t, std::vector<std::size_t>> successors;
  for (auto id : dag.nodes) indegree[id] = 0;
  for (const auto& [from, to] : dag.edges) {
    ++indegree[to];
    successors[from].push_back(to);
    dag.predecessors[to].push_back(from);
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (const auto& [id, deg] : indegree) {
    if (deg == 0) ready.push(id);
  }
  while (!ready.empty()) {
    const auto id = ready.top();
    ready.pop();
    dag.topo_order.push_back(id);
    for (auto next : successors[id]) {
      if (--indegree[next] == 0) ready.push(next);
    }
  }
  if (dag.topo_order.size() != dag.nodes.size()) throw CycleDetected();
  return dag;
}

// True when every agent carries the same logic restricted to the block.
inline bool shares_block_logic(const SccBlock& block,
                               const AgentLogicAssignment& assignment,
                               double tol = kEdgeThreshold) {
  const auto& ref = assignment[0];
  for (Index i = 1; i < assignment.n(); ++i) {
    for (auto p : block.topics) {
      for (auto q : block.topics) {
        const auto pi = static_cast<Index>(p);
        const auto qi = static_cast<Index>(q);
        if (std::abs(assignment[i](pi, qi) - ref(pi, qi)) > tol) return false;
      }
    }
  }
  return true;
}

inline Rule assign_rule(const SccBlock& block,
                        const AgentLogicAssignment& assignment) {
  const bool closed = block.status == BlockStatus::Closed;
  if (block.size() == 1) {
    return closed ? Rule::ClosedSingleton : Rule::OpenSingleton;
  }
  if (closed && shares_block_logic(block, assignment)) {
    return Rule::ClosedMultiTopic;
  }
  return Rule::OpenMultiTopic;
}

struct BlockAnalysis {
  std::vector<SccBlock> blocks;
  BlockDag dag;

  const SccBlock& block(std::size_t id) const { return blocks.at(id); }
};

// decompose -> classify -> build_dag -> assign_rule over the union pattern
// of all agents.
inline BlockAnalysis analyze(const AgentLogicAssignment& assignment) {
  DependencyPattern pattern(assignment);
  BlockAnalysis out;
  out.blocks = classify(decompose(pattern), pattern);
  out.dag = build_dag(out.blocks);
  for (auto& b : out.blocks) b.rule = assign_rule(b, assignment);
  return out;
}

inline BlockAnalysis analyze(const LogicMatrix& c) {
  return analyze(AgentLogicAssignment::homogeneous(c, 1));
}

namespace detail {
inline std::string topic_list(const std::vector<std::size_t>& topics) {
  if (topics.empty()) return "-";
  std::string s;
  for (auto t : topics) {
    if (!s.empty()) s += ',';
    s += std::to_string(t + 1);
  }
  return s;
}
}  // namespace detail

// One tab-separated record per block in evaluation order. Topics are
// printed 1-based.
inline void write_block_report(std::ostream& out, const BlockAnalysis& a) {
  out << "order\tblock\ttopics\tstatus\tlocal_deps\texternal_deps\tpredecessors\trule\n";
  std::size_t order = 0;
  for (auto id : a.dag.topo_order) {
    const auto& b = a.block(id);
    std::string local;
    for (const auto& [p, deps] : b.local_deps) {
      if (!local.empty()) local += ' ';
      local += std::to_string(p + 1) + ":" + detail::topic_list(deps);
    }
    std::vector<std::size_t> preds;
    for (auto pid : a.dag.predecessors.at(id)) preds.push_back(pid);
    std::string pred_s = "-";
    if (!preds.empty()) {
      pred_s.clear();
      for (auto pid : preds) {
        if (!pred_s.empty()) pred_s += ',';
        pred_s += 'B' + std::to_string(pid + 1);
      }
    }
    out << ++order << "\tB" << id + 1 << '\t' << detail::topic_list(b.topics)
        << '\t' << to_string(b.status) << '\t' << local << '\t'
        << detail::topic_list(b.external_deps) << '\t' << pred_s << '\t'
        << (b.rule ? to_string(*b.rule) : std::string_view("-")) << '\n';
  }
}

}  // namespace opinet

#endif  // OPINET_SCC_ANALYSIS_HPP
