#ifndef OPINET_GRAPH_HPP
#define OPINET_GRAPH_HPP

#include <algorithm>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

namespace opinet::graph {

using Adjacency = std::vector<std::vector<std::size_t>>;

// Strongly connected components of a digraph given as out-adjacency lists.
// Iterative Tarjan; components are returned with sorted members and ordered
// by their smallest member so the result does not depend on visit order.
inline std::vector<std::vector<std::size_t>> strongly_connected_components(
    const Adjacency& adj) {
  constexpr std::size_t kUnvisited = std::numeric_limits<std::size_t>::max();
  const std::size_t n = adj.size();
  std::vector<std::size_t> index(n, kUnvisited);
  std::vector<std::size_t> lowlink(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> components;
  std::size_t counter = 0;

  // (node, next edge position)
  std::vector<std::pair<std::size_t, std::size_t>> call;
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnvisited) continue;
    call.emplace_back(root, 0);
    index[root] = lowlink[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;

    while (!call.empty()) {
      auto& [v, pos] = call.back();
      if (pos < adj[v].size()) {
        const std::size_t w = adj[v][pos++];
        if (index[w] == kUnvisited) {
          index[w] = lowlink[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          lowlink[v] = std::min(lowlink[v], index[w]);
        }
        continue;
      }
      const std::size_t done = v;
      call.pop_back();
      if (!call.empty()) {
        const std::size_t parent = call.back().first;
        lowlink[parent] = std::min(lowlink[parent], lowlink[done]);
      }
      if (lowlink[done] == index[done]) {
        std::vector<std::size_t> comp;
        std::size_t w = 0;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp.push_back(w);
        } while (w != done);
        std::sort(comp.begin(), comp.end());
        components.push_back(std::move(comp));
      }
    }
  }
  std::sort(components.begin(), components.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return components;
}

inline bool is_strongly_connected(const Adjacency& adj) {
  return adj.empty() || strongly_connected_components(adj).size() == 1;
}

}  // namespace opinet::graph

#endif  // OPINET_GRAPH_HPP
