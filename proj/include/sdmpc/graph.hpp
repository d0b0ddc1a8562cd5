#pragma once

#include <utility>
#include <vector>

namespace sdmpc {

/// Undirected, connected communication graph over agents 0..M-1.
class Graph {
 public:
  Graph() = default;
  /// Throws std::invalid_argument on self loops, out-of-range ids or a
  /// disconnected graph. Duplicate edges are merged.
  Graph(int num_agents, const std::vector<std::pair<int, int>>& edges);

  static Graph Path(int num_agents);
  static Graph Star(int num_agents);
  static Graph Complete(int num_agents);

  int num_agents() const { return num_agents_; }
  /// Normalized edge list (i < j), sorted.
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  /// Sorted neighbour ids.
  const std::vector<int>& Neighbors(int agent) const { return adjacency_.at(agent); }
  int Diameter() const;
  /// Hop distances from `source` (BFS).
  std::vector<int> Distances(int source) const;

 private:
  int num_agents_ = 0;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> adjacency_;
};

}  // namespace sdmpc
