#include "sdmpc/graph.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>

namespace sdmpc {

Graph::Graph(int num_agents, const std::vector<std::pair<int, int>>& edges)
    : num_agents_(num_agents), adjacency_(num_agents) {
  if (num_agents < 1) throw std::invalid_argument("Graph: need at least one agent");
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= num_agents || b >= num_agents) {
      throw std::invalid_argument("Graph: edge endpoint out of range");
    }
    if (a == b) throw std::invalid_argument("Graph: self loops are not allowed");
    edges_.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
  for (auto [a, b] : edges_) {
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }
  for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());
  const auto dist = Distances(0);
  if (std::any_of(dist.begin(), dist.end(), [](int d) { return d < 0; })) {
    throw std::invalid_argument("Graph: communication graph must be connected");
  }
}

Graph Graph::Path(int num_agents) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i + 1 < num_agents; ++i) e.emplace_back(i, i + 1);
  return Graph(num_agents, e);
}

Graph Graph::Star(int num_agents) {
  std::vector<std::pair<int, int>> e;
  for (int i = 1; i < num_agents; ++i) e.emplace_back(0, i);
  return Graph(num_agents, e);
}

Graph Graph::Complete(int num_agents) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < num_agents; ++i) {
    for (int j = i + 1; j < num_agents; ++j) e.emplace_back(i, j);
  }
  return Graph(num_agents, e);
}

std::vector<int> Graph::Distances(int source) const {
  std::vector<int> dist(num_agents_, -1);
  std::queue<int> q;
  dist.at(source) = 0;
  q.push(source);
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    for (int w : adjacency_[v]) {
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        q.push(w);
      }
    }
  }
  return dist;
}

int Graph::Diameter() const {
  int d = 0;
  for (int i = 0; i < num_agents_; ++i) {
    const auto dist = Distances(i);
    d = std::max(d, *std::max_element(dist.begin(), dist.end()));
  }
  return d;
}

}  // namespace sdmpc
