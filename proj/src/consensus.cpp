#include "sdmpc/consensus.hpp"

#include <algorithm>
#include <stdexcept>

namespace sdmpc {

const char* ToString(ConsensusMode mode) {
  return mode == ConsensusMode::kMultiRound ? "multi_round" : "instantaneous";
}

ConsensusMode ParseConsensusMode(const std::string& text) {
  if (text == "multi_round") return ConsensusMode::kMultiRound;
  if (text == "instantaneous") return ConsensusMode::kInstantaneous;
  throw std::invalid_argument("unknown consensus mode '" + text +
                              "' (expected multi_round or instantaneous)");
}

bool SwitchConsensusStep(std::vector<ConsensusAgent>& agents, const std::vector<bool>& ready_now,
                         const Graph& graph, ConsensusMode mode, int round) {
  const int M = graph.num_agents();
  if (static_cast<int>(agents.size()) != M || static_cast<int>(ready_now.size()) != M) {
    throw std::invalid_argument("SwitchConsensusStep: one entry per agent is required");
  }
  if (agents.front().switched) return false;

  if (mode == ConsensusMode::kInstantaneous) {
    bool all = true;
    for (int i = 0; i < M; ++i) {
      if (ready_now[i] && !agents[i].ready) {
        agents[i].ready = true;
        agents[i].ready_known[i] = round;
      }
      all = all && agents[i].ready;
    }
    if (!all) return false;
    for (auto& a : agents) {
      a.complete = true;
      a.switch_round = round;
      a.switched = true;
    }
    return true;
  }

  const std::vector<ConsensusAgent> snapshot = agents;
  const int diameter = graph.Diameter();
  bool switched = false;
  for (int i = 0; i < M; ++i) {
    ConsensusAgent& a = agents[i];
    if (ready_now[i] && !a.ready) {
      a.ready = true;
      a.ready_known[i] = round;
    }
    for (int j : graph.Neighbors(i)) {
      for (auto [id, r] : snapshot[j].ready_known) a.ready_known.emplace(id, r);
      for (auto [id, r] : snapshot[j].complete_known) a.complete_known.emplace(id, r);
    }
    if (!a.complete && static_cast<int>(a.ready_known.size()) == M) {
      a.complete = true;
      a.complete_known[i] = round;
    }
    if (a.switch_round < 0 && static_cast<int>(a.complete_known.size()) == M) {
      int last = 0;
      for (auto [id, r] : a.complete_known) last = std::max(last, r);
      a.switch_round = last + diameter;
    }
    if (a.switch_round >= 0 && round >= a.switch_round) {
      a.switched = true;
      switched = true;
    }
  }
  return switched;
}

}  // namespace sdmpc
