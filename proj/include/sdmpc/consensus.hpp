#pragma once

#include <map>
#include <string>
#include <vector>

#include "sdmpc/graph.hpp"

namespace sdmpc {

enum class ConsensusMode { kMultiRound, kInstantaneous };

const char* ToString(ConsensusMode mode);
ConsensusMode ParseConsensusMode(const std::string& text);

/// Per-agent bookkeeping of the two-phase switch agreement.
///
/// Phase one floods switch_ready: each agent forwards the rounds at which it
/// learned other agents became ready. An agent that knows every agent is
/// ready marks itself list-complete and phase two floods those completion
/// rounds. Once an agent has heard list_complete from everybody it knows the
/// last completion round r_c, and every agent switches at r_c + diameter,
/// the first round by which all of them are guaranteed to have the same
/// information. Unanimous readiness at round r therefore switches everyone
/// together no later than r + 2·diameter.
struct ConsensusAgent {
  bool ready = false;
  std::map<int, int> ready_known;
  std::map<int, int> complete_known;
  bool complete = false;
  int switch_round = -1;
  bool switched = false;
};

/// Advances every agent by one round. `ready_now[i]` is agent i's predicate
/// value this round; readiness is sticky. Multi-round mode reads only the
/// previous round's neighbour state. Instantaneous mode switches everybody in
/// the round in which all agents are ready. Returns true if the switch
/// happened in this round.
bool SwitchConsensusStep(std::vector<ConsensusAgent>& agents, const std::vector<bool>& ready_now,
                         const Graph& graph, ConsensusMode mode, int round);

}  // namespace sdmpc
