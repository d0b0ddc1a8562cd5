#include <random>

#include <gtest/gtest.h>

#include "sdmpc/consensus.hpp"
#include "sdmpc/graph.hpp"

namespace sdmpc {
namespace {

struct Outcome {
  int unanimous_round = -1;
  int first_switch = -1;
  bool simultaneous = true;
};

// ready_at[i] is the first round in which agent i's predicate holds
// (-1 = never). Runs up to `rounds` rounds.
Outcome Simulate(const Graph& g, const std::vector<int>& ready_at, ConsensusMode mode, int rounds) {
  const int M = g.num_agents();
  std::vector<ConsensusAgent> agents(M);
  Outcome out;
  for (int r = 0; r < rounds; ++r) {
    std::vector<bool> now(M);
    bool all = true;
    for (int i = 0; i < M; ++i) {
      now[i] = ready_at[i] >= 0 && r >= ready_at[i];
      all = all && now[i];
    }
    if (all && out.unanimous_round < 0) out.unanimous_round = r;
    if (SwitchConsensusStep(agents, now, g, mode, r)) {
      out.first_switch = r;
      for (const auto& a : agents) out.simultaneous = out.simultaneous && a.switched;
      break;
    }
  }
  return out;
}

std::vector<Graph> TestGraphs() {
  std::vector<Graph> gs;
  for (int M = 1; M <= 6; ++M) {
    gs.push_back(Graph::Path(M));
    gs.push_back(Graph::Star(M));
    gs.push_back(Graph::Complete(M));
  }
  return gs;
}

TEST(Graph, ShapesAndDiameters) {
  EXPECT_EQ(Graph::Path(5).Diameter(), 4);
  EXPECT_EQ(Graph::Star(5).Diameter(), 2);
  EXPECT_EQ(Graph::Complete(5).Diameter(), 1);
  EXPECT_EQ(Graph::Path(1).Diameter(), 0);
  EXPECT_EQ(Graph::Star(4).Neighbors(0), (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(Graph::Path(4).Distances(0), (std::vector<int>{0, 1, 2, 3}));
}

TEST(Graph, Validation) {
  EXPECT_THROW(Graph(3, {{0, 1}}), std::invalid_argument);
  EXPECT_THROW(Graph(2, {{0, 0}, {0, 1}}), std::invalid_argument);
  EXPECT_THROW(Graph(2, {{0, 2}}), std::invalid_argument);
  const Graph g(3, {{1, 0}, {0, 1}, {2, 1}});
  EXPECT_EQ(g.edges().size(), 2u);
  EXPECT_EQ(g.edges().front(), std::make_pair(0, 1));
}

TEST(Consensus, CompleteGraphSwitchesTwoRoundsAfterUnanimity) {
  for (int r : {0, 3, 7}) {
    const Outcome o = Simulate(Graph::Complete(4), {r, r, r, r}, ConsensusMode::kMultiRound, 100);
    EXPECT_EQ(o.first_switch, r + 2);
    EXPECT_TRUE(o.simultaneous);
  }
}

TEST(Consensus, MultiRoundWithinTwiceTheDiameter) {
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<int> when(0, 8);
  for (const Graph& g : TestGraphs()) {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<int> ready_at(g.num_agents());
      for (int& r : ready_at) r = when(rng);
      const Outcome o = Simulate(g, ready_at, ConsensusMode::kMultiRound, 100);
      ASSERT_GE(o.first_switch, 0);
      EXPECT_GE(o.first_switch, o.unanimous_round);
      EXPECT_LE(o.first_switch - o.unanimous_round, 2 * g.Diameter());
      EXPECT_TRUE(o.simultaneous);
    }
  }
}

TEST(Consensus, PathWithOnlyMiddleReadyNeverSwitches) {
  const Outcome o = Simulate(Graph::Path(3), {-1, 0, -1}, ConsensusMode::kMultiRound, 100);
  EXPECT_EQ(o.first_switch, -1);
}

TEST(Consensus, NonUnanimousNeverSwitches) {
  for (const Graph& g : TestGraphs()) {
    if (g.num_agents() < 2) continue;
    for (int holdout = 0; holdout < g.num_agents(); ++holdout) {
      std::vector<int> ready_at(g.num_agents(), 0);
      ready_at[holdout] = -1;
      for (ConsensusMode mode : {ConsensusMode::kMultiRound, ConsensusMode::kInstantaneous}) {
        EXPECT_EQ(Simulate(g, ready_at, mode, 100).first_switch, -1);
      }
    }
  }
}

TEST(Consensus, InstantaneousSwitchesInTheUnanimousRound) {
  for (const Graph& g : TestGraphs()) {
    std::vector<int> ready_at(g.num_agents());
    for (int i = 0; i < g.num_agents(); ++i) ready_at[i] = i;
    const Outcome o = Simulate(g, ready_at, ConsensusMode::kInstantaneous, 100);
    EXPECT_EQ(o.first_switch, o.unanimous_round);
    EXPECT_TRUE(o.simultaneous);
  }
}

TEST(Consensus, ReadinessIsSticky) {
  const Graph g = Graph::Complete(2);
  std::vector<ConsensusAgent> agents(2);
  EXPECT_FALSE(SwitchConsensusStep(agents, {true, false}, g, ConsensusMode::kMultiRound, 0));
  EXPECT_FALSE(SwitchConsensusStep(agents, {false, true}, g, ConsensusMode::kMultiRound, 1));
  EXPECT_TRUE(agents[0].ready);
  bool switched = false;
  for (int r = 2; r < 10 && !switched; ++r) switched = SwitchConsensusStep(agents, {false, false}, g, ConsensusMode::kMultiRound, r);
  EXPECT_TRUE(switched);
}

TEST(Consensus, ParseMode) {
  EXPECT_EQ(ParseConsensusMode("multi_round"), ConsensusMode::kMultiRound);
  EXPECT_EQ(ParseConsensusMode("instantaneous"), ConsensusMode::kInstantaneous);
  EXPECT_THROW(ParseConsensusMode("gossip"), std::invalid_argument);
}

}  // namespace
}  // namespace sdmpc
