#pragma once

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "cfvn/subgame.hpp"

namespace cfvn {

struct CfrConfig {
  int iterations = 1000;
  // Iterations before this index do not enter the averages.
  int averaging_start = 500;
  // Regret-matching+ with linearly weighted averages; plain CFR otherwise.
  bool plus = true;
};

// Normalized average strategy, per decision node laid out action-major:
// probs[node][a * slots + i].
struct StrategyProfile {
  std::size_t slots = 0;
  std::vector<std::vector<double>> probs;

  double prob(int node, int action, std::size_t slot) const {
    return probs[static_cast<std::size_t>(node)][static_cast<std::size_t>(action) * slots + slot];
  }
};

// Uniform over legal actions at every decision node.
StrategyProfile uniform_strategy(const BettingTree& tree, const HandSpace& space);

// Per-slot root counterfactual values for both players, in chips. They are
// weighted by the opponent's reach only, so range-weighted sums give the
// joint-deal expectation times joint_mass().
using SlotValues = std::array<std::vector<double>, 2>;

// Probability mass of compatible (hand1, hand2) deals under the two ranges.
double joint_mass(const HandSpace& space, std::span<const double> range1, std::span<const double> range2);

struct BestResponse {
  // Per-deal values (chips) each player earns by best-responding.
  double br1 = 0.0;
  double br2 = 0.0;
  // Average best-response gain (br1 + br2) / 2; zero exactly at equilibrium.
  double exploitability() const { return 0.5 * (br1 + br2); }
};

class CfrSolver {
 public:
  CfrSolver(const BettingTree& tree, const HandSpace& space, std::span<const double> range1,
            std::span<const double> range2, const CfrConfig& config);
  ~CfrSolver();
  CfrSolver(const CfrSolver&) = delete;
  CfrSolver& operator=(const CfrSolver&) = delete;

  // Runs more iterations; the iteration counter persists between calls.
  void run(int iterations);
  int iterations_done() const;

  // Weighted average of per-iteration root values over the averaging window.
  SlotValues average_values() const;
  StrategyProfile average_strategy() const;
  // Mean over (decision node, hand) of the largest positive cumulative regret,
  // divided by iterations done.
  double average_regret() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Root values when both players follow a fixed profile.
SlotValues evaluate_strategy(const BettingTree& tree, const HandSpace& space, std::span<const double> range1,
                             std::span<const double> range2, const StrategyProfile& strategy);

// Exact best-response values, one bottom-up pass per player.
BestResponse best_response(const BettingTree& tree, const HandSpace& space, std::span<const double> range1,
                           std::span<const double> range2, const StrategyProfile& strategy);

struct TurnSolution {
  CvPair cvs;
  StrategyProfile strategy;
  HandSpace space;
};

// Solves a turn subgame and returns pot-normalized root values averaged over
// the iterations at or after averaging_start.
TurnSolution solve_turn(const BettingTree& tree, const SubgameSpec& spec, const CfrConfig& config,
                        const Deck& deck = Deck::full());
CvPair cfr_solve(const BettingTree& tree, const SubgameSpec& spec, const CfrConfig& config,
                 const Deck& deck = Deck::full());

}  // namespace cfvn
