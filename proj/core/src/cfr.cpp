#include "cfvn/cfr.hpp"

#include <algorithm>
#include <cmath>

#include "cfvn/error.hpp"

namespace cfvn {
namespace {

// Sums of opponent reach over hands disjoint from each hero slot, and
// showdown win-minus-loss mass, with card removal by inclusion-exclusion.
// Both players are handled in one pass.
class TerminalEval {
  // Player 0 and player 1 masses side by side, one vector op per update.
  using Pair = double __attribute__((vector_size(16)));

 public:
  explicit TerminalEval(const HandSpace& space) : space_(space), two_(space.cards_per_hand == 2) {
    for (const BoardState& st : space.states) {
      Sorted s;
      const std::size_t m = st.order.size();
      s.c0.resize(m);
      s.c1.resize(m);
      for (std::size_t t = 0; t < m; ++t) {
        const auto& c = space.cards[static_cast<std::size_t>(st.order[t])];
        s.c0[t] = c[0];
        s.c1[t] = two_ ? c[1] : kNumCards;
      }
      for (std::size_t t = 0; t < m;) {
        std::size_t j = t;
        const auto v = st.strength[static_cast<std::size_t>(st.order[t])];
        while (j < m && st.strength[static_cast<std::size_t>(st.order[j])] == v) ++j;
        s.group_end.push_back(static_cast<std::uint32_t>(j));
        t = j;
      }
      for (std::size_t i = 0; i < space.size(); ++i) {
        if (!st.live[i]) s.dead.push_back(static_cast<std::uint32_t>(i));
      }
      sorted_.push_back(std::move(s));
    }
    std::size_t m = 0;
    for (const auto& st : space.states) m = std::max(m, st.order.size());
    buf_.resize(2 * m);
  }

  // out_p[i] = payoff_p * (reach of the other player disjoint from slot i).
  void fold(const BoardState& state, const double* reach0, const double* reach1, double payoff0, double payoff1,
            double* out0, double* out1) const {
    const std::size_t n = space_.size();
    std::array<Pair, kNumCards + 1> card{};
    Pair total{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      const auto& c = space_.cards[i];
      const Pair g{reach0[i], reach1[i]};
      total += g;
      card[c[0]] += g;
      if (two_) card[c[1]] += g;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto& c = space_.cards[i];
      // the opponent holding this very hand shares both cards: added back once
      Pair m = total - card[c[0]];
      if (two_) m += Pair{reach0[i], reach1[i]} - card[c[1]];
      out0[i] = state.live[i] ? payoff0 * m[1] : 0.0;
      out1[i] = state.live[i] ? payoff1 * m[0] : 0.0;
    }
  }

  // out_p[i] = payoff * (beaten minus winning reach of the other player).
  void showdown(int state_id, const double* reach0, const double* reach1, double payoff, double* out0,
                double* out1) const {
    const BoardState& state = space_.states[static_cast<std::size_t>(state_id)];
    const Sorted& s = sorted_[static_cast<std::size_t>(state_id)];
    const std::size_t m = state.order.size();
    const int* order = state.order.data();
    Pair* g = buf_.data();
    Pair* w = g + m;
    for (std::size_t t = 0; t < m; ++t) g[t] = Pair{reach0[order[t]], reach1[order[t]]};

    std::array<Pair, kNumCards + 1> card{};
    Pair total{0.0, 0.0};
    std::size_t lo = 0;
    for (std::uint32_t hi : s.group_end) {
      for (std::size_t t = lo; t < hi; ++t) w[t] = total - card[s.c0[t]] - card[s.c1[t]];
      for (std::size_t t = lo; t < hi; ++t) {
        total += g[t];
        card[s.c0[t]] += g[t];
        card[s.c1[t]] += g[t];
      }
      card[kNumCards] = Pair{0.0, 0.0};
      lo = hi;
    }

    card.fill(Pair{0.0, 0.0});
    total = Pair{0.0, 0.0};
    std::size_t hi = m;
    for (std::size_t k = s.group_end.size(); k > 0; --k) {
      const std::size_t glo = k >= 2 ? s.group_end[k - 2] : 0;
      for (std::size_t t = glo; t < hi; ++t) w[t] -= total - card[s.c0[t]] - card[s.c1[t]];
      for (std::size_t t = glo; t < hi; ++t) {
        total += g[t];
        card[s.c0[t]] += g[t];
        card[s.c1[t]] += g[t];
      }
      card[kNumCards] = Pair{0.0, 0.0};
      hi = glo;
    }

    for (std::uint32_t i : s.dead) out0[i] = out1[i] = 0.0;
    for (std::size_t t = 0; t < m; ++t) {
      out0[order[t]] = payoff * w[t][1];
      out1[order[t]] = payoff * w[t][0];
    }
  }

 private:
  // Per board state, live slots in strength order with their cards; c1 is
  // the dummy card kNumCards for one-card hands.
  struct Sorted {
    std::vector<std::uint8_t> c0, c1;
    std::vector<std::uint32_t> group_end;
    std::vector<std::uint32_t> dead;
  };

  const HandSpace& space_;
  bool two_;
  std::vector<Sorted> sorted_;
  mutable std::vector<Pair> buf_;
};

enum class Mode { kCfr, kEvaluate, kBestResponse };

std::size_t max_actions(const BettingTree& tree) {
  std::size_t a = 2;
  for (const TreeNode& n : tree.nodes) a = std::max(a, n.children.size());
  return a;
}

// One recursive pass over the tree with vectors of per-slot reach and values.
class Walker {
 public:
  Walker(const BettingTree& tree, const HandSpace& space)
      : tree_(tree), space_(space), eval_(space), n_(space.size()), width_(max_actions(tree)) {
    scratch_.resize(static_cast<std::size_t>(tree.depth()) + 2);
    for (auto& s : scratch_) {
      s.strategy.resize(width_ * n_);
      s.reach.resize(2 * n_);
      s.values.resize(width_ * 2 * n_);
    }
    norm_.resize(n_);
  }

  Mode mode = Mode::kCfr;
  int br_player = 0;
  bool plus = true;
  double avg_weight = 0.0;  // 0 = no averaging this iteration
  std::vector<std::vector<double>>* regrets = nullptr;
  std::vector<std::vector<double>>* strategy_sum = nullptr;
  const StrategyProfile* fixed = nullptr;

  void walk(int id, const double* reach0, const double* reach1, double* out0, double* out1, std::size_t depth) {
    const TreeNode& node = tree_.nodes[static_cast<std::size_t>(id)];
    const BoardState& state = space_.states[static_cast<std::size_t>(node.board_state)];
    switch (node.kind) {
      case NodeKind::kFold: {
        const int f = node.player;
        const double loss = node.committed[static_cast<std::size_t>(f)];
        eval_.fold(state, reach0, reach1, f == 0 ? -loss : loss, f == 1 ? -loss : loss, out0, out1);
        return;
      }
      case NodeKind::kShowdown:
        eval_.showdown(node.board_state, reach0, reach1, node.committed[0], out0, out1);
        return;
      case NodeKind::kChance:
        chance(node, reach0, reach1, out0, out1, depth);
        return;
      case NodeKind::kDecision:
        decision(id, node, reach0, reach1, out0, out1, depth);
        return;
    }
  }

 private:
  struct Scratch {
    std::vector<double> strategy;
    std::vector<double> reach;
    std::vector<double> values;
  };

  void chance(const TreeNode& node, const double* reach0, const double* reach1, double* out0, double* out1,
              std::size_t depth) {
    Scratch& s = scratch_[depth];
    const double w = 1.0 / static_cast<double>(space_.outcomes_per_deal);
    double* r0 = s.reach.data();
    double* r1 = r0 + n_;
    double* v0 = s.values.data();
    double* v1 = v0 + n_;
    bool first = true;
    for (int child : node.children) {
      const TreeNode& c = tree_.nodes[static_cast<std::size_t>(child)];
      const auto& live = space_.states[static_cast<std::size_t>(c.board_state)].live;
      for (std::size_t i = 0; i < n_; ++i) {
        r0[i] = live[i] ? reach0[i] : 0.0;
        r1[i] = live[i] ? reach1[i] : 0.0;
      }
      walk(child, r0, r1, v0, v1, depth + 1);
      if (first) {
        for (std::size_t i = 0; i < n_; ++i) {
          out0[i] = w * v0[i];
          out1[i] = w * v1[i];
        }
        first = false;
      } else {
        for (std::size_t i = 0; i < n_; ++i) {
          out0[i] += w * v0[i];
          out1[i] += w * v1[i];
        }
      }
    }
    if (first) {
      std::fill(out0, out0 + n_, 0.0);
      std::fill(out1, out1 + n_, 0.0);
    }
  }

  void current_strategy(int id, std::size_t actions, double* sigma) const {
    const std::size_t n = n_;
    if (mode != Mode::kCfr) {
      const auto& p = fixed->probs[static_cast<std::size_t>(id)];
      std::copy(p.begin(), p.end(), sigma);
      return;
    }
    const auto& r = (*regrets)[static_cast<std::size_t>(id)];
    double* sum = norm_.data();
    std::fill(sum, sum + n, 0.0);
    for (std::size_t a = 0; a < actions; ++a) {
      const double* ra = r.data() + a * n;
      double* sa = sigma + a * n;
      for (std::size_t i = 0; i < n; ++i) {
        sa[i] = ra[i] > 0.0 ? ra[i] : 0.0;
        sum[i] += sa[i];
      }
    }
    const double uniform = 1.0 / static_cast<double>(actions);
    for (std::size_t i = 0; i < n; ++i) sum[i] = sum[i] > 0.0 ? 1.0 / sum[i] : 0.0;
    for (std::size_t a = 0; a < actions; ++a) {
      double* sa = sigma + a * n;
      for (std::size_t i = 0; i < n; ++i) sa[i] = sum[i] > 0.0 ? sa[i] * sum[i] : uniform;
    }
  }

  void decision(int id, const TreeNode& node, const double* reach0, const double* reach1, double* out0, double* out1,
                std::size_t depth) {
    Scratch& s = scratch_[depth];
    const std::size_t n = n_;
    const std::size_t actions = node.children.size();
    const int p = node.player;
    double* sigma = s.strategy.data();
    current_strategy(id, actions, sigma);

    const double* own_reach = p == 0 ? reach0 : reach1;
    double* child_reach = s.reach.data();
    for (std::size_t a = 0; a < actions; ++a) {
      const double* sa = sigma + a * n;
      if (mode == Mode::kBestResponse && p == br_player) {
        std::copy(own_reach, own_reach + n, child_reach);
      } else {
        for (std::size_t i = 0; i < n; ++i) child_reach[i] = own_reach[i] * sa[i];
      }
      double* cv0 = s.values.data() + (2 * a) * n;
      double* cv1 = cv0 + n;
      walk(node.children[a], p == 0 ? child_reach : reach0, p == 1 ? child_reach : reach1, cv0, cv1, depth + 1);
    }

    double* own_out = p == 0 ? out0 : out1;
    double* opp_out = p == 0 ? out1 : out0;
    const std::size_t own_off = p == 0 ? 0 : n;
    const std::size_t opp_off = p == 0 ? n : 0;
    const bool maximize = mode == Mode::kBestResponse && p == br_player;
    for (std::size_t a = 0; a < actions; ++a) {
      const double* own_cv = s.values.data() + 2 * a * n + own_off;
      const double* opp_cv = s.values.data() + 2 * a * n + opp_off;
      const double* sa = sigma + a * n;
      if (a == 0) {
        std::copy(opp_cv, opp_cv + n, opp_out);
        if (maximize) {
          std::copy(own_cv, own_cv + n, own_out);
        } else {
          for (std::size_t i = 0; i < n; ++i) own_out[i] = sa[i] * own_cv[i];
        }
        continue;
      }
      for (std::size_t i = 0; i < n; ++i) opp_out[i] += opp_cv[i];
      if (maximize) {
        for (std::size_t i = 0; i < n; ++i) own_out[i] = std::max(own_out[i], own_cv[i]);
      } else {
        for (std::size_t i = 0; i < n; ++i) own_out[i] += sa[i] * own_cv[i];
      }
    }
    if (mode != Mode::kCfr) return;

    auto& r = (*regrets)[static_cast<std::size_t>(id)];
    for (std::size_t a = 0; a < actions; ++a) {
      const double* own_cv = s.values.data() + 2 * a * n + own_off;
      double* ra = r.data() + a * n;
      if (plus) {
        for (std::size_t i = 0; i < n; ++i) ra[i] = std::max(ra[i] + own_cv[i] - own_out[i], 0.0);
      } else {
        for (std::size_t i = 0; i < n; ++i) ra[i] += own_cv[i] - own_out[i];
      }
    }
    if (avg_weight > 0.0) {
      auto& ss = (*strategy_sum)[static_cast<std::size_t>(id)];
      for (std::size_t a = 0; a < actions; ++a) {
        const double* sa = sigma + a * n;
        double* acc = ss.data() + a * n;
        for (std::size_t i = 0; i < n; ++i) acc[i] += avg_weight * own_reach[i] * sa[i];
      }
    }
  }

  const BettingTree& tree_;
  const HandSpace& space_;
  TerminalEval eval_;
  std::size_t n_;
  std::size_t width_;
  std::vector<Scratch> scratch_;
  mutable std::vector<double> norm_;
};

void check_ranges(const HandSpace& space, std::span<const double> r1, std::span<const double> r2) {
  if (r1.size() != space.size() || r2.size() != space.size()) {
    throw InvalidInput("range length does not match the hand space");
  }
  for (auto r : {r1, r2}) {
    double total = 0.0;
    for (double x : r) {
      if (!(x >= 0.0) || !std::isfinite(x)) throw InvalidInput("range entries must be finite and >= 0");
      total += x;
    }
    if (total <= 0.0) throw InvalidInput("degenerate subgame: a range is all zeros");
  }
}

}  // namespace

StrategyProfile uniform_strategy(const BettingTree& tree, const HandSpace& space) {
  StrategyProfile s;
  s.slots = space.size();
  s.probs.resize(tree.nodes.size());
  for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
    const TreeNode& node = tree.nodes[id];
    if (node.kind != NodeKind::kDecision) continue;
    s.probs[id].assign(node.children.size() * s.slots, 1.0 / static_cast<double>(node.children.size()));
  }
  return s;
}

double joint_mass(const HandSpace& space, std::span<const double> range1, std::span<const double> range2) {
  const TerminalEval eval(space);
  std::vector<double> mass(space.size()), unused(space.size());
  // a fold payoff of 1 yields the compatible opponent mass per slot
  eval.fold(space.states.front(), range1.data(), range2.data(), 1.0, 0.0, mass.data(), unused.data());
  double total = 0.0;
  for (std::size_t i = 0; i < space.size(); ++i) total += range1[i] * mass[i];
  return total;
}

struct CfrSolver::Impl {
  Impl(const BettingTree& t, const HandSpace& s, std::span<const double> a, std::span<const double> b,
       const CfrConfig& c)
      : tree(t), space(s), range1(a.begin(), a.end()), range2(b.begin(), b.end()), config(c), walker(t, s) {
    const std::size_t n = space.size();
    regrets.resize(tree.nodes.size());
    strategy_sum.resize(tree.nodes.size());
    for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
      if (tree.nodes[id].kind != NodeKind::kDecision) continue;
      regrets[id].assign(tree.nodes[id].children.size() * n, 0.0);
      strategy_sum[id].assign(tree.nodes[id].children.size() * n, 0.0);
    }
    value_sum[0].assign(n, 0.0);
    value_sum[1].assign(n, 0.0);
    values[0].resize(n);
    values[1].resize(n);
    walker.regrets = &regrets;
    walker.strategy_sum = &strategy_sum;
    walker.plus = config.plus;
  }

  const BettingTree& tree;
  const HandSpace& space;
  std::vector<double> range1, range2;
  CfrConfig config;
  Walker walker;
  std::vector<std::vector<double>> regrets;
  std::vector<std::vector<double>> strategy_sum;
  SlotValues value_sum;
  SlotValues values;
  double weight_sum = 0.0;
  int done = 0;
};

CfrSolver::CfrSolver(const BettingTree& tree, const HandSpace& space, std::span<const double> range1,
                     std::span<const double> range2, const CfrConfig& config) {
  check_ranges(space, range1, range2);
  if (config.iterations < 1) throw InvalidInput("cfr needs at least one iteration");
  if (config.averaging_start < 0 || config.averaging_start >= config.iterations) {
    throw InvalidInput("averaging_start must lie in [0, iterations)");
  }
  for (const auto& node : tree.nodes) {
    for (int o : node.outcomes) {
      if (o < 0 || static_cast<std::size_t>(o) + 1 >= space.states.size()) {
        throw InvalidInput("tree has a chance outcome the hand space has no board state for");
      }
    }
  }
  impl_ = std::make_unique<Impl>(tree, space, range1, range2, config);
}

CfrSolver::~CfrSolver() = default;

void CfrSolver::run(int iterations) {
  Impl& m = *impl_;
  const std::size_t n = m.space.size();
  for (int k = 0; k < iterations; ++k) {
    const int t = m.done;
    const bool averaging = t >= m.config.averaging_start;
    const double w = !averaging ? 0.0 : m.config.plus ? static_cast<double>(t - m.config.averaging_start + 1) : 1.0;
    m.walker.mode = Mode::kCfr;
    m.walker.avg_weight = w;
    m.walker.walk(0, m.range1.data(), m.range2.data(), m.values[0].data(), m.values[1].data(), 0);
    if (averaging) {
      for (int p = 0; p < 2; ++p) {
        for (std::size_t i = 0; i < n; ++i) m.value_sum[p][i] += w * m.values[p][i];
      }
      m.weight_sum += w;
    }
    ++m.done;
  }
}

int CfrSolver::iterations_done() const { return impl_->done; }

SlotValues CfrSolver::average_values() const {
  const Impl& m = *impl_;
  SlotValues out = m.value_sum;
  if (m.weight_sum > 0.0) {
    for (auto& v : out) {
      for (double& x : v) x /= m.weight_sum;
    }
  }
  return out;
}

StrategyProfile CfrSolver::average_strategy() const {
  const Impl& m = *impl_;
  StrategyProfile s = uniform_strategy(m.tree, m.space);
  const std::size_t n = s.slots;
  for (std::size_t id = 0; id < m.tree.nodes.size(); ++id) {
    const auto& acc = m.strategy_sum[id];
    if (acc.empty()) continue;
    const std::size_t actions = acc.size() / n;
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (std::size_t a = 0; a < actions; ++a) sum += acc[a * n + i];
      if (sum <= 0.0) continue;
      for (std::size_t a = 0; a < actions; ++a) s.probs[id][a * n + i] = acc[a * n + i] / sum;
    }
  }
  return s;
}

double CfrSolver::average_regret() const {
  const Impl& m = *impl_;
  if (m.done == 0) return 0.0;
  const std::size_t n = m.space.size();
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t id = 0; id < m.tree.nodes.size(); ++id) {
    const auto& r = m.regrets[id];
    if (r.empty()) continue;
    const auto& live = m.space.states[static_cast<std::size_t>(m.tree.nodes[id].board_state)].live;
    const std::size_t actions = r.size() / n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!live[i]) continue;
      double best = 0.0;
      for (std::size_t a = 0; a < actions; ++a) best = std::max(best, r[a * n + i]);
      sum += best;
      ++count;
    }
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count) / m.done;
}

SlotValues evaluate_strategy(const BettingTree& tree, const HandSpace& space, std::span<const double> range1,
                             std::span<const double> range2, const StrategyProfile& strategy) {
  check_ranges(space, range1, range2);
  Walker walker(tree, space);
  walker.mode = Mode::kEvaluate;
  walker.fixed = &strategy;
  SlotValues out{std::vector<double>(space.size()), std::vector<double>(space.size())};
  walker.walk(0, range1.data(), range2.data(), out[0].data(), out[1].data(), 0);
  return out;
}

BestResponse best_response(const BettingTree& tree, const HandSpace& space, std::span<const double> range1,
                           std::span<const double> range2, const StrategyProfile& strategy) {
  check_ranges(space, range1, range2);
  const double mass = joint_mass(space, range1, range2);
  BestResponse br;
  for (int p = 0; p < 2; ++p) {
    Walker walker(tree, space);
    walker.mode = Mode::kBestResponse;
    walker.br_player = p;
    walker.fixed = &strategy;
    SlotValues out{std::vector<double>(space.size()), std::vector<double>(space.size())};
    walker.walk(0, range1.data(), range2.data(), out[0].data(), out[1].data(), 0);
    const auto& own = p == 0 ? range1 : range2;
    double v = 0.0;
    for (std::size_t i = 0; i < space.size(); ++i) v += own[i] * out[static_cast<std::size_t>(p)][i];
    (p == 0 ? br.br1 : br.br2) = v / mass;
  }
  return br;
}

TurnSolution solve_turn(const BettingTree& tree, const SubgameSpec& spec, const CfrConfig& config, const Deck& deck) {
  TurnSolution out;
  out.space = turn_hand_space(spec.board, deck);
  const std::size_t rivers = static_cast<std::size_t>(deck.size()) - spec.board.size();
  if (!tree.chance_cards.empty() && tree.chance_cards.size() != rivers) {
    throw InvalidInput("tree was built for a different deck than the one given");
  }
  const std::vector<double> r1 = to_slots(spec.range1, out.space);
  const std::vector<double> r2 = to_slots(spec.range2, out.space);
  CfrSolver solver(tree, out.space, r1, r2, config);
  solver.run(config.iterations);
  SlotValues v = solver.average_values();
  for (auto& side : v) {
    for (double& x : side) x /= spec.pot;
  }
  out.cvs.v1 = from_slots(v[0], out.space);
  out.cvs.v2 = from_slots(v[1], out.space);
  out.strategy = solver.average_strategy();
  return out;
}

CvPair cfr_solve(const BettingTree& tree, const SubgameSpec& spec, const CfrConfig& config, const Deck& deck) {
  return solve_turn(tree, spec, config, deck).cvs;
}

}  // namespace cfvn
