#include <benchmark/benchmark.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "cfvn/abstraction.hpp"
#include "cfvn/cfr.hpp"
#include "cfvn/datagen.hpp"
#include "cfvn/encoding.hpp"
#include "cfvn/kmeans.hpp"
#include "cfvn/network.hpp"
#include "cfvn/strength.hpp"

namespace cfvn {
namespace {

std::vector<CardMask> random_hands(int n, int cards) {
  std::mt19937_64 rng(1);
  std::vector<CardMask> out;
  std::vector<int> idx(kNumCards);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < n; ++i) {
    std::shuffle(idx.begin(), idx.end(), rng);
    CardMask m = 0;
    for (int c = 0; c < cards; ++c) m |= CardMask{1} << idx[static_cast<std::size_t>(c)];
    out.push_back(m);
  }
  return out;
}

void BM_Evaluate7(benchmark::State& state) {
  const auto hands = random_hands(4096, 7);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate(hands[i++ & 4095]));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Evaluate7);

void BM_RiverHandStrengths(benchmark::State& state) {
  const Board board = Board::parse("AsKd7c2h9s");
  for (auto _ : state) benchmark::DoNotOptimize(hand_strengths(board));
}
BENCHMARK(BM_RiverHandStrengths)->Unit(benchmark::kMicrosecond);

void BM_TurnStrength(benchmark::State& state) {
  const Board board = Board::parse("AsKd7c2h");
  for (auto _ : state) benchmark::DoNotOptimize(TurnStrength(board));
}
BENCHMARK(BM_TurnStrength)->Unit(benchmark::kMillisecond);

void BM_Emd(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> a(static_cast<std::size_t>(state.range(0))), b(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = u(rng);
    b[i] = u(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(emd_1d(a, b));
}
BENCHMARK(BM_Emd)->Arg(10)->Arg(50);

void BM_PotentialAwareMapping(benchmark::State& state) {
  const TurnStrength strength(Board::parse("AsKd7c2h"));
  PotentialAwareOptions o;
  o.num_buckets = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(build_potential_aware_mapping(strength, o));
}
BENCHMARK(BM_PotentialAwareMapping)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

// One CFR+ iteration on a turn subgame: deck (0 = full, 20 = short20) and raise cap.
void BM_CfrIteration(benchmark::State& state) {
  const Deck deck = state.range(0) == 0 ? Deck::full() : Deck::parse("short20");
  const char* board = state.range(0) == 0 ? "AsKd7c2h" : "AsKdJcTh";
  Rng rng(3);
  SubgameSpec spec;
  spec.board = Board::parse(board);
  spec.pot = 20;
  spec.stack = 90;
  spec.range1 = sample_range(rng, spec.board, deck);
  spec.range2 = sample_range(rng, spec.board, deck);
  const ActionConfig actions{
      .bet_fractions = {1.0}, .all_in = state.range(1) > 1, .raise_cap = static_cast<int>(state.range(1))};
  const BettingTree tree = build_turn_tree(spec, actions, deck);
  const HandSpace space = turn_hand_space(spec.board, deck);
  const auto r1 = to_slots(spec.range1, space), r2 = to_slots(spec.range2, space);
  CfrSolver solver(tree, space, r1, r2, {.iterations = 1 << 30, .averaging_start = 0});
  for (auto _ : state) solver.run(1);
  state.counters["nodes"] = static_cast<double>(tree.nodes.size());
}
BENCHMARK(BM_CfrIteration)->Args({20, 1})->Args({20, 3})->Args({0, 1})->Args({0, 3})->Unit(benchmark::kMillisecond);

void BM_EncodeCv(benchmark::State& state) {
  Rng rng(4);
  const Board board = Board::parse("AsKd7c2h");
  const Range r = sample_range(rng, board);
  const BucketMapping m = build_ehs2_mapping(board, 1000);
  std::vector<double> cv(kNumHands, 0.25);
  for (auto _ : state) benchmark::DoNotOptimize(decode_cv(encode_cv(cv, r, m), m));
}
BENCHMARK(BM_EncodeCv)->Unit(benchmark::kMicrosecond);

// Forward plus backward pass on a batch, desk architecture, K buckets.
void BM_MlpTrainStep(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const Eigen::Index batch = state.range(1);
  const Mlp<float> net(MlpConfig::desk(2 * k + 1, 2 * k));
  const Eigen::MatrixXf x = Eigen::MatrixXf::Random(static_cast<Eigen::Index>(2 * k + 1), batch).cwiseAbs();
  const Eigen::MatrixXf y = Eigen::MatrixXf::Random(static_cast<Eigen::Index>(2 * k), batch);
  const Eigen::MatrixXf mask = Eigen::MatrixXf::Ones(static_cast<Eigen::Index>(2 * k), batch);
  std::vector<Mlp<float>::Layer> grad;
  for (auto _ : state) benchmark::DoNotOptimize(net.loss(x, y, mask, 1.0f, &grad));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_MlpTrainStep)->Args({1000, 1000})->Args({1326, 1000})->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace cfvn

BENCHMARK_MAIN();
