#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "cfvn/cfr.hpp"
#include "cfvn/subgame.hpp"

namespace cfvn {

using Rng = std::mt19937_64;

struct DatagenConfig {
  Deck deck = Deck::full();
  // Pot plus both behind stacks.
  double total_chips = 200.0;
  // Pot sizes as fractions of total_chips, drawn uniformly.
  std::vector<double> pot_fractions{0.02, 0.04, 0.08, 0.16, 0.32, 0.64};
  ActionConfig actions;
  CfrConfig cfr;
};

struct TrainingExample {
  SubgameSpec spec;
  CvPair cvs;
};

// Per-example seed, a pure function of (seed, index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Recursive mass splitting over the dealable hands in index order. Each split
// draws the left share from Beta(2L/n, 2R/n) for halves of sizes L and R, which
// is uniform for equal halves and keeps every hand's expected mass at 1/n.
Range sample_range(Rng& rng, const Board& board, const Deck& deck = Deck::full());

SubgameSpec sample_situation(Rng& rng, const DatagenConfig& config);

TrainingExample generate_example(std::uint64_t seed, std::uint64_t index, const DatagenConfig& config);

// Calls sink(index, example) in index order. Output does not depend on threads.
using ExampleSink = std::function<void(std::size_t, TrainingExample&&)>;
void generate_dataset(std::size_t n, std::uint64_t seed, const DatagenConfig& config, int threads,
                      const ExampleSink& sink);
std::vector<TrainingExample> generate_dataset(std::size_t n, std::uint64_t seed, const DatagenConfig& config,
                                              int threads = 1);

// First 80% of indices train, the rest test.
std::size_t train_count(std::size_t n);

// CFVD files: header then fixed-size f32 records.
class DatasetWriter {
 public:
  DatasetWriter(const std::filesystem::path& path, std::uint64_t count);
  void write(const TrainingExample& example);
  // Throws unless exactly `count` records were written.
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::uint64_t count_;
  std::uint64_t written_ = 0;
};

void write_dataset(const std::filesystem::path& path, std::span<const TrainingExample> examples);
std::vector<TrainingExample> read_dataset(const std::filesystem::path& path);
void write_dataset_csv(const std::filesystem::path& path, std::span<const TrainingExample> examples);

}  // namespace cfvn
