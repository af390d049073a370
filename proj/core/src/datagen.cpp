#include "cfvn/datagen.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <condition_variable>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

#include "cfvn/binary_io.hpp"
#include "cfvn/error.hpp"

namespace cfvn {
namespace {

constexpr std::string_view kMagic = "CFVD";
constexpr std::uint16_t kVersion = 1;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double draw_share(Rng& rng, std::size_t left, std::size_t right) {
  if (left == right) return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  const double n = static_cast<double>(left + right);
  std::gamma_distribution<double> ga(2.0 * static_cast<double>(left) / n);
  std::gamma_distribution<double> gb(2.0 * static_cast<double>(right) / n);
  const double x = ga(rng);
  const double y = gb(rng);
  return x + y > 0.0 ? x / (x + y) : 0.5;
}

void split_mass(Rng& rng, std::span<const HandIndex> hands, double mass, Range& out) {
  if (hands.size() == 1) {
    out.probs[hands[0].value] = mass;
    return;
  }
  const std::size_t mid = hands.size() / 2;
  const double f = draw_share(rng, mid, hands.size() - mid);
  split_mass(rng, hands.first(mid), mass * f, out);
  split_mass(rng, hands.subspan(mid), mass * (1.0 - f), out);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

Range sample_range(Rng& rng, const Board& board, const Deck& deck) {
  const std::vector<HandIndex> hands = valid_hands(board, deck);
  Range r;
  if (hands.empty()) throw InvalidInput("no dealable hands on board " + board.str());
  split_mass(rng, hands, 1.0, r);
  const double total = r.total();
  if (total > 0.0) {
    for (double& p : r.probs) p /= total;
  }
  return r;
}

SubgameSpec sample_situation(Rng& rng, const DatagenConfig& config) {
  if (config.pot_fractions.empty()) throw InvalidInput("pot_fractions is empty");
  const auto& cards = config.deck.cards();
  std::uniform_int_distribution<std::size_t> pick(0, cards.size() - 1);
  std::vector<Card> board;
  while (board.size() < 4) {
    const Card c = cards[pick(rng)];
    if (std::find(board.begin(), board.end(), c) == board.end()) board.push_back(c);
  }
  SubgameSpec spec;
  spec.board = Board(board);
  std::uniform_int_distribution<std::size_t> pot_pick(0, config.pot_fractions.size() - 1);
  spec.pot = config.pot_fractions[pot_pick(rng)] * config.total_chips;
  spec.stack = 0.5 * (config.total_chips - spec.pot);
  spec.range1 = sample_range(rng, spec.board, config.deck);
  spec.range2 = sample_range(rng, spec.board, config.deck);
  return spec;
}

TrainingExample generate_example(std::uint64_t seed, std::uint64_t index, const DatagenConfig& config) {
  Rng rng(derive_seed(seed, index));
  TrainingExample ex;
  ex.spec = sample_situation(rng, config);
  const BettingTree tree = build_turn_tree(ex.spec, config.actions, config.deck);
  ex.cvs = cfr_solve(tree, ex.spec, config.cfr, config.deck);
  return ex;
}

void generate_dataset(std::size_t n, std::uint64_t seed, const DatagenConfig& config, int threads,
                      const ExampleSink& sink) {
  if (n < 1) throw InvalidInput("dataset size must be at least 1");
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) sink(i, generate_example(seed, i, config));
    return;
  }

  std::vector<std::optional<TrainingExample>> ready(n);
  std::mutex mu;
  std::condition_variable cv;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr error;

  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n || stop) return;
      try {
        TrainingExample ex = generate_example(seed, i, config);
        std::lock_guard lock(mu);
        ready[i] = std::move(ex);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        stop = true;
      }
      cv.notify_all();
    }
  };
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);

  for (std::size_t i = 0; i < n; ++i) {
    std::unique_lock lock(mu);
    cv.wait(lock, [&] { return ready[i].has_value() || error != nullptr; });
    if (error) break;
    TrainingExample ex = std::move(*ready[i]);
    ready[i].reset();
    lock.unlock();
    try {
      sink(i, std::move(ex));
    } catch (...) {
      stop = true;
      pool.clear();
      throw;
    }
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

std::vector<TrainingExample> generate_dataset(std::size_t n, std::uint64_t seed, const DatagenConfig& config,
                                              int threads) {
  std::vector<TrainingExample> out(n);
  generate_dataset(n, seed, config, threads, [&](std::size_t i, TrainingExample&& ex) { out[i] = std::move(ex); });
  return out;
}

std::size_t train_count(std::size_t n) { return n * 4 / 5; }

DatasetWriter::DatasetWriter(const std::filesystem::path& path, std::uint64_t count)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), count_(count) {
  if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  bin::put_magic(out_, kMagic);
  bin::put<std::uint16_t>(out_, kVersion);
  bin::put<std::uint64_t>(out_, count);
}

void DatasetWriter::write(const TrainingExample& ex) {
  if (written_ == count_) throw InvalidInput("more records than declared in " + path_.string());
  if (ex.spec.board.size() != 4) throw InvalidInput("dataset records need a four-card board");
  for (Card c : ex.spec.board.cards()) bin::put<std::uint8_t>(out_, static_cast<std::uint8_t>(c.index()));
  bin::put<float>(out_, static_cast<float>(ex.spec.pot));
  bin::put<float>(out_, static_cast<float>(ex.spec.stack));
  std::vector<float> buf(kNumHands);
  for (const auto* v : {&ex.spec.range1.probs, &ex.spec.range2.probs, &ex.cvs.v1, &ex.cvs.v2}) {
    std::transform(v->begin(), v->end(), buf.begin(), [](double x) { return static_cast<float>(x); });
    bin::put_span<float>(out_, buf);
  }
  ++written_;
  if (!out_) throw IoError("write failed on " + path_.string());
}

void DatasetWriter::close() {
  if (written_ != count_) {
    throw InvalidInput("dataset " + path_.string() + " declared " + std::to_string(count_) + " records, got " +
                       std::to_string(written_));
  }
  out_.close();
  if (!out_) throw IoError("close failed on " + path_.string());
}

void write_dataset(const std::filesystem::path& path, std::span<const TrainingExample> examples) {
  DatasetWriter w(path, examples.size());
  for (const auto& ex : examples) w.write(ex);
  w.close();
}

std::vector<TrainingExample> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset " + path.string());
  try {
    bin::expect_magic(in, kMagic);
    const auto version = bin::get<std::uint16_t>(in);
    if (version != kVersion) throw IoError("unsupported dataset version " + std::to_string(version));
    const auto count = bin::get<std::uint64_t>(in);
    std::vector<TrainingExample> out(count);
    std::vector<float> buf(kNumHands);
    for (auto& ex : out) {
      std::array<Card, 4> board;
      for (auto& c : board) {
        const int idx = bin::get<std::uint8_t>(in);
        if (idx >= kNumCards) throw IoError("card index out of range");
        c = Card(idx);
      }
      ex.spec.board = Board(board);
      ex.spec.pot = bin::get<float>(in);
      ex.spec.stack = bin::get<float>(in);
      for (auto* v : {&ex.spec.range1.probs, &ex.spec.range2.probs, &ex.cvs.v1, &ex.cvs.v2}) {
        bin::get_span<float>(in, buf);
        std::copy(buf.begin(), buf.end(), v->begin());
      }
    }
    return out;
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  } catch (const InvalidInput& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_dataset_csv(const std::filesystem::path& path, std::span<const TrainingExample> examples) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "board,pot,stack";
  for (const char* name : {"r1_", "r2_", "v1_", "v2_"}) {
    for (int h = 0; h < kNumHands; ++h) out << ',' << name << h;
  }
  out << '\n';
  char buf[32];
  auto num = [&](double x) {
    const auto res = std::to_chars(buf, buf + sizeof buf, static_cast<float>(x));
    out << ',';
    out.write(buf, res.ptr - buf);
  };
  for (const auto& ex : examples) {
    out << ex.spec.board.str();
    num(ex.spec.pot);
    num(ex.spec.stack);
    for (const auto* v : {&ex.spec.range1.probs, &ex.spec.range2.probs, &ex.cvs.v1, &ex.cvs.v2}) {
      for (double x : *v) num(x);
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed on " + path.string());
}

}  // namespace cfvn
