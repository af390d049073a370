#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "cfvn/encoding.hpp"
#include "cfvn/metrics.hpp"
#include "cfvn/network.hpp"

// Pipeline stages behind the `cfvn` subcommands. Every stage reads and writes
// files only, so stages can run as separate processes or in one call chain.
namespace cfvn::cli {

namespace fs = std::filesystem;

// Relative paths resolve against $CFVN_OUT_DIR when it is set.
fs::path resolve(const fs::path& path);

// Sidecar "<file>.meta" with key=value provenance lines.
fs::path meta_path(const fs::path& file);
void write_meta(const fs::path& file, const std::string& command, const std::string& config);
std::map<std::string, std::string> read_meta(const fs::path& file);

struct GenOptions {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  fs::path out;
  std::string deck = "full";
  int cfr_iters = 1000;
  // Negative: half of cfr_iters.
  int averaging_start = -1;
  bool plain_cfr = false;
  int raise_cap = 3;
  std::vector<double> bet_fractions{1.0};
  bool no_all_in = false;
  std::vector<double> pot_fractions{0.02, 0.04, 0.08, 0.16, 0.32, 0.64};
  double total_chips = 200.0;
  std::string format = "bin";
  int threads = 1;

  DatagenConfig datagen() const;
};

struct AbsOptions {
  std::string kind = "ehs2";
  fs::path dataset;
  fs::path out;
  // 0: the kind's default (1326 for ehs2, 1000 for pa).
  int buckets = 0;
  int bins = 50;
  int k_public = 10;
  int k_sub = 100;
  std::size_t board_sample = 20000;
  std::uint64_t seed = 0;
  int max_iters = 30;
  // Empty: taken from the dataset's provenance, else full.
  std::string deck;
  int threads = 1;
};

struct EncodeOptions {
  std::string kind = "ehs2";
  fs::path dataset;
  fs::path abs;
  fs::path out;
  std::string weighting = "range";
  std::string format = "bin";
  std::string deck;
  int threads = 1;
};

struct EncErrorOptions {
  std::string kind = "ehs2";
  fs::path dataset;
  fs::path abs;
  std::string weighting = "range";
  // all, train or test
  std::string split = "all";
  fs::path results;
  std::string deck;
};

struct TrainOptions {
  fs::path data;
  fs::path out;
  fs::path curve;
  int epochs = 350;
  std::size_t batch = 1000;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::uint64_t seed = 0;
  std::string arch = "desk";
  std::vector<std::size_t> hidden;
  bool quiet = false;
};

struct EvalOptions {
  fs::path model;
  fs::path data;
  fs::path dataset;
  fs::path abs;
  fs::path results;
};

struct ReportOptions {
  fs::path results;
  fs::path enc_errors;
  fs::path out;
};

struct ExperimentOptions {
  fs::path out_dir = "experiment";
  std::size_t n = 200;
  std::uint64_t seed = 0;
  std::string deck = "short20";
  int cfr_iters = 1000;
  int raise_cap = 3;
  int epochs = 350;
  std::size_t batch = 1000;
  std::size_t board_sample = 20000;
  int threads = 1;
};

// Each returns normally on success and throws InvalidInput or IoError.
void cmd_gen(const GenOptions& o, const std::string& config, std::ostream& log);
void cmd_abs(const AbsOptions& o, const std::string& config, std::ostream& log);
void cmd_encode(const EncodeOptions& o, const std::string& config, std::ostream& log);
EncodingError cmd_enc_error(const EncErrorOptions& o, std::ostream& out);
void cmd_train(const TrainOptions& o, const std::string& config, std::ostream& log);
std::vector<LossReport> cmd_eval(const EvalOptions& o, std::ostream& out);
void cmd_report(const ReportOptions& o, std::ostream& out);
void cmd_experiment(const ExperimentOptions& o, const std::string& config, std::ostream& log);

// Encoding-error rows "encoding,huber,mse,n_examples".
void append_enc_error_csv(const fs::path& path, EncodingKind kind, const EncodingError& e);

// Parses argv and dispatches; returns the process exit code (0 success,
// 1 invalid input or usage, 2 I/O failure).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cfvn::cli
