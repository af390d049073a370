#include <fmt/format.h>
#include <fmt/ostream.h>

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "cfvn/error.hpp"
#include "cfvn_cli/commands.hpp"

namespace cfvn::cli {
namespace {

CLI::App* subcommand(CLI::App& app, const char* name, const char* description) {
  CLI::App* sub = app.add_subcommand(name, description);
  // lets --config follow the subcommand name
  sub->fallthrough();
  return sub;
}

void add_threads(CLI::App* sub, int& threads) {
  sub->add_option("--threads", threads, "Worker threads")->check(CLI::Range(1, 1024));
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Counterfactual value network pipeline for turn subgames", "cfvn"};
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "TOML/INI file; [gen], [train], ... sections set that subcommand's options");
  app.require_subcommand(1);

  GenOptions gen;
  auto* g = subcommand(app, "gen", "Solve random turn subgames and write the CV dataset");
  g->add_option("--n", gen.n, "Number of examples")->required()->check(CLI::PositiveNumber);
  g->add_option("--seed", gen.seed, "Master seed");
  g->add_option("--out", gen.out, "Output dataset")->required();
  g->add_option("--deck", gen.deck, "full or shortN (e.g. short20)");
  g->add_option("--cfr-iters", gen.cfr_iters, "Solver iterations per subgame");
  g->add_option("--averaging-start", gen.averaging_start, "First averaged iteration (-1: half)");
  g->add_flag("--plain-cfr", gen.plain_cfr, "Vanilla CFR instead of CFR+");
  g->add_option("--raise-cap", gen.raise_cap, "Bets plus raises per street")->check(CLI::Range(0, 16));
  g->add_option("--bet-fractions", gen.bet_fractions, "Bet sizes as pot fractions")->delimiter(',');
  g->add_flag("--no-all-in", gen.no_all_in, "Drop the all-in action");
  g->add_option("--pot-fractions", gen.pot_fractions, "Pot sizes as fractions of total chips")->delimiter(',');
  g->add_option("--total-chips", gen.total_chips, "Pot plus both stacks");
  g->add_option("--format", gen.format, "bin or csv")->check(CLI::IsMember({"bin", "csv"}));
  add_threads(g, gen.threads);

  AbsOptions abs;
  auto* a = subcommand(app, "abs", "Build bucket mappings for every board in a dataset");
  a->add_option("--kind", abs.kind, "ehs2, nested or pa")->check(CLI::IsMember({"ehs2", "nested", "pa"}));
  a->add_option("--dataset", abs.dataset, "Dataset from gen")->required();
  a->add_option("--out", abs.out, "Output mapping file")->required();
  a->add_option("--buckets", abs.buckets, "Buckets per board (0: 1326 for ehs2, 1000 for pa)");
  a->add_option("--bins", abs.bins, "Histogram bins for pa")->check(CLI::Range(2, 1000));
  a->add_option("--k-public", abs.k_public, "Public clusters for nested")->check(CLI::PositiveNumber);
  a->add_option("--k-sub", abs.k_sub, "Strength buckets per public cluster")->check(CLI::PositiveNumber);
  a->add_option("--board-sample", abs.board_sample, "Boards sampled to fit the public clusters");
  a->add_option("--seed", abs.seed, "Clustering seed");
  a->add_option("--max-iters", abs.max_iters, "k-means iteration limit for pa")->check(CLI::PositiveNumber);
  a->add_option("--deck", abs.deck, "Deck (default: the dataset's)");
  add_threads(a, abs.threads);

  EncodeOptions enc;
  auto* e = subcommand(app, "encode", "Encode a dataset into network inputs and targets");
  e->add_option("--kind", enc.kind, "ehs2, nested, pa or direct")
      ->check(CLI::IsMember({"ehs2", "nested", "pa", "direct"}));
  e->add_option("--dataset", enc.dataset, "Dataset from gen")->required();
  e->add_option("--abs", enc.abs, "Mapping file from abs (not for direct)");
  e->add_option("--out", enc.out, "Output encoded dataset")->required();
  e->add_option("--weighting", enc.weighting, "Bucket CV averaging: range or uniform")
      ->check(CLI::IsMember({"range", "uniform"}));
  e->add_option("--format", enc.format, "bin or csv")->check(CLI::IsMember({"bin", "csv"}));
  e->add_option("--deck", enc.deck, "Deck (default: the dataset's)");
  add_threads(e, enc.threads);

  EncErrorOptions ee;
  auto* x = subcommand(app, "enc-error", "Encode-decode round-trip error of an encoding");
  x->add_option("--kind", ee.kind, "ehs2, nested, pa or direct")
      ->check(CLI::IsMember({"ehs2", "nested", "pa", "direct"}));
  x->add_option("--dataset", ee.dataset, "Dataset from gen")->required();
  x->add_option("--abs", ee.abs, "Mapping file from abs (not for direct)");
  x->add_option("--weighting", ee.weighting, "range or uniform")->check(CLI::IsMember({"range", "uniform"}));
  x->add_option("--split", ee.split, "all, train or test")->check(CLI::IsMember({"all", "train", "test"}));
  x->add_option("--results", ee.results, "Append a row to this CSV");
  x->add_option("--deck", ee.deck, "Deck (default: the dataset's)");

  TrainOptions tr;
  auto* t = subcommand(app, "train", "Train a value network on an encoded dataset");
  t->add_option("--data", tr.data, "Encoded dataset")->required();
  t->add_option("--out", tr.out, "Output model")->required();
  t->add_option("--curve", tr.curve, "Loss curve CSV (default: <out>.curve.csv)");
  t->add_option("--epochs", tr.epochs, "Epochs")->check(CLI::PositiveNumber);
  t->add_option("--batch", tr.batch, "Mini-batch size")->check(CLI::PositiveNumber);
  t->add_option("--lr", tr.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  t->add_option("--beta1", tr.beta1, "Adam beta1")->check(CLI::Range(0.0, 0.999999));
  t->add_option("--beta2", tr.beta2, "Adam beta2")->check(CLI::Range(0.0, 0.999999));
  t->add_option("--seed", tr.seed, "Initialization and shuffle seed");
  t->add_option("--arch", tr.arch, "desk (3x200) or paper (7x500)")->check(CLI::IsMember({"desk", "paper"}));
  t->add_option("--hidden", tr.hidden, "Hidden widths, overriding --arch")->delimiter(',');
  t->add_flag("--quiet", tr.quiet, "No per-epoch log");

  EvalOptions ev;
  auto* v = subcommand(app, "eval", "Evaluate a model in the four regimes");
  v->add_option("--model", ev.model, "Model from train")->required();
  v->add_option("--data", ev.data, "Encoded dataset the model was trained on")->required();
  v->add_option("--dataset", ev.dataset, "Raw dataset behind --data")->required();
  v->add_option("--abs", ev.abs, "Mapping file (not for direct)");
  v->add_option("--results", ev.results, "Append rows to this CSV");

  ReportOptions rep;
  auto* r = subcommand(app, "report", "Summarize results as markdown tables");
  r->add_option("--results", rep.results, "Results CSV from eval")->required();
  r->add_option("--enc-errors", rep.enc_errors, "Encoding-error CSV from enc-error");
  r->add_option("--out", rep.out, "Also write the report here");

  ExperimentOptions ex;
  auto* xp = subcommand(app, "experiment", "Run the whole pipeline for all four encodings");
  xp->add_option("--out-dir", ex.out_dir, "Directory for every artifact");
  xp->add_option("--n", ex.n, "Number of examples")->check(CLI::PositiveNumber);
  xp->add_option("--seed", ex.seed, "Master seed");
  xp->add_option("--deck", ex.deck, "full or shortN");
  xp->add_option("--cfr-iters", ex.cfr_iters, "Solver iterations per subgame")->check(CLI::PositiveNumber);
  xp->add_option("--raise-cap", ex.raise_cap, "Bets plus raises per street")->check(CLI::Range(0, 16));
  xp->add_option("--epochs", ex.epochs, "Training epochs")->check(CLI::PositiveNumber);
  xp->add_option("--batch", ex.batch, "Mini-batch size")->check(CLI::PositiveNumber);
  xp->add_option("--board-sample", ex.board_sample, "Boards sampled for the public clusters");
  add_threads(xp, ex.threads);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& pe) {
    return app.exit(pe, out, err) == 0 ? 0 : 1;
  }

  // effective settings of the chosen subcommand; thread count does not
  // change outputs, so it stays out of the provenance
  std::string config;
  {
    std::istringstream lines(app.get_subcommands().front()->config_to_str(true, false));
    for (std::string line; std::getline(lines, line);) {
      if (!line.starts_with("threads=")) config += line + '\n';
    }
  }
  try {
    if (g->parsed()) cmd_gen(gen, config, err);
    if (a->parsed()) cmd_abs(abs, config, err);
    if (e->parsed()) cmd_encode(enc, config, err);
    if (x->parsed()) cmd_enc_error(ee, out);
    if (t->parsed()) cmd_train(tr, config, err);
    if (v->parsed()) cmd_eval(ev, out);
    if (r->parsed()) cmd_report(rep, out);
    if (xp->parsed()) cmd_experiment(ex, config, err);
  } catch (const InvalidInput& ie) {
    fmt::print(err, "error: {}\n", ie.what());
    return 1;
  } catch (const IoError& io) {
    fmt::print(err, "i/o error: {}\n", io.what());
    return 2;
  } catch (const std::filesystem::filesystem_error& fe) {
    fmt::print(err, "i/o error: {}\n", fe.what());
    return 2;
  } catch (const std::exception& ex2) {
    fmt::print(err, "error: {}\n", ex2.what());
    return 1;
  }
  return 0;
}

}  // namespace cfvn::cli
