#include "cfvn_cli/commands.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "cfvn/error.hpp"

namespace cfvn::cli {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string deck_for(const std::string& option, const fs::path& dataset) {
  if (!option.empty()) return option;
  const auto meta = read_meta(dataset);
  if (auto it = meta.find("deck"); it != meta.end()) return it->second;
  return "full";
}

CvWeighting parse_weighting(const std::string& name) {
  if (name == "range") return CvWeighting::kRange;
  if (name == "uniform") return CvWeighting::kUniform;
  throw InvalidInput("unknown weighting '" + name + "' (expected range or uniform)");
}

void require(const fs::path& path, const char* what) {
  if (path.empty()) throw InvalidInput(std::string("missing required ") + what);
  if (!fs::exists(path)) {
    throw IoError(std::string(what) + " " + path.string() + " does not exist; run the stage that produces it first");
  }
}

MappingTable load_mappings(const fs::path& path, EncodingKind kind) {
  require(path, "abstraction file");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open abstraction file " + path.string());
  MappingTable table;
  try {
    for (auto& m : read_mappings(in)) {
      if (m.kind != abstraction_of(kind)) {
        throw InvalidInput(path.string() + " holds " + to_string(m.kind) + " mappings, not " + to_string(kind));
      }
      table.add(std::move(m));
    }
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  if (table.size() == 0) throw IoError(path.string() + " holds no mappings");
  return table;
}

std::vector<TrainingExample> load_dataset(const fs::path& path) {
  require(path, "dataset");
  return read_dataset(path);
}

std::vector<Board> boards_of(std::span<const TrainingExample> data) {
  std::vector<Board> boards;
  boards.reserve(data.size());
  for (const auto& ex : data) boards.push_back(ex.spec.board);
  return boards;
}

std::vector<Board> sample_boards(std::size_t n, std::uint64_t seed, const Deck& deck) {
  Rng rng(derive_seed(seed, 0x6E6573746564ULL));
  const auto cards = deck.cards();
  std::uniform_int_distribution<std::size_t> pick(0, cards.size() - 1);
  std::vector<Board> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Card> b;
    while (b.size() < 4) {
      const Card c = cards[pick(rng)];
      if (std::find(b.begin(), b.end(), c) == b.end()) b.push_back(c);
    }
    out.emplace_back(b);
  }
  return out;
}

EncodedDataset slice(const EncodedDataset& data, std::size_t from, std::size_t to) {
  EncodedDataset out{data.kind, data.num_buckets, {}};
  out.examples.assign(data.examples.begin() + static_cast<std::ptrdiff_t>(from),
                      data.examples.begin() + static_cast<std::ptrdiff_t>(to));
  return out;
}

}  // namespace

fs::path resolve(const fs::path& path) {
  if (path.empty() || path.is_absolute()) return path;
  if (const char* dir = std::getenv("CFVN_OUT_DIR"); dir && *dir) return fs::path(dir) / path;
  return path;
}

fs::path meta_path(const fs::path& file) { return fs::path(file.string() + ".meta"); }

void write_meta(const fs::path& file, const std::string& command, const std::string& config) {
  std::ofstream out(meta_path(file), std::ios::trunc);
  if (!out) throw IoError("cannot write provenance file " + meta_path(file).string());
  out << "command=" << command << '\n';
  // a key given twice keeps its first (resolved) value
  std::set<std::string> seen;
  std::istringstream lines(config);
  for (std::string line; std::getline(lines, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos || seen.insert(line.substr(0, eq)).second) out << line << '\n';
  }
  if (!out) throw IoError("write failed on " + meta_path(file).string());
}

std::map<std::string, std::string> read_meta(const fs::path& file) {
  std::map<std::string, std::string> out;
  std::ifstream in(meta_path(file));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (line.empty() || line[0] == '#' || eq == std::string::npos) continue;
    std::string value = line.substr(eq + 1);
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    out.emplace(line.substr(0, eq), value);
  }
  return out;
}

DatagenConfig GenOptions::datagen() const {
  DatagenConfig c;
  c.deck = Deck::parse(deck);
  c.total_chips = total_chips;
  c.pot_fractions = pot_fractions;
  c.actions.bet_fractions = bet_fractions;
  c.actions.all_in = !no_all_in;
  c.actions.raise_cap = raise_cap;
  c.cfr.iterations = cfr_iters;
  c.cfr.averaging_start = averaging_start < 0 ? cfr_iters / 2 : averaging_start;
  c.cfr.plus = !plain_cfr;
  if (cfr_iters < 1) throw InvalidInput("--cfr-iters must be at least 1");
  if (c.cfr.averaging_start >= cfr_iters) throw InvalidInput("--averaging-start must be below --cfr-iters");
  if (!(total_chips > 0.0)) throw InvalidInput("--total-chips must be positive");
  for (double f : pot_fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw InvalidInput("pot fractions must lie in (0, 1]");
  }
  for (double f : bet_fractions) {
    if (!(f > 0.0)) throw InvalidInput("bet fractions must be positive");
  }
  return c;
}

void cmd_gen(const GenOptions& o, const std::string& config, std::ostream& log) {
  if (o.n < 1) throw InvalidInput("--n must be at least 1");
  if (o.out.empty()) throw InvalidInput("missing --out");
  if (o.format != "bin" && o.format != "csv") throw InvalidInput("--format must be bin or csv");
  const DatagenConfig cfg = o.datagen();
  const fs::path out = resolve(o.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());

  const auto t0 = Clock::now();
  auto last = t0;
  auto progress = [&](std::size_t i) {
    const auto now = Clock::now();
    if (i + 1 != o.n && now - last < std::chrono::seconds(10)) return;
    last = now;
    const double dt = seconds_since(t0);
    const double rate = static_cast<double>(i + 1) / dt;
    fmt::print(log, "gen {}/{}  {:.2f} ex/s  eta {:.0f}s\n", i + 1, o.n, rate, static_cast<double>(o.n - i - 1) / rate);
    log.flush();
  };
  if (o.format == "bin") {
    DatasetWriter writer(out, o.n);
    generate_dataset(o.n, o.seed, cfg, o.threads, [&](std::size_t i, TrainingExample&& ex) {
      writer.write(ex);
      progress(i);
    });
    writer.close();
  } else {
    std::vector<TrainingExample> data(o.n);
    generate_dataset(o.n, o.seed, cfg, o.threads, [&](std::size_t i, TrainingExample&& ex) {
      data[i] = std::move(ex);
      progress(i);
    });
    write_dataset_csv(out, data);
  }
  write_meta(out, "gen", "deck=" + cfg.deck.name() + "\n" + config);
  fmt::print(log, "wrote {} examples to {} in {:.1f}s\n", o.n, out.string(), seconds_since(t0));
}

void cmd_abs(const AbsOptions& o, const std::string& config, std::ostream& log) {
  const EncodingKind kind = parse_encoding(o.kind);
  if (kind == EncodingKind::kDirect) throw InvalidInput("the direct encoding needs no abstraction");
  if (o.out.empty()) throw InvalidInput("missing --out");
  const fs::path dataset = resolve(o.dataset);
  const auto data = load_dataset(dataset);
  const Deck deck = Deck::parse(deck_for(o.deck, dataset));
  const fs::path out = resolve(o.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  const auto t0 = Clock::now();

  AbstractionSettings s;
  s.kind = kind;
  s.deck = deck;
  s.ehs2_buckets = o.buckets > 0 ? o.buckets : static_cast<int>(kNumHands);
  s.potential_aware = {o.buckets > 0 ? o.buckets : 1000, o.bins, o.seed, o.max_iters};
  if (s.ehs2_buckets >= kSentinelBucket || s.potential_aware.num_buckets >= kSentinelBucket) {
    throw InvalidInput("--buckets must be below 65535");
  }
  if (kind == EncodingKind::kNested) {
    if (o.board_sample < 1) throw InvalidInput("--board-sample must be at least 1");
    const auto sample = sample_boards(o.board_sample, o.seed, deck);
    PublicNestedAbstraction::Options po;
    po.k_public = o.k_public;
    po.k_sub = o.k_sub;
    po.seed = o.seed;
    auto model = std::make_shared<PublicNestedAbstraction>(PublicNestedAbstraction::fit(sample, po, deck));
    const fs::path model_path(out.string() + ".public");
    std::ofstream mo(model_path, std::ios::binary | std::ios::trunc);
    if (!mo) throw IoError("cannot open " + model_path.string() + " for writing");
    model->write(mo);
    mo.close();
    if (!mo) throw IoError("write failed on " + model_path.string());
    s.nested = std::move(model);
  }
  const MappingTable table = build_mappings(s, boards_of(data), o.threads);
  std::ofstream os(out, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + out.string() + " for writing");
  for (const auto& m : table.all()) write_mapping(os, m);
  os.close();
  if (!os) throw IoError("write failed on " + out.string());
  write_meta(out, "abs", "deck=" + deck.name() + "\n" + config);
  fmt::print(log, "wrote {} {} mappings with {} buckets to {} in {:.1f}s\n", table.size(), to_string(kind),
             s.num_buckets(), out.string(), seconds_since(t0));
}

void cmd_encode(const EncodeOptions& o, const std::string& config, std::ostream& log) {
  const EncodingKind kind = parse_encoding(o.kind);
  const CvWeighting weighting = parse_weighting(o.weighting);
  if (o.out.empty()) throw InvalidInput("missing --out");
  if (o.format != "bin" && o.format != "csv") throw InvalidInput("--format must be bin or csv");
  const fs::path dataset = resolve(o.dataset);
  const auto data = load_dataset(dataset);
  const Deck deck = Deck::parse(deck_for(o.deck, dataset));
  MappingTable table;
  std::uint32_t k = kNumHands;
  if (kind != EncodingKind::kDirect) {
    table = load_mappings(resolve(o.abs), kind);
    k = table.all().front().num_buckets;
  }
  const EncodedDataset enc = encode_dataset(data, kind, k, table.lookup(), weighting, deck, o.threads);
  const fs::path out = resolve(o.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  if (o.format == "bin") {
    write_encoded(out, enc);
  } else {
    write_encoded_csv(out, enc);
  }
  write_meta(out, "encode", config);
  fmt::print(log, "encoded {} examples as {} (K = {}, {} inputs) into {}\n", enc.examples.size(), to_string(kind),
             enc.num_buckets, enc.input_dim(), out.string());
}

EncodingError cmd_enc_error(const EncErrorOptions& o, std::ostream& out) {
  const EncodingKind kind = parse_encoding(o.kind);
  const CvWeighting weighting = parse_weighting(o.weighting);
  const fs::path dataset = resolve(o.dataset);
  const auto data = load_dataset(dataset);
  const Deck deck = Deck::parse(deck_for(o.deck, dataset));
  MappingTable table;
  if (kind != EncodingKind::kDirect) table = load_mappings(resolve(o.abs), kind);
  std::span<const TrainingExample> part(data);
  const std::size_t cut = train_count(data.size());
  if (o.split == "train") {
    part = part.first(cut);
  } else if (o.split == "test") {
    part = part.subspan(cut);
  } else if (o.split != "all") {
    throw InvalidInput("--split must be all, train or test");
  }
  const EncodingError e = encoding_error(part, kind, table.lookup(), weighting, deck);
  fmt::print(out, "encoding={} huber={:.8g} mse={:.8g} examples={} hands={}\n", to_string(kind), e.huber, e.mse,
             e.examples, e.hands);
  if (!o.results.empty()) append_enc_error_csv(resolve(o.results), kind, e);
  return e;
}

void append_enc_error_csv(const fs::path& path, EncodingKind kind, const EncodingError& e) {
  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot open " + path.string() + " for appending");
  if (fresh) out << "encoding,huber,mse,n_examples\n";
  fmt::print(out, "{},{:.17g},{:.17g},{}\n", to_string(kind), e.huber, e.mse, e.examples);
  if (!out) throw IoError("write failed on " + path.string());
}

void cmd_train(const TrainOptions& o, const std::string& config, std::ostream& log) {
  if (o.out.empty()) throw InvalidInput("missing --out");
  const fs::path data_path = resolve(o.data);
  require(data_path, "encoded dataset");
  const EncodedDataset data = read_encoded(data_path);
  if (data.examples.size() < 2) throw InvalidInput("need at least two encoded examples to split");
  const std::size_t cut = train_count(data.examples.size());
  const EncodedDataset train_set = slice(data, 0, cut);
  const EncodedDataset test_set = slice(data, cut, data.examples.size());

  MlpConfig mlp;
  if (o.arch == "desk") {
    mlp = MlpConfig::desk(data.input_dim(), data.target_dim());
  } else if (o.arch == "paper") {
    mlp = MlpConfig::paper(data.input_dim(), data.target_dim());
  } else {
    throw InvalidInput("--arch must be desk or paper");
  }
  if (!o.hidden.empty()) mlp.hidden = o.hidden;
  mlp.seed = o.seed;
  TrainConfig tc;
  tc.epochs = o.epochs;
  tc.batch = o.batch;
  tc.learning_rate = o.lr;
  tc.beta1 = o.beta1;
  tc.beta2 = o.beta2;
  tc.seed = o.seed;

  const auto t0 = Clock::now();
  const TrainResult result = train(train_set, &test_set, mlp, tc, [&](const EpochLoss& e) {
    if (o.quiet || (e.epoch % 10 != 0 && e.epoch != 1 && e.epoch != o.epochs)) return;
    fmt::print(log, "epoch {:4d}  train {:.6f}  test {:.6f}  {:.0f}s\n", e.epoch, e.train_huber, e.test_huber,
               seconds_since(t0));
    log.flush();
  });
  const fs::path out = resolve(o.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_model(out, result.model);
  write_meta(out, "train", config);
  const fs::path curve = o.curve.empty() ? fs::path(out.string() + ".curve.csv") : resolve(o.curve);
  write_loss_curve(curve, result.curve);
  fmt::print(log, "trained {} encoding for {} epochs on {} examples; final train {:.6f} test {:.6f}\n",
             to_string(data.kind), o.epochs, train_set.examples.size(), result.curve.back().train_huber,
             result.curve.back().test_huber);
}

std::vector<LossReport> cmd_eval(const EvalOptions& o, std::ostream& out) {
  const fs::path model_path = resolve(o.model);
  require(model_path, "model");
  const fs::path data_path = resolve(o.data);
  require(data_path, "encoded dataset");
  const Mlp<float> model = read_model(model_path);
  const EncodedDataset enc = read_encoded(data_path);
  const auto raw = load_dataset(resolve(o.dataset));
  if (raw.size() != enc.examples.size()) throw InvalidInput("encoded and raw datasets differ in size");
  if (model.config().input_dim != enc.input_dim() || model.config().output_dim != enc.target_dim()) {
    throw InvalidInput("model shape does not match the encoded dataset");
  }
  MappingTable table;
  if (enc.kind != EncodingKind::kDirect) table = load_mappings(resolve(o.abs), enc.kind);

  const std::size_t cut = train_count(enc.examples.size());
  std::vector<LossReport> reports;
  for (bool test : {false, true}) {
    const std::size_t from = test ? cut : 0, to = test ? enc.examples.size() : cut;
    const EncodedDataset part = slice(enc, from, to);
    const auto preds = predict(model, part);
    const std::span<const TrainingExample> rows = std::span(raw).subspan(from, to - from);
    for (bool abstracted : {true, false}) {
      const Regime r = test ? (abstracted ? Regime::kAbstractedTest : Regime::kUnabstractedTest)
                            : (abstracted ? Regime::kAbstractedTrain : Regime::kUnabstractedTrain);
      reports.push_back(evaluate(preds, rows, part, table.lookup(), r));
    }
  }
  for (const auto& r : reports) {
    fmt::print(out, "encoding={} regime={} huber={:.8g} mse={:.8g} examples={}\n", to_string(r.encoding),
               to_string(r.regime), r.huber, r.mse, r.examples);
  }
  if (!o.results.empty()) append_results_csv(resolve(o.results), reports);
  return reports;
}

void cmd_report(const ReportOptions& o, std::ostream& out) {
  const fs::path results = resolve(o.results);
  require(results, "results file");
  const auto rows = read_results_csv(results);
  const EncodingKind order[] = {EncodingKind::kEhs2, EncodingKind::kNested, EncodingKind::kPotentialAware,
                                EncodingKind::kDirect};
  const Regime regimes[] = {Regime::kAbstractedTrain, Regime::kUnabstractedTrain, Regime::kAbstractedTest,
                            Regime::kUnabstractedTest};
  const char* names[] = {"E[HS^2]", "Public nested", "Potential aware", "Abstraction free"};

  std::ostringstream md;
  if (!o.enc_errors.empty()) {
    const fs::path enc_path = resolve(o.enc_errors);
    require(enc_path, "encoding-error file");
    std::ifstream in(enc_path);
    std::string line;
    std::getline(in, line);
    if (line != "encoding,huber,mse,n_examples") throw IoError(enc_path.string() + ": unexpected header");
    std::map<EncodingKind, std::pair<double, double>> sum;
    std::map<EncodingKind, int> count;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream row(line);
      std::string enc, h, m;
      if (!std::getline(row, enc, ',') || !std::getline(row, h, ',') || !std::getline(row, m, ',')) {
        throw IoError(enc_path.string() + ": malformed row '" + line + "'");
      }
      const EncodingKind k = parse_encoding(enc);
      sum[k].first += std::stod(h);
      sum[k].second += std::stod(m);
      ++count[k];
    }
    md << "Table 1: encoding error on the turn\n\n| Encoding | Huber | MSE |\n|---|---|---|\n";
    for (std::size_t i = 0; i < 4; ++i) {
      if (!count.contains(order[i])) continue;
      const double c = count[order[i]];
      md << fmt::format("| {} | {:.6f} | {:.6f} |\n", names[i], sum[order[i]].first / c, sum[order[i]].second / c);
    }
    md << '\n';
  }

  std::map<std::pair<EncodingKind, Regime>, std::array<double, 3>> agg;
  for (const auto& r : rows) {
    auto& a = agg[{r.encoding, r.regime}];
    a[0] += r.huber;
    a[1] += r.mse;
    a[2] += 1.0;
  }
  for (int metric = 0; metric < 2; ++metric) {
    md << (metric == 0 ? "Table 2: prediction error (Huber)" : "Table 2b: prediction error (MSE)");
    md << "\n\n| Encoding |";
    for (Regime r : regimes) md << ' ' << to_string(r) << " |";
    md << "\n|---|---|---|---|---|\n";
    for (std::size_t i = 0; i < 4; ++i) {
      bool any = false;
      std::string line = fmt::format("| {} |", names[i]);
      for (Regime r : regimes) {
        auto it = agg.find({order[i], r});
        if (it == agg.end()) {
          line += " - |";
          continue;
        }
        any = true;
        line += fmt::format(" {:.6f} |", it->second[static_cast<std::size_t>(metric)] / it->second[2]);
      }
      if (any) md << line << '\n';
    }
    md << '\n';
  }
  out << md.str();
  if (!o.out.empty()) {
    const fs::path path = resolve(o.out);
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << md.str();
    if (!f) throw IoError("write failed on " + path.string());
  }
}

void cmd_experiment(const ExperimentOptions& o, const std::string& config, std::ostream& log) {
  const fs::path dir = resolve(o.out_dir);
  fs::create_directories(dir);
  const fs::path dataset = dir / "data.cfvd";
  const fs::path results = dir / "results.csv";
  const fs::path enc_errors = dir / "encoding_errors.csv";
  fs::remove(results);
  fs::remove(enc_errors);

  GenOptions g;
  g.n = o.n;
  g.seed = o.seed;
  g.out = dataset;
  g.deck = o.deck;
  g.cfr_iters = o.cfr_iters;
  g.raise_cap = o.raise_cap;
  g.threads = o.threads;
  cmd_gen(g, config, log);

  const EncodingKind kinds[] = {EncodingKind::kEhs2, EncodingKind::kNested, EncodingKind::kPotentialAware,
                                EncodingKind::kDirect};
  for (EncodingKind kind : kinds) {
    const std::string name = to_string(kind);
    const fs::path abs = dir / (name + ".cabs");
    if (kind != EncodingKind::kDirect) {
      AbsOptions a;
      a.kind = name;
      a.dataset = dataset;
      a.out = abs;
      a.seed = o.seed;
      a.board_sample = o.board_sample;
      a.threads = o.threads;
      cmd_abs(a, config, log);
    }
    EncodeOptions e;
    e.kind = name;
    e.dataset = dataset;
    e.abs = abs;
    e.out = dir / (name + ".cenc");
    e.threads = o.threads;
    cmd_encode(e, config, log);

    EncErrorOptions ee;
    ee.kind = name;
    ee.dataset = dataset;
    ee.abs = abs;
    ee.results = enc_errors;
    cmd_enc_error(ee, log);

    TrainOptions t;
    t.data = e.out;
    t.out = dir / (name + ".cfvn");
    t.epochs = o.epochs;
    t.batch = o.batch;
    t.seed = o.seed;
    t.quiet = true;
    cmd_train(t, config, log);

    EvalOptions ev;
    ev.model = t.out;
    ev.data = e.out;
    ev.dataset = dataset;
    ev.abs = abs;
    ev.results = results;
    cmd_eval(ev, log);
  }
  ReportOptions r;
  r.results = results;
  r.enc_errors = enc_errors;
  r.out = dir / "report.md";
  cmd_report(r, log);
}

}  // namespace cfvn::cli
