#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

#include "recurnet/analysis.hpp"
#include "recurnet/binary_io.hpp"
#include "recurnet/checkpoint.hpp"
#include "recurnet/classification.hpp"
#include "recurnet/dataset.hpp"
#include "recurnet/errors.hpp"
#include "recurnet/evaluator.hpp"
#include "recurnet/manifest.hpp"
#include "recurnet/trainer.hpp"

namespace fs = std::filesystem;

namespace recurnet::cli {

namespace {

constexpr const char* kOutputRootEnv = "RECURNET_OUTPUT_ROOT";

// Raised for command-line problems detected after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path output_path(const std::string& p) {
  fs::path path(p);
  const char* root = std::getenv(kOutputRootEnv);
  if (root && *root && path.is_relative()) return fs::path(root) / path;
  return path;
}

void refuse_existing(const fs::path& p, bool force) {
  if (!force && fs::exists(p)) throw UsageError("refusing to overwrite existing " + p.string() + " (pass --force)");
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void write_text(const fs::path& p, const std::string& s) {
  ensure_parent(p);
  write_file_bytes(p, std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

fs::path manifest_path_for(const fs::path& out) {
  if (fs::is_directory(out)) return out / "manifest.json";
  return fs::path(out.string() + ".manifest.json");
}

fs::path sibling(const fs::path& p, const std::string& suffix) {
  return p.parent_path() / (p.stem().string() + suffix);
}

struct MazeSize {
  std::string preset;  // empty for custom sizes
  int n = 0;
};

std::string preset_list() {
  std::string s;
  for (const auto& p : kMazePresets) s += std::string(s.empty() ? "" : ", ") + p.name;
  return s + ", custom:<n>";
}

std::optional<MazeSize> parse_size(const std::string& token) {
  for (const auto& p : kMazePresets)
    if (token == p.name) return MazeSize{p.name, p.n};
  if (token.rfind("custom:", 0) == 0) {
    const std::string num = token.substr(7);
    if (!num.empty() && num.size() < 6 && std::all_of(num.begin(), num.end(), ::isdigit) && std::stoi(num) >= 1)
      return MazeSize{"", std::stoi(num)};
  }
  return std::nullopt;
}

std::vector<int> parse_budgets(const std::string& spec) {
  std::vector<int> out;
  std::istringstream is(spec);
  std::string item;
  while (std::getline(is, item, ',')) {
    const auto dash = item.find('-');
    try {
      std::size_t used = 0;
      if (dash == std::string::npos) {
        out.push_back(std::stoi(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } else {
        const int lo = std::stoi(item.substr(0, dash));
        const int hi = std::stoi(item.substr(dash + 1));
        if (lo > hi) throw std::invalid_argument(item);
        for (int b = lo; b <= hi; ++b) out.push_back(b);
      }
    } catch (const std::exception&) {
      throw UsageError("bad budget list '" + spec + "' (use e.g. 1-30 or 4,6,8)");
    }
  }
  if (out.empty() || *std::min_element(out.begin(), out.end()) < 1)
    throw UsageError("budgets must be positive integers");
  return out;
}

struct Context {
  std::vector<std::string> args;
  unsigned threads = 1;
  std::ostream& out;
};

RunManifest start_manifest(const Context& ctx) {
  RunManifest m;
  m.command_line = ctx.args;
  return m;
}

void finish_manifest(RunManifest& m, const fs::path& out) {
  const fs::path mp = manifest_path_for(out);
  write_manifest(m, mp);
}

// ---- generate ----

struct GenerateArgs {
  std::string size;
  std::optional<std::size_t> count;
  std::uint64_t seed = 0;
  std::string out;
  bool force = false;
};

void cmd_generate(const Context& ctx, const GenerateArgs& a) {
  const auto size = parse_size(a.size);
  if (!size) throw UsageError("bad --size '" + a.size + "' (expected one of " + preset_list() + ")");
  const fs::path out = output_path(a.out);
  RunManifest m = start_manifest(ctx);
  m.seeds["data"] = a.seed;
  if (a.count) {
    refuse_existing(out, a.force);
    const Dataset ds = build_dataset(size->n, *a.count, a.seed, ctx.threads);
    ensure_parent(out);
    write_dataset(ds, out);
    m.dataset_hashes[out.string()] = file_hash(out);
    m.outputs.push_back(out.string());
    ctx.out << "wrote " << ds.size() << " mazes (n=" << size->n << ") to " << out.string() << "\n";
    finish_manifest(m, out);
    return;
  }
  std::size_t train_count = kMazePresets[0].train_count, test_count = kMazePresets[0].test_count;
  for (const auto& p : kMazePresets)
    if (size->preset == p.name) train_count = p.train_count, test_count = p.test_count;
  const fs::path train_path = out / "train.dtmz", test_path = out / "test.dtmz";
  refuse_existing(train_path, a.force);
  refuse_existing(test_path, a.force);
  fs::create_directories(out);
  const Dataset train = build_dataset(size->n, train_count, a.seed, ctx.threads);
  write_dataset(train, train_path);
  const Dataset test = build_dataset(size->n, test_count, a.seed + train_count, ctx.threads);
  write_dataset(test, test_path);
  for (const fs::path& p : {train_path, test_path}) {
    m.dataset_hashes[p.string()] = file_hash(p);
    m.outputs.push_back(p.string());
  }
  ctx.out << "wrote " << train.size() << " train and " << test.size() << " test mazes (n=" << size->n << ") to "
          << out.string() << "\n";
  finish_manifest(m, out);
}

// ---- train ----

struct TrainArgs {
  std::string config, data, out;
  bool force = false;
};

void cmd_train(const Context& ctx, const TrainArgs& a) {
  const TrainConfig config = read_train_config(a.config);
  const fs::path out = output_path(a.out);
  const fs::path log_path = fs::path(out.string() + ".log.csv");
  refuse_existing(out, a.force);
  refuse_existing(log_path, a.force);
  ensure_parent(out);
  Model model = build_model(config.model, config.model_seed);
  TrainOptions opts;
  opts.checkpoint = out;
  opts.eval_threads = ctx.threads;
  opts.on_epoch = [&](const EpochLog& e) {
    ctx.out << "epoch " << e.epoch + 1 << "/" << config.epochs << " loss " << e.loss << " train_acc "
            << e.train_accuracy << " lr " << e.learning_rate << " (" << e.seconds << " s)" << std::endl;
  };
  TrainReport report;
  if (config.loss == LossKind::per_pixel_xent) {
    report = train(model, read_dataset(a.data), config, opts);
  } else {
    report = train(model, read_cifar_binary(a.data), config, opts);
  }
  std::ostringstream log;
  log << "epoch,loss,train_accuracy,seconds\n";
  for (std::size_t e = 0; e < report.epoch_loss.size(); ++e)
    log << e + 1 << ',' << report.epoch_loss[e] << ',' << report.epoch_accuracy[e] << ',' << report.epoch_seconds[e]
        << '\n';
  write_text(log_path, log.str());
  ctx.out << "final train accuracy " << report.final_train_accuracy << "\n";
  RunManifest m = start_manifest(ctx);
  m.config = config.to_text();
  m.seeds["data_order"] = config.seed;
  m.seeds["model"] = config.model_seed;
  m.dataset_hashes[a.data] = file_hash(a.data);
  m.checkpoint_hash = file_hash(out);
  m.outputs = {out.string(), log_path.string()};
  finish_manifest(m, out);
}

// ---- eval / sweep ----

struct EvalArgs {
  std::string checkpoint, data, rule, out;
  int budget = 0;
  int train_iters = 0;
  bool force = false;
};

void cmd_eval(const Context& ctx, const EvalArgs& a) {
  const fs::path out = output_path(a.out);
  const fs::path hist = sibling(out, ".histogram.csv");
  refuse_existing(out, a.force);
  refuse_existing(hist, a.force);
  const Model model = load_checkpoint(a.checkpoint);
  const Dataset ds = read_dataset(a.data);
  const int train_iters = a.train_iters > 0 ? a.train_iters : model.spec().iterations;
  const ExitRule rule{parse_exit_kind(a.rule), train_iters, a.budget > 0 ? a.budget : train_iters};
  const EvalReport r = evaluate(model, ds, rule, ctx.threads);
  const SweepRow row{fs::path(a.data).stem().string(), rule.kind, rule.budget, r.accuracy, r.stderr_accuracy,
                     r.n_samples};
  write_text(out, sweep_csv(std::span(&row, 1)));
  write_text(hist, histogram_csv(r));
  ctx.out << to_string(rule.kind) << " budget " << rule.budget << ": accuracy " << r.accuracy << " +- "
          << r.stderr_accuracy << " (" << r.solved << "/" << r.n_samples << ")\n";
  RunManifest m = start_manifest(ctx);
  m.dataset_hashes[a.data] = file_hash(a.data);
  m.checkpoint_hash = file_hash(a.checkpoint);
  m.outputs = {out.string(), hist.string()};
  finish_manifest(m, out);
}

struct SweepArgs {
  std::string checkpoint, budgets = "1-30", out;
  std::vector<std::string> data;
  std::vector<std::string> rules;
  int train_iters = 0;
  bool force = false;
};

void cmd_sweep(const Context& ctx, const SweepArgs& a) {
  const fs::path out = output_path(a.out);
  refuse_existing(out, a.force);
  const Model model = load_checkpoint(a.checkpoint);
  const std::vector<int> budgets = parse_budgets(a.budgets);
  std::vector<ExitKind> rules;
  if (a.rules.empty()) rules.assign(std::begin(kAllExitKinds), std::end(kAllExitKinds));
  for (const auto& r : a.rules) rules.push_back(parse_exit_kind(r));
  std::vector<Dataset> sets;
  std::vector<std::string> names, paths;
  for (const std::string& spec : a.data) {
    const auto eq = spec.find('=');
    const std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
    names.push_back(eq == std::string::npos ? fs::path(path).stem().string() : spec.substr(0, eq));
    paths.push_back(path);
    sets.push_back(read_dataset(path));
  }
  std::vector<NamedDataset> named;
  for (std::size_t i = 0; i < sets.size(); ++i) named.push_back({names[i], &sets[i]});
  const int train_iters = a.train_iters > 0 ? a.train_iters : model.spec().iterations;
  const auto rows = sweep(model, named, budgets, rules, train_iters, ctx.threads);
  write_text(out, sweep_csv(rows));
  ctx.out << "wrote " << rows.size() << " rows to " << out.string() << "\n";
  RunManifest m = start_manifest(ctx);
  for (const auto& p : paths) m.dataset_hashes[p] = file_hash(p);
  m.checkpoint_hash = file_hash(a.checkpoint);
  m.outputs = {out.string()};
  finish_manifest(m, out);
}

// ---- analyze ----

struct ReuseArgs {
  std::string checkpoint, data, out;
  std::size_t count = 8;
  int iters = 0;
  double threshold = 0.2;
  bool force = false;
};

void cmd_reuse(const Context& ctx, const ReuseArgs& a) {
  const fs::path out = output_path(a.out);
  refuse_existing(out, a.force);
  const Model model = load_checkpoint(a.checkpoint);
  const Dataset ds = read_dataset(a.data);
  if (a.count < 1 || a.count > ds.size())
    throw UsageError("--count must lie in 1.." + std::to_string(ds.size()));
  std::vector<std::size_t> idx(a.count);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const int iters = a.iters > 0 ? a.iters : model.spec().iterations;
  const ReuseSummary s = activation_reuse(model, image_batch(ds, idx), iters, a.threshold);
  write_text(out, reuse_histogram_csv(s));
  ctx.out << "reuse fraction at threshold " << a.threshold << ": " << s.reuse_fraction << " over " << s.active_pairs
          << " active (image, channel) pairs\n";
  RunManifest m = start_manifest(ctx);
  m.dataset_hashes[a.data] = file_hash(a.data);
  m.checkpoint_hash = file_hash(a.checkpoint);
  m.outputs = {out.string()};
  finish_manifest(m, out);
}

struct ThoughtsArgs {
  std::string checkpoint, data, out, format = "png";
  std::size_t index = 0;
  int iters = 0;
  bool force = false;
};

void cmd_thoughts(const Context& ctx, const ThoughtsArgs& a) {
  const fs::path out = output_path(a.out);
  if (!a.force && fs::exists(out) && !fs::is_empty(out))
    throw UsageError("refusing to write into non-empty " + out.string() + " (pass --force)");
  const Model model = load_checkpoint(a.checkpoint);
  const Dataset ds = read_dataset(a.data);
  if (a.index >= ds.size()) throw UsageError("--index must be below " + std::to_string(ds.size()));
  const int iters = a.iters > 0 ? a.iters : model.spec().iterations;
  const auto files = render_thoughts(model, ds.samples[a.index], iters, out,
                                     a.format == "ppm" ? ImageFormat::ppm : ImageFormat::png);
  ctx.out << "wrote " << files.size() << " images to " << out.string() << "\n";
  RunManifest m = start_manifest(ctx);
  m.dataset_hashes[a.data] = file_hash(a.data);
  m.checkpoint_hash = file_hash(a.checkpoint);
  for (const auto& f : files) m.outputs.push_back(f.string());
  finish_manifest(m, out);
}

// ---- ingest ----

struct IngestArgs {
  std::string input, format = "cifar_binary", out;
  bool force = false;
};

void cmd_ingest(const Context& ctx, const IngestArgs& a) {
  const fs::path out = output_path(a.out);
  refuse_existing(out, a.force);
  const ClassificationSet set = read_cifar_binary(a.input);
  ensure_parent(out);
  write_file_bytes(out, encode_cifar_binary(set));
  std::map<int, std::size_t> labels;
  for (auto l : set.labels) ++labels[l];
  ctx.out << "ingested " << set.size() << " records;";
  for (const auto& [label, n] : labels) ctx.out << " " << label << ":" << n;
  ctx.out << "\n";
  RunManifest m = start_manifest(ctx);
  m.dataset_hashes[a.input] = file_hash(a.input);
  m.dataset_hashes[out.string()] = file_hash(out);
  m.outputs = {out.string()};
  finish_manifest(m, out);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Weight-tied recurrent networks for maze solving"};
  app.require_subcommand(1);
  // --threads may follow the subcommand
  app.fallthrough();
  unsigned threads = 1;
  app.add_option("--threads", threads, "Worker threads for generation and evaluation (0 = all cores)");

  const auto rule_names = std::vector<std::string>{"baseline", "n_plus_2", "agreement", "max_confidence"};

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Build maze datasets");
  g->add_option("--size", gen.size, "small, medium, large or custom:<n>")->required();
  g->add_option("--count", gen.count, "Write a single file with this many mazes");
  g->add_option("--seed", gen.seed, "Seed of the first maze");
  g->add_option("--out", gen.out, "Output directory (presets) or file (--count)")->required();
  g->add_flag("--force", gen.force, "Overwrite existing outputs");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model from a config file");
  t->add_option("--config", tr.config, "key=value training config")->required()->check(CLI::ExistingFile);
  t->add_option("--data", tr.data, "Training dataset (.dtmz or CIFAR binary)")->required()->check(CLI::ExistingFile);
  t->add_option("--out", tr.out, "Checkpoint path")->required();
  t->add_flag("--force", tr.force, "Overwrite existing outputs");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score a checkpoint under one exit rule");
  e->add_option("--checkpoint", ev.checkpoint)->required()->check(CLI::ExistingFile);
  e->add_option("--data", ev.data)->required()->check(CLI::ExistingFile);
  e->add_option("--rule", ev.rule)->required()->check(CLI::IsMember(rule_names));
  e->add_option("--budget", ev.budget, "Iteration budget (default: trained iterations)");
  e->add_option("--train-iters", ev.train_iters, "Override the trained iteration count");
  e->add_option("--out", ev.out, "CSV report; the exit histogram goes next to it")->required();
  e->add_flag("--force", ev.force);

  SweepArgs sw;
  auto* s = app.add_subcommand("sweep", "Accuracy over datasets x exit rules x budgets");
  s->add_option("--checkpoint", sw.checkpoint)->required()->check(CLI::ExistingFile);
  s->add_option("--data", sw.data, "Dataset path or name=path, repeatable")->required();
  s->add_option("--budgets", sw.budgets, "Budget list such as 1-30 or 4,6,8");
  s->add_option("--rules", sw.rules, "Subset of rules (default: all)")->check(CLI::IsMember(rule_names));
  s->add_option("--train-iters", sw.train_iters);
  s->add_option("--out", sw.out)->required();
  s->add_flag("--force", sw.force);

  auto* an = app.add_subcommand("analyze", "Filter reuse and thought renderings");
  an->require_subcommand(1);
  ReuseArgs ru;
  auto* r = an->add_subcommand("reuse", "Relative channel activity across iterations");
  r->add_option("--checkpoint", ru.checkpoint)->required()->check(CLI::ExistingFile);
  r->add_option("--data", ru.data)->required()->check(CLI::ExistingFile);
  r->add_option("--count", ru.count, "Number of leading samples to analyze");
  r->add_option("--iters", ru.iters);
  r->add_option("--threshold", ru.threshold)->check(CLI::Range(0.0, 1.0));
  r->add_option("--out", ru.out, "Histogram CSV")->required();
  r->add_flag("--force", ru.force);
  ThoughtsArgs th;
  auto* h = an->add_subcommand("thoughts", "Per-iteration confidence heatmaps for one maze");
  h->add_option("--checkpoint", th.checkpoint)->required()->check(CLI::ExistingFile);
  h->add_option("--data", th.data)->required()->check(CLI::ExistingFile);
  h->add_option("--index", th.index);
  h->add_option("--iters", th.iters);
  h->add_option("--format", th.format)->check(CLI::IsMember({"png", "ppm"}));
  h->add_option("--out", th.out, "Output directory")->required();
  h->add_flag("--force", th.force);

  IngestArgs in;
  auto* ig = app.add_subcommand("ingest", "Import classification records");
  ig->add_option("--input", in.input)->required()->check(CLI::ExistingFile);
  ig->add_option("--format", in.format)->check(CLI::IsMember({"cifar_binary"}));
  ig->add_option("--out", in.out, "Re-serialized records")->required();
  ig->add_flag("--force", in.force);

  std::string replay_path;
  bool replay_force = false;
  auto* rp = app.add_subcommand("replay", "Re-run the command recorded in a run manifest");
  rp->add_option("manifest", replay_path)->required()->check(CLI::ExistingFile);
  rp->add_flag("--force", replay_force, "Overwrite the recorded outputs");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex, out, err);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex, out, err);
    return kUsage;
  }

  const Context ctx{args, threads, out};
  try {
    if (g->parsed()) cmd_generate(ctx, gen);
    else if (t->parsed()) cmd_train(ctx, tr);
    else if (e->parsed()) cmd_eval(ctx, ev);
    else if (s->parsed()) cmd_sweep(ctx, sw);
    else if (r->parsed()) cmd_reuse(ctx, ru);
    else if (h->parsed()) cmd_thoughts(ctx, th);
    else if (ig->parsed()) cmd_ingest(ctx, in);
    else if (rp->parsed()) {
      std::vector<std::string> again = read_manifest(replay_path).command_line;
      if (again.empty() || again.front() == "replay") throw UsageError("manifest holds no replayable command");
      if (replay_force && std::find(again.begin(), again.end(), "--force") == again.end()) again.push_back("--force");
      return run(again, out, err);
    }
    return kOk;
  } catch (const UsageError& ex) {
    err << "error: " << ex.what() << "\n";
    return kUsage;
  } catch (const NumericError& ex) {
    err << "numeric error: " << ex.what() << "\n";
    return kNumericError;
  } catch (const DataError& ex) {
    err << "data error: " << ex.what() << "\n";
    return kDataError;
  } catch (const ShapeError& ex) {
    err << "data error: " << ex.what() << "\n";
    return kDataError;
  } catch (const std::filesystem::filesystem_error& ex) {
    err << "data error: " << ex.what() << "\n";
    return kDataError;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kDataError;
  }
}

}  // namespace recurnet::cli
