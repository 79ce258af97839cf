#include "recurnet/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <thread>

#include "recurnet/errors.hpp"

namespace recurnet {

namespace {

struct MapView {
  const float* zero;
  const float* one;
  std::size_t pixels;
};

MapView two_class_view(const TensorF& output) {
  const bool batched = output.rank() == 4 && output.dim(0) == 1;
  if (!(output.rank() == 3 || batched) || output.dim(batched ? 1 : 0) != 2)
    throw ShapeError("expected a 2 x H x W output, got " + shape_to_string(output.shape()));
  const std::size_t pixels = output.numel() / 2;
  return {output.data(), output.data() + pixels, pixels};
}

BinaryMap argmax_map(const float* zero, const float* one, std::size_t pixels) {
  BinaryMap m(pixels);
  for (std::size_t p = 0; p < pixels; ++p) m[p] = one[p] > zero[p] ? 1 : 0;
  return m;
}

double mean_confidence(const float* zero, const float* one, std::size_t pixels) {
  double total = 0.0;
  for (std::size_t p = 0; p < pixels; ++p) {
    // max softmax probability of two classes = 1 / (1 + exp(-|a - b|))
    const double gap = std::abs(static_cast<double>(one[p]) - static_cast<double>(zero[p]));
    total += 1.0 / (1.0 + std::exp(-gap));
  }
  return total / static_cast<double>(pixels);
}

double binomial_stderr(double p, std::size_t n) {
  return n == 0 ? 0.0 : std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

}  // namespace

BinaryMap predict_map(const TensorF& output) {
  const MapView v = two_class_view(output);
  return argmax_map(v.zero, v.one, v.pixels);
}

double confidence(const TensorF& output) {
  const MapView v = two_class_view(output);
  return mean_confidence(v.zero, v.one, v.pixels);
}

Thought make_thought(const TensorF& output) {
  const MapView v = two_class_view(output);
  return {argmax_map(v.zero, v.one, v.pixels), mean_confidence(v.zero, v.one, v.pixels)};
}

std::vector<Thought> make_thoughts(const TensorF& batch_output) {
  if (batch_output.rank() != 4 || batch_output.dim(1) != 2)
    throw ShapeError("expected an N x 2 x H x W output, got " + shape_to_string(batch_output.shape()));
  const std::size_t pixels = batch_output.dim(2) * batch_output.dim(3);
  std::vector<Thought> out;
  out.reserve(batch_output.dim(0));
  for (std::size_t b = 0; b < batch_output.dim(0); ++b) {
    const float* zero = batch_output.data() + b * 2 * pixels;
    out.push_back({argmax_map(zero, zero + pixels, pixels), mean_confidence(zero, zero + pixels, pixels)});
  }
  return out;
}

std::string to_string(ExitKind k) {
  switch (k) {
    case ExitKind::baseline: return "baseline";
    case ExitKind::n_plus_2: return "n_plus_2";
    case ExitKind::agreement: return "agreement";
    case ExitKind::max_confidence: return "max_confidence";
  }
  return "?";
}

ExitKind parse_exit_kind(const std::string& s) {
  for (ExitKind k : kAllExitKinds)
    if (to_string(k) == s) return k;
  throw DataError("unknown exit rule '" + s + "' (expected baseline, n_plus_2, agreement or max_confidence)");
}

void validate_rule(const ExitRule& rule) {
  if (rule.train_iters < 1 || rule.budget < 1)
    throw ShapeError("exit rule needs positive train_iters and budget");
  if ((rule.kind == ExitKind::baseline || rule.kind == ExitKind::n_plus_2) && rule.budget < rule.train_iters)
    throw ShapeError(to_string(rule.kind) + " rule needs budget >= train_iters (" + std::to_string(rule.train_iters) +
                     "), got " + std::to_string(rule.budget));
}

ExitChoice select_exit(std::span<const Thought> thoughts, const ExitRule& rule) {
  validate_rule(rule);
  if (thoughts.size() < static_cast<std::size_t>(rule.budget))
    throw ShapeError("exit rule with budget " + std::to_string(rule.budget) + " given only " +
                     std::to_string(thoughts.size()) + " outputs");
  int chosen = rule.budget;
  switch (rule.kind) {
    case ExitKind::baseline: chosen = rule.train_iters; break;
    case ExitKind::n_plus_2: chosen = std::min(rule.train_iters + 2, rule.budget); break;
    case ExitKind::agreement:
      for (int t = 2; t <= rule.budget; ++t)
        if (thoughts[t - 1].map == thoughts[t - 2].map) {
          chosen = t;
          break;
        }
      break;
    case ExitKind::max_confidence:
      chosen = 1;
      for (int t = 2; t <= rule.budget; ++t)
        if (thoughts[t - 1].confidence > thoughts[chosen - 1].confidence) chosen = t;
      break;
  }
  return {chosen, thoughts[chosen - 1].map};
}

EvalReport evaluate_thoughts(std::span<const std::vector<Thought>> thoughts, std::span<const BinaryMap> targets,
                             const ExitRule& rule) {
  if (thoughts.size() != targets.size())
    throw ShapeError("have thoughts for " + std::to_string(thoughts.size()) + " samples but " +
                     std::to_string(targets.size()) + " targets");
  validate_rule(rule);
  EvalReport r;
  r.rule = rule;
  r.n_samples = targets.size();
  std::size_t pixels_right = 0, pixels_total = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const ExitChoice c = select_exit(thoughts[i], rule);
    if (c.map.size() != targets[i].size())
      throw ShapeError("prediction and target of sample " + std::to_string(i) + " differ in size");
    ++r.exit_histogram[c.iteration];
    if (c.map == targets[i]) ++r.solved;
    for (std::size_t p = 0; p < c.map.size(); ++p) pixels_right += c.map[p] == targets[i][p];
    pixels_total += c.map.size();
  }
  if (r.n_samples > 0) r.accuracy = static_cast<double>(r.solved) / static_cast<double>(r.n_samples);
  r.stderr_accuracy = binomial_stderr(r.accuracy, r.n_samples);
  if (pixels_total > 0) r.pixel_accuracy = static_cast<double>(pixels_right) / static_cast<double>(pixels_total);
  return r;
}

std::vector<std::vector<Thought>> compute_thoughts(const Model& model, const Dataset& ds, int n_iters,
                                                   unsigned threads) {
  if (model.spec().family != Family::maze_residual)
    throw ShapeError(to_string(model.spec().family) + " model cannot be evaluated on maze data");
  if (model.spec().mode == Mode::feed_forward && n_iters != model.spec().iterations)
    throw ShapeError("feed-forward model runs exactly " + std::to_string(model.spec().iterations) + " iterations");
  constexpr std::size_t kChunk = 50;
  const std::size_t count = ds.size();
  std::vector<std::vector<Thought>> out(count);
  const std::size_t chunks = (count + kChunk - 1) / kChunk;
  auto work = [&](std::size_t first_chunk, std::size_t stride) {
    for (std::size_t c = first_chunk; c < chunks; c += stride) {
      std::vector<std::size_t> idx(std::min(kChunk, count - c * kChunk));
      std::iota(idx.begin(), idx.end(), c * kChunk);
      const std::vector<TensorF> outputs = model.forward_iterations(image_batch(ds, idx), n_iters);
      // Feed-forward models yield only the final output; they are scored as
      // if every iteration produced it.
      for (std::size_t t = 0; t < static_cast<std::size_t>(n_iters); ++t) {
        const TensorF& o = outputs[std::min(t, outputs.size() - 1)];
        std::vector<Thought> th = make_thoughts(o);
        for (std::size_t b = 0; b < idx.size(); ++b) out[idx[b]].push_back(std::move(th[b]));
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(threads, chunks)));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }
  return out;
}

namespace {
std::vector<BinaryMap> targets_of(const Dataset& ds) {
  std::vector<BinaryMap> t;
  t.reserve(ds.size());
  for (const MazeSample& s : ds.samples) t.push_back(s.target);
  return t;
}
}  // namespace

EvalReport evaluate(const Model& model, const Dataset& ds, const ExitRule& rule, unsigned threads) {
  validate_rule(rule);
  const auto thoughts = compute_thoughts(model, ds, rule.budget, threads);
  const auto targets = targets_of(ds);
  return evaluate_thoughts(thoughts, targets, rule);
}

ExitRule sweep_rule(ExitKind kind, int train_iters, int budget) {
  return {kind, std::min(train_iters, budget), budget};
}

std::vector<SweepRow> sweep(const Model& model, std::span<const NamedDataset> datasets, std::span<const int> budgets,
                            std::span<const ExitKind> rules, int train_iters, unsigned threads) {
  if (budgets.empty()) throw ShapeError("sweep needs at least one budget");
  if (*std::min_element(budgets.begin(), budgets.end()) < 1) throw ShapeError("sweep budgets must be positive");
  const int max_budget = *std::max_element(budgets.begin(), budgets.end());
  std::vector<SweepRow> rows;
  for (const NamedDataset& nd : datasets) {
    const auto thoughts = compute_thoughts(model, *nd.data, max_budget, threads);
    const auto targets = targets_of(*nd.data);
    for (ExitKind kind : rules)
      for (int b : budgets) {
        const EvalReport r = evaluate_thoughts(thoughts, targets, sweep_rule(kind, train_iters, b));
        rows.push_back({nd.name, kind, b, r.accuracy, r.stderr_accuracy, r.n_samples});
      }
  }
  return rows;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::ostringstream os;
  os << "dataset,rule,budget,accuracy,stderr,n_samples\n";
  char buf[64];
  for (const SweepRow& r : rows) {
    os << r.dataset << ',' << to_string(r.rule) << ',' << r.budget << ',';
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,", r.accuracy, r.stderr_accuracy);
    os << buf << r.n_samples << '\n';
  }
  return os.str();
}

std::string histogram_csv(const EvalReport& report) {
  std::ostringstream os;
  os << "iteration,count\n";
  for (int t = 1; t <= report.rule.budget; ++t) {
    auto it = report.exit_histogram.find(t);
    os << t << ',' << (it == report.exit_histogram.end() ? 0 : it->second) << '\n';
  }
  return os.str();
}

}  // namespace recurnet
