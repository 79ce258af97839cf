#include "recurnet/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "recurnet/binary_io.hpp"
#include "recurnet/checkpoint.hpp"
#include "recurnet/errors.hpp"
#include "recurnet/evaluator.hpp"
#include "recurnet/rng.hpp"

namespace recurnet {

std::string to_string(LossKind k) {
  return k == LossKind::per_pixel_xent ? "per_pixel_xent" : "classification_xent";
}

LossKind parse_loss(const std::string& s) {
  if (s == "per_pixel_xent") return LossKind::per_pixel_xent;
  if (s == "classification_xent") return LossKind::classification_xent;
  throw DataError("unknown loss '" + s + "' (expected per_pixel_xent or classification_xent)");
}

std::vector<int> TrainConfig::effective_milestones() const {
  if (milestones) return *milestones;
  if (optimizer.kind == OptimizerKind::adam) return {};
  std::vector<int> m;
  for (int e : {epochs / 2, epochs * 3 / 4})
    if (e > 0 && (m.empty() || e > m.back())) m.push_back(e);
  return m;
}

double TrainConfig::learning_rate_at(int epoch) const {
  double lr = learning_rate;
  for (int m : effective_milestones())
    if (epoch >= m) lr *= lr_decay;
  return lr;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw DataError("config key " + key + ": '" + v + "' is not a number");
  return out;
}

long long parse_integer(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw DataError("config key " + key + ": '" + v + "' is not an integer");
  return out;
}

std::uint64_t parse_seed(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  std::uint64_t out = 0;
  try {
    if (!v.empty() && v[0] != '-') out = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw DataError("config key " + key + ": '" + v + "' is not a seed");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw DataError("config key " + key + ": '" + v + "' is not a boolean");
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string TrainConfig::to_text() const {
  std::ostringstream os;
  os << "optimizer=" << to_string(optimizer.kind) << "\n"
     << "learning_rate=" << format_double(learning_rate) << "\n"
     << "momentum=" << format_double(optimizer.momentum) << "\n"
     << "beta1=" << format_double(optimizer.beta1) << "\n"
     << "beta2=" << format_double(optimizer.beta2) << "\n"
     << "epsilon=" << format_double(optimizer.epsilon) << "\n"
     << "batch_size=" << batch_size << "\n"
     << "epochs=" << epochs << "\n"
     << "lr_decay=" << format_double(lr_decay) << "\n";
  if (milestones) {
    os << "milestones=";
    for (std::size_t i = 0; i < milestones->size(); ++i) os << (i ? "," : "") << (*milestones)[i];
    os << "\n";
  }
  os << "grad_clip=" << format_double(grad_clip) << "\n"
     << "seed=" << seed << "\n"
     << "loss=" << to_string(loss) << "\n";
  std::istringstream spec(model.to_text());
  std::string line;
  while (std::getline(spec, line))
    if (!line.empty()) os << "model." << line << "\n";
  os << "model.seed=" << model_seed << "\n";
  return os.str();
}

TrainConfig TrainConfig::from_text(const std::string& text) {
  TrainConfig c;
  std::istringstream is(text);
  std::string raw;
  std::map<std::string, int> seen;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("config line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string v = trim(line.substr(eq + 1));
    if (seen.count(key))
      throw DataError("config line " + std::to_string(line_no) + ": key " + key + " repeats line " +
                      std::to_string(seen[key]));
    seen[key] = line_no;
    auto as_int = [&] { return static_cast<int>(parse_integer(key, v)); };
    if (key == "optimizer") c.optimizer.kind = parse_optimizer(v);
    else if (key == "learning_rate") c.learning_rate = parse_double(key, v);
    else if (key == "momentum") c.optimizer.momentum = parse_double(key, v);
    else if (key == "beta1") c.optimizer.beta1 = parse_double(key, v);
    else if (key == "beta2") c.optimizer.beta2 = parse_double(key, v);
    else if (key == "epsilon") c.optimizer.epsilon = parse_double(key, v);
    else if (key == "batch_size") c.batch_size = as_int();
    else if (key == "epochs") c.epochs = as_int();
    else if (key == "lr_decay") c.lr_decay = parse_double(key, v);
    else if (key == "milestones") {
      std::vector<int> m;
      std::istringstream parts(v);
      std::string item;
      while (std::getline(parts, item, ',')) {
        item = trim(item);
        if (!item.empty()) m.push_back(static_cast<int>(parse_integer(key, item)));
      }
      c.milestones = m;
    } else if (key == "grad_clip") c.grad_clip = parse_double(key, v);
    else if (key == "seed") c.seed = parse_seed(key, v);
    else if (key == "loss") c.loss = parse_loss(v);
    else if (key == "model.family") c.model.family = parse_family(v);
    else if (key == "model.mode") c.model.mode = parse_mode(v);
    else if (key == "model.width") c.model.width = as_int();
    else if (key == "model.iterations") c.model.iterations = as_int();
    else if (key == "model.per_iteration_bn") c.model.per_iteration_bn = parse_bool(key, v);
    else if (key == "model.dilation") c.model.dilation = as_int();
    else if (key == "model.in_channels") c.model.in_channels = as_int();
    else if (key == "model.input_size") c.model.input_size = as_int();
    else if (key == "model.num_classes") c.model.num_classes = as_int();
    else if (key == "model.seed") c.model_seed = parse_seed(key, v);
    else throw DataError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  validate_config(c);
  return c;
}

void validate_config(const TrainConfig& c) {
  auto fail = [](const std::string& why) { throw DataError("invalid training config: " + why); };
  if (!(c.learning_rate > 0.0)) fail("learning_rate must be positive");
  if (!(c.lr_decay > 0.0)) fail("lr_decay must be positive");
  if (c.optimizer.momentum < 0.0 || c.optimizer.momentum >= 1.0) fail("momentum must lie in [0, 1)");
  if (!(c.optimizer.beta1 >= 0.0 && c.optimizer.beta1 < 1.0)) fail("beta1 must lie in [0, 1)");
  if (!(c.optimizer.beta2 >= 0.0 && c.optimizer.beta2 < 1.0)) fail("beta2 must lie in [0, 1)");
  if (!(c.optimizer.epsilon > 0.0)) fail("epsilon must be positive");
  if (c.batch_size < 1) fail("batch_size must be positive");
  if (c.epochs < 0) fail("epochs must be nonnegative");
  if (c.grad_clip < 0.0) fail("grad_clip must be nonnegative");
  if (c.milestones) {
    for (std::size_t i = 0; i < c.milestones->size(); ++i) {
      if ((*c.milestones)[i] < 1) fail("milestones must be positive");
      if (i > 0 && (*c.milestones)[i] <= (*c.milestones)[i - 1]) fail("milestones must be strictly increasing");
    }
  }
  try {
    validate_spec(c.model);
  } catch (const ShapeError& e) {
    fail(e.what());
  }
  const bool maze = c.model.family == Family::maze_residual;
  if (maze != (c.loss == LossKind::per_pixel_xent))
    fail("loss " + to_string(c.loss) + " does not fit a " + to_string(c.model.family) + " model");
}

TrainConfig default_train_config(const ModelSpec& model, int epochs) {
  TrainConfig c;
  c.model = model;
  c.epochs = epochs;
  c.loss = model.family == Family::maze_residual ? LossKind::per_pixel_xent : LossKind::classification_xent;
  if (model.iterations <= 10) {
    c.optimizer.kind = OptimizerKind::sgd;
    c.learning_rate = 0.1;
  } else {
    c.optimizer.kind = OptimizerKind::adam;
    c.learning_rate = 1e-3;
  }
  return c;
}

TrainConfig read_train_config(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return TrainConfig::from_text(std::string(bytes.begin(), bytes.end()));
}

std::vector<std::size_t> shuffled_indices(std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  SplitMix64 rng(seed);
  for (std::size_t i = count; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  return idx;
}

double maze_accuracy(const Model& model, const Dataset& ds, unsigned threads) {
  const int n = model.spec().iterations;
  return evaluate(model, ds, {ExitKind::baseline, n, n}, threads).accuracy;
}

double classification_accuracy(const Model& model, const ClassificationSet& ds) {
  constexpr std::size_t kChunk = 100;
  std::size_t right = 0;
  for (std::size_t start = 0; start < ds.size(); start += kChunk) {
    std::vector<std::size_t> idx(std::min(kChunk, ds.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    const TensorF logits = model.forward_iterations(image_batch(ds, idx), model.spec().iterations).back();
    const std::size_t classes = logits.dim(1);
    for (std::size_t b = 0; b < idx.size(); ++b) {
      const float* row = logits.data() + b * classes;
      const auto best = static_cast<std::size_t>(std::max_element(row, row + classes) - row);
      right += best == ds.labels[idx[b]];
    }
  }
  return ds.size() ? static_cast<double>(right) / static_cast<double>(ds.size()) : 0.0;
}

namespace {

struct MazeSource {
  const Dataset& ds;
  std::size_t size() const { return ds.size(); }
  TensorF images(std::span<const std::size_t> idx) const { return image_batch(ds, idx); }
  std::vector<std::int32_t> targets(std::span<const std::size_t> idx) const { return target_batch(ds, idx); }
  // Number of samples whose every pixel is classified correctly.
  std::size_t correct(const TensorF& logits, const std::vector<std::int32_t>& t) const {
    const std::size_t n = logits.dim(0), pixels = logits.dim(2) * logits.dim(3);
    std::size_t right = 0;
    for (std::size_t b = 0; b < n; ++b) {
      const float* zero = logits.data() + b * 2 * pixels;
      const float* one = zero + pixels;
      bool ok = true;
      for (std::size_t p = 0; p < pixels && ok; ++p) ok = (one[p] > zero[p] ? 1 : 0) == t[b * pixels + p];
      right += ok;
    }
    return right;
  }
  double final_accuracy(const Model& m, unsigned threads) const { return maze_accuracy(m, ds, threads); }
};

struct ClassSource {
  const ClassificationSet& ds;
  std::size_t size() const { return ds.size(); }
  TensorF images(std::span<const std::size_t> idx) const { return image_batch(ds, idx); }
  std::vector<std::int32_t> targets(std::span<const std::size_t> idx) const { return label_batch(ds, idx); }
  std::size_t correct(const TensorF& logits, const std::vector<std::int32_t>& t) const {
    const std::size_t classes = logits.dim(1);
    std::size_t right = 0;
    for (std::size_t b = 0; b < logits.dim(0); ++b) {
      const float* row = logits.data() + b * classes;
      right += static_cast<std::int32_t>(std::max_element(row, row + classes) - row) == t[b];
    }
    return right;
  }
  double final_accuracy(const Model& m, unsigned) const { return classification_accuracy(m, ds); }
};

std::vector<TensorF> snapshot(const Model& model) {
  std::vector<TensorF> s;
  for (const TensorF& t : model.state_tensors()) s.push_back(t.clone());
  return s;
}

void clip_gradients(const std::vector<TensorF>& params, double max_norm) {
  double sq = 0.0;
  for (const TensorF& p : params) sq += static_cast<double>(p.grad().squaredNorm());
  const double norm = std::sqrt(sq);
  if (!(norm > max_norm)) return;
  const float scale = static_cast<float>(max_norm / norm);
  for (TensorF p : params) p.grad() *= scale;
}

template <typename Source>
TrainReport train_impl(Model& model, const Source& src, const TrainConfig& config, const TrainOptions& options) {
  validate_config(config);
  if (model.spec() != config.model)
    throw DataError("model does not match the config's model section");
  if (src.size() == 0) throw DataError("cannot train on an empty dataset");
  TrainReport report;
  report.checkpoint = options.checkpoint;
  const std::vector<TensorF> params = model.parameters();
  Optimizer opt(params, config.optimizer);
  std::vector<TensorF> last_good = snapshot(model);
  SplitMix64 order_rng(config.seed);
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = config.learning_rate_at(epoch);
    const std::vector<std::size_t> order = shuffled_indices(src.size(), order_rng());
    double loss_sum = 0.0;
    std::size_t right = 0;
    try {
      for (std::size_t start = 0; start < order.size(); start += batch) {
        const std::span<const std::size_t> idx(order.data() + start, std::min(batch, order.size() - start));
        const TensorF x = src.images(idx);
        const std::vector<std::int32_t> t = src.targets(idx);
        Tape<float> tape;
        const TensorF logits = model.forward(&tape, x, NormMode::train);
        const TensorF loss = ops::softmax_cross_entropy(&tape, logits, std::span<const std::int32_t>(t), 1);
        const double lv = static_cast<double>(loss.item());
        if (!std::isfinite(lv))
          throw NumericError("loss became " + std::to_string(lv) + " at epoch " + std::to_string(epoch));
        loss_sum += lv * static_cast<double>(idx.size());
        right += src.correct(logits, t);
        tape.backward(loss);
        if (config.grad_clip > 0.0) clip_gradients(params, config.grad_clip);
        opt.step(lr);
        ++report.steps;
      }
    } catch (const NumericError& e) {
      model.load_state_tensors(last_good);
      std::string where;
      if (!options.checkpoint.empty()) {
        save_checkpoint(model, options.checkpoint);
        where = "; parameters from the start of epoch " + std::to_string(epoch) + " saved to " +
                options.checkpoint.string();
      }
      throw NumericError(std::string("training diverged: ") + e.what() + where);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.epoch_loss.push_back(loss_sum / static_cast<double>(src.size()));
    report.epoch_accuracy.push_back(static_cast<double>(right) / static_cast<double>(src.size()));
    report.epoch_seconds.push_back(secs);
    last_good = snapshot(model);
    if (options.on_epoch) options.on_epoch({epoch, report.epoch_loss.back(), report.epoch_accuracy.back(), secs, lr});
  }
  if (options.final_eval) report.final_train_accuracy = src.final_accuracy(model, options.eval_threads);
  if (!options.checkpoint.empty()) save_checkpoint(model, options.checkpoint);
  return report;
}

}  // namespace

TrainReport train(Model& model, const Dataset& ds, const TrainConfig& config, const TrainOptions& options) {
  if (config.loss != LossKind::per_pixel_xent) throw DataError("maze data needs loss=per_pixel_xent");
  return train_impl(model, MazeSource{ds}, config, options);
}

TrainReport train(Model& model, const ClassificationSet& ds, const TrainConfig& config, const TrainOptions& options) {
  if (config.loss != LossKind::classification_xent) throw DataError("classification data needs loss=classification_xent");
  return train_impl(model, ClassSource{ds}, config, options);
}

}  // namespace recurnet
