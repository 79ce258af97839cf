#include "recurnet/model.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "recurnet/errors.hpp"
#include "recurnet/rng.hpp"

namespace recurnet {

namespace {

constexpr int kMazeHead1 = 32;
constexpr int kMazeHead2 = 8;
constexpr int kConvnetStem1 = 32;
constexpr int kConvnetHead = 128;

std::size_t sz(int v) { return static_cast<std::size_t>(v); }

ConvLayer make_conv(int in, int out, Conv2dParams params, bool with_bias) {
  ConvLayer c;
  c.weight = TensorF({sz(out), sz(in), 3, 3}, true);
  if (with_bias) c.bias = TensorF({sz(out)}, true);
  c.params = params;
  return c;
}

LinearLayer make_linear(int in, int out) {
  return LinearLayer{TensorF({sz(in), sz(out)}, true), TensorF({sz(out)}, true)};
}

NormLayer make_norm(int channels) {
  NormLayer n{TensorF::filled({sz(channels)}, 1.0f, true), TensorF({sz(channels)}, true),
              NormStats<float>(sz(channels))};
  return n;
}

TensorF apply(Tape<float>* tape, const ConvLayer& c, const TensorF& x) {
  return ops::conv2d(tape, x, c.weight, c.bias, c.params);
}

TensorF apply(Tape<float>* tape, const LinearLayer& l, const TensorF& x) {
  return ops::linear(tape, x, l.weight, l.bias);
}

TensorF flatten(Tape<float>* tape, const TensorF& x) {
  return ops::reshape(tape, x, {x.dim(0), x.numel() / x.dim(0)});
}

// Spatial size after the classification stems and heads; 0 if unrealizable.
int residual_feature_side(int s) {
  const int after_stem = ops::conv_output_extent(s, 3, {2, 1, 1});
  const int after_head = ops::conv_output_extent(after_stem, 3, {2, 1, 1});
  return after_head >= 4 ? (after_head - 4) / 4 + 1 : 0;
}

int convnet_feature_side(int s) {
  const int a = s - 4;  // two unpadded 3x3 convs
  if (a < 2) return 0;
  const int b = (a - 2) / 2 + 1 - 2;  // pool, unpadded conv
  if (b < 2) return 0;
  return (b - 2) / 2 + 1;
}

}  // namespace

std::string to_string(Family f) {
  switch (f) {
    case Family::mlp: return "mlp";
    case Family::convnet: return "convnet";
    case Family::residual: return "residual";
    case Family::maze_residual: return "maze_residual";
  }
  return "?";
}

std::string to_string(Mode m) { return m == Mode::recurrent ? "recurrent" : "feed_forward"; }

Family parse_family(const std::string& s) {
  if (s == "mlp") return Family::mlp;
  if (s == "convnet") return Family::convnet;
  if (s == "residual") return Family::residual;
  if (s == "maze_residual") return Family::maze_residual;
  throw DataError("unknown model family '" + s + "' (expected mlp, convnet, residual or maze_residual)");
}

Mode parse_mode(const std::string& s) {
  if (s == "recurrent") return Mode::recurrent;
  if (s == "feed_forward") return Mode::feed_forward;
  throw DataError("unknown model mode '" + s + "' (expected recurrent or feed_forward)");
}

int ModelSpec::module_layers() const {
  switch (family) {
    case Family::mlp:
    case Family::convnet: return 1;
    case Family::residual:
    case Family::maze_residual: return 4;
  }
  return 0;
}

int ModelSpec::fixed_layers() const {
  switch (family) {
    case Family::mlp: return 2;
    case Family::convnet: return 4;
    case Family::residual: return 3;
    case Family::maze_residual: return 4;
  }
  return 0;
}

std::string ModelSpec::to_text() const {
  std::ostringstream os;
  os << "family=" << to_string(family) << "\n"
     << "mode=" << to_string(mode) << "\n"
     << "width=" << width << "\n"
     << "iterations=" << iterations << "\n"
     << "per_iteration_bn=" << (per_iteration_bn ? 1 : 0) << "\n"
     << "dilation=" << dilation << "\n"
     << "in_channels=" << in_channels << "\n"
     << "input_size=" << input_size << "\n"
     << "num_classes=" << num_classes << "\n";
  return os.str();
}

ModelSpec ModelSpec::from_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("model spec line without '=': " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  ModelSpec s;
  auto take_int = [&](const char* key, int& out) {
    auto it = kv.find(key);
    if (it == kv.end()) throw DataError(std::string("model spec lacks key ") + key);
    out = std::stoi(it->second);
    kv.erase(it);
  };
  auto it = kv.find("family");
  if (it == kv.end()) throw DataError("model spec lacks key family");
  s.family = parse_family(it->second);
  kv.erase(it);
  it = kv.find("mode");
  if (it == kv.end()) throw DataError("model spec lacks key mode");
  s.mode = parse_mode(it->second);
  kv.erase(it);
  int bn = 0;
  take_int("width", s.width);
  take_int("iterations", s.iterations);
  take_int("per_iteration_bn", bn);
  take_int("dilation", s.dilation);
  take_int("in_channels", s.in_channels);
  take_int("input_size", s.input_size);
  take_int("num_classes", s.num_classes);
  s.per_iteration_bn = bn != 0;
  if (!kv.empty()) throw DataError("unknown model spec key " + kv.begin()->first);
  return s;
}

int effective_depth(int fixed_layers, int module_layers, int iterations) {
  return fixed_layers + iterations * module_layers;
}

int effective_depth(const ModelSpec& spec) {
  return effective_depth(spec.fixed_layers(), spec.module_layers(), spec.iterations);
}

void validate_spec(const ModelSpec& s) {
  auto fail = [&](const std::string& why) {
    throw ShapeError("unsupported " + to_string(s.family) + " spec (width " + std::to_string(s.width) + "): " + why);
  };
  if (s.width < 1) fail("width must be positive");
  if (s.iterations < 1) fail("iterations must be positive");
  if (s.dilation < 1) fail("dilation must be positive");
  if (s.in_channels < 1) fail("input channels must be positive");
  switch (s.family) {
    case Family::mlp:
      if (s.per_iteration_bn) fail("batch normalization needs convolutional feature maps");
      if (s.dilation != 1) fail("dilation applies to convolutional families only");
      if (s.input_size < 1 || s.num_classes < 1) fail("input size and class count must be positive");
      break;
    case Family::convnet:
      if (s.num_classes < 1) fail("class count must be positive");
      if (convnet_feature_side(s.input_size) < 1) fail("input size " + std::to_string(s.input_size) + " too small");
      break;
    case Family::residual:
      if (s.num_classes < 1) fail("class count must be positive");
      if (residual_feature_side(s.input_size) < 1) fail("input size " + std::to_string(s.input_size) + " too small");
      break;
    case Family::maze_residual:
      if (s.in_channels != 3) fail("maze nets take RGB images");
      break;
  }
}

ModelSpec mlp_spec(int width, int iterations, Mode mode, int num_classes) {
  ModelSpec s;
  s.family = Family::mlp;
  s.mode = mode;
  s.width = width;
  s.iterations = iterations;
  s.num_classes = num_classes;
  return s;
}

ModelSpec convnet_spec(int iterations, Mode mode, int num_classes) {
  ModelSpec s;
  s.family = Family::convnet;
  s.mode = mode;
  s.width = 64;
  s.iterations = iterations;
  s.num_classes = num_classes;
  return s;
}

ModelSpec residual_spec(int iterations, Mode mode, int num_classes) {
  ModelSpec s;
  s.family = Family::residual;
  s.mode = mode;
  s.width = 512;
  s.iterations = iterations;
  s.num_classes = num_classes;
  return s;
}

ModelSpec maze_spec(int width, int iterations, Mode mode) {
  ModelSpec s;
  s.family = Family::maze_residual;
  s.mode = mode;
  s.width = width;
  s.iterations = iterations;
  return s;
}

Model::Model(ModelSpec spec) : spec_(spec) {
  validate_spec(spec_);
  const int w = spec_.width;
  const int d = spec_.dilation;
  const Conv2dParams same{1, d, d};
  const std::size_t copies = spec_.mode == Mode::recurrent ? 1 : sz(spec_.iterations);
  module_copies_.resize(copies);

  switch (spec_.family) {
    case Family::mlp: {
      stem_linears_.push_back(make_linear(spec_.in_channels * spec_.input_size * spec_.input_size, w));
      for (auto& m : module_copies_) m.linears.push_back(make_linear(w, w));
      head_linears_.push_back(make_linear(w, spec_.num_classes));
      break;
    }
    case Family::convnet: {
      stem_convs_.push_back(make_conv(spec_.in_channels, kConvnetStem1, {1, 0, 1}, true));
      stem_convs_.push_back(make_conv(kConvnetStem1, w, {1, 0, 1}, true));
      for (auto& m : module_copies_) m.convs.push_back(make_conv(w, w, same, true));
      head_convs_.push_back(make_conv(w, kConvnetHead, {1, 0, 1}, true));
      const int side = convnet_feature_side(spec_.input_size);
      head_linears_.push_back(make_linear(kConvnetHead * side * side, spec_.num_classes));
      break;
    }
    case Family::residual: {
      stem_convs_.push_back(make_conv(spec_.in_channels, w, {2, 1, 1}, false));
      for (auto& m : module_copies_)
        for (int j = 0; j < 4; ++j) m.convs.push_back(make_conv(w, w, same, false));
      head_convs_.push_back(make_conv(w, w, {2, 1, 1}, false));
      const int side = residual_feature_side(spec_.input_size);
      head_linears_.push_back(make_linear(w * side * side, spec_.num_classes));
      break;
    }
    case Family::maze_residual: {
      // Dilation applies inside the module only: fully dilated 3x3 stacks
      // never mix pixels of different coordinate parity, so cells would not
      // see the wall openings next to them.
      const Conv2dParams plain{1, 1, 1};
      stem_convs_.push_back(make_conv(3, w, plain, false));
      for (auto& m : module_copies_)
        for (int j = 0; j < 4; ++j) m.convs.push_back(make_conv(w, w, same, false));
      head_convs_.push_back(make_conv(w, kMazeHead1, plain, false));
      head_convs_.push_back(make_conv(kMazeHead1, kMazeHead2, plain, false));
      head_convs_.push_back(make_conv(kMazeHead2, 2, plain, false));
      break;
    }
  }
  if (spec_.per_iteration_bn) {
    norms_.resize(sz(spec_.iterations));
    for (auto& per_iter : norms_)
      for (int j = 0; j < spec_.module_layers(); ++j) per_iter.push_back(make_norm(w));
  }
}

std::vector<TensorF> Model::parameters() const {
  std::vector<TensorF> out;
  auto conv = [&](const ConvLayer& c) {
    out.push_back(c.weight);
    if (c.bias.defined()) out.push_back(c.bias);
  };
  auto lin = [&](const LinearLayer& l) {
    out.push_back(l.weight);
    out.push_back(l.bias);
  };
  for (const auto& c : stem_convs_) conv(c);
  for (const auto& l : stem_linears_) lin(l);
  for (const auto& m : module_copies_) {
    for (const auto& c : m.convs) conv(c);
    for (const auto& l : m.linears) lin(l);
  }
  for (const auto& per_iter : norms_)
    for (const auto& n : per_iter) {
      out.push_back(n.gamma);
      out.push_back(n.beta);
    }
  for (const auto& c : head_convs_) conv(c);
  for (const auto& l : head_linears_) lin(l);
  return out;
}

std::vector<TensorF> Model::state_tensors() const {
  std::vector<TensorF> out = parameters();
  for (const auto& per_iter : norms_)
    for (const auto& n : per_iter) {
      const auto c = n.stats.channels();
      out.emplace_back(Shape{c}, n.stats.running_mean);
      out.emplace_back(Shape{c}, n.stats.running_var);
      out.push_back(TensorF::filled({1}, n.stats.populated ? 1.0f : 0.0f));
    }
  return out;
}

void Model::load_state_tensors(const std::vector<TensorF>& tensors) {
  std::vector<TensorF> params = parameters();
  const std::size_t stats_count = 3 * norms_.size() * (norms_.empty() ? 0 : norms_.front().size());
  if (tensors.size() != params.size() + stats_count)
    throw DataError("state has " + std::to_string(tensors.size()) + " tensors, model expects " +
                    std::to_string(params.size() + stats_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (tensors[i].shape() != params[i].shape())
      throw DataError("state tensor " + std::to_string(i) + " has shape " + shape_to_string(tensors[i].shape()) +
                      ", model expects " + shape_to_string(params[i].shape()));
    params[i].value() = tensors[i].value();
  }
  std::size_t k = params.size();
  for (auto& per_iter : norms_)
    for (auto& n : per_iter) {
      const auto c = static_cast<Eigen::Index>(n.stats.channels());
      if (tensors[k].value().size() != c || tensors[k + 1].value().size() != c || tensors[k + 2].numel() != 1)
        throw DataError("normalization statistics tensor " + std::to_string(k) + " has the wrong size");
      n.stats.running_mean = tensors[k].value();
      n.stats.running_var = tensors[k + 1].value();
      n.stats.populated = tensors[k + 2][0] != 0.0f;
      k += 3;
    }
}

void Model::check_input(const TensorF& x) const {
  if (x.rank() != 4 || x.dim(1) != sz(spec_.in_channels))
    throw ShapeError("model expects N x " + std::to_string(spec_.in_channels) + " x H x W input, got " +
                     shape_to_string(x.shape()));
  if (spec_.family != Family::maze_residual &&
      (x.dim(2) != sz(spec_.input_size) || x.dim(3) != sz(spec_.input_size)))
    throw ShapeError(to_string(spec_.family) + " model expects " + std::to_string(spec_.input_size) + "x" +
                     std::to_string(spec_.input_size) + " inputs, got " + shape_to_string(x.shape()));
}

TensorF Model::stem(Tape<float>* tape, const TensorF& x) const {
  TensorF h = x;
  if (spec_.family == Family::mlp) h = flatten(tape, h);
  for (const auto& c : stem_convs_) h = ops::relu(tape, apply(tape, c, h));
  for (const auto& l : stem_linears_) h = ops::relu(tape, apply(tape, l, h));
  return h;
}

TensorF Model::module_step(Tape<float>* tape, const TensorF& x, int iteration, NormMode mode) const {
  const InternalModule& m = module_copies_[spec_.mode == Mode::recurrent ? 0 : sz(iteration)];
  std::vector<NormLayer>* norms = nullptr;
  if (!norms_.empty()) norms = &norms_[std::min(sz(iteration), norms_.size() - 1)];
  auto conv = [&](std::size_t j, const TensorF& in) {
    TensorF y = apply(tape, m.convs[j], in);
    if (norms) {
      NormLayer& n = (*norms)[j];
      y = ops::batch_norm(tape, y, n.stats, n.gamma, n.beta, mode);
    }
    return y;
  };
  switch (spec_.family) {
    case Family::mlp: return ops::relu(tape, apply(tape, m.linears[0], x));
    case Family::convnet: return ops::relu(tape, conv(0, x));
    case Family::residual:
    case Family::maze_residual: {
      TensorF h = x;
      for (std::size_t block = 0; block < 2; ++block) {
        TensorF inner = ops::relu(tape, conv(2 * block, h));
        h = ops::relu(tape, ops::add(tape, conv(2 * block + 1, inner), h));
      }
      return h;
    }
  }
  return x;
}

TensorF Model::head(Tape<float>* tape, const TensorF& x) const {
  TensorF h = x;
  switch (spec_.family) {
    case Family::mlp: return apply(tape, head_linears_[0], h);
    case Family::convnet:
      h = ops::pool2d(tape, h, PoolKind::max, 2, 2);
      h = ops::relu(tape, apply(tape, head_convs_[0], h));
      h = ops::pool2d(tape, h, PoolKind::max, 2, 2);
      return apply(tape, head_linears_[0], flatten(tape, h));
    case Family::residual:
      h = ops::relu(tape, apply(tape, head_convs_[0], h));
      h = ops::pool2d(tape, h, PoolKind::avg, 4, 4);
      return apply(tape, head_linears_[0], flatten(tape, h));
    case Family::maze_residual:
      h = ops::relu(tape, apply(tape, head_convs_[0], h));
      h = ops::relu(tape, apply(tape, head_convs_[1], h));
      return apply(tape, head_convs_[2], h);
  }
  return h;
}

TensorF Model::forward(Tape<float>* tape, const TensorF& input, NormMode mode) {
  check_input(input);
  TensorF h = stem(tape, input);
  for (int t = 0; t < spec_.iterations; ++t) h = module_step(tape, h, t, mode);
  return head(tape, h);
}

std::vector<TensorF> Model::forward_states(const TensorF& input, int n_iters) const {
  if (n_iters < 1) throw ShapeError("iteration count must be positive");
  if (spec_.mode == Mode::feed_forward && n_iters > spec_.iterations)
    throw ShapeError("feed-forward model has " + std::to_string(spec_.iterations) + " module copies, asked for " +
                     std::to_string(n_iters) + " iterations");
  check_input(input);
  std::vector<TensorF> states;
  TensorF h = stem(nullptr, input);
  for (int t = 0; t < n_iters; ++t) {
    h = module_step(nullptr, h, t, NormMode::eval);
    states.push_back(h);
  }
  return states;
}

std::vector<TensorF> Model::forward_iterations(const TensorF& input, int n_test) const {
  if (n_test < 1) throw ShapeError("iteration count must be positive");
  if (spec_.mode == Mode::feed_forward && n_test != spec_.iterations)
    throw ShapeError("feed-forward model runs exactly " + std::to_string(spec_.iterations) + " iterations, asked for " +
                     std::to_string(n_test));
  check_input(input);
  std::vector<TensorF> outputs;
  TensorF h = stem(nullptr, input);
  for (int t = 0; t < n_test; ++t) {
    h = module_step(nullptr, h, t, NormMode::eval);
    if (spec_.mode == Mode::recurrent || t + 1 == n_test) outputs.push_back(head(nullptr, h));
  }
  return outputs;
}

Model build_model(const ModelSpec& spec, std::uint64_t seed) {
  Model m(spec);
  SplitMix64 rng(seed);
  auto init = [&](TensorF& w, std::size_t fan_in) {
    const double bound = std::sqrt(kInitScale / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < w.numel(); ++i) w[i] = static_cast<float>((2.0 * rng.unit() - 1.0) * bound);
  };
  auto conv = [&](ConvLayer& c) { init(c.weight, c.weight.dim(1) * c.weight.dim(2) * c.weight.dim(3)); };
  auto lin = [&](LinearLayer& l) { init(l.weight, l.weight.dim(0)); };
  for (auto& c : m.stem_convs_) conv(c);
  for (auto& l : m.stem_linears_) lin(l);
  for (auto& mod : m.module_copies_) {
    for (auto& c : mod.convs) conv(c);
    for (auto& l : mod.linears) lin(l);
  }
  for (auto& c : m.head_convs_) conv(c);
  for (auto& l : m.head_linears_) lin(l);
  return m;
}

std::size_t count_parameters(const Model& model) {
  std::size_t total = 0;
  for (const auto& p : model.parameters()) total += p.numel();
  return total;
}

}  // namespace recurnet
