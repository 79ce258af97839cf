#ifndef RECURNET_MODEL_HPP
#define RECURNET_MODEL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "recurnet/ops.hpp"
#include "recurnet/tensor.hpp"

namespace recurnet {

enum class Family { mlp, convnet, residual, maze_residual };
enum class Mode { recurrent, feed_forward };

std::string to_string(Family f);
std::string to_string(Mode m);
Family parse_family(const std::string& s);
Mode parse_mode(const std::string& s);

/// Declarative architecture description.
///
/// `width` is the hidden size (mlp) or the channel count of the internal
/// module (conv families). Classification families read `in_channels`,
/// `input_size` (square inputs) and `num_classes`; maze nets are fully
/// convolutional and accept any image size.
struct ModelSpec {
  Family family = Family::maze_residual;
  Mode mode = Mode::recurrent;
  int width = 128;
  int iterations = 1;
  bool per_iteration_bn = false;
  int dilation = 1;
  int in_channels = 3;
  int input_size = 32;
  int num_classes = 10;

  /// Layers per internal module (q).
  int module_layers() const;
  /// Layers outside the internal module (p).
  int fixed_layers() const;

  /// key=value lines; the checkpoint header and config files use this form.
  std::string to_text() const;
  static ModelSpec from_text(const std::string& text);

  bool operator==(const ModelSpec&) const = default;
};

int effective_depth(int fixed_layers, int module_layers, int iterations);
int effective_depth(const ModelSpec& spec);

/// Throws ShapeError when the family cannot be realized with these settings.
void validate_spec(const ModelSpec& spec);

/// Presets with the published layer widths.
ModelSpec mlp_spec(int width, int iterations, Mode mode, int num_classes = 10);
ModelSpec convnet_spec(int iterations, Mode mode, int num_classes = 10);
ModelSpec residual_spec(int iterations, Mode mode, int num_classes = 10);
ModelSpec maze_spec(int width, int iterations, Mode mode = Mode::recurrent);

struct ConvLayer {
  TensorF weight;  // O x I x K x K
  TensorF bias;    // O, or undefined
  Conv2dParams params;
};

struct LinearLayer {
  TensorF weight;  // F x G
  TensorF bias;    // G
};

struct NormLayer {
  TensorF gamma;
  TensorF beta;
  NormStats<float> stats;
};

/// Realized parameters of a ModelSpec.
///
/// The internal module is stored once in recurrent mode and `iterations`
/// times in feed-forward mode. Normalization layers, when enabled, are kept
/// per iteration in both modes: norms()[t][j] follows the j-th layer of the
/// module at iteration t.
class Model {
 public:
  Model() = default;
  explicit Model(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }
  std::size_t module_copies() const { return module_copies_.size(); }

  /// Trainable tensors in declaration order: stem, internal module copies,
  /// normalization affine parameters per iteration, head.
  std::vector<TensorF> parameters() const;
  /// parameters() plus running statistics, in checkpoint order.
  std::vector<TensorF> state_tensors() const;
  void load_state_tensors(const std::vector<TensorF>& tensors);

  /// Trained-depth pass returning the final output (training path).
  TensorF forward(Tape<float>* tape, const TensorF& input, NormMode mode);

  /// Eval-mode outputs after iterations 1..n_test, the shared head applied
  /// to the recurrent state each time. Feed-forward models accept only
  /// n_test == iterations and return one output.
  std::vector<TensorF> forward_iterations(const TensorF& input, int n_test) const;

  /// Eval-mode recurrent states after iterations 1..n_iters, i.e. the
  /// output of the internal module's last layer (post-activation).
  std::vector<TensorF> forward_states(const TensorF& input, int n_iters) const;

  std::vector<ConvLayer>& module_convs(std::size_t copy) { return module_copies_.at(copy).convs; }
  std::vector<std::vector<NormLayer>>& norms() { return norms_; }
  const std::vector<std::vector<NormLayer>>& norms() const { return norms_; }

 private:
  struct InternalModule {
    std::vector<ConvLayer> convs;
    std::vector<LinearLayer> linears;
  };

  TensorF stem(Tape<float>* tape, const TensorF& x) const;
  TensorF module_step(Tape<float>* tape, const TensorF& x, int iteration, NormMode mode) const;
  TensorF head(Tape<float>* tape, const TensorF& x) const;
  void check_input(const TensorF& x) const;

  ModelSpec spec_;
  std::vector<ConvLayer> stem_convs_;
  std::vector<LinearLayer> stem_linears_;
  std::vector<InternalModule> module_copies_;
  // Running statistics advance during train-mode passes.
  mutable std::vector<std::vector<NormLayer>> norms_;
  std::vector<ConvLayer> head_convs_;
  std::vector<LinearLayer> head_linears_;

  friend Model build_model(const ModelSpec& spec, std::uint64_t seed);
};

/// Numerator k of the uniform initialization bound sqrt(k / fan_in).
inline constexpr double kInitScale = 6.0;

/// Deterministic construction: every weight is drawn uniform in
/// +-sqrt(kInitScale / fan_in) from SplitMix64(seed) in declaration order
/// (stem, module copies, head); biases start at zero, gamma at one, beta at zero.
Model build_model(const ModelSpec& spec, std::uint64_t seed);

std::size_t count_parameters(const Model& model);

}  // namespace recurnet

#endif  // RECURNET_MODEL_HPP
