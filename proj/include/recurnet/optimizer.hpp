#ifndef RECURNET_OPTIMIZER_HPP
#define RECURNET_OPTIMIZER_HPP

#include <string>
#include <vector>

#include "recurnet/tensor.hpp"

namespace recurnet {

enum class OptimizerKind { sgd, adam };

std::string to_string(OptimizerKind k);
OptimizerKind parse_optimizer(const std::string& s);

struct OptimizerSettings {
  OptimizerKind kind = OptimizerKind::sgd;
  double momentum = 0.9;  // sgd
  double beta1 = 0.9;     // adam
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First-order update rules over a fixed parameter list.
///
///   sgd:  v <- momentum * v + g;  p <- p - lr * v
///   adam: m <- b1 m + (1 - b1) g;  v <- b2 v + (1 - b2) g^2
///         p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
class Optimizer {
 public:
  Optimizer(std::vector<TensorF> params, OptimizerSettings settings);

  /// Applies one update using the gradients currently stored on the
  /// parameters. Throws NumericError (parameters untouched) if any gradient
  /// is NaN or infinite.
  void step(double learning_rate);

  long steps_taken() const { return t_; }
  const OptimizerSettings& settings() const { return settings_; }

 private:
  std::vector<TensorF> params_;
  OptimizerSettings settings_;
  std::vector<Eigen::VectorXf> first_;
  std::vector<Eigen::VectorXf> second_;
  long t_ = 0;
};

}  // namespace recurnet

#endif  // RECURNET_OPTIMIZER_HPP
