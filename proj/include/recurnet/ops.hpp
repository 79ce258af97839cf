#ifndef RECURNET_OPS_HPP
#define RECURNET_OPS_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "recurnet/tensor.hpp"

// Differentiable operations. Every op takes the tape first; pass nullptr to
// run without recording (inference). An op is recorded only when at least one
// input tracks gradients.

namespace recurnet {

struct Conv2dParams {
  int stride = 1;
  int padding = 0;
  int dilation = 1;
};

enum class PoolKind { max, avg };
enum class NormMode { train, eval };

/// Running statistics for one batch-normalization site.
template <typename Scalar>
struct NormStats {
  using Buffer = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  NormStats() = default;
  explicit NormStats(std::size_t channels, Scalar momentum_ = Scalar(0.1), Scalar epsilon_ = Scalar(1e-5))
      : running_mean(Buffer::Zero(static_cast<Eigen::Index>(channels))),
        running_var(Buffer::Ones(static_cast<Eigen::Index>(channels))),
        momentum(momentum_),
        epsilon(epsilon_) {}

  std::size_t channels() const { return static_cast<std::size_t>(running_mean.size()); }

  Buffer running_mean;
  Buffer running_var;
  Scalar momentum = Scalar(0.1);
  Scalar epsilon = Scalar(1e-5);
  bool populated = false;  // set by the first train-mode update
};

namespace ops {

/// Output extent of a convolution along one spatial axis.
int conv_output_extent(int input, int kernel, const Conv2dParams& p);

template <typename Scalar>
Tensor<Scalar> conv2d(Tape<Scalar>* tape, const Tensor<Scalar>& input, const Tensor<Scalar>& weight,
                      const Tensor<Scalar>& bias, const Conv2dParams& params);

template <typename Scalar>
Tensor<Scalar> linear(Tape<Scalar>* tape, const Tensor<Scalar>& input, const Tensor<Scalar>& weight,
                      const Tensor<Scalar>& bias);

template <typename Scalar>
Tensor<Scalar> relu(Tape<Scalar>* tape, const Tensor<Scalar>& input);

template <typename Scalar>
Tensor<Scalar> add(Tape<Scalar>* tape, const Tensor<Scalar>& a, const Tensor<Scalar>& b);

template <typename Scalar>
Tensor<Scalar> mul(Tape<Scalar>* tape, const Tensor<Scalar>& a, const Tensor<Scalar>& b);

/// Sum of all elements as a scalar tensor.
template <typename Scalar>
Tensor<Scalar> sum(Tape<Scalar>* tape, const Tensor<Scalar>& input);

template <typename Scalar>
Tensor<Scalar> reshape(Tape<Scalar>* tape, const Tensor<Scalar>& input, Shape shape);

template <typename Scalar>
Tensor<Scalar> pool2d(Tape<Scalar>* tape, const Tensor<Scalar>& input, PoolKind kind, int window,
                      int stride);

/// Per-channel normalization of an NCHW tensor. Train mode normalizes with
/// batch moments and folds them into `stats`; eval mode reads `stats` only.
template <typename Scalar>
Tensor<Scalar> batch_norm(Tape<Scalar>* tape, const Tensor<Scalar>& input, NormStats<Scalar>& stats,
                          const Tensor<Scalar>& gamma, const Tensor<Scalar>& beta, NormMode mode);

/// Mean negative log-likelihood of `targets` under a softmax over
/// `class_axis`. Targets enumerate the remaining axes in row-major order.
template <typename Scalar>
Tensor<Scalar> softmax_cross_entropy(Tape<Scalar>* tape, const Tensor<Scalar>& logits,
                                     std::span<const std::int32_t> targets, std::size_t class_axis);

}  // namespace ops
}  // namespace recurnet

#endif  // RECURNET_OPS_HPP
