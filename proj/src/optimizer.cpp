#include "recurnet/optimizer.hpp"

#include <cmath>

#include "recurnet/errors.hpp"

namespace recurnet {

std::string to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  throw DataError("unknown optimizer '" + s + "' (expected sgd or adam)");
}

Optimizer::Optimizer(std::vector<TensorF> params, OptimizerSettings settings)
    : params_(std::move(params)), settings_(settings) {
  for (const TensorF& p : params_) {
    first_.push_back(Eigen::VectorXf::Zero(static_cast<Eigen::Index>(p.numel())));
    if (settings_.kind == OptimizerKind::adam)
      second_.push_back(Eigen::VectorXf::Zero(static_cast<Eigen::Index>(p.numel())));
  }
}

void Optimizer::step(double learning_rate) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const TensorF& p = params_[i];
    if (!p.has_grad()) throw ShapeError("parameter " + std::to_string(i) + " has no gradient");
    if (!p.grad().allFinite())
      throw NumericError("non-finite gradient in parameter " + std::to_string(i) + " " + shape_to_string(p.shape()) +
                         " at step " + std::to_string(t_ + 1));
  }
  ++t_;
  const float lr = static_cast<float>(learning_rate);
  if (settings_.kind == OptimizerKind::sgd) {
    const float mu = static_cast<float>(settings_.momentum);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      first_[i] = mu * first_[i] + params_[i].grad();
      params_[i].value() -= lr * first_[i];
    }
    return;
  }
  const float b1 = static_cast<float>(settings_.beta1);
  const float b2 = static_cast<float>(settings_.beta2);
  const float a1 = static_cast<float>(1.0 - settings_.beta1);
  const float a2 = static_cast<float>(1.0 - settings_.beta2);
  const float eps = static_cast<float>(settings_.epsilon);
  const float c1 = static_cast<float>(1.0 - std::pow(settings_.beta1, static_cast<double>(t_)));
  const float c2 = static_cast<float>(1.0 - std::pow(settings_.beta2, static_cast<double>(t_)));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& g = params_[i].grad();
    first_[i] = b1 * first_[i] + a1 * g;
    second_[i] = b2 * second_[i] + a2 * g.cwiseProduct(g);
    params_[i].value().array() -=
        lr * (first_[i].array() / c1) / ((second_[i].array() / c2).sqrt() + eps);
  }
}

}  // namespace recurnet
