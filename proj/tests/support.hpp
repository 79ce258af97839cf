#ifndef RECURNET_TESTS_SUPPORT_HPP
#define RECURNET_TESTS_SUPPORT_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "recurnet/rng.hpp"
#include "recurnet/tensor.hpp"

namespace testing {

template <typename Scalar>
recurnet::Tensor<Scalar> random_tensor(recurnet::Shape shape, recurnet::SplitMix64& rng, double lo = -2.0,
                                       double hi = 2.0, bool requires_grad = false) {
  recurnet::Tensor<Scalar> t(std::move(shape), requires_grad);
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = static_cast<Scalar>(lo + (hi - lo) * rng.unit());
  return t;
}

/// Values bounded away from zero: |v| in [margin, hi].
template <typename Scalar>
recurnet::Tensor<Scalar> away_from_zero(recurnet::Shape shape, recurnet::SplitMix64& rng, double margin = 0.05,
                                        double hi = 2.0) {
  recurnet::Tensor<Scalar> t(std::move(shape));
  for (std::size_t i = 0; i < t.numel(); ++i) {
    const double mag = margin + (hi - margin) * rng.unit();
    t[i] = static_cast<Scalar>(rng.unit() < 0.5 ? -mag : mag);
  }
  return t;
}

template <typename Scalar>
std::vector<double> to_doubles(const recurnet::Tensor<Scalar>& t) {
  std::vector<double> v(t.numel());
  for (std::size_t i = 0; i < t.numel(); ++i) v[i] = static_cast<double>(t[i]);
  return v;
}

/// Fresh empty directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("recurnet_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing

#endif  // RECURNET_TESTS_SUPPORT_HPP
