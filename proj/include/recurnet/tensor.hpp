#ifndef RECURNET_TENSOR_HPP
#define RECURNET_TENSOR_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "recurnet/errors.hpp"

namespace recurnet {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

template <typename Scalar>
class Tape;

/// Dense row-major n-dimensional array with an optional gradient slot.
///
/// A Tensor is a cheap handle: copies share storage, so parameters held by a
/// model and the same parameters seen by an operation are the same object.
/// Use clone() for an independent copy.
template <typename Scalar>
class Tensor {
 public:
  using Buffer = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Tensor() = default;
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, Buffer values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    return Tensor(std::move(shape), requires_grad);
  }
  static Tensor filled(Shape shape, Scalar value, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::initializer_list<Scalar> values,
                            bool requires_grad = false);
  static Tensor from_vector(Shape shape, const std::vector<Scalar>& values,
                            bool requires_grad = false);

  bool defined() const { return static_cast<bool>(storage_); }
  const Shape& shape() const { return storage().shape; }
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const { return static_cast<std::size_t>(storage().value.size()); }

  Buffer& value() { return storage().value; }
  const Buffer& value() const { return storage().value; }
  Scalar* data() { return storage().value.data(); }
  const Scalar* data() const { return storage().value.data(); }

  Scalar& operator[](std::size_t i) { return storage().value[static_cast<Eigen::Index>(i)]; }
  Scalar operator[](std::size_t i) const { return storage().value[static_cast<Eigen::Index>(i)]; }
  Scalar& at(std::initializer_list<std::size_t> index);
  Scalar at(std::initializer_list<std::size_t> index) const;
  /// Value of a rank-0 or single-element tensor.
  Scalar item() const;

  bool requires_grad() const { return storage().requires_grad; }
  void set_requires_grad(bool flag) { storage().requires_grad = flag; }
  bool has_grad() const { return storage().grad.size() == storage().value.size(); }
  Buffer& grad() { return storage().grad; }
  const Buffer& grad() const { return storage().grad; }
  void zero_grad();
  void clear_grad() { storage().grad.resize(0); }

  /// Independent copy of shape and values; no gradient and not on any tape.
  Tensor clone() const;
  bool same_storage(const Tensor& other) const { return storage_ == other.storage_; }

  /// Throws NumericError if any element is NaN or infinite.
  void check_finite(const char* op_name) const;

  // Tape bookkeeping. A tensor tracks gradients if it is a leaf with
  // requires_grad or it was produced by a recorded operation.
  bool tracks_grad() const { return storage().requires_grad || storage().producer != 0; }
  std::uint64_t producer() const { return storage().producer; }

 private:
  struct Storage {
    Shape shape;
    Buffer value;
    Buffer grad;
    bool requires_grad = false;
    std::uint64_t producer = 0;  // id of the tape that recorded this tensor as an output
  };

  Storage& storage();
  const Storage& storage() const;

  std::shared_ptr<Storage> storage_;

  friend class Tape<Scalar>;
};

/// Ordered record of executed operations for reverse-mode differentiation.
///
/// A tape is single-use: after backward() it must be reset() before it can
/// record or differentiate again.
template <typename Scalar>
class Tape {
 public:
  using TensorT = Tensor<Scalar>;

  Tape();
  ~Tape() { reset(); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// True if at least one input tracks gradients, i.e. the op must be recorded.
  static bool needs_record(std::initializer_list<const TensorT*> inputs);

  /// Records an operation. `backward` reads output.grad() and accumulates
  /// into the grads of the inputs that track gradients.
  void record(std::vector<TensorT> inputs, TensorT& output, std::function<void()> backward);

  /// Populates grad() on every tensor that tracks gradients and was seen by
  /// this tape. Tensors that do not influence the loss receive zeros.
  void backward(const TensorT& loss);

  void reset();
  std::size_t size() const { return records_.size(); }
  bool consumed() const { return consumed_; }
  std::uint64_t id() const { return id_; }

 private:
  struct Record {
    std::vector<TensorT> inputs;
    TensorT output;
    std::function<void()> backward;
  };

  std::uint64_t id_;
  std::vector<Record> records_;
  bool consumed_ = false;
};

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template class Tape<float>;
extern template class Tape<double>;

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace recurnet

#endif  // RECURNET_TENSOR_HPP
