#include "recurnet/tensor.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

namespace recurnet {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {
void validate_shape(const Shape& shape) {
  for (std::size_t e : shape)
    if (e == 0) throw ShapeError("tensor extents must be positive, got " + shape_to_string(shape));
}
}  // namespace

template <typename Scalar>
Tensor<Scalar>::Tensor(Shape shape, bool requires_grad) : storage_(std::make_shared<Storage>()) {
  validate_shape(shape);
  storage_->value = Buffer::Zero(static_cast<Eigen::Index>(shape_numel(shape)));
  storage_->shape = std::move(shape);
  storage_->requires_grad = requires_grad;
}

template <typename Scalar>
Tensor<Scalar>::Tensor(Shape shape, Buffer values, bool requires_grad)
    : storage_(std::make_shared<Storage>()) {
  validate_shape(shape);
  if (static_cast<std::size_t>(values.size()) != shape_numel(shape))
    throw ShapeError("value count " + std::to_string(values.size()) + " does not match shape " +
                     shape_to_string(shape));
  storage_->shape = std::move(shape);
  storage_->value = std::move(values);
  storage_->requires_grad = requires_grad;
}

template <typename Scalar>
Tensor<Scalar> Tensor<Scalar>::filled(Shape shape, Scalar value, bool requires_grad) {
  Tensor t(std::move(shape), requires_grad);
  t.value().setConstant(value);
  return t;
}

template <typename Scalar>
Tensor<Scalar> Tensor<Scalar>::from_values(Shape shape, std::initializer_list<Scalar> values,
                                           bool requires_grad) {
  return from_vector(std::move(shape), std::vector<Scalar>(values), requires_grad);
}

template <typename Scalar>
Tensor<Scalar> Tensor<Scalar>::from_vector(Shape shape, const std::vector<Scalar>& values,
                                           bool requires_grad) {
  Buffer b = Eigen::Map<const Buffer>(values.data(), static_cast<Eigen::Index>(values.size()));
  return Tensor(std::move(shape), std::move(b), requires_grad);
}

template <typename Scalar>
typename Tensor<Scalar>::Storage& Tensor<Scalar>::storage() {
  if (!storage_) throw std::logic_error("use of an undefined tensor");
  return *storage_;
}

template <typename Scalar>
const typename Tensor<Scalar>::Storage& Tensor<Scalar>::storage() const {
  if (!storage_) throw std::logic_error("use of an undefined tensor");
  return *storage_;
}

template <typename Scalar>
std::size_t Tensor<Scalar>::dim(std::size_t axis) const {
  if (axis >= rank())
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                     shape_to_string(shape()));
  return shape()[axis];
}

namespace {
std::size_t flat_index(const Shape& shape, std::initializer_list<std::size_t> index) {
  if (index.size() != shape.size())
    throw ShapeError("index rank " + std::to_string(index.size()) + " does not match shape " +
                     shape_to_string(shape));
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (std::size_t i : index) {
    if (i >= shape[axis]) throw ShapeError("index out of range for shape " + shape_to_string(shape));
    flat = flat * shape[axis] + i;
    ++axis;
  }
  return flat;
}
}  // namespace

template <typename Scalar>
Scalar& Tensor<Scalar>::at(std::initializer_list<std::size_t> index) {
  return (*this)[flat_index(shape(), index)];
}

template <typename Scalar>
Scalar Tensor<Scalar>::at(std::initializer_list<std::size_t> index) const {
  return (*this)[flat_index(shape(), index)];
}

template <typename Scalar>
Scalar Tensor<Scalar>::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_to_string(shape()));
  return value()[0];
}

template <typename Scalar>
void Tensor<Scalar>::zero_grad() {
  storage().grad = Buffer::Zero(storage().value.size());
}

template <typename Scalar>
Tensor<Scalar> Tensor<Scalar>::clone() const {
  return Tensor(shape(), value(), false);
}

template <typename Scalar>
void Tensor<Scalar>::check_finite(const char* op_name) const {
  if (!value().allFinite())
    throw NumericError(std::string(op_name) + " produced non-finite values");
}

namespace {
std::atomic<std::uint64_t> next_tape_id{1};
}

template <typename Scalar>
Tape<Scalar>::Tape() : id_(next_tape_id.fetch_add(1)) {}

template <typename Scalar>
bool Tape<Scalar>::needs_record(std::initializer_list<const TensorT*> inputs) {
  for (const TensorT* t : inputs)
    if (t && t->defined() && t->tracks_grad()) return true;
  return false;
}

template <typename Scalar>
void Tape<Scalar>::record(std::vector<TensorT> inputs, TensorT& output,
                          std::function<void()> backward) {
  if (consumed_) throw std::logic_error("tape already consumed by backward(); call reset()");
  std::erase_if(inputs, [](const TensorT& t) { return !t.defined(); });
  output.storage().producer = id_;
  records_.push_back(Record{std::move(inputs), output, std::move(backward)});
}

template <typename Scalar>
void Tape<Scalar>::backward(const TensorT& loss) {
  if (consumed_) throw std::logic_error("backward() called twice on the same tape without reset()");
  if (loss.numel() != 1)
    throw ShapeError("backward() needs a scalar loss, got shape " + shape_to_string(loss.shape()));
  if (loss.producer() != id_) throw std::logic_error("loss was not produced on this tape (detached)");
  consumed_ = true;

  for (Record& r : records_) {
    for (TensorT& in : r.inputs)
      if (in.tracks_grad()) in.zero_grad();
    r.output.zero_grad();
  }
  loss.storage_->grad.setOnes();
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) it->backward();
}

template <typename Scalar>
void Tape<Scalar>::reset() {
  for (Record& r : records_) r.output.storage().producer = 0;
  records_.clear();
  consumed_ = false;
}

template class Tensor<float>;
template class Tensor<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace recurnet
