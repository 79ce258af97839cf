#ifndef RECURNET_TRAINER_HPP
#define RECURNET_TRAINER_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "recurnet/classification.hpp"
#include "recurnet/dataset.hpp"
#include "recurnet/model.hpp"
#include "recurnet/optimizer.hpp"

namespace recurnet {

enum class LossKind { per_pixel_xent, classification_xent };

std::string to_string(LossKind k);
LossKind parse_loss(const std::string& s);

/// Optimization settings plus the model to build. Plain key=value text:
///
///   optimizer=adam            sgd | adam
///   learning_rate=0.001
///   momentum=0.9              sgd
///   beta1=0.9  beta2=0.999  epsilon=1e-8   adam
///   batch_size=32
///   epochs=40
///   lr_decay=0.1              multiplied in at each milestone
///   milestones=20,30          epochs (0-based) at which decay applies
///   grad_clip=0               global gradient-norm cap, 0 disables
///   seed=0                    data order
///   loss=per_pixel_xent       per_pixel_xent | classification_xent
///   model.<key>=...           ModelSpec fields, e.g. model.width=32
///   model.seed=0              parameter initialization
struct TrainConfig {
  OptimizerSettings optimizer;
  double learning_rate = 0.1;
  int batch_size = 32;
  int epochs = 1;
  double lr_decay = 0.1;
  /// Unset: 50% and 75% of epochs for sgd, none for adam.
  std::optional<std::vector<int>> milestones;
  double grad_clip = 0.0;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::per_pixel_xent;
  ModelSpec model;
  std::uint64_t model_seed = 0;

  std::vector<int> effective_milestones() const;
  double learning_rate_at(int epoch) const;

  std::string to_text() const;
  static TrainConfig from_text(const std::string& text);
};

/// Throws DataError on nonpositive rates or sizes and non-increasing milestones.
void validate_config(const TrainConfig& config);

/// Conventional defaults: sgd 0.1 with momentum 0.9 and step decay up to 10
/// iterations, adam 1e-3 beyond.
TrainConfig default_train_config(const ModelSpec& model, int epochs);

TrainConfig read_train_config(const std::filesystem::path& path);

struct EpochLog {
  int epoch = 0;  // 0-based
  double loss = 0.0;
  double train_accuracy = 0.0;
  double seconds = 0.0;
  double learning_rate = 0.0;
};

struct TrainReport {
  std::vector<double> epoch_loss;
  std::vector<double> epoch_accuracy;  // running accuracy over the epoch's batches
  std::vector<double> epoch_seconds;
  double final_train_accuracy = 0.0;  // full eval pass after training
  long steps = 0;
  std::filesystem::path checkpoint;
};

struct TrainOptions {
  std::filesystem::path checkpoint;  // empty: no checkpoint written
  std::function<void(const EpochLog&)> on_epoch;
  bool final_eval = true;
  unsigned eval_threads = 1;
};

/// Trains on the final iteration's output only. On a non-finite loss or
/// gradient the parameters are restored to the last completed epoch, the
/// checkpoint (if any) is written from them, and NumericError is thrown.
TrainReport train(Model& model, const Dataset& ds, const TrainConfig& config, const TrainOptions& options = {});
TrainReport train(Model& model, const ClassificationSet& ds, const TrainConfig& config,
                  const TrainOptions& options = {});

/// Exact-match fraction of the model's final-iteration maps.
double maze_accuracy(const Model& model, const Dataset& ds, unsigned threads = 1);
double classification_accuracy(const Model& model, const ClassificationSet& ds);

/// Deterministic Fisher-Yates permutation of 0..count-1 drawn from SplitMix64.
std::vector<std::size_t> shuffled_indices(std::size_t count, std::uint64_t seed);

}  // namespace recurnet

#endif  // RECURNET_TRAINER_HPP
