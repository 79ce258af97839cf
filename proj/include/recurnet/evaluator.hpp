#ifndef RECURNET_EVALUATOR_HPP
#define RECURNET_EVALUATOR_HPP

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "recurnet/dataset.hpp"
#include "recurnet/model.hpp"

namespace recurnet {

using BinaryMap = std::vector<std::uint8_t>;

/// Per-pixel argmax of a 2 x H x W (or 1 x 2 x H x W) output; ties go to 0.
BinaryMap predict_map(const TensorF& output);
/// Mean over pixels of the larger two-class softmax probability.
double confidence(const TensorF& output);

/// What an exit rule needs from one iteration's output.
struct Thought {
  BinaryMap map;
  double confidence = 0.0;
};

Thought make_thought(const TensorF& output);
/// Splits a batched N x 2 x H x W output into per-sample thoughts.
std::vector<Thought> make_thoughts(const TensorF& batch_output);

enum class ExitKind { baseline, n_plus_2, agreement, max_confidence };

std::string to_string(ExitKind k);
ExitKind parse_exit_kind(const std::string& s);
inline constexpr ExitKind kAllExitKinds[] = {ExitKind::baseline, ExitKind::n_plus_2, ExitKind::agreement,
                                             ExitKind::max_confidence};

struct ExitRule {
  ExitKind kind = ExitKind::baseline;
  int train_iters = 1;
  int budget = 1;
};

/// Throws ShapeError when the rule cannot be realized (budget below the
/// iteration the rule requires, nonpositive counts).
void validate_rule(const ExitRule& rule);

struct ExitChoice {
  int iteration = 0;  // 1-indexed
  BinaryMap map;
};

/// `thoughts` holds iterations 1..budget (at least budget entries; extra
/// entries are ignored).
ExitChoice select_exit(std::span<const Thought> thoughts, const ExitRule& rule);

struct EvalReport {
  ExitRule rule;
  std::size_t n_samples = 0;
  std::size_t solved = 0;
  double accuracy = 0.0;
  double stderr_accuracy = 0.0;  // binomial standard error
  double pixel_accuracy = 0.0;   // diagnostic only
  std::map<int, std::size_t> exit_histogram;
};

/// Scores precomputed thoughts (one list per sample) against targets.
EvalReport evaluate_thoughts(std::span<const std::vector<Thought>> thoughts, std::span<const BinaryMap> targets,
                             const ExitRule& rule);

/// Runs the model for rule.budget iterations on every maze and scores exact
/// matches. `threads` = 0 picks the hardware count.
EvalReport evaluate(const Model& model, const Dataset& ds, const ExitRule& rule, unsigned threads = 1);

/// Thoughts for iterations 1..n_iters of every sample.
std::vector<std::vector<Thought>> compute_thoughts(const Model& model, const Dataset& ds, int n_iters,
                                                   unsigned threads = 1);

struct SweepRow {
  std::string dataset;
  ExitKind rule = ExitKind::baseline;
  int budget = 0;
  double accuracy = 0.0;
  double stderr_accuracy = 0.0;
  std::size_t n_samples = 0;
};

struct NamedDataset {
  std::string name;
  const Dataset* data = nullptr;
};

/// Rule for a sweep cell. Budgets below the required iteration are clamped:
/// baseline and n_plus_2 exit at min(required, budget).
ExitRule sweep_rule(ExitKind kind, int train_iters, int budget);

/// Cross product of datasets x rules x budgets, rows ordered by dataset,
/// then rule, then budget.
std::vector<SweepRow> sweep(const Model& model, std::span<const NamedDataset> datasets, std::span<const int> budgets,
                            std::span<const ExitKind> rules, int train_iters, unsigned threads = 1);

std::string sweep_csv(std::span<const SweepRow> rows);
std::string histogram_csv(const EvalReport& report);

}  // namespace recurnet

#endif  // RECURNET_EVALUATOR_HPP
