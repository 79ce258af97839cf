#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "recurnet/dataset.hpp"
#include "recurnet/errors.hpp"
#include "recurnet/evaluator.hpp"
#include "recurnet/model.hpp"
#include "support.hpp"

using namespace recurnet;

namespace {

Thought scripted(std::uint8_t symbol, double conf) { return Thought{BinaryMap(4, symbol), conf}; }

int oracle_kind(ExitKind k) {
  switch (k) {
    case ExitKind::baseline: return 0;
    case ExitKind::n_plus_2: return 1;
    case ExitKind::agreement: return 2;
    case ExitKind::max_confidence: return 3;
  }
  return -1;
}

std::vector<std::vector<int>> as_int_maps(const std::vector<Thought>& th) {
  std::vector<std::vector<int>> out;
  for (const auto& t : th) out.emplace_back(t.map.begin(), t.map.end());
  return out;
}

std::vector<double> confidences(const std::vector<Thought>& th) {
  std::vector<double> out;
  for (const auto& t : th) out.push_back(t.confidence);
  return out;
}

}  // namespace

TEST_CASE("predict_map: examples and scan oracle") {
  TensorF ones({2, 2, 3});
  for (std::size_t i = 6; i < 12; ++i) ones[i] = 1.0f;
  CHECK(predict_map(ones) == BinaryMap(6, 1));
  CHECK(predict_map(TensorF::filled({2, 2, 3}, 0.7f)) == BinaryMap(6, 0));
  CHECK(predict_map(TensorF::filled({1, 2, 2, 3}, 0.7f)) == BinaryMap(6, 0));
  CHECK_THROWS_AS(predict_map(TensorF({3, 2, 2})), ShapeError);
  CHECK_THROWS_AS(predict_map(TensorF({2, 2, 2, 2})), ShapeError);

  SplitMix64 rng(6);
  const auto r = testing::random_tensor<float>({2, 5, 7}, rng, -3, 3);
  const auto map = predict_map(r);
  for (std::size_t p = 0; p < 35; ++p) CHECK(map[p] == (r[35 + p] > r[p] ? 1 : 0));
}

TEST_CASE("confidence: examples") {
  CHECK(confidence(TensorF::filled({2, 3, 3}, 1.0f)) == 0.5);
  TensorF gap({2, 2, 2});
  for (std::size_t i = 0; i < 4; ++i) gap[i] = i % 2 ? 20.0f : 0.0f;
  for (std::size_t i = 4; i < 8; ++i) gap[i] = i % 2 ? 0.0f : 20.0f;
  CHECK(confidence(gap) > 1.0 - 1e-8);

  const auto hand = TensorF::from_values({2, 1, 2}, {0.0f, 1.0f, 2.0f, -1.0f});
  const double p0 = std::exp(2.0) / (1.0 + std::exp(2.0));
  const double p1 = std::exp(1.0) / (std::exp(1.0) + std::exp(-1.0));
  CHECK(confidence(hand) == doctest::Approx((p0 + p1) / 2.0).epsilon(1e-7));
}

TEST_CASE("select_exit: documented examples") {
  std::vector<Thought> abbc{scripted(0, 0.5), scripted(1, 0.5), scripted(1, 0.5), scripted(2, 0.5)};
  auto c = select_exit(abbc, {ExitKind::agreement, 1, 4});
  CHECK(c.iteration == 3);
  CHECK(c.map == abbc[1].map);

  std::vector<Thought> conf{scripted(0, 0.6), scripted(1, 0.9), scripted(2, 0.7)};
  CHECK(select_exit(conf, {ExitKind::max_confidence, 1, 3}).iteration == 2);

  std::vector<Thought> eight;
  for (int i = 0; i < 8; ++i) eight.push_back(scripted(std::uint8_t(i), 0.5));
  CHECK(select_exit(eight, {ExitKind::baseline, 6, 8}).iteration == 6);
  CHECK(select_exit(eight, {ExitKind::n_plus_2, 6, 8}).iteration == 8);
  CHECK(select_exit(eight, {ExitKind::n_plus_2, 6, 7}).iteration == 7);
  CHECK(select_exit(eight, {ExitKind::agreement, 6, 8}).iteration == 8);

  CHECK_THROWS_AS(select_exit(eight, {ExitKind::baseline, 6, 5}), ShapeError);
  CHECK_THROWS_AS(select_exit(eight, {ExitKind::n_plus_2, 6, 5}), ShapeError);
  CHECK_THROWS_AS(select_exit(eight, {ExitKind::agreement, 6, 9}), ShapeError);
  CHECK_THROWS_AS(validate_rule({ExitKind::agreement, 0, 3}), ShapeError);
  CHECK_THROWS_AS(validate_rule({ExitKind::max_confidence, 1, 0}), ShapeError);
}

TEST_CASE("select_exit: exhaustive scripted outputs match the brute-force simulator") {
  // every map sequence over a 2-symbol alphabet up to length 10, with three
  // confidence patterns (rising, falling, tied peaks)
  std::size_t compared = 0;
  for (int budget = 1; budget <= 10; ++budget) {
    for (std::uint32_t mask = 0; mask < (1u << budget); ++mask) {
      for (int pattern = 0; pattern < 3; ++pattern) {
        std::vector<Thought> th;
        for (int t = 0; t < budget; ++t) {
          double conf = pattern == 0 ? 0.5 + 0.01 * t : pattern == 1 ? 0.9 - 0.01 * t : (t % 3 == 1 ? 0.8 : 0.6);
          th.push_back(scripted(std::uint8_t((mask >> t) & 1u), conf));
        }
        const auto maps = as_int_maps(th);
        const auto confs = confidences(th);
        for (ExitKind kind : kAllExitKinds)
          for (int train = 1; train <= 10; ++train) {
            const ExitRule rule{kind, train, budget};
            const bool fixed = kind == ExitKind::baseline || kind == ExitKind::n_plus_2;
            if (fixed && budget < train) {
              CHECK_THROWS_AS(select_exit(th, rule), ShapeError);
              continue;
            }
            const auto choice = select_exit(th, rule);
            const int expect = oracle::simulate_exit(oracle_kind(kind), train, budget, maps, confs);
            if (choice.iteration != expect) {
              FAIL_CHECK("rule " << to_string(kind) << " train " << train << " budget " << budget << " mask "
                                 << mask << " pattern " << pattern << ": got " << choice.iteration << " expected "
                                 << expect);
            }
            CHECK(choice.map == th[std::size_t(expect - 1)].map);
            ++compared;
          }
      }
    }
  }
  CHECK(compared > 100000);
}

TEST_CASE("select_exit: agreement exit is stable under larger budgets") {
  SplitMix64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Thought> th;
    for (int t = 0; t < 12; ++t) th.push_back(scripted(std::uint8_t(rng.below(3)), 0.5));
    for (int b = 2; b <= 12; ++b) {
      const int e = select_exit(th, {ExitKind::agreement, 1, b}).iteration;
      if (e < b)
        for (int b2 = b + 1; b2 <= 12; ++b2) CHECK(select_exit(th, {ExitKind::agreement, 1, b2}).iteration == e);
    }
  }
}

TEST_CASE("max_confidence dominates fixed-index rules when confidence tracks correctness") {
  SplitMix64 rng(23);
  const BinaryMap target(4, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const int budget = 8;
    std::vector<std::vector<Thought>> all;
    std::vector<BinaryMap> targets;
    for (int s = 0; s < 30; ++s) {
      std::vector<Thought> th;
      for (int t = 0; t < budget; ++t) {
        const bool right = rng.below(3) == 0;
        th.push_back(right ? scripted(1, 0.9 + 0.001 * double(rng.below(50))) : scripted(0, 0.5 + 0.3 * rng.unit()));
      }
      all.push_back(th);
      targets.push_back(target);
    }
    const double best = evaluate_thoughts(all, targets, {ExitKind::max_confidence, 1, budget}).accuracy;
    for (int fixed = 1; fixed <= budget; ++fixed)
      CHECK(best >= evaluate_thoughts(all, targets, {ExitKind::baseline, fixed, budget}).accuracy);
  }
}

TEST_CASE("evaluate_thoughts: scripted report vs simulator") {
  SplitMix64 rng(5);
  const int budget = 6;
  std::vector<std::vector<Thought>> all;
  std::vector<BinaryMap> targets;
  for (int s = 0; s < 40; ++s) {
    std::vector<Thought> th;
    for (int t = 0; t < budget; ++t) th.push_back(scripted(std::uint8_t(rng.below(2)), rng.unit()));
    all.push_back(th);
    targets.push_back(BinaryMap(4, std::uint8_t(rng.below(2))));
  }
  for (ExitKind kind : kAllExitKinds) {
    const ExitRule rule{kind, 3, budget};
    const auto rep = evaluate_thoughts(all, targets, rule);
    std::size_t solved = 0;
    std::map<int, std::size_t> hist;
    double pixels = 0.0;
    for (std::size_t s = 0; s < all.size(); ++s) {
      const int e = oracle::simulate_exit(oracle_kind(kind), 3, budget, as_int_maps(all[s]), confidences(all[s]));
      ++hist[e];
      const auto& m = all[s][std::size_t(e - 1)].map;
      solved += m == targets[s];
      for (std::size_t p = 0; p < 4; ++p) pixels += m[p] == targets[s][p];
    }
    CHECK(rep.n_samples == 40);
    CHECK(rep.solved == solved);
    CHECK(rep.accuracy == double(solved) / 40.0);
    const double a = rep.accuracy;
    CHECK(rep.stderr_accuracy == doctest::Approx(std::sqrt(a * (1 - a) / 40.0)));
    CHECK(rep.pixel_accuracy == doctest::Approx(pixels / 160.0));
    CHECK(rep.exit_histogram == hist);
    std::size_t mass = 0;
    for (const auto& [it, c] : rep.exit_histogram) mass += c;
    CHECK(mass == 40);
  }
  std::vector<BinaryMap> short_targets(3);
  CHECK_THROWS_AS(evaluate_thoughts(all, short_targets, {ExitKind::baseline, 1, 1}), ShapeError);
}

TEST_CASE("evaluate_thoughts: perfect and all-zero scripted models") {
  const auto ds = build_dataset(4, 10, 50);
  std::vector<BinaryMap> targets;
  std::vector<std::vector<Thought>> perfect, zeros;
  for (const auto& s : ds.samples) {
    targets.push_back(s.target);
    perfect.push_back(std::vector<Thought>(5, Thought{s.target, 0.99}));
    zeros.push_back(std::vector<Thought>(5, Thought{BinaryMap(s.target.size(), 0), 0.99}));
  }
  for (ExitKind kind : kAllExitKinds) {
    const ExitRule rule{kind, 1, 5};
    const auto rep = evaluate_thoughts(perfect, targets, rule);
    CHECK(rep.accuracy == 1.0);
    if (kind == ExitKind::agreement) CHECK(rep.exit_histogram == std::map<int, std::size_t>{{2, 10}});
    CHECK(evaluate_thoughts(zeros, targets, rule).accuracy == 0.0);
  }
}

TEST_CASE("evaluate: model runs agree with precomputed thoughts and threads") {
  Model m = build_model(maze_spec(6, 2), 3);
  const auto ds = build_dataset(3, 23, 7);
  const auto thoughts = compute_thoughts(m, ds, 5);
  REQUIRE(thoughts.size() == 23);
  for (const auto& th : thoughts) CHECK(th.size() == 5);
  CHECK(compute_thoughts(m, ds, 5, 3).size() == 23);
  std::vector<BinaryMap> targets;
  for (const auto& s : ds.samples) targets.push_back(s.target);
  for (ExitKind kind : kAllExitKinds) {
    const ExitRule rule{kind, 2, 5};
    const auto a = evaluate(m, ds, rule);
    const auto b = evaluate(m, ds, rule, 4);
    const auto c = evaluate_thoughts(thoughts, targets, rule);
    CHECK(a.solved == c.solved);
    CHECK(a.exit_histogram == c.exit_histogram);
    CHECK(b.exit_histogram == c.exit_histogram);
    CHECK(a.pixel_accuracy == doctest::Approx(c.pixel_accuracy));
  }
  // thoughts match a direct forward pass per sample
  std::vector<std::size_t> idx{4};
  const auto outs = m.forward_iterations(image_batch(ds, idx), 5);
  for (std::size_t t = 0; t < 5; ++t) {
    CHECK(thoughts[4][t].map == predict_map(outs[t]));
    CHECK(thoughts[4][t].confidence == doctest::Approx(confidence(outs[t])));
  }
}

TEST_CASE("evaluate: zeroed head outputs ties and scores zero") {
  Model m = build_model(maze_spec(4, 1), 1);
  auto params = m.parameters();
  params.back().value().setZero();
  const auto ds = build_dataset(3, 5, 1);
  const auto rep = evaluate(m, ds, {ExitKind::baseline, 1, 1});
  CHECK(rep.accuracy == 0.0);
  CHECK(rep.stderr_accuracy == 0.0);
}

TEST_CASE("evaluate: classification models are rejected") {
  Model c = build_model(mlp_spec(10, 1, Mode::recurrent), 0);
  const auto ds = build_dataset(3, 2, 1);
  CHECK_THROWS_AS(evaluate(c, ds, {ExitKind::baseline, 1, 1}), ShapeError);
}

TEST_CASE("sweep: cardinality, degenerate case and CSV") {
  Model m = build_model(maze_spec(4, 2), 11);
  const auto a = build_dataset(3, 6, 1), b = build_dataset(4, 5, 2);
  std::vector<NamedDataset> sets{{"small", &a}, {"big", &b}};
  std::vector<int> budgets;
  for (int i = 1; i <= 30; ++i) budgets.push_back(i);
  std::vector<ExitKind> rules(std::begin(kAllExitKinds), std::end(kAllExitKinds));
  const auto rows = sweep(m, sets, budgets, rules, 2);
  REQUIRE(rows.size() == 2 * 4 * 30);
  CHECK(rows[0].dataset == "small");
  CHECK(rows[0].rule == ExitKind::baseline);
  CHECK(rows[29].budget == 30);
  CHECK(rows[30].rule == ExitKind::n_plus_2);
  CHECK(rows[120].dataset == "big");

  for (const auto& row : rows) {
    const Dataset& ds = row.dataset == "small" ? a : b;
    const auto rep = evaluate(m, ds, sweep_rule(row.rule, 2, row.budget));
    CHECK(row.accuracy == rep.accuracy);
    CHECK(row.n_samples == ds.size());
  }
  CHECK(sweep_rule(ExitKind::baseline, 2, 1).train_iters == 1);
  CHECK(sweep_rule(ExitKind::n_plus_2, 6, 7).train_iters == 6);

  std::vector<int> just_n{2};
  std::vector<ExitKind> base{ExitKind::baseline};
  std::vector<NamedDataset> one{{"small", &a}};
  const auto deg = sweep(m, one, just_n, base, 2);
  REQUIRE(deg.size() == 1);
  CHECK(deg[0].accuracy == evaluate(m, a, {ExitKind::baseline, 2, 2}).accuracy);

  const auto csv = sweep_csv(deg);
  CHECK(csv.rfind("dataset,rule,budget,accuracy,stderr,n_samples\n", 0) == 0);
  CHECK(csv.find("small,baseline,2,") != std::string::npos);
  std::size_t lines = 0;
  for (char ch : sweep_csv(rows)) lines += ch == '\n';
  CHECK(lines == rows.size() + 1);
}

TEST_CASE("histogram_csv lists every iteration up to the budget") {
  std::vector<std::vector<Thought>> th{{scripted(0, 0.1), scripted(0, 0.2), scripted(1, 0.3)}};
  std::vector<BinaryMap> targets{BinaryMap(4, 0)};
  const auto rep = evaluate_thoughts(th, targets, {ExitKind::agreement, 1, 3});
  CHECK(histogram_csv(rep) == "iteration,count\n1,0\n2,1\n3,0\n");
}

TEST_CASE("exit kind names round trip") {
  for (ExitKind k : kAllExitKinds) CHECK(parse_exit_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_exit_kind("agrement"), DataError);
}
