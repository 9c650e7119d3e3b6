//
// Copyright 2026 The dpsynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#include "dpsynth/synth.h"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "dpsynth/audit.h"
#include "test_util.h"

namespace dpsynth {
namespace {

MarginalGrid int_grid(std::size_t bins, std::int64_t lo = 0) {
  return MarginalGrid({{"X"}}, {ColumnDomain::bounded_integer("X", lo, lo + bins - 1)});
}

NoisyMarginal noisy_of(std::vector<double> counts) {
  return {int_grid(counts.size()), std::move(counts), Epsilon(1.0), 1.0};
}

ProbabilityTable table_of(std::vector<double> weights, std::int64_t lo = 0) {
  const auto n = weights.size();
  return ProbabilityTable(int_grid(n, lo), std::move(weights));
}

TEST(PostprocessTest, ClipThenNormalize) {
  const auto p = postprocess(noisy_of({-1.0, 3.0, 2.0}));
  ASSERT_EQ(p.weights().size(), 3u);
  EXPECT_DOUBLE_EQ(p.weights()[0], 0.0);
  EXPECT_DOUBLE_EQ(p.weights()[1], 0.6);
  EXPECT_DOUBLE_EQ(p.weights()[2], 0.4);
}

TEST(PostprocessTest, AllNegativeFallsBackToUniform) {
  const auto p = postprocess(noisy_of({-1.0, -2.0}));
  EXPECT_DOUBLE_EQ(p.weights()[0], 0.5);
  EXPECT_DOUBLE_EQ(p.weights()[1], 0.5);
  const auto zeros = postprocess(noisy_of({0.0, 0.0, 0.0, 0.0}));
  for (double w : zeros.weights()) EXPECT_DOUBLE_EQ(w, 0.25);
}

TEST(PostprocessTest, SingleCell) {
  EXPECT_DOUBLE_EQ(postprocess(noisy_of({5.0})).weights()[0], 1.0);
  EXPECT_DOUBLE_EQ(postprocess(noisy_of({-5.0})).weights()[0], 1.0);
}

TEST(PostprocessTest, NonnegativeAndNormalizedOnRandomInputs) {
  std::mt19937_64 gen(77);
  std::uniform_int_distribution<int> size(1, 300);
  std::normal_distribution<double> noise(0.0, 5.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> counts(size(gen));
    const double shift = trial % 4 == 0 ? -1000.0 : 0.0;  // every 4th input all negative
    for (auto& c : counts) c = noise(gen) + shift;
    const auto w = postprocess_weights(counts);
    double sum = 0.0;
    for (double x : w) {
      ASSERT_GE(x, 0.0);
      sum += x;
    }
    ASSERT_NEAR(sum, 1.0, 1e-9);
    if (shift < 0.0) {
      for (double x : w) ASSERT_DOUBLE_EQ(x, 1.0 / counts.size());
    }
  }
}

TEST(PostprocessTest, IdempotentUpToScale) {
  std::mt19937_64 gen(78);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> raw(1 + trial % 50);
    for (auto& x : raw) x = u(gen) < 0.2 ? 0.0 : u(gen);
    raw[0] += 0.1;
    const auto w = postprocess_weights(raw);
    for (double scale : {1.0, 1e-6, 3.5, 1e9}) {
      std::vector<double> scaled(w);
      for (auto& x : scaled) x *= scale;
      const auto again = postprocess_weights(scaled);
      for (std::size_t i = 0; i < w.size(); ++i) ASSERT_NEAR(again[i], w[i], 1e-12);
    }
  }
}

TEST(ProbabilityTableTest, RejectsInvalidWeights) {
  EXPECT_THROW(table_of({0.5, 0.6}), ArgumentError);
  EXPECT_THROW(table_of({-0.1, 1.1}), ArgumentError);
  EXPECT_THROW(ProbabilityTable(int_grid(3), {0.5, 0.5}), ArgumentError);
}

TEST(PickCellTest, LowerIndexOnTiesAndZeroWeightsSkipped) {
  const std::vector<double> cum = {0.0, 0.25, 0.25, 0.75, 1.0};  // weights 0, .25, 0, .5, .25
  EXPECT_EQ(pick_cell(cum, 0.0), 1u);
  EXPECT_EQ(pick_cell(cum, 0.2499), 1u);
  EXPECT_EQ(pick_cell(cum, 0.25), 3u);
  EXPECT_EQ(pick_cell(cum, 0.75), 4u);
  EXPECT_EQ(pick_cell(cum, std::nextafter(1.0, 0.0)), 4u);
  const std::vector<double> trailing_zero = {0.5, 1.0, 1.0};
  EXPECT_EQ(pick_cell(trailing_zero, 1.0), 1u);
}

TEST(SampleRowsTest, SingleCellRepeats) {
  auto gen = make_rng(1);
  const auto rows = sample_rows(table_of({1.0}, 40), 10, gen);
  ASSERT_EQ(rows.num_rows(), 10u);
  for (std::size_t r = 0; r < 10; ++r) EXPECT_EQ(std::get<std::int64_t>(rows.value(r, 0)), 40);
}

TEST(SampleRowsTest, DecodesCategoricalCells) {
  MarginalGrid grid({{"Age", "Job"}}, {ColumnDomain::bounded_integer("Age", 17, 18),
                                       ColumnDomain::categorical("Job", {"a", "b"})});
  ProbabilityTable table(grid, {0.0, 0.0, 0.0, 1.0});
  auto gen = make_rng(2);
  const auto rows = sample_rows(table, 3, gen);
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_EQ(std::get<std::int64_t>(rows.value(r, 0)), 18);
    EXPECT_EQ(std::get<std::string>(rows.value(r, 1)), "b");
  }
}

TEST(SampleRowsTest, EmpiricalFrequenciesOfFairTable) {
  auto gen = make_rng(3);
  const auto rows = sample_rows(table_of({0.5, 0.5}), 100'000, gen);
  std::size_t first = 0;
  for (std::size_t r = 0; r < rows.num_rows(); ++r) first += rows.bin(r, 0) == 0;
  EXPECT_NEAR(static_cast<double>(first) / 1e5, 0.5, 0.006);
}

TEST(SampleRowsTest, ChiSquareGoodnessOfFit) {
  const std::vector<double> weights = {0.1, 0.2, 0.3, 0.4};
  for (std::uint64_t seed : {4u, 5u, 6u}) {
    auto gen = make_rng(seed);
    constexpr std::size_t kN = 1'000'000;
    const auto rows = sample_rows(table_of(weights), kN, gen);
    std::vector<double> observed(4, 0.0);
    for (std::size_t r = 0; r < kN; ++r) observed[rows.bin(r, 0)] += 1.0;
    double chi2 = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      const double expected = weights[i] * kN;
      chi2 += (observed[i] - expected) * (observed[i] - expected) / expected;
    }
    EXPECT_LT(chi2, testing::kChiSquare3Df99) << "seed " << seed;
  }
}

TEST(SampleRowsTest, ZeroRowsAndDeterminism) {
  auto gen = make_rng(7);
  EXPECT_TRUE(sample_rows(table_of({0.3, 0.7}), 0, gen).empty());
  auto a = make_rng(8), b = make_rng(8);
  const auto ra = sample_rows(table_of({0.3, 0.7}), 500, a);
  const auto rb = sample_rows(table_of({0.3, 0.7}), 500, b);
  for (std::size_t r = 0; r < 500; ++r) EXPECT_EQ(ra.bin(r, 0), rb.bin(r, 0));
}

TEST(SampleRowsTest, ResamplingChargesNothing) {
  const auto data = testing::random_dataset(400, 2);
  PrivacyAccountant acc(Epsilon(1.0));
  auto gen = make_rng(9);
  const auto probs = postprocess(privatize_marginal(build_marginal(data, {{"Age"}}), Epsilon(1.0), acc, gen));
  const auto before = acc.ledger().size();
  const auto spent = acc.spent();
  sample_rows(probs, 1000, gen);
  sample_rows(probs, 1000, gen);
  EXPECT_EQ(acc.ledger().size(), before);
  EXPECT_EQ(acc.spent(), spent);
}

std::string csv_of(const TabularDataset& d) {
  std::ostringstream out;
  write_csv(out, d);
  return out.str();
}

TEST(GenerateTest, ZeroRowsStillReports) {
  const auto data = testing::random_dataset(100, 1);
  const std::vector<MarginalSpec> specs = {{{"Age"}}};
  const auto result = generate(data, specs, Epsilon(1.0), 0, 42);
  ASSERT_EQ(result.synthetic.size(), 1u);
  EXPECT_TRUE(result.synthetic[0].data.empty());
  EXPECT_NE(result.report.to_text().find("spec.0.rows: 0"), std::string::npos);
}

TEST(GenerateTest, SingleSpecSpendsWholeBudget) {
  const auto data = testing::random_dataset(30'000, 2);
  const std::vector<MarginalSpec> specs = {{{"Age"}}};
  const auto result = generate(data, specs, Epsilon(1.0), 1000, 42);
  EXPECT_EQ(result.accountant.spent(), 1.0);
  ASSERT_EQ(result.report.specs.size(), 1u);
  EXPECT_EQ(result.report.specs[0].epsilon, 1.0);
  EXPECT_DOUBLE_EQ(result.report.specs[0].expected_l1_noise, 100.0);
}

TEST(GenerateTest, EvenSplitAcrossSpecs) {
  const auto data = testing::random_dataset(1000, 3);
  const std::vector<MarginalSpec> specs = {{{"Age"}}, {{"Age", "Job"}}};
  const auto result = generate(data, specs, Epsilon(1.0), 250, 42);
  ASSERT_EQ(result.report.ledger.size(), 2u);
  EXPECT_EQ(result.report.ledger[0].epsilon, 0.5);
  EXPECT_EQ(result.report.ledger[1].epsilon, 0.5);
  EXPECT_NEAR(result.report.spent, 1.0, 1e-9);
  // Shape contract: each output has exactly its spec's columns and n rows.
  ASSERT_EQ(result.synthetic.size(), 2u);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = result.synthetic[i].data;
    EXPECT_EQ(s.num_rows(), 250u);
    ASSERT_EQ(s.num_columns(), specs[i].columns.size());
    for (std::size_t c = 0; c < s.num_columns(); ++c) EXPECT_EQ(s.schema()[c].name(), specs[i].columns[c]);
    EXPECT_EQ(result.synthetic[i].provenance.epsilon, 0.5);
    EXPECT_EQ(result.synthetic[i].provenance.seed, 42u);
  }
}

TEST(GenerateTest, ManySpecsSumToBudget) {
  const auto data = testing::random_dataset(100, 4);
  const std::vector<MarginalSpec> specs(7, MarginalSpec{{"Job"}});
  const auto result = generate(data, specs, Epsilon(1.0), 5, 1);
  double sum = 0.0;
  for (const auto& e : result.report.ledger) sum += e.epsilon;
  EXPECT_NEAR(sum, 1.0, 1e-9);
  EXPECT_LE(result.accountant.spent(), 1.0);
}

TEST(GenerateTest, SeededOutputsAreBitwiseIdentical) {
  const auto data = testing::random_dataset(2000, 5);
  const std::vector<MarginalSpec> specs = {{{"Age"}}, {{"Job", "Age"}}};
  const auto a = generate(data, specs, Epsilon(0.8), 700, 123);
  const auto b = generate(data, specs, Epsilon(0.8), 700, 123);
  const auto c = generate(data, specs, Epsilon(0.8), 700, 124);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    EXPECT_EQ(csv_of(a.synthetic[i].data), csv_of(b.synthetic[i].data));
  }
  EXPECT_EQ(a.report.to_text(), b.report.to_text());
  EXPECT_NE(csv_of(a.synthetic[0].data), csv_of(c.synthetic[0].data));
}

TEST(GenerateTest, ErrorsLeaveNothingCharged) {
  const auto data = testing::random_dataset(10, 6);
  const std::vector<MarginalSpec> too_big = {{{"Age"}}, {{"Age", "Job"}}};
  EXPECT_THROW(generate(data, too_big, Epsilon(1.0), 10, 1, 500), CapacityError);
  const std::vector<MarginalSpec> unknown = {{{"Age"}}, {{"Height"}}};
  EXPECT_THROW(generate(data, unknown, Epsilon(1.0), 10, 1), ArgumentError);
  EXPECT_THROW(generate(data, std::vector<MarginalSpec>{}, Epsilon(1.0), 10, 1), ArgumentError);
}

TEST(GenerateTest, ReportSerializations) {
  const auto data = testing::random_dataset(300, 7);
  const std::vector<MarginalSpec> specs = {{{"Age", "Job"}}};
  const auto result = generate(data, specs, Epsilon(0.25), 20, 9);
  const auto text = result.report.to_text();
  for (const char* key : {"source: random", "seed: 9", "total_epsilon: 0.25", "spec.0.columns: Age,Job",
                          "spec.0.cells: 1400", "spec.0.clipped_mass_fraction: ", "ledger.0: ",
                          "spent: 0.25"}) {
    EXPECT_NE(text.find(key), std::string::npos) << key;
  }
  const auto j = result.report.to_json();
  EXPECT_EQ(j["specs"][0]["cells"], 1400);
  EXPECT_DOUBLE_EQ(j["spent"].get<double>(), 0.25);
  const double clipped = j["specs"][0]["clipped_mass_fraction"].get<double>();
  EXPECT_GT(clipped, 0.0);  // ~0.2 rows per cell: plenty of negative noise
  EXPECT_LT(clipped, 1.0);
}

// Median total L1 error of a noisy 100-bin marginal over 20 seeds.
double median_l1(const TabularDataset& data, const MarginalSpec& spec, double eps) {
  const auto table = build_marginal(data, spec);
  std::vector<double> errs;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    PrivacyAccountant acc{Epsilon(eps)};
    auto gen = derive_rng(seed, 17);
    errs.push_back(utility_l1(table, privatize_marginal(table, Epsilon(eps), acc, gen)));
  }
  return testing::median(errs);
}

TEST(UtilityTest, ErrorShrinksAsEpsilonGrows) {
  const auto data = testing::random_dataset(5000, 8);
  const double e05 = median_l1(data, {{"Age"}}, 0.5);
  const double e1 = median_l1(data, {{"Age"}}, 1.0);
  const double e2 = median_l1(data, {{"Age"}}, 2.0);
  EXPECT_GT(e05, e1);
  EXPECT_GT(e1, e2);
}

TEST(UtilityTest, TwoWayTableRecoversOneWayLessAccurately) {
  const auto data = testing::random_dataset(5000, 9);
  const auto age = build_marginal(data, {{"Age"}});
  const auto both = build_marginal(data, {{"Age", "Job"}});
  const std::size_t keep_age[] = {0};
  std::vector<double> direct, recovered;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto gen = derive_rng(seed, 3);
    PrivacyAccountant a{Epsilon(1.0)}, b{Epsilon(1.0)};
    direct.push_back(utility_l1(age, privatize_marginal(age, Epsilon(1.0), a, gen)));
    const auto noisy2 = privatize_marginal(both, Epsilon(1.0), b, gen);
    const auto summed = project<double>(both.dims(), noisy2.noisy_counts, keep_age);
    recovered.push_back(utility_l1(age, NoisyMarginal{age.grid(), summed, Epsilon(1.0), 1.0}));
  }
  EXPECT_GT(testing::median(recovered), testing::median(direct));
}

}  // namespace
}  // namespace dpsynth
