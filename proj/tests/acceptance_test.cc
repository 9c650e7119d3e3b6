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
// Acceptance suite: one PASS / FAIL / SKIP line per criterion. Exit status is
// nonzero iff any criterion fails. Tolerances and time limits live here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dpsynth/adult.h"
#include "dpsynth/dpsynth.h"
#include "test_util.h"

namespace {

using namespace dpsynth;
namespace fs = std::filesystem;

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome pass(std::string d) { return {Status::kPass, std::move(d)}; }
Outcome fail(std::string d) { return {Status::kFail, std::move(d)}; }

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;
  std::function<Outcome()> run;
};

std::string fmt(double x, int precision = 6) {
  std::ostringstream s;
  s.precision(precision);
  s << x;
  return s.str();
}

// 1. Census crosstab head.
Outcome census_crosstab() {
  fs::path path;
  if (const char* d = std::getenv("DPSYNTH_CACHE_DIR"); d && *d) {
    path = fs::path(d) / "adult.csv";
  } else if (const char* h = std::getenv("HOME"); h && *h) {
    path = fs::path(h) / ".cache/dpsynth/adult.csv";
  }
  if (path.empty() || !fs::exists(path)) {
    return {Status::kSkip, "no census file; run `dpsynth fetch-adult` first"};
  }
  const auto data = ingest_csv_file(path.string(), adult::schema()).dataset;
  const auto table = build_marginal(data, {{"Age", "Occupation"}});
  struct Expect {
    std::int64_t age;
    const char* occupation;
    std::uint64_t count;
  };
  const Expect expected[] = {{17, "Adm-clerical", 23},  {18, "Adm-clerical", 55},
                             {19, "Adm-clerical", 102}, {20, "Adm-clerical", 117},
                             {21, "Adm-clerical", 121}, {18, "Sales", 115}};
  std::string got;
  bool ok = true;
  for (const auto& e : expected) {
    const auto c = table.at_values({CellValue{e.age}, CellValue{std::string(e.occupation)}});
    got += "(" + std::to_string(e.age) + "," + e.occupation + ")=" + std::to_string(c) + " ";
    ok = ok && c == e.count;
  }
  return ok ? pass(got) : fail(got);
}

// 2. Laplace sampler moments and KS.
Outcome laplace_statistics() {
  constexpr int kDraws = 100'000;
  auto gen = make_rng(20260101);
  std::vector<double> xs(kDraws);
  for (auto& x : xs) x = laplace_sample(1.0, gen);
  const double m = testing::mean(xs);
  const double v = testing::variance(xs);
  const double ks =
      testing::ks_statistic(xs, [](double x) { return testing::oracle_laplace_cdf(x, 0.0, 1.0); });
  const double crit = testing::ks_critical_1pct(xs.size());
  const std::string d = "mean=" + fmt(m) + " var=" + fmt(v) + " ks=" + fmt(ks) + " crit=" + fmt(crit);
  return std::fabs(m) <= 0.03 && std::fabs(v - 2.0) <= 0.15 && ks < crit ? pass(d) : fail(d);
}

DpAuditReport tiny_audit(double sensitivity, std::uint64_t seed) {
  LaplaceMarginalMechanism mech{{{"Age"}}, Epsilon(1.0), sensitivity};
  auto gen = make_rng(seed);
  const auto d = testing::constant_ages(3);
  const auto d_prime = testing::constant_ages(2);
  const auto events = tail_events(build_marginal(d, {{"Age"}}), build_marginal(d_prime, {{"Age"}}),
                                  {1.5, 2.5, 3.5});
  return audit_dp(mech, d, d_prime, events, Epsilon(1.0), 1'000'000, 0.2, gen);
}

// 3. The real mechanism passes the audit and its estimates cover the closed form.
Outcome audit_pass() {
  const auto report = tiny_audit(1.0, 31);
  bool covered = true;
  std::string d;
  for (const auto& v : report.events) {
    const double t = v.event.upper;
    const double truth_d = testing::oracle_laplace_cdf(t, 3.0, 1.0);
    const double truth_dp = testing::oracle_laplace_cdf(t, 2.0, 1.0);
    covered = covered && v.on_d.covers(truth_d) && v.on_d_prime.covers(truth_dp);
    d += "t=" + fmt(t, 3) + ":" + fmt(v.on_d.p, 4) + "/" + fmt(v.on_d_prime.p, 4) + " ";
  }
  d += "verdict=" + std::string(report.pass ? "pass" : "fail");
  return report.pass && covered ? pass(d) : fail(d + " covered=" + (covered ? "yes" : "no"));
}

// 4. Halving the noise scale is caught.
Outcome audit_power() {
  const auto report = tiny_audit(0.5, 41);
  double worst = 0.0;
  for (const auto& v : report.events) worst = std::max(worst, v.ratio_lower_bound);
  const std::string d = "max conservative ratio=" + fmt(worst) + " bound=" + fmt(report.bound) +
                        " verdict=" + (report.pass ? "pass" : "fail");
  return !report.pass ? pass(d) : fail(d);
}

// 5. Range queries against a row-scan oracle.
Outcome range_queries() {
  const auto data = testing::random_dataset(10'000, 5);
  const auto one_way = build_marginal(data, {{"Age"}});
  std::mt19937_64 gen(55);
  std::uniform_int_distribution<std::int64_t> bound(-10, 110);
  int mismatches = 0;
  for (int q = 0; q < 1000; ++q) {
    std::int64_t lo = bound(gen), hi = bound(gen);
    if (lo > hi) std::swap(lo, hi);
    const auto oracle = testing::oracle_range_count(data, "Age", lo, hi);
    mismatches += range_query(data, "Age", lo, hi) != oracle;
    mismatches += range_query(one_way, lo, hi) != oracle;
  }
  const std::string d = "2000 answers, mismatches=" + std::to_string(mismatches);
  return mismatches == 0 ? pass(d) : fail(d);
}

double median_l1(const ContingencyTable& table, double eps) {
  std::vector<double> errs;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    PrivacyAccountant acc{Epsilon(eps)};
    auto gen = derive_rng(seed, 6);
    errs.push_back(utility_l1(table, privatize_marginal(table, Epsilon(eps), acc, gen)));
  }
  return testing::median(errs);
}

// 6. L1 noise band.
Outcome utility_band() {
  const auto table = build_marginal(testing::random_dataset(5000, 6), {{"Age"}});
  const double at1 = median_l1(table, 1.0);
  const double at2 = median_l1(table, 2.0);
  const double ratio = at2 / at1;
  const std::string d = "median eps=1: " + fmt(at1) + " eps=2: " + fmt(at2) + " ratio=" + fmt(ratio);
  return at1 >= 50.0 && at1 <= 200.0 && ratio >= 0.35 && ratio <= 0.7 ? pass(d) : fail(d);
}

// 7. A one-way marginal read off a noisy two-way table is worse than noising it directly.
Outcome two_way_degradation() {
  const auto data = testing::random_dataset(5000, 7);
  const auto age = build_marginal(data, {{"Age"}});
  const auto both = build_marginal(data, {{"Age", "Job"}});
  const std::size_t keep_age[] = {0};
  std::vector<double> direct, recovered;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto gen = derive_rng(seed, 7);
    PrivacyAccountant a{Epsilon(1.0)}, b{Epsilon(1.0)};
    direct.push_back(utility_l1(age, privatize_marginal(age, Epsilon(1.0), a, gen)));
    const auto noisy = privatize_marginal(both, Epsilon(1.0), b, gen);
    const auto summed = project<double>(both.dims(), noisy.noisy_counts, keep_age);
    recovered.push_back(utility_l1(age, NoisyMarginal{age.grid(), summed, Epsilon(1.0), 1.0}));
  }
  const double md = testing::median(direct), mr = testing::median(recovered);
  const std::string d = "median direct=" + fmt(md) + " via two-way=" + fmt(mr);
  return mr > md ? pass(d) : fail(d);
}

std::string csv_of(const TabularDataset& d) {
  std::ostringstream out;
  write_csv(out, d);
  return out.str();
}

// 8. Postprocessing, sampling determinism, and free resampling.
Outcome pipeline_invariants() {
  std::mt19937_64 gen(88);
  std::normal_distribution<double> noise(0.0, 5.0);
  std::uniform_int_distribution<int> size(1, 200);
  int bad = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> counts(size(gen));
    const bool all_negative = i % 10 == 0;
    for (auto& c : counts) c = all_negative ? -std::fabs(noise(gen)) - 1e-3 : noise(gen);
    const auto w = postprocess_weights(counts);
    double sum = 0.0;
    for (double x : w) {
      bad += x < 0.0;
      sum += x;
    }
    bad += std::fabs(sum - 1.0) > 1e-9;
    if (all_negative) {
      for (double x : w) bad += x != 1.0 / static_cast<double>(w.size());
    }
  }

  const auto data = testing::random_dataset(2000, 8);
  const MarginalSpec spec{{"Age", "Job"}};
  auto run_once = [&] {
    return csv_of(generate(data, std::span(&spec, 1), Epsilon(1.0), 1000, 42)
                      .synthetic.front()
                      .data);
  };
  const bool deterministic = run_once() == run_once();

  PrivacyAccountant acc{Epsilon(1.0)};
  auto rng = make_rng(9);
  const auto probs = postprocess(privatize_marginal(build_marginal(data, spec), Epsilon(1.0), acc, rng));
  const auto ledger_before = acc.to_json();
  for (int i = 0; i < 5; ++i) sample_rows(probs, 1000, rng);
  const bool free_resampling = acc.to_json() == ledger_before;

  const std::string d = "postprocess violations=" + std::to_string(bad) +
                        " deterministic=" + (deterministic ? "yes" : "no") +
                        " ledger unchanged=" + (free_resampling ? "yes" : "no");
  return bad == 0 && deterministic && free_resampling ? pass(d) : fail(d);
}

// 9. Accountant safety under random charge sequences.
Outcome accountant_safety() {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> budget(0.01, 10.0);
  std::uniform_real_distribution<double> frac(0.0, 0.7);
  std::uniform_int_distribution<int> steps(1, 30);
  int violations = 0, refusals = 0;
  for (int seq = 0; seq < 10'000; ++seq) {
    PrivacyAccountant acc{Epsilon(budget(gen))};
    const int n = steps(gen);
    for (int s = 0; s < n; ++s) {
      const double eps = std::max(1e-12, frac(gen) * acc.budget());
      const auto before = acc.to_json();
      if (!acc.try_charge("q", Epsilon(eps))) {
        ++refusals;
        violations += acc.to_json() != before;
      }
      violations += acc.spent() > acc.budget();
    }
  }
  const std::string d = "violations=" + std::to_string(violations) +
                        " refusals exercised=" + std::to_string(refusals);
  return violations == 0 && refusals > 0 ? pass(d) : fail(d);
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "census Age x Occupation crosstab head", 5.0, census_crosstab},
      {2, "Laplace sampler statistics", 1.0, laplace_statistics},
      {3, "DP audit passes for the Laplace marginal", 60.0, audit_pass},
      {4, "DP audit detects halved noise", 60.0, audit_power},
      {5, "exact range queries match row scan", 5.0, range_queries},
      {6, "L1 noise utility band", 10.0, utility_band},
      {7, "two-way table degrades one-way accuracy", 10.0, two_way_degradation},
      {8, "pipeline invariants", 5.0, pipeline_invariants},
      {9, "accountant safety", 5.0, accountant_safety},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (o.status != Status::kSkip && secs > c.limit_seconds) {
      o = fail(o.detail + " [over time limit " + fmt(c.limit_seconds, 3) + " s]");
    }
    const char* tag = o.status == Status::kPass ? "PASS" : o.status == Status::kFail ? "FAIL" : "SKIP";
    failures += o.status == Status::kFail;
    std::printf("[%s] criterion %d: %s (%.3f s) %s\n", tag, c.id, c.name.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
