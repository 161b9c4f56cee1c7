#include <doctest.h>

#include <cmath>
#include <set>

#include "i2pflow/errors.hpp"
#include "i2pflow/preprocess.hpp"
#include "i2pflow/rng.hpp"
#include "test_support.hpp"

using namespace i2pflow;

namespace {

// 3-feature dataset: f0 duration, f1 flag count, f2 packet count.
Dataset rules_fixture() {
  // rows: ok, missing f0, duration -5, ok, flag 9 > packets 4, ok
  Dataset ds = testsup::make_dataset(
      {
          {1.0, 1.0, 10.0},
          {0.0, 0.0, 10.0},
          {-5.0, 1.0, 10.0},
          {2.0, 2.0, 10.0},
          {3.0, 9.0, 4.0},
          {4.0, 0.0, 10.0},
      },
      {0, 0, 1, 1, 0, 1});
  ds.rows[1].record.missing = {0};
  return ds;
}

CleanRules full_rules() {
  CleanRules rules;
  rules.critical_features = {0, 1, 2};
  rules.duration_feature = 0;
  rules.flag_features = {1};
  rules.packet_count_features = {2};
  return rules;
}

}  // namespace

TEST_SUITE("preprocess") {

TEST_CASE("clean applies rules in order with first-fail attribution") {
  const auto [cleaned, report] = clean(rules_fixture(), full_rules());
  CHECK(report.dropped_missing == 1);
  CHECK(report.dropped_negative_duration == 1);
  CHECK(report.dropped_invalid_flags == 1);
  CHECK(report.retained == 3);
  CHECK(report.total() == 6);
  CHECK(cleaned.size() == 3);
  CHECK(cleaned.rows[0].record.values[0] == 1.0);
  CHECK(cleaned.rows[1].record.values[0] == 2.0);
  CHECK(cleaned.rows[2].record.values[0] == 4.0);
}

TEST_CASE("clean fixture with missing-critical and negative-duration only") {
  // 6 rows, 1 missing-critical, 1 negative-duration -> 4 retained, (1,1,0,4).
  Dataset ds = testsup::make_dataset(
      {{1.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, {-2.0, 0.0, 0.0}, {2.0, 0.0, 0.0}, {3.0, 0.0, 0.0}, {4.0, 0.0, 0.0}},
      {0, 0, 1, 1, 0, 1});
  ds.rows[1].record.missing = {0};
  CleanRules rules;
  rules.critical_features = {0};
  rules.duration_feature = 0;
  const auto [cleaned, report] = clean(ds, rules);
  CHECK(report.dropped_missing == 1);
  CHECK(report.dropped_negative_duration == 1);
  CHECK(report.dropped_invalid_flags == 0);
  CHECK(report.retained == 4);
}

TEST_CASE("clean is idempotent") {
  const auto [once, report1] = clean(rules_fixture(), full_rules());
  const auto [twice, report2] = clean(once, full_rules());
  CHECK(once == twice);
  CHECK(report2.retained == once.size());
  CHECK(report2.dropped_missing == 0);
  CHECK(report2.dropped_negative_duration == 0);
  CHECK(report2.dropped_invalid_flags == 0);
}

TEST_CASE("clean rejects rules referencing absent features") {
  CleanRules rules;
  rules.duration_feature = 9;
  CHECK_THROWS_AS((void)clean(rules_fixture(), rules), SchemaError);
  CleanRules flags_only;
  flags_only.flag_features = {1};
  CHECK_THROWS_AS((void)clean(rules_fixture(), flags_only), SchemaError);
}

TEST_CASE("prune_constant removes exactly the constant features") {
  Dataset ds = testsup::make_dataset({{1.0, 7.0, 3.0}, {2.0, 7.0, 4.0}, {3.0, 7.0, 5.0}}, {0, 1, 0});
  const FeatureMask mask = prune_constant(ds);
  CHECK(mask.removed_constant == std::vector<std::size_t>{1});
  CHECK(mask.retained == std::vector<std::size_t>{0, 2});

  Dataset distinct = testsup::make_dataset({{1.0, 2.0}, {3.0, 4.0}}, {0, 1});
  CHECK(prune_constant(distinct).removed_constant.empty());
}

TEST_CASE("prune_constant ignores missing cells when comparing") {
  Dataset ds = testsup::make_dataset({{7.0, 1.0}, {0.0, 2.0}, {7.0, 3.0}}, {0, 1, 0});
  ds.rows[1].record.missing = {0};  // observed values of f0 are {7, 7}
  const FeatureMask mask = prune_constant(ds);
  CHECK(mask.removed_constant == std::vector<std::size_t>{0});
}

TEST_CASE("mask partitions the feature space") {
  Dataset ds = testsup::make_dataset(
      {{1.0, 7.0, 2.0, 2.0}, {2.0, 7.0, 4.0, 4.0}, {3.0, 7.0, 6.0, 6.0}, {4.0, 7.0, 8.0, 8.0}}, {0, 1, 0, 1});
  FeatureMask mask = prune_constant(ds);
  mask = prune_correlated(ds, mask);
  CHECK(mask.retained.size() + mask.removed_constant.size() + mask.removed_correlated.size() ==
        ds.feature_count());
}

TEST_CASE("prune_correlated removes an affine duplicate with correlation 1") {
  // f1 = 2*f0 + 1
  Dataset ds = testsup::make_dataset({{1.0, 3.0}, {2.0, 5.0}, {3.0, 7.0}, {4.0, 9.0}}, {0, 1, 0, 1});
  const FeatureMask mask = prune_correlated(ds, prune_constant(ds));
  CHECK(mask.retained == std::vector<std::size_t>{0});
  REQUIRE(mask.removed_correlated.size() == 1);
  CHECK(mask.removed_correlated[0].removed == 1);
  CHECK(mask.removed_correlated[0].kept == 0);
  CHECK(mask.removed_correlated[0].correlation == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("independent pseudo-random columns stay unpruned") {
  Rng rng(7);
  std::vector<std::vector<double>> values;
  std::vector<int> labels;
  std::vector<double> col_a;
  std::vector<double> col_b;
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform_real();
    const double b = rng.uniform_real();
    values.push_back({a, b});
    labels.push_back(i % 2);
    col_a.push_back(a);
    col_b.push_back(b);
  }
  const double r_ref = testsup::reference_pearson(col_a, col_b);
  CHECK(std::abs(r_ref) < 0.2);  // far below the 0.95 threshold
  const Dataset ds = testsup::make_dataset(values, labels);
  const auto r_impl = pearson(ds, 0, 1);
  REQUIRE(r_impl.has_value());
  CHECK(*r_impl == doctest::Approx(r_ref).epsilon(1e-9));
  const FeatureMask mask = prune_correlated(ds, prune_constant(ds));
  CHECK(mask.retained.size() == 2);
}

TEST_CASE("greedy keep-first removes later duplicates against the first") {
  // A = B = C
  Dataset ds = testsup::make_dataset({{1.0, 1.0, 1.0}, {2.0, 2.0, 2.0}, {5.0, 5.0, 5.0}}, {0, 1, 0});
  const FeatureMask mask = prune_correlated(ds, prune_constant(ds));
  CHECK(mask.retained == std::vector<std::size_t>{0});
  REQUIRE(mask.removed_correlated.size() == 2);
  CHECK(mask.removed_correlated[0].removed == 1);
  CHECK(mask.removed_correlated[0].kept == 0);
  CHECK(mask.removed_correlated[1].removed == 2);
  CHECK(mask.removed_correlated[1].kept == 0);
}

TEST_CASE("fit_scaler population formula") {
  SUBCASE("two-point symmetric column") {
    const Dataset ds = testsup::make_dataset({{0.0, 0}, {2.0, 0}});
    FeatureMask mask;
    mask.feature_count = 1;
    mask.retained = {0};
    const ScalerParams params = fit_scaler(ds, mask);
    CHECK(params.means[0] == doctest::Approx(1.0));
    CHECK(params.stds[0] == doctest::Approx(1.0));
    const Matrix scaled = apply_scaler(ds, params, mask);
    CHECK(scaled.at(0, 0) == doctest::Approx(-1.0));
    CHECK(scaled.at(1, 0) == doctest::Approx(1.0));
  }
  SUBCASE("three-point column") {
    const Dataset ds = testsup::make_dataset({{1.0, 0}, {2.0, 0}, {3.0, 0}});
    FeatureMask mask;
    mask.feature_count = 1;
    mask.retained = {0};
    const ScalerParams params = fit_scaler(ds, mask);
    CHECK(params.means[0] == doctest::Approx(2.0));
    CHECK(params.stds[0] == doctest::Approx(std::sqrt(2.0 / 3.0)));
    const Matrix scaled = apply_scaler(ds, params, mask);
    CHECK(scaled.at(0, 0) == doctest::Approx((1.0 - 2.0) / std::sqrt(2.0 / 3.0)));
  }
}

TEST_CASE("scaling train data recenters it to mean 0 and population std 1") {
  Rng rng(11);
  std::vector<std::vector<double>> values;
  std::vector<int> labels;
  for (int i = 0; i < 500; ++i) {
    values.push_back({rng.normal(5.0, 3.0), rng.normal(-2.0, 0.5)});
    labels.push_back(i % 2);
  }
  const Dataset ds = testsup::make_dataset(values, labels);
  FeatureMask mask;
  mask.feature_count = 2;
  mask.retained = {0, 1};
  const ScalerParams params = fit_scaler(ds, mask);
  const Matrix scaled = apply_scaler(ds, params, mask);
  for (std::size_t f = 0; f < 2; ++f) {
    double mean = 0.0;
    for (std::size_t i = 0; i < scaled.rows; ++i) mean += scaled.at(i, f);
    mean /= static_cast<double>(scaled.rows);
    double var = 0.0;
    for (std::size_t i = 0; i < scaled.rows; ++i) var += (scaled.at(i, f) - mean) * (scaled.at(i, f) - mean);
    var /= static_cast<double>(scaled.rows);
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(var - 1.0) < 1e-9);
  }
}

TEST_CASE("apply_scaler with identity params is the identity transform") {
  const Dataset ds = testsup::make_dataset({{3.5, 0}, {-1.0, 1}});
  FeatureMask mask;
  mask.feature_count = 1;
  mask.retained = {0};
  ScalerParams params;
  params.means = {0.0};
  params.stds = {1.0};
  const Matrix scaled = apply_scaler(ds, params, mask);
  CHECK(scaled.at(0, 0) == 3.5);
  CHECK(scaled.at(1, 0) == -1.0);
}

TEST_CASE("test data keeps the train-fitted transform (no refit)") {
  const Dataset train = testsup::make_dataset({{0.0, 0}, {2.0, 0}, {1.0, 0}, {3.0, 0}});
  FeatureMask mask;
  mask.feature_count = 1;
  mask.retained = {0};
  const ScalerParams params = fit_scaler(train, mask);
  // Test column shifted +10 from the train distribution.
  const Dataset test = testsup::make_dataset({{10.0, 0}, {12.0, 0}, {11.0, 0}, {13.0, 0}});
  const Matrix scaled = apply_scaler(test, params, mask);
  double mean = 0.0;
  for (std::size_t i = 0; i < scaled.rows; ++i) mean += scaled.at(i, 0);
  mean /= static_cast<double>(scaled.rows);
  CHECK(mean == doctest::Approx(10.0 / params.stds[0]).epsilon(1e-9));
}

TEST_CASE("leakage guard: scaler params ignore test rows entirely") {
  Dataset ds = testsup::make_dataset({{1.0, 0}, {2.0, 0}, {3.0, 1}, {4.0, 1}, {5.0, 0}, {6.0, 1},
                                      {7.0, 0}, {8.0, 1}, {9.0, 0}, {10.0, 1}});
  SplitSpec spec;
  spec.test_fraction = 0.2;
  spec.seed = 42;
  auto [train, test] = stratified_split(ds, spec);
  FeatureMask mask;
  mask.feature_count = 1;
  mask.retained = {0};
  const ScalerParams before = fit_scaler(train, mask);
  for (auto& row : test.rows) row.record.values[0] += 1e6;  // perturb every test row
  const ScalerParams after = fit_scaler(train, mask);
  CHECK(before == after);
}

TEST_CASE("fit_scaler errors on zero variance") {
  const Dataset ds = testsup::make_dataset({{7.0, 0}, {7.0, 1}});
  FeatureMask mask;
  mask.feature_count = 1;
  mask.retained = {0};
  CHECK_THROWS_AS((void)fit_scaler(ds, mask), TrainError);
}

TEST_CASE("stratified_split: exact arithmetic on a single stratum") {
  std::vector<std::pair<double, int>> rows;
  for (int i = 0; i < 10; ++i) rows.push_back({static_cast<double>(i), 0});
  rows.push_back({100.0, 1});
  rows.push_back({101.0, 1});
  const Dataset ds = testsup::make_dataset(rows);
  SplitSpec spec;
  spec.test_fraction = 0.2;
  auto [train, test] = stratified_split(ds, spec);
  const auto test_counts = class_counts(test);
  CHECK(test_counts[0] == 2);  // round(10 * 0.2)
  CHECK(train.size() + test.size() == ds.size());
}

TEST_CASE("stratified_split is a deterministic partition") {
  Rng rng(3);
  std::vector<std::pair<double, int>> rows;
  for (int i = 0; i < 200; ++i) rows.push_back({rng.uniform_real(), i < 150 ? 0 : 1});
  const Dataset ds = testsup::make_dataset(rows);
  SplitSpec spec;
  spec.test_fraction = 0.25;
  spec.seed = 42;
  auto [train1, test1] = stratified_split(ds, spec);
  auto [train2, test2] = stratified_split(ds, spec);
  CHECK(train1 == train2);
  CHECK(test1 == test2);
  CHECK(train1.size() + test1.size() == 200);
  // Disjointness: every row value is unique, so multiset union equality
  // follows from the counts plus value-level disjointness.
  std::set<double> train_vals;
  for (const auto& r : train1.rows) train_vals.insert(r.record.values[0]);
  for (const auto& r : test1.rows) CHECK(train_vals.count(r.record.values[0]) == 0);

  SplitSpec other = spec;
  other.seed = 43;
  auto [train3, test3] = stratified_split(ds, other);
  CHECK(test3.size() == test1.size());
  CHECK_FALSE(test3 == test1);  // different seed, different assignment
}

TEST_CASE("stratified_split keeps per-class test counts at round(n_c * fraction)") {
  Rng rng(9);
  for (const double fraction : {0.1, 0.2, 0.33}) {
    std::vector<std::pair<double, int>> rows;
    const int n0 = 157;
    const int n1 = 43;
    for (int i = 0; i < n0 + n1; ++i) rows.push_back({rng.uniform_real(), i < n0 ? 0 : 1});
    const Dataset ds = testsup::make_dataset(rows);
    SplitSpec spec;
    spec.test_fraction = fraction;
    auto [train, test] = stratified_split(ds, spec);
    const auto counts = class_counts(test);
    CHECK(counts[0] == static_cast<std::size_t>(std::floor(n0 * fraction + 0.5)));
    CHECK(counts[1] == static_cast<std::size_t>(std::floor(n1 * fraction + 0.5)));
  }
}

TEST_CASE("stratified_split rejects a stratum smaller than 2") {
  const Dataset ds = testsup::make_dataset({{1.0, 0}, {2.0, 0}, {3.0, 1}});
  SplitSpec spec;
  CHECK_THROWS_AS((void)stratified_split(ds, spec), TrainError);
}

TEST_CASE("undersample_majority balances to the minority count deterministically") {
  const Dataset ds = testsup::make_dataset(
      {{1.0, 0}, {2.0, 0}, {3.0, 0}, {4.0, 0}, {5.0, 0}, {6.0, 1}, {7.0, 1}});
  const Dataset balanced = undersample_majority(ds, 42);
  const auto counts = class_counts(balanced);
  CHECK(counts[0] == 2);
  CHECK(counts[1] == 2);
  const Dataset again = undersample_majority(ds, 42);
  CHECK(balanced == again);
  const Dataset other_seed = undersample_majority(ds, 43);
  CHECK(class_counts(other_seed)[0] == 2);
}

TEST_CASE("undersample_majority leaves balanced input untouched") {
  const Dataset ds = testsup::make_dataset({{1.0, 0}, {2.0, 1}, {3.0, 0}, {4.0, 1}});
  CHECK(undersample_majority(ds, 1) == ds);
}

TEST_CASE("class_weights formula and scale_pos_weight companion") {
  // Split counts from the phase-1 training set: 129,272 normal / 18,366 I2P.
  const auto w = class_weights_from_counts(129272, 18366);
  CHECK(w[0] == doctest::Approx(0.5710).epsilon(1e-4));
  CHECK(w[1] == doctest::Approx(4.0193).epsilon(1e-4));
  // Weighted class totals match.
  CHECK(w[0] * 129272.0 == doctest::Approx(w[1] * 18366.0).epsilon(1e-12));
  CHECK(scale_pos_weight_from_counts(129272, 18366) == doctest::Approx(7.039).epsilon(1e-3));

  const Dataset balanced = testsup::make_dataset({{1.0, 0}, {2.0, 1}});
  const auto bw = class_weights(balanced);
  CHECK(bw[0] == 1.0);
  CHECK(bw[1] == 1.0);
}

TEST_CASE("artifacts serialize and parse back exactly") {
  PreprocessArtifacts a;
  a.feature_names = {"dur", "bytes", "flags"};
  a.cleaning = {3, 1, 2, 94};
  a.mask.feature_count = 3;
  a.mask.retained = {0, 2};
  a.mask.removed_constant = {1};
  a.mask.removed_correlated = {{2, 0, 0.987654321012345678}};
  a.mask.retained = {0};  // after correlation pruning
  a.scaler.means = {1.0 / 3.0};
  a.scaler.stds = {0.70710678118654752};
  a.split.test_fraction = 0.2;
  a.split.seed = 42;
  const std::string text = artifacts_text(a);
  const PreprocessArtifacts b = parse_artifacts(text, "test");
  CHECK(a.feature_names == b.feature_names);
  CHECK(a.cleaning == b.cleaning);
  CHECK(a.mask == b.mask);
  CHECK(a.scaler == b.scaler);
  CHECK(a.split.test_fraction == b.split.test_fraction);
  CHECK(a.split.seed == b.split.seed);
  CHECK(artifacts_text(b) == text);
}

}  // TEST_SUITE
