#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "mpr/core.hpp"
#include "support.hpp"

using namespace mpr;
using testing::random_sign_set;
using testing::witness_gap;

TEST_SUITE_BEGIN("core");

TEST_CASE("mean difference of weighted feature means") {
  const auto g = SampleSet::from_raw({{1, 0}, {1, 0}});
  const auto r = SampleSet::from_raw({{0, 1}, {0, 1}});
  const auto d = mean_diff_vector(g, r);
  CHECK(d.v == std::vector<double>{1.0, -1.0});
  CHECK(d.k == 2);
  CHECK(d.m == 2);

  const auto zero = mean_diff_vector(g, g);
  CHECK(zero.v == std::vector<double>{0.0, 0.0});

  const auto p = SampleSet::from_raw({{1}});
  const auto q = SampleSet::from_raw({{-1}});
  CHECK(mean_diff_vector(p, q).v == std::vector<double>{2.0});

  CHECK_THROWS_AS(mean_diff_vector(p, g), input_error);
}

TEST_CASE("linear closed form: norm of the mean difference") {
  const auto g = SampleSet::from_raw({{1, 0}, {1, 0}});
  const auto r = SampleSet::from_raw({{0, 1}, {0, 1}});
  const auto est = mpr_linear(g, r);
  CHECK(est.value == doctest::Approx(std::numbers::sqrt2).epsilon(1e-12));
  const auto& w = std::get<LinearWitness>(est.witness);
  CHECK(w.w[0] == doctest::Approx(1.0 / std::numbers::sqrt2));
  CHECK(w.w[1] == doctest::Approx(-1.0 / std::numbers::sqrt2));

  const auto same = mpr_linear(g, g);
  CHECK(same.value == 0.0);
  for (double v : std::get<LinearWitness>(same.witness).w) CHECK(v == 0.0);
}

TEST_CASE("linear closed form dominates random-direction search and is tight") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto g = random_sign_set(50, 4, 1000 + seed);
    const auto r = random_sign_set(80, 4, 2000 + seed);
    const double closed = mpr_linear(g, r).value;
    const double searched = brute_force_linear(g, r, 100000, seed);
    CHECK(searched <= closed + 1e-9);
    CHECK(searched >= 0.99 * closed);
  }
}

TEST_CASE("total variation over cells") {
  CellDistribution a{1, {{1, 0.5}, {0, 0.5}}};
  CHECK(tv_distance(a, a) == 0.0);

  CellDistribution b{1, {{1, 1.0}}};
  CHECK(tv_distance(a, b) == doctest::Approx(0.5));
  CHECK(tv_distance(b, a) == doctest::Approx(0.5));

  CellDistribution uniform{2, {{0, 0.25}, {1, 0.25}, {2, 0.25}, {3, 0.25}}};
  CellDistribution point{2, {{2, 1.0}}};
  CHECK(tv_distance(uniform, point) == doctest::Approx(0.75));

  CellDistribution other{2, {}};
  CHECK_THROWS_AS(tv_distance(a, other), input_error);
}

TEST_CASE("marginal cells count weighted projections") {
  const auto s = SampleSet::from_raw({{1, -1}, {1, 1}, {-1, 1}});
  const std::vector<int> first{0};
  const auto m0 = marginal_cells(s, first);
  CHECK(m0.mass.at(1) == doctest::Approx(2.0 / 3.0));
  CHECK(m0.mass.at(0) == doctest::Approx(1.0 / 3.0));

  const std::vector<int> both{0, 1};
  const auto m01 = marginal_cells(s, both);
  CHECK(m01.mass.size() == 3);
  for (const auto& [cell, mass] : m01.mass) CHECK(mass == doctest::Approx(1.0 / 3.0));

  CHECK_THROWS_AS(marginal_cells(s, std::vector<int>{}), input_error);
  CHECK_THROWS_AS(marginal_cells(s, std::vector<int>{7}), input_error);
}

TEST_CASE("tree closed form on a hand-computable instance") {
  const auto g = SampleSet::from_raw({{1}, {1}, {-1}});
  const auto r = SampleSet::from_raw({{-1}, {-1}});
  const auto est = mpr_tree(g, r, 1);
  CHECK(est.value == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  const auto& w = std::get<TreeWitness>(est.witness);
  CHECK(w.features == std::vector<int>{0});
  CHECK(w.leaf_signs[1] == 1);   // +1 cell: generated mass dominates
  CHECK(w.leaf_signs[0] == -1);  // -1 cell: reference mass dominates
}

TEST_CASE("tree value is zero on identical sets, first subset wins ties") {
  const auto g = random_sign_set(20, 4, 9);
  const auto est = mpr_tree(g, g, 2);
  CHECK(est.value == 0.0);
  CHECK(std::get<TreeWitness>(est.witness).features == std::vector<int>{0, 1});
}

TEST_CASE("tree closed form equals the exhaustive oracle") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const int n = 3 + static_cast<int>(seed % 3);
    const auto g = random_sign_set(30, n, 100 + seed);
    const auto r = random_sign_set(40, n, 200 + seed);
    for (int depth = 1; depth <= std::min(3, n); ++depth) {
      const auto closed = mpr_tree(g, r, depth);
      const auto [oracle_value, oracle_witness] = brute_force_tree(g, r, depth);
      CHECK(closed.value == doctest::Approx(oracle_value).epsilon(1e-13));
    }
  }
}

TEST_CASE("explicit set takes the max absolute mean difference") {
  // 70% male generated vs 50% male reference, outputs {0,1}
  std::vector<std::vector<double>> grows, rrows;
  for (int i = 0; i < 10; ++i) grows.push_back(i < 7 ? std::vector<double>{1.0, -1.0}
                                                     : std::vector<double>{-1.0, 1.0});
  for (int i = 0; i < 10; ++i) rrows.push_back(i < 5 ? std::vector<double>{1.0, -1.0}
                                                     : std::vector<double>{-1.0, 1.0});
  const auto g = SampleSet::from_raw(grows);
  const auto r = SampleSet::from_raw(rrows);

  ExplicitSet set;
  Indicator male{{{ {0, +1} }}, 0.0, 1.0};
  Indicator female{{{ {1, +1} }}, 0.0, 1.0};
  set.indicators = {male, female};

  const auto est = mpr_explicit(g, r, set);
  CHECK(est.value == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(std::get<IndicatorWitness>(est.witness).index == 0);

  CHECK(mpr_explicit(g, g, set).value == 0.0);

  // adding the negation of an indicator never changes the value
  ExplicitSet with_neg = set;
  Indicator neg_male = male;
  neg_male.out_miss = -male.out_miss;
  neg_male.out_hit = -male.out_hit;
  with_neg.indicators.push_back(neg_male);
  CHECK(mpr_explicit(g, r, with_neg).value == doctest::Approx(est.value));
}

TEST_CASE("exact population value for known distributions") {
  const AttributeSchema schema({{"kind", {"A", "B"}}});
  const ExactDistribution p(schema, {0.8, 0.2});
  const ExactDistribution r(schema, {0.5, 0.5});
  CHECK(mpr_exact(p, r, DecisionTree{1}).value == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(mpr_exact(p, p, DecisionTree{1}).value == 0.0);
  CHECK(mpr_exact(p, p, BoundedLinear{}).value == 0.0);
  CHECK(mpr_exact(p, r, BoundedLinear{}).value ==
        doctest::Approx(std::sqrt(2.0) * 0.6).epsilon(1e-12));
}

TEST_CASE("large-sample empirical value approaches the exact value") {
  const AttributeSchema schema(
      {{"a", {"x", "y"}}, {"b", {"x", "y"}}, {"c", {"x", "y"}}});
  Rng rng(31);
  std::vector<double> pw(8), rw(8);
  double ps = 0.0, rs = 0.0;
  for (int cell = 0; cell < 8; ++cell) {
    pw[cell] = rng.uniform() + 0.05;
    rw[cell] = rng.uniform() + 0.05;
    ps += pw[cell];
    rs += rw[cell];
  }
  for (int cell = 0; cell < 8; ++cell) {
    pw[cell] /= ps;
    rw[cell] /= rs;
  }
  const ExactDistribution p(schema, pw);
  const ExactDistribution r(schema, rw);
  const double exact = mpr_exact(p, r, DecisionTree{2}).value;
  const auto gs = p.sample(1000000, 77);
  const auto rsamp = r.sample(1000000, 78);
  CHECK(std::abs(mpr_tree(gs, rsamp, 2).value - exact) < 0.01);
}

TEST_CASE("sample-vs-exact reference variants agree with two-sample forms") {
  const auto schema = testing::two_binary_schema();
  const ExactDistribution r(schema, {0.25, 0.25, 0.25, 0.25});
  const auto g = r.sample(200, 5);
  // a huge reference draw approximates the exact reference
  const auto big = r.sample(400000, 6);
  CHECK(std::abs(mpr_tree(g, r, 1).value - mpr_tree(g, big, 1).value) < 0.02);
  CHECK(std::abs(mpr_linear(g, r).value - mpr_linear(g, big).value) < 0.02);
}

TEST_CASE("brute-force linear search stays below the closed form") {
  const auto g = random_sign_set(12, 3, 1);
  const auto r = random_sign_set(15, 3, 2);
  const double closed = mpr_linear(g, r).value;
  const double searched = brute_force_linear(g, r, 100000, 3);
  CHECK(searched <= closed + 1e-9);
  CHECK(searched >= 0.99 * closed);
  CHECK(brute_force_linear(g, g, 1000, 4) == 0.0);
}

TEST_CASE("brute-force tree on point masses reaches the range maximum") {
  const auto g = SampleSet::from_raw({{1}});
  const auto r = SampleSet::from_raw({{-1}});
  const auto [value, witness] = brute_force_tree(g, r, 1);
  CHECK(value == doctest::Approx(2.0).epsilon(1e-13));

  const auto s = random_sign_set(10, 2, 12);
  CHECK(brute_force_tree(s, s, 2).first == 0.0);
}

TEST_CASE("brute-force tree guard") {
  const auto g = random_sign_set(5, 12, 21);
  CHECK_THROWS_AS(brute_force_tree(g, g, 5), guard_error);
}

TEST_CASE("metric symmetry under swapping the two sets") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto g = random_sign_set(25, 4, 300 + seed);
    const auto r = random_sign_set(35, 4, 400 + seed);
    CHECK(mpr_linear(g, r).value == doctest::Approx(mpr_linear(r, g).value).epsilon(1e-12));
    CHECK(mpr_tree(g, r, 2).value == doctest::Approx(mpr_tree(r, g, 2).value).epsilon(1e-12));
  }
}

TEST_CASE("metric is invariant under row permutations") {
  const auto g = random_sign_set(30, 4, 51);
  const auto r = random_sign_set(30, 4, 52);
  std::vector<long long> perm(g.size());
  for (long long i = 0; i < g.size(); ++i) perm[i] = g.size() - 1 - i;
  const auto shuffled = g.take(perm);
  CHECK(mpr_tree(shuffled, r, 2).value == doctest::Approx(mpr_tree(g, r, 2).value));
  CHECK(mpr_linear(shuffled, r).value == doctest::Approx(mpr_linear(g, r).value));
}

TEST_CASE("tree value is nondecreasing in depth and under new attributes") {
  Rng rng(8);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto g = random_sign_set(40, 5, 500 + seed);
    const auto r = random_sign_set(40, 5, 600 + seed);
    double prev = 0.0;
    for (int depth = 1; depth <= 5; ++depth) {
      const double v = mpr_tree(g, r, depth).value;
      CHECK(v >= prev - 1e-12);
      prev = v;
    }
    // appending a feature can only widen the subset search
    auto extend = [&rng](const SampleSet& s) {
      std::vector<std::vector<double>> rows;
      for (long long i = 0; i < s.size(); ++i) {
        rows.emplace_back(s.row(i).begin(), s.row(i).end());
        rows.back().push_back(rng.sign());
      }
      return SampleSet::from_raw(rows);
    };
    CHECK(mpr_tree(extend(g), extend(r), 2).value >= mpr_tree(g, r, 2).value - 1e-12);
  }
}

TEST_CASE("triangle inequality across a third set") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto g = random_sign_set(20, 4, 700 + seed);
    const auto r = random_sign_set(25, 4, 800 + seed);
    const auto s = random_sign_set(30, 4, 900 + seed);
    CHECK(mpr_tree(g, r, 2).value <=
          mpr_tree(g, s, 2).value + mpr_tree(s, r, 2).value + 1e-12);
    CHECK(mpr_linear(g, r).value <=
          mpr_linear(g, s).value + mpr_linear(s, r).value + 1e-12);
  }
}

TEST_CASE("reported value is reproduced by re-evaluating the witness") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto g = random_sign_set(30, 4, 1100 + seed);
    const auto r = random_sign_set(20, 4, 1200 + seed);
    const auto lin = mpr_linear(g, r);
    CHECK(witness_gap(lin.witness, g, r) == doctest::Approx(lin.value).epsilon(1e-9));
    const auto tree = mpr_tree(g, r, 2);
    CHECK(witness_gap(tree.witness, g, r) == doctest::Approx(tree.value).epsilon(1e-9));
  }
}

TEST_CASE("weighted sets feed the weighted means through every route") {
  const auto g0 = random_sign_set(6, 3, 61);
  const auto r = random_sign_set(9, 3, 62);
  std::vector<double> w{0.3, 0.25, 0.2, 0.15, 0.06, 0.04};
  const auto g = g0.with_weights(w);
  const auto tree = mpr_tree(g, r, 2);
  CHECK(witness_gap(tree.witness, g, r) == doctest::Approx(tree.value).epsilon(1e-9));
  const auto lin = mpr_linear(g, r);
  CHECK(witness_gap(lin.witness, g, r) == doctest::Approx(lin.value).epsilon(1e-9));
}

TEST_CASE("values stay within the class range") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto g = random_sign_set(15, 4, 1300 + seed);
    const auto r = random_sign_set(15, 4, 1400 + seed);
    CHECK(mpr_tree(g, r, 2).value <= 2.0 + 1e-12);
    CHECK(mpr_tree(g, r, 2).value >= 0.0);
    CHECK(mpr_linear(g, r).value <= 2.0 * std::sqrt(4.0) + 1e-12);
  }
}

TEST_CASE("tree scan refuses non-sign-valued sets and out-of-range depth") {
  const auto raw = SampleSet::from_raw({{0.5, 1.0}, {1.0, -1.0}});
  const auto ok = random_sign_set(4, 2, 71);
  CHECK_THROWS_AS(mpr_tree(raw, ok, 1), input_error);
  CHECK_THROWS_AS(mpr_tree(ok, ok, 0), input_error);
  CHECK_THROWS_AS(mpr_tree(ok, ok, 3), input_error);
}

TEST_SUITE_END();
