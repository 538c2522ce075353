#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "modgrok/errors.hpp"
#include "modgrok/freq_align.hpp"

namespace modgrok {
namespace {

double omega(std::size_t k, std::size_t p) { return 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(p); }

Matrix random_orthogonal(std::size_t n, std::uint64_t seed) {
  SeededRng rng(seed);
  return svd(Matrix(n, n, rng_uniform(rng, -1.0, 1.0, n * n))).U;
}

// d_h×p matrix whose output-side rows are pure tones: Σ σ·u_i ⊗ basis row.
Matrix tonal_unembed(const FourierBasis& basis, std::size_t d_h, const std::vector<std::pair<std::size_t, double>>& tones,
                     std::uint64_t seed) {
  const Matrix q = random_orthogonal(d_h, seed);
  Matrix w(d_h, basis.p);
  std::size_t col = 0;
  for (const auto& [k, sigma] : tones) {
    for (std::size_t row : {FourierBasis::cos_row(k), FourierBasis::sin_row(k)}) {
      for (std::size_t i = 0; i < d_h; ++i)
        for (std::size_t j = 0; j < basis.p; ++j) w(i, j) += sigma * q(i, col) * basis.F(row, j);
      ++col;
    }
  }
  return w;
}

TEST(AssignPairs, RankTwoToneIsAssigned) {
  const FourierBasis basis = build_basis(29);
  const Matrix w = tonal_unembed(basis, 16, {{4, 2.0}}, 1);
  const Alignment a = assign_pairs(w, basis, 2);
  ASSERT_EQ(a.pairs.size(), 1u);
  EXPECT_EQ(a.pairs[0].k, 4u);
  EXPECT_NEAR(a.pairs[0].energy_share, 1.0, 1e-10);
  EXPECT_TRUE(a.pairs[0].assigned());
  EXPECT_FALSE(a.unpaired_component);
  EXPECT_LE(max_abs_diff(a.pairs[0].pair_matrix, w), 1e-12);
}

TEST(AssignPairs, SeveralTonesInSingularValueOrder) {
  const FourierBasis basis = build_basis(29);
  const Matrix w = tonal_unembed(basis, 16, {{4, 1.0}, {11, 3.0}, {7, 2.0}}, 2);
  const Alignment a = assign_pairs(w, basis, 6);
  ASSERT_EQ(a.pairs.size(), 3u);
  EXPECT_EQ(a.assigned_frequencies(), (std::vector<std::size_t>{11, 7, 4}));
  EXPECT_EQ(a.pairs[1].pair_index, 2u);
  EXPECT_EQ(a.pairs[1].first_component, 2u);
}

TEST(AssignPairs, InvariantUnderHiddenRotationAndSign) {
  const FourierBasis basis = build_basis(29);
  const Matrix w = tonal_unembed(basis, 16, {{4, 3.0}, {9, 1.5}}, 3);
  const Matrix rotated = matmul(random_orthogonal(16, 99), w);
  const Matrix flipped = scaled(w, -1.0);
  const auto base = assign_pairs(w, basis, 4).assigned_frequencies();
  EXPECT_EQ(assign_pairs(rotated, basis, 4).assigned_frequencies(), base);
  EXPECT_EQ(assign_pairs(flipped, basis, 4).assigned_frequencies(), base);
}

TEST(AssignPairs, OddRankLeavesTrailingComponent) {
  const FourierBasis basis = build_basis(13);
  const Matrix w = tonal_unembed(basis, 8, {{2, 2.0}, {5, 1.0}}, 4);
  const Alignment a = assign_pairs(w, basis, 3);
  EXPECT_EQ(a.pairs.size(), 1u);
  ASSERT_TRUE(a.unpaired_component);
  EXPECT_EQ(*a.unpaired_component, 2u);
}

TEST(AssignPairs, Errors) {
  const FourierBasis basis = build_basis(13);
  EXPECT_THROW(assign_pairs(Matrix(8, 12), basis, 2), ShapeError);
  EXPECT_THROW(assign_pairs(Matrix(8, 13), basis, 9), RangeError);
}

Matrix sum_signal(std::size_t p, const std::function<double(double)>& f, std::size_t k) {
  Matrix s(p, p);
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < p; ++b) s(a, b) = f(omega(k, p) * static_cast<double>(a + b));
  return s;
}

TEST(FitSumFrequency, RecoversPureCosine) {
  const FitResult r = fit_sum_frequency(sum_signal(113, [](double x) { return std::cos(x); }, 5), 5);
  EXPECT_NEAR(r.alpha, 1.0, 1e-10);
  EXPECT_NEAR(r.beta, 0.0, 1e-10);
  EXPECT_LE(r.rel_error, 1e-10);
  EXPECT_LE(r.condition_number, 10.0);
}

TEST(FitSumFrequency, RecoversPhaseShiftedMixture) {
  const FitResult r =
      fit_sum_frequency(sum_signal(31, [](double x) { return 0.3 * std::cos(x) - 1.7 * std::sin(x); }, 6), 6);
  EXPECT_NEAR(r.alpha, 0.3, 1e-10);
  EXPECT_NEAR(r.beta, -1.7, 1e-10);
  EXPECT_LE(r.rel_error, 1e-10);
}

TEST(FitSumFrequency, OrthogonalSignalHasUnitError) {
  const FitResult r = fit_sum_frequency(sum_signal(113, [](double x) { return std::cos(x); }, 2), 5);
  EXPECT_NEAR(r.alpha, 0.0, 1e-10);
  EXPECT_NEAR(r.beta, 0.0, 1e-10);
  EXPECT_NEAR(r.rel_error, 1.0, 1e-10);
}

TEST(FitSumFrequency, Errors) {
  EXPECT_THROW(fit_sum_frequency(Matrix(13, 13), 2), DegenerateFitError);
  EXPECT_THROW(fit_sum_frequency(Matrix(13, 12), 2), ShapeError);
  EXPECT_THROW(fit_sum_frequency(Matrix::identity(13), 0), InputError);
  EXPECT_THROW(fit_sum_frequency(Matrix::identity(13), 7), InputError);
}

TEST(DecideVerdict, AllClausesPass) {
  VerdictInputs in;
  in.frequency_sets.assign(5, {3, 8});
  in.alignment = Alignment{};
  PairFit f;
  f.first.rel_error = 0.01;
  f.second.rel_error = 0.02;
  in.fits = {f};
  in.full_ablation_accuracy = 0.01;
  const Verdict v = decide_verdict(in);
  EXPECT_TRUE(v.pass);
  ASSERT_EQ(v.clauses.size(), 3u);
  EXPECT_EQ(v.clauses[0].name, "frequency_agreement");
}

TEST(DecideVerdict, EachClauseCanFail) {
  VerdictInputs good;
  good.frequency_sets.assign(5, {3, 8});
  good.alignment = Alignment{};
  good.fits = {PairFit{}};
  good.full_ablation_accuracy = 0.0;
  ASSERT_TRUE(decide_verdict(good).pass);

  VerdictInputs disagree = good;
  disagree.frequency_sets[3] = {3};
  EXPECT_FALSE(decide_verdict(disagree).clauses[0].pass);

  VerdictInputs empty = good;
  empty.frequency_sets.assign(5, {});
  EXPECT_FALSE(decide_verdict(empty).pass);

  VerdictInputs bad_fit = good;
  bad_fit.fits[0].second.rel_error = 0.2;
  EXPECT_FALSE(decide_verdict(bad_fit).clauses[1].pass);

  VerdictInputs survives = good;
  survives.full_ablation_accuracy = 0.5;
  EXPECT_FALSE(decide_verdict(survives).clauses[2].pass);
  EXPECT_FALSE(decide_verdict(survives).pass);
}

Checkpoint untrained(std::size_t p, std::size_t d_h) {
  TrainConfig c;
  c.p = p;
  c.d_h = d_h;
  c.train_frac = 0.5;
  c.epochs = 1;
  c.seed = 6;
  return train(c).checkpoint;
}

TEST(Verdict, FailsNearRandomInit) {
  const Verdict v = fourier_multiplication_verdict(untrained(13, 16));
  EXPECT_FALSE(v.pass);
}

TEST(Verdict, FailsWithZeroedUnembed) {
  Checkpoint c = untrained(13, 16);
  c.params.W_fc = Matrix(16, 13);
  const Verdict v = fourier_multiplication_verdict(c);
  EXPECT_FALSE(v.pass);
  EXPECT_FALSE(v.clauses[1].pass);
  EXPECT_FALSE(v.clauses[2].pass);
  EXPECT_THROW(assign_pairs(c, build_basis(13)), DomainError);
}

TEST(AblateFrequency, UnassignedFrequencyIsInputError) {
  const Checkpoint c = untrained(13, 8);
  const FourierBasis basis = build_basis(13);
  const Alignment a = assign_pairs(c.params.W_fc, basis, 2);
  const AccuracyProbe probe(c);
  std::size_t missing = 1;
  const auto ks = a.assigned_frequencies();
  while (std::find(ks.begin(), ks.end(), missing) != ks.end()) ++missing;
  EXPECT_THROW(ablate_frequency(c.params, probe, a, {missing}), InputError);
}

TEST(AblateFrequency, RemovingEveryPairOfATonalUnembedZeroesIt) {
  Checkpoint c = untrained(13, 8);
  const FourierBasis basis = build_basis(13);
  c.params.W_fc = tonal_unembed(basis, 8, {{2, 2.0}, {5, 1.0}}, 8);
  c.params.b_fc = Vector(13, 0.0);
  c.params.b_fc[3] = 1.0;
  const Alignment a = assign_pairs(c.params.W_fc, basis, 4);
  const AccuracyProbe probe(c);
  const auto cumulative = cumulative_ablation(c.params, probe, a);
  ASSERT_EQ(cumulative.size(), 2u);
  EXPECT_EQ(cumulative[1].ablated_ks, (std::vector<std::size_t>{2, 5}));
  // Only the bias is left, so every input predicts class 3: right on p of p² inputs.
  EXPECT_NEAR(cumulative[1].accuracy, 1.0 / 13.0, 1e-12);
  EXPECT_EQ(single_ablations(c.params, probe, a).size(), 2u);
}

}  // namespace
}  // namespace modgrok
