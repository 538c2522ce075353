#include <gtest/gtest.h>

#include <cmath>

#include "modgrok/errors.hpp"
#include "modgrok/svd_analysis.hpp"

namespace modgrok {
namespace {

TEST(EnergyFraction, HandValues) {
  EXPECT_DOUBLE_EQ(energy_fraction({3.0, 1.0}, 1), 0.75);
  EXPECT_DOUBLE_EQ(energy_fraction({3.0, 1.0}, 2), 1.0);
  EXPECT_THROW(energy_fraction({3.0, 1.0}, 0), RangeError);
  EXPECT_THROW(energy_fraction({3.0, 1.0}, 3), RangeError);
  EXPECT_THROW(energy_fraction({0.0, 0.0}, 1), DomainError);
}

TEST(WeightNames, RoundTrip) {
  for (WeightMatrix w : kAllWeightMatrices) EXPECT_EQ(parse_weight_name(weight_name(w)), w);
  EXPECT_THROW(parse_weight_name("W_xx"), InputError);
}

class TinyModel : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    TrainConfig c;
    c.p = 11;
    c.d_h = 12;
    c.train_frac = 0.5;
    c.epochs = 300;
    c.seed = 2;
    c.log_every = 100;
    ckpt_ = new Checkpoint(train(c).checkpoint);
  }
  static void TearDownTestSuite() { delete ckpt_; }
  static Checkpoint* ckpt_;
};
Checkpoint* TinyModel::ckpt_ = nullptr;

TEST_F(TinyModel, WeightSpectraAreSortedAndSized) {
  const auto spectra = weight_spectra(ckpt_->params);
  EXPECT_EQ(spectra.at("W_E").size(), 12u);
  EXPECT_EQ(spectra.at("W_fc").size(), 11u);
  EXPECT_EQ(spectra.at("W_hh").size(), 12u);
  for (const auto& [name, s] : spectra) {
    for (std::size_t i = 1; i < s.size(); ++i) EXPECT_GE(s[i - 1], s[i]) << name;
  }
}

TEST_F(TinyModel, RankSweepInvariants) {
  for (WeightMatrix w : kAllWeightMatrices) {
    const RankSweepResult r = rank_sweep(*ckpt_, weight_name(w));
    ASSERT_EQ(r.points.size(), r.sigma.size());
    for (std::size_t i = 0; i < r.points.size(); ++i) {
      EXPECT_EQ(r.points[i].r, i + 1);
      if (i > 0) EXPECT_GE(r.points[i].energy_fraction, r.points[i - 1].energy_fraction);
    }
    EXPECT_NEAR(r.points.back().energy_fraction, 1.0, 1e-12);
    // Full rank reproduces the original weights up to round-off.
    EXPECT_EQ(r.points.back().accuracy_full, r.baseline.full) << r.matrix_name;
    if (r.minimal_full_accuracy_rank) {
      EXPECT_EQ(r.points[*r.minimal_full_accuracy_rank - 1].accuracy_full, 1.0);
      for (std::size_t i = 0; i + 1 < *r.minimal_full_accuracy_rank; ++i) EXPECT_LT(r.points[i].accuracy_full, 1.0);
    }
  }
}

TEST_F(TinyModel, ComplementAtZeroRankIsBaseline) {
  const AccuracyProbe probe(*ckpt_);
  const AccuracyPair base = probe(ckpt_->params);
  std::map<WeightMatrix, std::size_t> ranks;
  for (WeightMatrix w : kAllWeightMatrices) ranks[w] = 0;
  const AccuracyPair acc = complement_ablation(ckpt_->params, probe, ranks);
  EXPECT_EQ(acc.full, base.full);
}

TEST_F(TinyModel, ComplementAtFullRankCollapsesToChance) {
  const AccuracyProbe probe(*ckpt_);
  std::map<std::string, std::size_t> ranks;
  for (const auto& [name, s] : weight_spectra(ckpt_->params)) ranks[name] = s.size();
  const AccuracyPair acc = complement_ablation(*ckpt_, ranks);
  // Every weight is zero: one constant prediction, right on exactly p of p² inputs.
  EXPECT_LE(acc.full, 1.0 / 11.0 + 1e-12);
}

TEST_F(TinyModel, ComplementRejectsOversizedRank) {
  EXPECT_THROW(complement_ablation(*ckpt_, {{"W_fc", 12}}), RangeError);
  EXPECT_THROW(complement_ablation(*ckpt_, {{"nope", 1}}), InputError);
}

TEST(RandomInit, UnembeddingHasNoElbowAtTwelve) {
  const Hyper hyper{113, 256};
  for (std::uint64_t seed : {2u, 3u, 4u}) {
    SeededRng rng(seed);
    const ModelParams params = init_params(hyper, rng);
    const Vector sigma = weight_spectra(params).at("W_fc");
    EXPECT_LT(sigma[11] / sigma[12], 2.0) << "seed " << seed;
  }
}

}  // namespace
}  // namespace modgrok
