#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "modgrok/errors.hpp"
#include "modgrok/trainer.hpp"

namespace modgrok {
namespace {

TEST(Dataset, CoversTheFullGrid) {
  const LabeledPairs d = gen_dataset(113);
  EXPECT_EQ(d.size(), 12769u);
  EXPECT_EQ(d.targets[5 * 113 + 10], 15u);
  EXPECT_EQ(d.targets[100 * 113 + 50], 37u);
  std::vector<int> counts(113, 0);
  for (auto t : d.targets) ++counts[t];
  for (int c : counts) EXPECT_EQ(c, 113);
}

TEST(Split, SizesAndDisjointness) {
  SeededRng rng(3);
  const Split s = split(12769, 0.3, rng);
  EXPECT_EQ(s.train_idx.size(), 3831u);
  EXPECT_EQ(s.test_idx.size(), 12769u - 3831u);
  std::vector<int> seen(12769, 0);
  for (auto i : s.train_idx) ++seen[i];
  for (auto i : s.test_idx) ++seen[i];
  for (int v : seen) EXPECT_EQ(v, 1);
  EXPECT_EQ(train_size(12769, 0.7), 8938u);
}

TEST(Split, SeededReproducibility) {
  SeededRng a(17), b(17), c(18);
  const Split sa = split(12769, 0.5, a);
  const Split sb = split(12769, 0.5, b);
  const Split sc = split(12769, 0.5, c);
  EXPECT_EQ(sa.train_idx, sb.train_idx);
  EXPECT_NE(sa.train_idx, sc.train_idx);
}

TEST(Split, RejectsDegenerateFractions) {
  SeededRng rng(1);
  EXPECT_THROW(split(100, 0.0, rng), InputError);
  EXPECT_THROW(split(100, 1.0, rng), InputError);
}

ModelParams single_weight(double w) {
  ModelParams m;
  m.b_fc = {w};
  return m;
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ModelParams w = single_weight(0.0);
  const Gradients g = single_weight(1.0);
  AdamState s;
  s.m = single_weight(0.0);
  s.v = single_weight(0.0);
  const double lr = 0.01;
  adam_step(w, g, s, lr, 0.0);
  EXPECT_LT(std::abs(w.b_fc[0] + lr), 1e-6 * lr);
  EXPECT_EQ(s.t, 1u);
}

TEST(Adam, ZeroGradientWithoutDecayIsNoOp) {
  ModelParams w = single_weight(0.7);
  AdamState s;
  s.m = single_weight(0.0);
  s.v = single_weight(0.0);
  for (int i = 0; i < 5; ++i) adam_step(w, single_weight(0.0), s, 0.01, 0.0);
  EXPECT_EQ(w.b_fc[0], 0.7);
}

TEST(Adam, DecayAloneShrinksMagnitude) {
  for (double start : {0.7, -0.4}) {
    ModelParams w = single_weight(start);
    AdamState s;
    s.m = single_weight(0.0);
    s.v = single_weight(0.0);
    double prev = std::abs(start);
    for (int i = 0; i < 10; ++i) {
      adam_step(w, single_weight(0.0), s, 0.01, 5e-5);
      EXPECT_LT(std::abs(w.b_fc[0]), prev);
      prev = std::abs(w.b_fc[0]);
    }
    EXPECT_GE(s.v.b_fc[0], 0.0);
  }
}

TEST(Adam, DecoupledDecayScalesWeightsDirectly) {
  ModelParams w = single_weight(0.5);
  AdamState s;
  s.m = single_weight(0.0);
  s.v = single_weight(0.0);
  adam_step(w, single_weight(0.0), s, 0.1, 0.2, true);
  EXPECT_DOUBLE_EQ(w.b_fc[0], 0.5 * (1.0 - 0.02));
  EXPECT_EQ(s.m.b_fc[0], 0.0);
}

TEST(Adam, CoupledDecayEntersTheMoments) {
  ModelParams w = single_weight(0.5);
  AdamState s;
  s.m = single_weight(0.0);
  s.v = single_weight(0.0);
  adam_step(w, single_weight(0.0), s, 0.1, 0.2, false);
  EXPECT_DOUBLE_EQ(s.m.b_fc[0], 0.1 * 0.2 * 0.5);
  // Adam normalizes the decay gradient, so the first step moves by lr whatever λ is.
  EXPECT_NEAR(w.b_fc[0], 0.4, 1e-6);
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.p = 11;
  c.d_h = 8;
  c.train_frac = 0.5;
  c.epochs = 100;
  c.seed = 4;
  c.log_every = 10;
  return c;
}

TEST(Train, OneEpochLogsBeforeAndAfter) {
  TrainConfig c = tiny_config();
  c.epochs = 1;
  const TrainResult r = train(c);
  ASSERT_EQ(r.history.size(), 2u);
  EXPECT_EQ(r.history[0].epoch, 0u);
  EXPECT_EQ(r.history[1].epoch, 1u);
  EXPECT_EQ(r.checkpoint.epochs_completed, 1u);
}

TEST(Train, LossDecreasesOverFirstHundredEpochs) {
  const TrainResult r = train(tiny_config());
  EXPECT_LT(r.history.back().train_loss, r.history.front().train_loss);
  EXPECT_EQ(r.history.size(), 11u);
}

TEST(Train, IsDeterministicForFixedSeed) {
  const TrainResult a = train(tiny_config());
  const TrainResult b = train(tiny_config());
  EXPECT_EQ(encode_checkpoint(a.checkpoint), encode_checkpoint(b.checkpoint));
  EXPECT_EQ(a.history, b.history);
}

TEST(Train, InvalidConfigIsRejected) {
  TrainConfig c = tiny_config();
  c.epochs = 0;
  EXPECT_THROW(train(c), InputError);
  c = tiny_config();
  c.lr = 0.0;
  EXPECT_THROW(train(c), InputError);
  c = tiny_config();
  c.weight_decay = -1.0;
  EXPECT_THROW(train(c), InputError);
}

TEST(Train, UnwritableCheckpointPathIsPersistenceError) {
  TrainConfig c = tiny_config();
  c.epochs = 1;
  c.checkpoint_path = "/nonexistent-dir/x/ckpt.bin";
  EXPECT_THROW(train(c), PersistenceError);
}

class CheckpointFile : public ::testing::Test {
 protected:
  void SetUp() override {
    TrainConfig c = tiny_config();
    c.epochs = 20;
    ckpt_ = train(c).checkpoint;
    path_ = (std::filesystem::temp_directory_path() /
             ("modgrok_ckpt_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
              ::testing::UnitTest::GetInstance()->current_test_info()->name() + ".bin"))
                .string();
  }
  void TearDown() override { std::filesystem::remove(path_); }

  Checkpoint ckpt_;
  std::string path_;
};

TEST_F(CheckpointFile, RoundTripIsBitExact) {
  save_checkpoint(ckpt_, path_);
  const Checkpoint back = load_checkpoint(path_);
  EXPECT_EQ(back.params, ckpt_.params);
  EXPECT_EQ(back.hyper, ckpt_.hyper);
  EXPECT_EQ(back.history, ckpt_.history);
  EXPECT_EQ(back.final_metrics, ckpt_.final_metrics);
  EXPECT_EQ(back.config.seed, ckpt_.config.seed);
  EXPECT_EQ(back.config.lr, ckpt_.config.lr);
  EXPECT_EQ(back.config.decoupled_weight_decay, ckpt_.config.decoupled_weight_decay);
  EXPECT_EQ(encode_checkpoint(back), encode_checkpoint(ckpt_));
}

TEST_F(CheckpointFile, PayloadIsLittleEndianDoublesInManifestOrder) {
  const std::string bytes = encode_checkpoint(ckpt_);
  const auto start = bytes.find('\n') + 1;
  double first = 0.0;
  std::memcpy(&first, bytes.data() + start, 8);  // host is little-endian on supported targets
  EXPECT_EQ(first, ckpt_.params.W_E(0, 0));
}

TEST_F(CheckpointFile, TruncatedFileIsFormatError) {
  std::string bytes = encode_checkpoint(ckpt_);
  for (std::size_t keep : {bytes.size() - 1, bytes.size() / 2, std::size_t{10}, std::size_t{0}}) {
    std::ofstream(path_, std::ios::binary | std::ios::trunc).write(bytes.data(), static_cast<std::streamsize>(keep));
    EXPECT_THROW(load_checkpoint(path_), FormatError) << "kept " << keep << " bytes";
  }
}

TEST_F(CheckpointFile, UnsupportedVersionIsExplicit) {
  Checkpoint future = ckpt_;
  future.format_version = 99;
  const std::string bytes = encode_checkpoint(future);
  try {
    decode_checkpoint(bytes);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("format_version"), std::string::npos);
  }
}

TEST_F(CheckpointFile, MissingFileIsFormatError) { EXPECT_THROW(load_checkpoint(path_ + ".missing"), FormatError); }

}  // namespace
}  // namespace modgrok
