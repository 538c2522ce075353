#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>

#include "modgrok/errors.hpp"
#include "modgrok/fourier.hpp"
#include "modgrok/linalg.hpp"

namespace modgrok {
namespace {

double omega(std::size_t k, std::size_t p) { return 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(p); }

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  SeededRng rng(seed);
  return Matrix(rows, cols, rng_uniform(rng, -1.0, 1.0, rows * cols));
}

TEST(Basis, IsOrthonormal) {
  for (std::size_t p : {3u, 13u, 113u}) {
    const FourierBasis b = build_basis(p);
    ASSERT_EQ(b.F.rows(), p);
    EXPECT_LE(max_abs_diff(matmul_nt(b.F, b.F), Matrix::identity(p)), 1e-10) << "p=" << p;
  }
}

TEST(Basis, EvenModulusIsUnsupported) {
  EXPECT_THROW(build_basis(112), UnsupportedError);
  EXPECT_THROW(build_basis(1), UnsupportedError);
}

TEST(Basis, RowLabels) {
  const FourierBasis b = build_basis(113);
  EXPECT_EQ(b.num_frequencies(), 56u);
  EXPECT_EQ(b.labels[0].kind, BasisRow::kConst);
  EXPECT_EQ(b.labels[13].k, 7u);
  EXPECT_EQ(b.labels[13].kind, BasisRow::kCos);
  EXPECT_EQ(b.labels[14].k, 7u);
  EXPECT_EQ(b.labels[14].kind, BasisRow::kSin);
  EXPECT_EQ(b.labels[112].k, 56u);
}

TEST(Basis, ConstantVectorMapsToDc) {
  const std::size_t p = 113;
  const FourierBasis b = build_basis(p);
  const Matrix x(p, 1, Vector(p, 1.0 / std::sqrt(113.0)));
  const Matrix c = matmul(b.F, x);
  EXPECT_NEAR(c(0, 0), 1.0, 1e-12);
  for (std::size_t i = 1; i < p; ++i) EXPECT_NEAR(c(i, 0), 0.0, 1e-12);
}

TEST(Basis, PureCosineHitsItsRowPair) {
  const std::size_t p = 113;
  const FourierBasis b = build_basis(p);
  Matrix x(p, 1);
  for (std::size_t n = 0; n < p; ++n) x(n, 0) = std::cos(omega(7, p) * static_cast<double>(n));
  const Matrix c = matmul(b.F, x);
  EXPECT_NEAR(c(FourierBasis::cos_row(7), 0), std::sqrt(113.0 / 2.0), 1e-10);
  for (std::size_t i = 0; i < p; ++i) {
    if (i != FourierBasis::cos_row(7)) EXPECT_NEAR(c(i, 0), 0.0, 1e-10) << "row " << i;
  }
}

TEST(Spectrum1D, ZeroTensorHasZeroEnergy) {
  const FourierBasis b = build_basis(13);
  const Spectrum1D s = spectrum_1d(Matrix(13, 5), b, "zero");
  EXPECT_EQ(s.total_energy(), 0.0);
  EXPECT_TRUE(significant_frequencies(s).empty());
}

TEST(Spectrum1D, SingleToneIsDetectedAlone) {
  const std::size_t p = 113;
  const FourierBasis b = build_basis(p);
  SeededRng rng(5);
  const auto r = rng_uniform(rng, -1.0, 1.0, 64);
  Matrix t(p, 64);
  for (std::size_t n = 0; n < p; ++n)
    for (std::size_t j = 0; j < 64; ++j) t(n, j) = std::cos(omega(5, p) * static_cast<double>(n)) * r[j];
  const Spectrum1D s = spectrum_1d(t, b, "tone");
  const double sum = std::accumulate(s.freq_energy.begin(), s.freq_energy.end(), 0.0);
  EXPECT_GE(s.energy(5) / sum, 0.999);
  EXPECT_EQ(significant_frequencies(s), std::vector<std::size_t>{5});
}

TEST(Spectrum1D, ShapeMismatch) {
  const FourierBasis b = build_basis(13);
  EXPECT_THROW(spectrum_1d(Matrix(12, 3), b, "bad"), ShapeError);
}

TEST(Spectrum1D, ParsevalOnRandomTensors) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Matrix t = random_matrix(113, 40, seed);
    const Spectrum1D s = spectrum_1d(t, build_basis(113), "rand");
    const double fro = sum_of_squares(t);
    EXPECT_LE(std::abs(s.total_energy() - fro) / fro, 1e-8);
    // Energy is preserved when analyzing an already-transformed tensor.
    const Spectrum1D again = spectrum_1d(s.coeffs, build_basis(113), "again");
    EXPECT_LE(std::abs(again.total_energy() - fro) / fro, 1e-8);
  }
}

TEST(Spectrum1D, WhiteNoiseHasNoDominantFrequency) {
  const Matrix t = random_matrix(113, 256, 77);
  const Spectrum1D s = spectrum_1d(t, build_basis(113), "noise");
  const double mean = std::accumulate(s.freq_energy.begin(), s.freq_energy.end(), 0.0) / 56.0;
  for (double e : s.freq_energy) EXPECT_LE(e, 3.0 * mean);
  EXPECT_TRUE(significant_frequencies(s, 0.05).empty());
}

TEST(SignificantFrequencies, ThresholdMustBeAFraction) {
  EXPECT_THROW(significant_frequencies(Vector{1.0, 2.0}, 0.0), InputError);
  EXPECT_THROW(significant_frequencies(Vector{1.0, 2.0}, 1.0), InputError);
  EXPECT_EQ(significant_frequencies(Vector{1.0, 0.0, 3.0}, 0.2), (std::vector<std::size_t>{1, 3}));
}

Matrix grid_tensor(std::size_t p, std::size_t m, const std::function<double(std::size_t, std::size_t, std::size_t)>& f) {
  Matrix t(p * p, m);
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < p; ++b)
      for (std::size_t d = 0; d < m; ++d) t(a * p + b, d) = f(a, b, d);
  return t;
}

TEST(Spectrum2D, ConstantAlongBLandsInDcColumn) {
  const std::size_t p = 13;
  const Matrix noise = random_matrix(p, 4, 3);
  const Matrix t = grid_tensor(p, 4, [&](std::size_t a, std::size_t, std::size_t d) { return noise(a, d); });
  const Spectrum2D s = spectrum_2d(t, build_basis(p), "const_b");
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 1; j < p; ++j) EXPECT_NEAR(s.mag(i, j), 0.0, 1e-12);
  EXPECT_LE(std::abs(s.total_energy - sum_of_squares(t)) / sum_of_squares(t), 1e-8);
}

TEST(Spectrum2D, SumFrequencyConcentratesInDiagonalBlock) {
  const std::size_t p = 29;
  const Matrix t = grid_tensor(p, 3, [&](std::size_t a, std::size_t b, std::size_t d) {
    return d == 0 ? std::cos(omega(3, p) * static_cast<double>(a + b)) : 0.0;
  });
  const Spectrum2D s = spectrum_2d(t, build_basis(p), "sum");
  EXPECT_NEAR(s.group_energy(3, 3) / s.total_energy, 1.0, 1e-12);
  EXPECT_EQ(significant_frequencies(s), std::vector<std::size_t>{3});
  // Symmetric in a and b.
  for (std::size_t k = 0; k < s.marginal_a.size(); ++k) EXPECT_NEAR(s.marginal_a[k], s.marginal_b[k], 1e-10);
}

TEST(Spectrum2D, ParsevalOnRandomTensors) {
  const std::size_t p = 23;
  for (std::uint64_t seed = 10; seed < 13; ++seed) {
    const Matrix t = random_matrix(p * p, 7, seed);
    const Spectrum2D s = spectrum_2d(t, build_basis(p), "rand");
    const double fro = sum_of_squares(t);
    EXPECT_LE(std::abs(s.total_energy - fro) / fro, 1e-8);
    double grouped = 0.0;
    for (double v : s.group_energy.values()) grouped += v;
    EXPECT_LE(std::abs(grouped - fro) / fro, 1e-8);
  }
}

TEST(Spectrum2D, ShapeMismatch) {
  EXPECT_THROW(spectrum_2d(Matrix(13 * 12, 2), build_basis(13), "bad"), ShapeError);
}

TEST(HiddenStacks, LayoutAndRange) {
  const Hyper hyper{13, 6};
  SeededRng rng(8);
  const ModelParams params = init_params(hyper, rng);
  const HiddenStacks s = hidden_state_stacks(params, hyper);
  ASSERT_EQ(s.H1.rows(), 13u);
  ASSERT_EQ(s.H2.rows(), 169u);
  ASSERT_EQ(s.H3.rows(), 169u);
  // h₁ depends only on a; spot-check against a direct forward pass.
  const std::vector<TokenPair> probe = {{4, 9}, {4, 0}};
  const ForwardTrace tr = forward(params, hyper, probe);
  for (std::size_t j = 0; j < 6; ++j) {
    EXPECT_EQ(tr.h1(0, j), s.H1(4, j));
    EXPECT_EQ(tr.h1(1, j), s.H1(4, j));
    EXPECT_NEAR(tr.h3(0, j), s.H3(4 * 13 + 9, j), 1e-14);
  }
  for (const Matrix* m : {&s.H1, &s.H2, &s.H3}) {
    for (double v : m->values()) {
      EXPECT_GT(v, -1.0);
      EXPECT_LT(v, 1.0);
    }
  }
}

double max_share(const Vector& e) {
  return *std::max_element(e.begin(), e.end()) / std::accumulate(e.begin(), e.end(), 0.0);
}

// At p=113 the noise floor is 1/56 ≈ 1.8% per frequency, so a few noise
// frequencies can graze the 2% default. None comes close to a real tone.
TEST(RandomInit, SpectraStayNearTheNoiseFloor) {
  const Hyper hyper{113, 256};
  for (std::uint64_t seed : {2u, 3u}) {
    SeededRng rng(seed);
    const ModelParams params = init_params(hyper, rng);
    const ModelSpectra s = model_spectra(params, hyper, build_basis(113));
    for (const Vector* e : {&s.W_E.freq_energy, &s.W_fc.freq_energy, &s.H1.freq_energy, &s.H2.freq_energy,
                            &s.H3.freq_energy}) {
      EXPECT_LT(max_share(*e), 0.03) << "seed " << seed;
      EXPECT_TRUE(significant_frequencies(*e, 0.05).empty()) << "seed " << seed;
    }
  }
}

}  // namespace
}  // namespace modgrok
