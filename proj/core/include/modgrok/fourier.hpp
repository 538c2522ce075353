#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "modgrok/matrix.hpp"
#include "modgrok/model.hpp"

namespace modgrok {

enum class BasisRow { kConst, kCos, kSin };

struct BasisLabel {
  std::size_t k = 0;  // 0 for the constant row
  BasisRow kind = BasisRow::kConst;
};

/// Orthonormal real Fourier basis over Z_p (p odd).
///
/// Row 0 is the constant 1/√p; rows 2k−1 and 2k hold √(2/p)·cos(2πkn/p) and
/// √(2/p)·sin(2πkn/p) for k = 1..(p−1)/2, over n = 0..p−1.
struct FourierBasis {
  std::size_t p = 0;
  Matrix F;
  std::vector<BasisLabel> labels;

  std::size_t num_frequencies() const { return (p - 1) / 2; }
  static std::size_t cos_row(std::size_t k) { return 2 * k - 1; }
  static std::size_t sin_row(std::size_t k) { return 2 * k; }
};

FourierBasis build_basis(std::size_t p);

/// Coefficients of a p×m tensor along its first axis, with per-frequency energies.
/// Energy vectors are indexed by k−1 for k = 1..(p−1)/2.
struct Spectrum1D {
  std::string name;
  Matrix coeffs;  // p×m, F·tensor
  Vector cos_energy;
  Vector sin_energy;
  Vector freq_energy;
  double dc_energy = 0.0;

  double energy(std::size_t k) const { return freq_energy.at(k - 1); }
  double total_energy() const;
};

Spectrum1D spectrum_1d(const Matrix& tensor, const FourierBasis& basis, std::string name);

/// Hidden states over the whole input grid. H2 and H3 rows are indexed a·p + b.
struct HiddenStacks {
  Matrix H1;      // p×d_h
  Matrix H2;      // p²×d_h
  Matrix H3;      // p²×d_h
  Matrix H3_hat;  // p²×d_h
};

HiddenStacks hidden_state_stacks(const ModelParams& params, const Hyper& hyper);

/// 2D spectrum of a p×p×m tensor stored as a p²×m matrix (row a·p + b).
///
/// For each hidden unit d, C_d = F·H_d·Fᵀ. mag[i][j] = √(Σ_d C_d[i][j]²).
/// group_energy[g][h] sums mag² over the basis rows of group g (0 = DC,
/// k = frequency) along a and group h along b. Marginals sum a row (or column)
/// of group_energy; freq_energy is their mean and drives significance.
struct Spectrum2D {
  std::string name;
  std::size_t p = 0;
  Matrix mag;           // p×p
  Matrix group_energy;  // (K+1)×(K+1)
  Vector marginal_a;    // K
  Vector marginal_b;    // K
  Vector freq_energy;   // K
  double total_energy = 0.0;

  double energy(std::size_t k) const { return freq_energy.at(k - 1); }
};

Spectrum2D spectrum_2d(const Matrix& stacked, const FourierBasis& basis, std::string name);

inline constexpr double kDefaultSignificanceThreshold = 0.02;

/// Frequencies k whose share of the summed non-DC energy is at least threshold.
std::vector<std::size_t> significant_frequencies(const Vector& freq_energy, double threshold);
std::vector<std::size_t> significant_frequencies(const Spectrum1D& spec,
                                                 double threshold = kDefaultSignificanceThreshold);
std::vector<std::size_t> significant_frequencies(const Spectrum2D& spec,
                                                 double threshold = kDefaultSignificanceThreshold);

/// The five tensors analyzed together: W_E (number rows), W_fcᵀ, H1, H2, H3.
struct ModelSpectra {
  Spectrum1D W_E;
  Spectrum1D W_fc;
  Spectrum1D H1;
  Spectrum2D H2;
  Spectrum2D H3;
};

ModelSpectra model_spectra(const ModelParams& params, const Hyper& hyper, const FourierBasis& basis);
/// Same, reusing precomputed hidden stacks.
ModelSpectra model_spectra(const ModelParams& params, const HiddenStacks& stacks, const FourierBasis& basis);

}  // namespace modgrok
