#include "modgrok/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "modgrok/errors.hpp"
#include "modgrok/linalg.hpp"

namespace modgrok {
namespace {

void fill_energies(Spectrum1D& s, std::size_t num_freqs) {
  s.cos_energy.assign(num_freqs, 0.0);
  s.sin_energy.assign(num_freqs, 0.0);
  s.freq_energy.assign(num_freqs, 0.0);
  for (double v : s.coeffs.row(0)) s.dc_energy += v * v;
  for (std::size_t k = 1; k <= num_freqs; ++k) {
    for (double v : s.coeffs.row(FourierBasis::cos_row(k))) s.cos_energy[k - 1] += v * v;
    for (double v : s.coeffs.row(FourierBasis::sin_row(k))) s.sin_energy[k - 1] += v * v;
    s.freq_energy[k - 1] = s.cos_energy[k - 1] + s.sin_energy[k - 1];
  }
}

// Frequency group of a basis row: 0 for DC, otherwise k.
std::size_t group_of(std::size_t row) { return (row + 1) / 2; }

}  // namespace

FourierBasis build_basis(std::size_t p) {
  if (p < 3 || p % 2 == 0) {
    throw UnsupportedError("Fourier basis requires an odd modulus p >= 3, got " + std::to_string(p));
  }
  FourierBasis basis;
  basis.p = p;
  basis.F = Matrix(p, p);
  basis.labels.resize(p);

  const double dc = 1.0 / std::sqrt(static_cast<double>(p));
  const double ac = std::sqrt(2.0 / static_cast<double>(p));
  for (std::size_t n = 0; n < p; ++n) basis.F(0, n) = dc;
  basis.labels[0] = {0, BasisRow::kConst};
  for (std::size_t k = 1; k <= basis.num_frequencies(); ++k) {
    for (std::size_t n = 0; n < p; ++n) {
      // Reduce k·n mod p before scaling so the angle stays in [0, 2π).
      const double angle = 2.0 * std::numbers::pi * static_cast<double>((k * n) % p) / static_cast<double>(p);
      basis.F(FourierBasis::cos_row(k), n) = ac * std::cos(angle);
      basis.F(FourierBasis::sin_row(k), n) = ac * std::sin(angle);
    }
    basis.labels[FourierBasis::cos_row(k)] = {k, BasisRow::kCos};
    basis.labels[FourierBasis::sin_row(k)] = {k, BasisRow::kSin};
  }
  return basis;
}

double Spectrum1D::total_energy() const {
  return dc_energy + std::accumulate(freq_energy.begin(), freq_energy.end(), 0.0);
}

Spectrum1D spectrum_1d(const Matrix& tensor, const FourierBasis& basis, std::string name) {
  if (tensor.rows() != basis.p) {
    throw ShapeError("spectrum_1d(" + name + "): first dimension " + std::to_string(tensor.rows()) +
                     " does not match p=" + std::to_string(basis.p));
  }
  Spectrum1D s;
  s.name = std::move(name);
  s.coeffs = matmul(basis.F, tensor);
  fill_energies(s, basis.num_frequencies());
  return s;
}

HiddenStacks hidden_state_stacks(const ModelParams& params, const Hyper& hyper) {
  std::vector<TokenPair> grid;
  grid.reserve(hyper.p * hyper.p);
  for (std::uint32_t a = 0; a < hyper.p; ++a)
    for (std::uint32_t b = 0; b < hyper.p; ++b) grid.push_back({a, b});

  ForwardTrace trace = forward(params, hyper, grid);
  HiddenStacks out;
  out.H1 = Matrix(hyper.p, hyper.d_h);
  for (std::size_t a = 0; a < hyper.p; ++a) {
    auto src = trace.h1.row(a * hyper.p);
    std::copy(src.begin(), src.end(), out.H1.row(a).begin());
  }
  out.H2 = std::move(trace.h2);
  out.H3 = std::move(trace.h3);
  out.H3_hat = std::move(trace.h3_hat);
  return out;
}

Spectrum2D spectrum_2d(const Matrix& stacked, const FourierBasis& basis, std::string name) {
  const std::size_t p = basis.p;
  if (stacked.rows() != p * p) {
    throw ShapeError("spectrum_2d(" + name + "): expected " + std::to_string(p * p) + " stacked rows, got " +
                     std::to_string(stacked.rows()));
  }
  const std::size_t m = stacked.cols();

  // Transform along b for each fixed a; rows stay indexed a·p + j.
  Matrix along_b(p * p, m);
  Matrix block(p, m);
  for (std::size_t a = 0; a < p; ++a) {
    std::copy_n(stacked.data() + a * p * m, p * m, block.data());
    const Matrix t = matmul(basis.F, block);
    std::copy_n(t.data(), p * m, along_b.data() + a * p * m);
  }
  // Viewed as p × (p·m) with row a, transform along a.
  const Matrix wide(p, p * m, Vector(along_b.values().begin(), along_b.values().end()));
  const Matrix coeffs = matmul(basis.F, wide);

  const std::size_t K = basis.num_frequencies();
  Spectrum2D s;
  s.name = std::move(name);
  s.p = p;
  s.mag = Matrix(p, p);
  s.group_energy = Matrix(K + 1, K + 1);
  for (std::size_t i = 0; i < p; ++i) {
    auto row = coeffs.row(i);
    for (std::size_t j = 0; j < p; ++j) {
      double sq = 0.0;
      for (std::size_t d = 0; d < m; ++d) sq += row[j * m + d] * row[j * m + d];
      s.mag(i, j) = std::sqrt(sq);
      s.group_energy(group_of(i), group_of(j)) += sq;
      s.total_energy += sq;
    }
  }
  s.marginal_a.assign(K, 0.0);
  s.marginal_b.assign(K, 0.0);
  s.freq_energy.assign(K, 0.0);
  for (std::size_t k = 1; k <= K; ++k) {
    for (std::size_t g = 0; g <= K; ++g) {
      s.marginal_a[k - 1] += s.group_energy(k, g);
      s.marginal_b[k - 1] += s.group_energy(g, k);
    }
    s.freq_energy[k - 1] = 0.5 * (s.marginal_a[k - 1] + s.marginal_b[k - 1]);
  }
  return s;
}

std::vector<std::size_t> significant_frequencies(const Vector& freq_energy, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw InputError("significance threshold must lie in (0, 1), got " + std::to_string(threshold));
  }
  const double total = std::accumulate(freq_energy.begin(), freq_energy.end(), 0.0);
  std::vector<std::size_t> out;
  if (total <= 0.0) return out;
  for (std::size_t i = 0; i < freq_energy.size(); ++i) {
    if (freq_energy[i] / total >= threshold) out.push_back(i + 1);
  }
  return out;
}

std::vector<std::size_t> significant_frequencies(const Spectrum1D& spec, double threshold) {
  return significant_frequencies(spec.freq_energy, threshold);
}

std::vector<std::size_t> significant_frequencies(const Spectrum2D& spec, double threshold) {
  return significant_frequencies(spec.freq_energy, threshold);
}

ModelSpectra model_spectra(const ModelParams& params, const HiddenStacks& stacks, const FourierBasis& basis) {
  Matrix numbers(basis.p, params.W_E.cols());
  std::copy_n(params.W_E.data(), numbers.size(), numbers.data());
  return {
      spectrum_1d(numbers, basis, "W_E"),
      spectrum_1d(params.W_fc.transposed(), basis, "W_fc"),
      spectrum_1d(stacks.H1, basis, "H1"),
      spectrum_2d(stacks.H2, basis, "H2"),
      spectrum_2d(stacks.H3, basis, "H3"),
  };
}

ModelSpectra model_spectra(const ModelParams& params, const Hyper& hyper, const FourierBasis& basis) {
  if (hyper.p != basis.p) throw ShapeError("model_spectra: basis p does not match model p");
  return model_spectra(params, hidden_state_stacks(params, hyper), basis);
}

}  // namespace modgrok
