#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "modgrok/matrix.hpp"
#include "modgrok/rng.hpp"

namespace modgrok {

/// Model dimensions. The embedding width always equals the hidden width.
struct Hyper {
  std::size_t p = 113;
  std::size_t d_h = 256;

  std::size_t d_e() const { return d_h; }
  /// Number tokens 0..p-1 plus the '=' token.
  std::size_t vocab() const { return p + 1; }
  std::size_t equals_token() const { return p; }
  void validate() const;

  friend bool operator==(const Hyper&, const Hyper&) = default;
};

/// One input sequence |a|b|=|.
struct TokenPair {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  friend bool operator==(const TokenPair&, const TokenPair&) = default;
};

/// Trainable tensors of the single-layer RNN. Row-vector convention:
///   h_t = tanh(x_t·W_ih + b_ih + h_{t-1}·W_hh + b_hh),  logits = ĥ₃·W_fc + b_fc
struct ModelParams {
  Matrix W_E;   // (p+1)×d_e, row p embeds '='
  Matrix W_ih;  // d_e×d_h
  Vector b_ih;  // d_h
  Matrix W_hh;  // d_h×d_h
  Vector b_hh;  // d_h
  Matrix W_fc;  // d_h×p
  Vector b_fc;  // p

  static ModelParams zeros(const Hyper& hyper);

  /// Checks every shape against hyper; throws ShapeError naming the tensor.
  void check_shapes(const Hyper& hyper) const;
  bool all_finite() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Gradients mirror the parameter layout exactly.
using Gradients = ModelParams;

/// Named flat view of one tensor inside ModelParams.
struct TensorRef {
  std::string_view name;
  std::size_t rows;
  std::size_t cols;
  std::span<double> values;
};
struct ConstTensorRef {
  std::string_view name;
  std::size_t rows;
  std::size_t cols;
  std::span<const double> values;
};

/// Tensors in canonical order: W_E, W_ih, b_ih, W_hh, b_hh, W_fc, b_fc.
std::vector<TensorRef> tensors(ModelParams& params);
std::vector<ConstTensorRef> tensors(const ModelParams& params);

struct ForwardTrace {
  Matrix h1;      // batch×d_h
  Matrix h2;      // batch×d_h
  Matrix h3;      // batch×d_h
  Matrix h3_hat;  // batch×d_h, rows of unit ℓ2 norm (zero rows stay zero)
  Matrix logits;  // batch×p
};

struct LossAndGrads {
  double loss = 0.0;
  Gradients grads;
};

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Weights uniform in [-1/√d_h, 1/√d_h]; biases zero.
ModelParams init_params(const Hyper& hyper, SeededRng& rng);

ForwardTrace forward(const ModelParams& params, const Hyper& hyper, std::span<const TokenPair> batch);

/// Logits only; cheaper than forward() because no per-example hidden states are kept.
Matrix logits(const ModelParams& params, const Hyper& hyper, std::span<const TokenPair> batch);

/// Mean softmax cross-entropy and its exact gradient through the unrolled recurrence.
LossAndGrads loss_and_grads(const ModelParams& params, const Hyper& hyper, std::span<const TokenPair> batch,
                            std::span<const std::uint32_t> targets);

double loss(const ModelParams& params, const Hyper& hyper, std::span<const TokenPair> batch,
            std::span<const std::uint32_t> targets);

/// Fraction of pairs whose argmax logit (lowest index on ties) equals the target.
double accuracy(const ModelParams& params, const Hyper& hyper, std::span<const TokenPair> batch,
                std::span<const std::uint32_t> targets);

/// Argmax class per pair, lowest index on ties.
std::vector<std::uint32_t> predictions(const ModelParams& params, const Hyper& hyper, std::span<const TokenPair> batch);

Evaluation evaluate(const ModelParams& params, const Hyper& hyper, std::span<const TokenPair> batch,
                    std::span<const std::uint32_t> targets);

}  // namespace modgrok
