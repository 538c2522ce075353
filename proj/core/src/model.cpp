#include "modgrok/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "modgrok/errors.hpp"
#include "modgrok/linalg.hpp"
#include "kernels.hpp"

namespace modgrok {
namespace {

void check_tensor(std::string_view name, std::size_t rows, std::size_t cols, std::size_t want_rows,
                  std::size_t want_cols) {
  if (rows != want_rows || cols != want_cols) {
    throw ShapeError(std::string(name) + " has shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                     ", expected " + std::to_string(want_rows) + "x" + std::to_string(want_cols));
  }
}

void check_batch(const Hyper& hyper, std::span<const TokenPair> batch) {
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].a >= hyper.p || batch[i].b >= hyper.p) {
      throw InputError("token out of range at batch index " + std::to_string(i) + ": (" +
                       std::to_string(batch[i].a) + ", " + std::to_string(batch[i].b) + ") with p=" +
                       std::to_string(hyper.p));
    }
  }
}

void check_targets(const Hyper& hyper, std::span<const TokenPair> batch, std::span<const std::uint32_t> targets) {
  if (targets.size() != batch.size()) {
    throw InputError("got " + std::to_string(targets.size()) + " targets for " + std::to_string(batch.size()) +
                     " pairs");
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] >= hyper.p) {
      throw InputError("target " + std::to_string(targets[i]) + " out of range at index " + std::to_string(i));
    }
  }
}

// Intermediate values of one forward pass, kept for the backward pass.
//
// Because x₁ depends only on a, h₁ is computed once per token (h1_tok) and its
// recurrent projection once per token (q_tok) instead of once per example.
struct ForwardCache {
  Matrix proj;    // (p+1)×d_h, W_E·W_ih
  Vector bias;    // d_h, b_ih + b_hh
  Matrix h1_tok;  // p×d_h
  Matrix q_tok;   // p×d_h, h1_tok·W_hh
  Matrix h2;      // B×d_h
  Matrix h3;      // B×d_h
  Vector norms;   // B
  Matrix h3_hat;  // B×d_h
  Matrix logits;  // B×p
};

ForwardCache run_forward(const ModelParams& params, const Hyper& hyper, std::span<const TokenPair> batch) {
  hyper.validate();
  params.check_shapes(hyper);
  check_batch(hyper, batch);

  const std::size_t p = hyper.p;
  const std::size_t d = hyper.d_h;
  const std::size_t n = batch.size();

  ForwardCache c;
  c.proj = matmul(params.W_E, params.W_ih);
  c.bias.resize(d);
  for (std::size_t j = 0; j < d; ++j) c.bias[j] = params.b_ih[j] + params.b_hh[j];

  c.h1_tok = Matrix(p, d);
  for (std::size_t t = 0; t < p; ++t) {
    auto in = c.proj.row(t);
    auto out = c.h1_tok.row(t);
    for (std::size_t j = 0; j < d; ++j) out[j] = in[j] + c.bias[j];
  }
  detail::tanh_inplace(c.h1_tok.values());
  c.q_tok = matmul(c.h1_tok, params.W_hh);

  c.h2 = Matrix(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    auto q = c.q_tok.row(batch[i].a);
    auto x = c.proj.row(batch[i].b);
    auto out = c.h2.row(i);
    for (std::size_t j = 0; j < d; ++j) out[j] = q[j] + x[j] + c.bias[j];
  }
  detail::tanh_inplace(c.h2.values());

  c.h3 = matmul(c.h2, params.W_hh);
  auto eq = c.proj.row(hyper.equals_token());
  for (std::size_t i = 0; i < n; ++i) {
    auto h = c.h3.row(i);
    for (std::size_t j = 0; j < d; ++j) h[j] += eq[j] + c.bias[j];
  }
  detail::tanh_inplace(c.h3.values());

  c.norms.assign(n, 0.0);
  c.h3_hat = Matrix(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    auto h = c.h3.row(i);
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) sq += h[j] * h[j];
    const double norm = std::sqrt(sq);
    c.norms[i] = norm;
    if (norm > 0.0) {
      auto hat = c.h3_hat.row(i);
      for (std::size_t j = 0; j < d; ++j) hat[j] = h[j] / norm;
    }
  }

  c.logits = matmul(c.h3_hat, params.W_fc);
  for (std::size_t i = 0; i < n; ++i) {
    auto l = c.logits.row(i);
    for (std::size_t k = 0; k < p; ++k) l[k] += params.b_fc[k];
  }
  return c;
}

// Row-wise log-sum-exp of the logits.
double log_sum_exp(std::span<const double> row) {
  const double mx = *std::max_element(row.begin(), row.end());
  double s = 0.0;
  for (double v : row) s += std::exp(v - mx);
  return mx + std::log(s);
}

std::size_t argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < row.size(); ++k)
    if (row[k] > row[best]) best = k;
  return best;
}

}  // namespace

void Hyper::validate() const {
  if (p < 2) throw InputError("modulus p must be at least 2, got " + std::to_string(p));
  if (d_h < 2) throw InputError("hidden size must be at least 2, got " + std::to_string(d_h));
}

ModelParams ModelParams::zeros(const Hyper& hyper) {
  ModelParams m;
  m.W_E = Matrix(hyper.vocab(), hyper.d_e());
  m.W_ih = Matrix(hyper.d_e(), hyper.d_h);
  m.b_ih.assign(hyper.d_h, 0.0);
  m.W_hh = Matrix(hyper.d_h, hyper.d_h);
  m.b_hh.assign(hyper.d_h, 0.0);
  m.W_fc = Matrix(hyper.d_h, hyper.p);
  m.b_fc.assign(hyper.p, 0.0);
  return m;
}

void ModelParams::check_shapes(const Hyper& hyper) const {
  check_tensor("W_E", W_E.rows(), W_E.cols(), hyper.vocab(), hyper.d_e());
  check_tensor("W_ih", W_ih.rows(), W_ih.cols(), hyper.d_e(), hyper.d_h);
  check_tensor("b_ih", 1, b_ih.size(), 1, hyper.d_h);
  check_tensor("W_hh", W_hh.rows(), W_hh.cols(), hyper.d_h, hyper.d_h);
  check_tensor("b_hh", 1, b_hh.size(), 1, hyper.d_h);
  check_tensor("W_fc", W_fc.rows(), W_fc.cols(), hyper.d_h, hyper.p);
  check_tensor("b_fc", 1, b_fc.size(), 1, hyper.p);
}

bool ModelParams::all_finite() const {
  for (const auto& t : tensors(*this))
    for (double v : t.values)
      if (!std::isfinite(v)) return false;
  return true;
}

std::vector<TensorRef> tensors(ModelParams& m) {
  return {
      {"W_E", m.W_E.rows(), m.W_E.cols(), m.W_E.values()},
      {"W_ih", m.W_ih.rows(), m.W_ih.cols(), m.W_ih.values()},
      {"b_ih", 1, m.b_ih.size(), m.b_ih},
      {"W_hh", m.W_hh.rows(), m.W_hh.cols(), m.W_hh.values()},
      {"b_hh", 1, m.b_hh.size(), m.b_hh},
      {"W_fc", m.W_fc.rows(), m.W_fc.cols(), m.W_fc.values()},
      {"b_fc", 1, m.b_fc.size(), m.b_fc},
  };
}

std::vector<ConstTensorRef> tensors(const ModelParams& m) {
  return {
      {"W_E", m.W_E.rows(), m.W_E.cols(), m.W_E.values()},
      {"W_ih", m.W_ih.rows(), m.W_ih.cols(), m.W_ih.values()},
      {"b_ih", 1, m.b_ih.size(), m.b_ih},
      {"W_hh", m.W_hh.rows(), m.W_hh.cols(), m.W_hh.values()},
      {"b_hh", 1, m.b_hh.size(), m.b_hh},
      {"W_fc", m.W_fc.rows(), m.W_fc.cols(), m.W_fc.values()},
      {"b_fc", 1, m.b_fc.size(), m.b_fc},
  };
}

ModelParams init_params(const Hyper& hyper, SeededRng& rng) {
  hyper.validate();
  ModelParams m = ModelParams::zeros(hyper);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hyper.d_h));
  for (Matrix* w : {&m.W_E, &m.W_ih, &m.W_hh, &m.W_fc}) {
    auto draws = rng_uniform(rng, -bound, bound, w->size());
    std::copy(draws.begin(), draws.end(), w->values().begin());
  }
  return m;
}

ForwardTrace forward(const ModelParams& params, const Hyper& hyper, std::span<const TokenPair> batch) {
  ForwardCache c = run_forward(params, hyper, batch);
  ForwardTrace trace;
  trace.h1 = Matrix(batch.size(), hyper.d_h);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto src = c.h1_tok.row(batch[i].a);
    std::copy(src.begin(), src.end(), trace.h1.row(i).begin());
  }
  trace.h2 = std::move(c.h2);
  trace.h3 = std::move(c.h3);
  trace.h3_hat = std::move(c.h3_hat);
  trace.logits = std::move(c.logits);
  return trace;
}

Matrix logits(const ModelParams& params, const Hyper& hyper, std::span<const TokenPair> batch) {
  return run_forward(params, hyper, batch).logits;
}

LossAndGrads loss_and_grads(const ModelParams& params, const Hyper& hyper, std::span<const TokenPair> batch,
                            std::span<const std::uint32_t> targets) {
  check_targets(hyper, batch, targets);
  if (batch.empty()) throw InputError("loss_and_grads: empty batch");
  ForwardCache c = run_forward(params, hyper, batch);

  const std::size_t p = hyper.p;
  const std::size_t d = hyper.d_h;
  const std::size_t n = batch.size();
  const double inv_n = 1.0 / static_cast<double>(n);

  LossAndGrads out;
  out.grads = ModelParams::zeros(hyper);
  Gradients& g = out.grads;

  // Softmax cross-entropy; dlogits = (softmax - onehot) / n.
  Matrix dlogits(n, p);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto l = c.logits.row(i);
    const double lse = log_sum_exp(l);
    total += lse - l[targets[i]];
    auto dl = dlogits.row(i);
    for (std::size_t k = 0; k < p; ++k) dl[k] = std::exp(l[k] - lse) * inv_n;
    dl[targets[i]] -= inv_n;
  }
  out.loss = total * inv_n;

  g.W_fc = matmul_tn(c.h3_hat, dlogits);
  for (std::size_t i = 0; i < n; ++i) {
    auto dl = dlogits.row(i);
    for (std::size_t k = 0; k < p; ++k) g.b_fc[k] += dl[k];
  }

  // Through ĥ = h/‖h‖: dh = (dĥ - ĥ(ĥ·dĥ))/‖h‖, then through tanh.
  Matrix dz3 = matmul_nt(dlogits, params.W_fc);
  Vector dbias(d, 0.0);
  Vector deq(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto dz = dz3.row(i);
    const double norm = c.norms[i];
    if (norm == 0.0) {
      std::fill(dz.begin(), dz.end(), 0.0);
      continue;
    }
    auto hat = c.h3_hat.row(i);
    auto h = c.h3.row(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < d; ++j) dot += hat[j] * dz[j];
    for (std::size_t j = 0; j < d; ++j) {
      const double dh = (dz[j] - hat[j] * dot) / norm;
      dz[j] = dh * (1.0 - h[j] * h[j]);
      deq[j] += dz[j];
    }
  }

  g.W_hh = matmul_tn(c.h2, dz3);
  Matrix dz2 = matmul_nt(dz3, params.W_hh);

  Matrix dproj(hyper.vocab(), d);
  Matrix dq_tok(p, d);
  for (std::size_t i = 0; i < n; ++i) {
    auto dz = dz2.row(i);
    auto h = c.h2.row(i);
    auto dq = dq_tok.row(batch[i].a);
    auto dx = dproj.row(batch[i].b);
    for (std::size_t j = 0; j < d; ++j) {
      dz[j] *= 1.0 - h[j] * h[j];
      dq[j] += dz[j];
      dx[j] += dz[j];
      dbias[j] += dz[j];
    }
  }

  Matrix dw_hh_1 = matmul_tn(c.h1_tok, dq_tok);
  {
    auto acc = g.W_hh.values();
    auto add1 = dw_hh_1.values();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += add1[i];
  }
  Matrix dz1 = matmul_nt(dq_tok, params.W_hh);
  for (std::size_t t = 0; t < p; ++t) {
    auto dz = dz1.row(t);
    auto h = c.h1_tok.row(t);
    auto dx = dproj.row(t);
    for (std::size_t j = 0; j < d; ++j) {
      const double v = dz[j] * (1.0 - h[j] * h[j]);
      dx[j] += v;
      dbias[j] += v;
    }
  }
  {
    auto dx = dproj.row(hyper.equals_token());
    for (std::size_t j = 0; j < d; ++j) {
      dx[j] += deq[j];
      dbias[j] += deq[j];
    }
  }

  g.W_ih = matmul_tn(params.W_E, dproj);
  g.W_E = matmul_nt(dproj, params.W_ih);
  g.b_ih = dbias;
  g.b_hh = dbias;
  return out;
}

std::vector<std::uint32_t> predictions(const ModelParams& params, const Hyper& hyper,
                                       std::span<const TokenPair> batch) {
  const Matrix l = logits(params, hyper, batch);
  std::vector<std::uint32_t> out(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) out[i] = static_cast<std::uint32_t>(argmax(l.row(i)));
  return out;
}

Evaluation evaluate(const ModelParams& params, const Hyper& hyper, std::span<const TokenPair> batch,
                    std::span<const std::uint32_t> targets) {
  check_targets(hyper, batch, targets);
  if (batch.empty()) return {};
  const Matrix l = logits(params, hyper, batch);
  double total = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto row = l.row(i);
    total += log_sum_exp(row) - row[targets[i]];
    if (argmax(row) == targets[i]) ++correct;
  }
  const double n = static_cast<double>(batch.size());
  return {total / n, static_cast<double>(correct) / n};
}

double loss(const ModelParams& params, const Hyper& hyper, std::span<const TokenPair> batch,
            std::span<const std::uint32_t> targets) {
  return evaluate(params, hyper, batch, targets).loss;
}

double accuracy(const ModelParams& params, const Hyper& hyper, std::span<const TokenPair> batch,
                std::span<const std::uint32_t> targets) {
  return evaluate(params, hyper, batch, targets).accuracy;
}

}  // namespace modgrok
