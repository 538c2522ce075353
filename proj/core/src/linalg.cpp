#include "modgrok/linalg.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "modgrok/errors.hpp"

namespace modgrok {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

constexpr std::size_t kTileRows = 64;

ConstMapMat view(const Matrix& m) {
  return {m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}
MapMat view(Matrix& m) { return {m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())}; }

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
  }
}

std::size_t tile_count(std::size_t rows) { return (rows + kTileRows - 1) / kTileRows; }

std::size_t threads_from_env() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MODGROK_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) n = static_cast<std::size_t>(v);
  }
  return n;
}

}  // namespace

std::size_t worker_threads() {
  static const std::size_t n = threads_from_env();
  return n;
}

void parallel_tiles(std::size_t tiles, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(worker_threads(), tiles);
  if (workers <= 1) {
    for (std::size_t t = 0; t < tiles; ++t) fn(t);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t t = w; t < tiles; t += workers) fn(t);
    });
  }
  for (auto& th : pool) th.join();
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: cannot multiply " + a.shape_string() + " by " + b.shape_string());
  }
  Matrix out(a.rows(), b.cols());
  if (out.empty() || a.cols() == 0) return out;
  auto A = view(a);
  auto B = view(b);
  auto C = view(out);
  parallel_tiles(tile_count(a.rows()), [&](std::size_t t) {
    const auto r0 = static_cast<Eigen::Index>(t * kTileRows);
    const auto n = std::min<Eigen::Index>(kTileRows, A.rows() - r0);
    C.middleRows(r0, n).noalias() = A.middleRows(r0, n) * B;
  });
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: cannot multiply transpose of " + a.shape_string() + " by " + b.shape_string());
  }
  Matrix out(a.cols(), b.cols());
  if (out.empty() || a.rows() == 0) return out;
  auto A = view(a);
  auto B = view(b);
  auto C = view(out);
  parallel_tiles(tile_count(a.cols()), [&](std::size_t t) {
    const auto r0 = static_cast<Eigen::Index>(t * kTileRows);
    const auto n = std::min<Eigen::Index>(kTileRows, A.cols() - r0);
    C.middleRows(r0, n).noalias() = A.middleCols(r0, n).transpose() * B;
  });
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: cannot multiply " + a.shape_string() + " by transpose of " + b.shape_string());
  }
  Matrix out(a.rows(), b.rows());
  if (out.empty() || a.cols() == 0) return out;
  auto A = view(a);
  auto B = view(b);
  auto C = view(out);
  parallel_tiles(tile_count(a.rows()), [&](std::size_t t) {
    const auto r0 = static_cast<Eigen::Index>(t * kTileRows);
    const auto n = std::min<Eigen::Index>(kTileRows, A.rows() - r0);
    C.middleRows(r0, n).noalias() = A.middleRows(r0, n) * B.transpose();
  });
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix out = a;
  auto o = out.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
  return out;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "subtract");
  Matrix out = a;
  auto o = out.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
  return out;
}

Matrix scaled(const Matrix& a, double s) {
  Matrix out = a;
  for (double& v : out.values()) v *= s;
  return out;
}

double sum_of_squares(const Matrix& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return s;
}

double frobenius_norm(const Matrix& a) { return std::sqrt(sum_of_squares(a)); }

double relative_error(const Matrix& a, const Matrix& b) {
  const double denom = frobenius_norm(b);
  const double diff = frobenius_norm(subtract(a, b));
  return denom == 0.0 ? diff : diff / denom;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) m = std::max(m, std::abs(av[i] - bv[i]));
  return m;
}

SvdResult svd(const Matrix& a) {
  if (a.rows() == 0 || a.cols() == 0) throw ShapeError("svd: empty matrix " + a.shape_string());
  if (!a.all_finite()) throw DomainError("svd: matrix " + a.shape_string() + " has non-finite entries");

  const Eigen::MatrixXd dense = view(a);
  Eigen::JacobiSVD<Eigen::MatrixXd> solver(dense, Eigen::ComputeThinU | Eigen::ComputeThinV);

  const auto k = static_cast<std::size_t>(solver.singularValues().size());
  SvdResult out{Matrix(a.rows(), k), Vector(k), Matrix(a.cols(), k)};
  const auto& U = solver.matrixU();
  const auto& V = solver.matrixV();
  for (std::size_t j = 0; j < k; ++j) {
    out.S[j] = solver.singularValues()(static_cast<Eigen::Index>(j));
    const auto col = static_cast<Eigen::Index>(j);
    const double vmax = V.col(col).cwiseAbs().maxCoeff();
    double sign = 1.0;
    for (Eigen::Index i = 0; i < V.rows(); ++i) {
      if (std::abs(V(i, col)) > 1e-12 * vmax) {
        sign = V(i, col) < 0.0 ? -1.0 : 1.0;
        break;
      }
    }
    for (std::size_t i = 0; i < a.rows(); ++i) out.U(i, j) = sign * U(static_cast<Eigen::Index>(i), col);
    for (std::size_t i = 0; i < a.cols(); ++i) out.V(i, j) = sign * V(static_cast<Eigen::Index>(i), col);
  }
  return out;
}

Matrix component_range(const SvdResult& s, std::size_t first, std::size_t last) {
  const std::size_t k = s.S.size();
  if (first > last || last > k) {
    throw RangeError("svd component range [" + std::to_string(first) + ", " + std::to_string(last) +
                     ") outside 0.." + std::to_string(k));
  }
  Matrix out(s.U.rows(), s.V.rows());
  if (first == last) return out;
  const auto n = static_cast<Eigen::Index>(last - first);
  const auto f = static_cast<Eigen::Index>(first);
  auto U = view(s.U);
  auto V = view(s.V);
  Eigen::Map<const Eigen::VectorXd> S(s.S.data(), static_cast<Eigen::Index>(k));
  const RowMat us = U.middleCols(f, n) * S.segment(f, n).asDiagonal();
  view(out).noalias() = us * V.middleCols(f, n).transpose();
  return out;
}

Matrix truncate(const SvdResult& s, std::size_t r) {
  if (r > s.S.size()) {
    throw RangeError("truncate: rank " + std::to_string(r) + " exceeds " + std::to_string(s.S.size()));
  }
  return component_range(s, 0, r);
}

Matrix complement(const SvdResult& s, std::size_t r) {
  if (r > s.S.size()) {
    throw RangeError("complement: rank " + std::to_string(r) + " exceeds " + std::to_string(s.S.size()));
  }
  return component_range(s, r, s.S.size());
}

}  // namespace modgrok
