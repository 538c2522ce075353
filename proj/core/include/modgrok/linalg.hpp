#pragma once

#include <cstddef>
#include <functional>

#include "modgrok/matrix.hpp"

namespace modgrok {

/// Thin SVD A = U·diag(S)·Vᵀ with k = min(rows, cols) components.
///
/// S is sorted descending. Signs are fixed so the first entry of each V column
/// that is not negligibly small is positive; U columns are flipped to match.
struct SvdResult {
  Matrix U;  // m×k
  Vector S;  // k
  Matrix V;  // n×k

  std::size_t rank_capacity() const { return S.size(); }
};

// Products. All three use a fixed row tiling so results are bit-identical
// for any worker thread count.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // aᵀ·b
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a·bᵀ

Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix scaled(const Matrix& a, double s);

double frobenius_norm(const Matrix& a);
double sum_of_squares(const Matrix& a);
/// ‖a − b‖_F / ‖b‖_F, or ‖a‖_F when b is zero.
double relative_error(const Matrix& a, const Matrix& b);
double max_abs_diff(const Matrix& a, const Matrix& b);

SvdResult svd(const Matrix& a);

/// Σ_{i<r} σᵢ uᵢ vᵢᵀ. r == 0 yields the zero matrix.
Matrix truncate(const SvdResult& svd, std::size_t r);
/// Σ_{i≥r} σᵢ uᵢ vᵢᵀ, the part of A orthogonal to the leading r components.
Matrix complement(const SvdResult& svd, std::size_t r);
/// Σ_{i∈[first,last)} σᵢ uᵢ vᵢᵀ.
Matrix component_range(const SvdResult& svd, std::size_t first, std::size_t last);

/// Runs fn(tile) for tile in [0, tiles) across worker threads. The number of
/// workers comes from MODGROK_THREADS (default: hardware concurrency). Work
/// per tile must not depend on which thread runs it.
void parallel_tiles(std::size_t tiles, const std::function<void(std::size_t)>& fn);
std::size_t worker_threads();

}  // namespace modgrok
