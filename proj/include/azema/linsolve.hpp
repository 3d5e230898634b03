#pragma once

#include <vector>

#include "azema/rational.hpp"
#include "azema/space.hpp"

namespace azema {

struct LinearSolveResult {
  bool consistent = false;
  int rank = 0;
  std::vector<Rat> x;                    // particular solution; minimal-norm when underdetermined
  std::vector<std::vector<Rat>> kernel;  // basis of the homogeneous solution space
};

namespace detail {

// Reduced row echelon form in place; returns pivot column per row.
inline std::vector<int> rref(std::vector<std::vector<Rat>>& a) {
  std::vector<int> pivots;
  if (a.empty()) return pivots;
  const int rows = static_cast<int>(a.size());
  const int cols = static_cast<int>(a[0].size());
  int r = 0;
  for (int c = 0; c < cols && r < rows; ++c) {
    int pivot = -1;
    for (int i = r; i < rows; ++i)
      if (a[i][c] != 0) {
        pivot = i;
        break;
      }
    if (pivot == -1) continue;
    std::swap(a[r], a[pivot]);
    Rat inv = a[r][c];
    for (int j = c; j < cols; ++j) a[r][j] /= inv;
    for (int i = 0; i < rows; ++i) {
      if (i == r || a[i][c] == 0) continue;
      Rat factor = a[i][c];
      for (int j = c; j < cols; ++j) a[i][j] -= factor * a[r][j];
    }
    pivots.push_back(c);
    ++r;
  }
  return pivots;
}

}  // namespace detail

// Exact Gaussian elimination for A x = b. For underdetermined consistent systems the
// particular solution is the Euclidean minimal-norm one (projection onto the row space).
inline LinearSolveResult solve_exact(const std::vector<std::vector<Rat>>& a_in, const std::vector<Rat>& b) {
  const int rows = static_cast<int>(a_in.size());
  require(b.size() == a_in.size(), "rhs size mismatch");
  const int cols = rows == 0 ? 0 : static_cast<int>(a_in[0].size());
  for (const auto& row : a_in) require(static_cast<int>(row.size()) == cols, "ragged matrix");

  std::vector<std::vector<Rat>> aug(rows, std::vector<Rat>(cols + 1));
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) aug[i][j] = a_in[i][j];
    aug[i][cols] = b[i];
  }
  std::vector<int> pivots = detail::rref(aug);
  LinearSolveResult res;
  // A pivot in the rhs column marks inconsistency.
  if (!pivots.empty() && pivots.back() == cols) {
    res.consistent = false;
    res.rank = static_cast<int>(pivots.size()) - 1;
    return res;
  }
  res.consistent = true;
  res.rank = static_cast<int>(pivots.size());

  std::vector<bool> is_pivot(cols, false);
  for (int c : pivots) is_pivot[c] = true;
  std::vector<Rat> particular(cols, Rat(0));
  for (std::size_t i = 0; i < pivots.size(); ++i) particular[pivots[i]] = aug[i][cols];
  for (int c = 0; c < cols; ++c) {
    if (is_pivot[c]) continue;
    std::vector<Rat> vec(cols, Rat(0));
    vec[c] = 1;
    for (std::size_t i = 0; i < pivots.size(); ++i) vec[pivots[i]] = -aug[i][c];
    res.kernel.push_back(std::move(vec));
  }
  if (res.kernel.empty()) {
    res.x = std::move(particular);
    return res;
  }
  // Minimal norm: subtract the kernel component, solving (K^T K) c = K^T x0 exactly.
  const int kdim = static_cast<int>(res.kernel.size());
  std::vector<std::vector<Rat>> gram(kdim, std::vector<Rat>(kdim, Rat(0)));
  std::vector<Rat> rhs(kdim, Rat(0));
  for (int i = 0; i < kdim; ++i) {
    for (int j = 0; j < kdim; ++j)
      for (int c = 0; c < cols; ++c) gram[i][j] += res.kernel[i][c] * res.kernel[j][c];
    for (int c = 0; c < cols; ++c) rhs[i] += res.kernel[i][c] * particular[c];
  }
  LinearSolveResult coeff = solve_exact(gram, rhs);  // Gram matrix is invertible
  for (int i = 0; i < kdim; ++i)
    for (int c = 0; c < cols; ++c) particular[c] -= coeff.x[i] * res.kernel[i][c];
  res.x = std::move(particular);
  return res;
}

// Dimension of the nullspace of A.
inline int nullity(std::vector<std::vector<Rat>> a) {
  if (a.empty()) return 0;
  const int cols = static_cast<int>(a[0].size());
  std::vector<int> pivots = detail::rref(a);
  return cols - static_cast<int>(pivots.size());
}

}  // namespace azema
