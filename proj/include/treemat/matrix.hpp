#pragma once

#include <algorithm>
#include <bit>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "treemat/bits.hpp"

namespace treemat {

/// Dense row-major matrix.
template <class T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T value = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, value) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  T& operator()(std::size_t i, std::size_t j) {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }
  const T& operator()(std::size_t i, std::size_t j) const {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }

  std::span<T> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const T> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<const T> data() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

template <class T>
Matrix<T> to_dense(const BitMatrix& m) {
  Matrix<T> out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j) ? T{1} : T{0};
  return out;
}

/// Appends a column filled with `value`.
template <class T>
Matrix<T> augment(const Matrix<T>& m, T value) {
  Matrix<T> out(m.rows(), m.cols() + 1, value);
  for (std::size_t i = 0; i < m.rows(); ++i)
    std::copy(m.row(i).begin(), m.row(i).end(), out.row(i).begin());
  return out;
}

namespace detail {

struct RankOverflow {};

inline std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw RankOverflow{};
  return r;
}
inline std::int64_t checked_sub(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_sub_overflow(a, b, &r)) throw RankOverflow{};
  return r;
}

template <class Int>
Int bareiss_step(const Int& pivot, const Int& aij, const Int& aic, const Int& arj,
                 const Int& prev) {
  if constexpr (std::is_same_v<Int, std::int64_t>) {
    return checked_sub(checked_mul(pivot, aij), checked_mul(aic, arj)) / prev;
  } else {
    return (pivot * aij - aic * arj) / prev;
  }
}

// Fraction-free (Bareiss) row echelon reduction. Every intermediate entry is
// a minor of the input, so the divisions are exact.
template <class Int>
std::size_t bareiss_rank(std::vector<std::vector<Int>> a, std::size_t cols) {
  const std::size_t rows = a.size();
  Int prev = 1;
  std::size_t rank = 0;
  for (std::size_t c = 0; c < cols && rank < rows; ++c) {
    std::size_t p = rank;
    while (p < rows && a[p][c] == 0) ++p;
    if (p == rows) continue;
    std::swap(a[p], a[rank]);
    const Int pivot = a[rank][c];
    for (std::size_t i = rank + 1; i < rows; ++i) {
      const Int aic = a[i][c];
      for (std::size_t j = c + 1; j < cols; ++j)
        a[i][j] = bareiss_step<Int>(pivot, a[i][j], aic, a[rank][j], prev);
      a[i][c] = 0;
    }
    prev = pivot;
    ++rank;
  }
  return rank;
}

template <class Int, class T>
std::vector<std::vector<Int>> copy_rows(const Matrix<T>& m) {
  std::vector<std::vector<Int>> a(m.rows(), std::vector<Int>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) a[i][j] = Int(m(i, j));
  return a;
}

// Rank modulo 2, rows packed into 64-bit words.
template <class T>
std::size_t rank_mod2(const Matrix<T>& m) {
  const std::size_t words = (m.cols() + 63) / 64;
  std::vector<std::vector<std::uint64_t>> pivots(m.cols());
  std::size_t rank = 0;
  std::vector<std::uint64_t> r(words);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    std::fill(r.begin(), r.end(), 0);
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (m(i, j) % 2 != 0) r[j / 64] |= std::uint64_t{1} << (j % 64);
    for (std::size_t w = 0; w < words;) {
      if (r[w] == 0) {
        ++w;
        continue;
      }
      const std::size_t c = w * 64 + static_cast<std::size_t>(std::countr_zero(r[w]));
      if (pivots[c].empty()) {
        pivots[c] = r;
        ++rank;
        break;
      }
      for (std::size_t k = w; k < words; ++k) r[k] ^= pivots[c][k];
    }
  }
  return rank;
}

// Rank modulo the prime 2^31 - 1 on sparse rows. Each row is reduced
// against stored pivots keyed by its highest column.
template <class T>
std::size_t rank_mod_prime(const Matrix<T>& m) {
  constexpr std::uint64_t p = 2147483647;
  using Row = std::vector<std::pair<std::size_t, std::uint64_t>>;
  auto inverse = [](std::uint64_t a) {
    std::uint64_t out = 1;
    for (std::uint64_t e = p - 2; e > 0; e >>= 1, a = a * a % p)
      if (e & 1) out = out * a % p;
    return out;
  };
  std::vector<Row> pivots(m.cols());
  std::size_t rank = 0;
  Row r, next;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    r.clear();
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const long long v = static_cast<long long>(m(i, j)) % static_cast<long long>(p);
      if (v != 0) r.emplace_back(j, static_cast<std::uint64_t>(v < 0 ? v + static_cast<long long>(p) : v));
    }
    while (!r.empty()) {
      const auto [c, lead] = r.back();
      const Row& piv = pivots[c];
      if (piv.empty()) {
        pivots[c] = r;
        ++rank;
        break;
      }
      // r -= f * piv, with f chosen to cancel column c.
      const std::uint64_t f = lead * inverse(piv.back().second) % p;
      next.clear();
      std::size_t a = 0, b = 0;
      while (a < r.size() || b < piv.size()) {
        if (b == piv.size() || (a < r.size() && r[a].first < piv[b].first)) {
          next.push_back(r[a++]);
        } else if (a == r.size() || piv[b].first < r[a].first) {
          next.emplace_back(piv[b].first, (p - f * piv[b].second % p) % p);
          ++b;
        } else {
          const std::uint64_t v = (r[a].second + p - f * piv[b].second % p) % p;
          if (v != 0) next.emplace_back(r[a].first, v);
          ++a, ++b;
        }
      }
      std::swap(r, next);
    }
  }
  return rank;
}

}  // namespace detail

/// Exact rank over the rationals of an integer matrix. Rank modulo a prime
/// never exceeds the rational rank, so a full rank found modulo 2 or modulo
/// 2^31 - 1 is returned directly. Otherwise Bareiss elimination runs in
/// 64-bit arithmetic and restarts with arbitrary precision on overflow.
template <class T>
  requires std::is_integral_v<T>
std::size_t matrix_rank(const Matrix<T>& m) {
  const std::size_t full = std::min(m.rows(), m.cols());
  if (full == 0) return 0;
  if (detail::rank_mod2(m) == full || detail::rank_mod_prime(m) == full) return full;
  try {
    return detail::bareiss_rank(detail::copy_rows<std::int64_t>(m), m.cols());
  } catch (const detail::RankOverflow&) {
    return detail::bareiss_rank(detail::copy_rows<boost::multiprecision::cpp_int>(m), m.cols());
  }
}

inline std::size_t matrix_rank(const BitMatrix& m) {
  return matrix_rank(to_dense<std::int64_t>(m));
}

}  // namespace treemat
