#pragma once

#include <algorithm>
#include <bit>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace treemat {

/// Dynamically sized bit sequence packed into 64-bit words.
/// Bit 0 is the "leftmost" position (lowest index). Unused high bits of the
/// last word are always zero.
class Bitvector {
 public:
  using word_type = std::uint64_t;
  static constexpr std::size_t word_bits = 64;

  Bitvector() = default;
  explicit Bitvector(std::size_t size, bool value = false)
      : size_(size), words_(word_count(size), value ? ~word_type{0} : 0) {
    trim();
  }

  static constexpr std::size_t word_count(std::size_t bits) {
    return (bits + word_bits - 1) / word_bits;
  }

  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  bool test(std::size_t i) const {
    assert(i < size_);
    return (words_[i / word_bits] >> (i % word_bits)) & 1u;
  }
  bool operator[](std::size_t i) const { return test(i); }

  void set(std::size_t i, bool value = true) {
    assert(i < size_);
    const word_type mask = word_type{1} << (i % word_bits);
    if (value)
      words_[i / word_bits] |= mask;
    else
      words_[i / word_bits] &= ~mask;
  }
  void reset(std::size_t i) { set(i, false); }

  Bitvector& operator&=(const Bitvector& other) {
    assert(size_ == other.size_);
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] &= other.words_[w];
    return *this;
  }
  Bitvector& operator|=(const Bitvector& other) {
    assert(size_ == other.size_);
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] |= other.words_[w];
    return *this;
  }
  Bitvector operator~() const {
    Bitvector out = *this;
    for (auto& w : out.words_) w = ~w;
    out.trim();
    return out;
  }
  friend Bitvector operator&(Bitvector a, const Bitvector& b) { return a &= b; }
  friend Bitvector operator|(Bitvector a, const Bitvector& b) { return a |= b; }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }
  bool none() const {
    return std::all_of(words_.begin(), words_.end(), [](word_type w) { return w == 0; });
  }
  bool all() const { return count() == size_; }

  /// Index of the lowest set bit, or size() when none is set.
  std::size_t find_first() const {
    for (std::size_t w = 0; w < words_.size(); ++w)
      if (words_[w] != 0)
        return w * word_bits + static_cast<std::size_t>(std::countr_zero(words_[w]));
    return size_;
  }

  /// Index of the highest set bit, or size() when none is set.
  std::size_t find_last() const {
    for (std::size_t w = words_.size(); w-- > 0;)
      if (words_[w] != 0)
        return w * word_bits + word_bits - 1 - static_cast<std::size_t>(std::countl_zero(words_[w]));
    return size_;
  }

  std::span<const word_type> words() const { return words_; }
  std::span<word_type> words() { return words_; }

  friend bool operator==(const Bitvector&, const Bitvector&) = default;

 private:
  void trim() {
    if (size_ % word_bits != 0 && !words_.empty())
      words_.back() &= (word_type{1} << (size_ % word_bits)) - 1;
  }

  std::size_t size_ = 0;
  std::vector<word_type> words_;
};

/// popcount(a & b) over two equally long word spans.
inline std::size_t and_count(std::span<const Bitvector::word_type> a,
                             std::span<const Bitvector::word_type> b) {
  assert(a.size() == b.size());
  std::size_t n = 0;
  for (std::size_t w = 0; w < a.size(); ++w)
    n += static_cast<std::size_t>(std::popcount(a[w] & b[w]));
  return n;
}

/// Dense {0,1} matrix with each row packed into 64-bit words.
/// Rows index leaves, columns index internal nodes for every matrix built in
/// this library, so a row-times-test-vector product is a popcount.
class BitMatrix {
 public:
  using word_type = Bitvector::word_type;

  BitMatrix() = default;
  BitMatrix(std::size_t rows, std::size_t cols, bool value = false)
      : rows_(rows), cols_(cols), stride_(Bitvector::word_count(cols)),
        words_(rows * stride_, 0) {
    if (value) fill(true);
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  bool operator()(std::size_t i, std::size_t j) const {
    assert(i < rows_ && j < cols_);
    return (words_[i * stride_ + j / 64] >> (j % 64)) & 1u;
  }

  void set(std::size_t i, std::size_t j, bool value = true) {
    assert(i < rows_ && j < cols_);
    const word_type mask = word_type{1} << (j % 64);
    auto& w = words_[i * stride_ + j / 64];
    w = value ? (w | mask) : (w & ~mask);
  }

  void fill(bool value) {
    for (std::size_t i = 0; i < rows_; ++i) fill_row(i, value);
  }

  void fill_row(std::size_t i, bool value) {
    auto r = row_words(i);
    std::fill(r.begin(), r.end(), value ? ~word_type{0} : 0);
    if (value && cols_ % 64 != 0) r.back() &= (word_type{1} << (cols_ % 64)) - 1;
  }

  std::span<const word_type> row_words(std::size_t i) const {
    return {words_.data() + i * stride_, stride_};
  }
  std::span<word_type> row_words(std::size_t i) {
    return {words_.data() + i * stride_, stride_};
  }

  Bitvector row(std::size_t i) const {
    Bitvector out(cols_);
    std::copy_n(row_words(i).begin(), stride_, out.words().begin());
    return out;
  }

  Bitvector column(std::size_t j) const {
    Bitvector out(rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      if ((*this)(i, j)) out.set(i);
    return out;
  }

  std::vector<Bitvector> columns() const {
    std::vector<Bitvector> out;
    out.reserve(cols_);
    for (std::size_t j = 0; j < cols_; ++j) out.push_back(column(j));
    return out;
  }

  /// Number of ones in row i.
  std::size_t row_count(std::size_t i) const {
    std::size_t n = 0;
    for (auto w : row_words(i)) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  /// <row i, v> for a bitvector over the columns.
  std::size_t row_dot(std::size_t i, const Bitvector& v) const {
    assert(v.size() == cols_);
    return and_count(row_words(i), v.words());
  }

  friend bool operator==(const BitMatrix&, const BitMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t stride_ = 0;
  std::vector<word_type> words_;
};

}  // namespace treemat
