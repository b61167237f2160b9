#pragma once

// Dense matrices over GF(2), rows packed into 64-bit words.

#include <bit>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace fedcomm::gf2 {

class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), words_((cols + 63) / 64), data_(rows * words_, 0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  bool get(std::size_t r, std::size_t c) const noexcept {
    return (data_[r * words_ + c / 64] >> (c % 64)) & 1U;
  }
  void set(std::size_t r, std::size_t c, bool v) noexcept {
    auto& w = data_[r * words_ + c / 64];
    const std::uint64_t bit = std::uint64_t{1} << (c % 64);
    w = v ? (w | bit) : (w & ~bit);
  }
  void flip(std::size_t r, std::size_t c) noexcept { data_[r * words_ + c / 64] ^= std::uint64_t{1} << (c % 64); }

  // row[dst] ^= row[src]
  void add_row(std::size_t dst, std::size_t src) noexcept {
    auto* d = &data_[dst * words_];
    const auto* s = &data_[src * words_];
    for (std::size_t i = 0; i < words_; ++i) d[i] ^= s[i];
  }
  void swap_rows(std::size_t a, std::size_t b) noexcept {
    if (a == b) return;
    for (std::size_t i = 0; i < words_; ++i) std::swap(data_[a * words_ + i], data_[b * words_ + i]);
  }

  std::size_t row_weight(std::size_t r) const noexcept {
    std::size_t w = 0;
    for (std::size_t i = 0; i < words_; ++i) w += std::popcount(data_[r * words_ + i]);
    return w;
  }

  bool operator==(const BitMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> data_;
};

// Result of reducing a matrix to reduced row echelon form.
struct Echelon {
  BitMatrix reduced;                   // RREF of the input (zero rows last)
  std::vector<std::size_t> pivot_cols; // pivot column of each nonzero row, in row order
  std::size_t rank() const noexcept { return pivot_cols.size(); }
};

// Gauss-Jordan elimination. Pivots are taken left to right.
inline Echelon row_reduce(BitMatrix m) {
  Echelon out;
  std::size_t row = 0;
  for (std::size_t col = 0; col < m.cols() && row < m.rows(); ++col) {
    std::size_t pivot = row;
    while (pivot < m.rows() && !m.get(pivot, col)) ++pivot;
    if (pivot == m.rows()) continue;
    m.swap_rows(row, pivot);
    for (std::size_t r = 0; r < m.rows(); ++r)
      if (r != row && m.get(r, col)) m.add_row(r, row);
    out.pivot_cols.push_back(col);
    ++row;
  }
  out.reduced = std::move(m);
  return out;
}

inline std::size_t rank(const BitMatrix& m) { return row_reduce(m).rank(); }

// (a * b) mod 2
inline BitMatrix multiply(const BitMatrix& a, const BitMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("gf2::multiply: inner dimension mismatch");
  BitMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      bool acc = false;
      for (std::size_t t = 0; t < a.cols(); ++t) acc ^= a.get(i, t) && b.get(t, j);
      out.set(i, j, acc);
    }
  return out;
}

inline BitMatrix transpose(const BitMatrix& m) {
  BitMatrix t(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c)
      if (m.get(r, c)) t.set(c, r, true);
  return t;
}

}  // namespace fedcomm::gf2
