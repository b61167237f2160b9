#pragma once

// Rate-1/2 LDPC codes: construction, systematic encoding, syndrome check,
// and sum-product belief propagation.
//
// Bit convention: a codeword bit 0 is sent as +1 and a bit 1 as -1. LLRs are
// log(P(bit = 0) / P(bit = 1)), so a positive LLR favours bit 0 (chip +1).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedcomm/gf2.hpp"
#include "fedcomm/rng.hpp"

namespace fedcomm {

using Bits = std::vector<std::uint8_t>;  // one 0/1 value per entry
using LlrVector = std::vector<double>;

// Degree profile of the parity-check matrix. Column degrees are spread as
// evenly as the row weight allows: total ones = rows * row_weight.
struct LdpcShape {
  std::size_t row_weight = 6;
  std::size_t max_attempts = 64;
  std::size_t cycle4_passes = 40;  // swap passes that try to break length-4 cycles
};

class LdpcCode {
 public:
  std::size_t k() const noexcept { return k_; }
  std::size_t n() const noexcept { return n_; }
  std::size_t checks() const noexcept { return n_ - k_; }
  Seed seed() const noexcept { return seed_; }
  std::size_t attempts() const noexcept { return attempts_; }

  const gf2::BitMatrix& parity_check() const noexcept { return h_; }
  const gf2::BitMatrix& generator() const noexcept { return g_; }
  // Variables touched by each check (rows of H).
  const std::vector<std::vector<std::uint32_t>>& check_vars() const noexcept { return check_vars_; }
  // Codeword position holding message bit j.
  const std::vector<std::size_t>& message_positions() const noexcept { return message_positions_; }

  friend LdpcCode construct_code(std::size_t k, Seed seed, const LdpcShape& shape);

 private:
  std::size_t k_ = 0;
  std::size_t n_ = 0;
  Seed seed_ = 0;
  std::size_t attempts_ = 0;
  gf2::BitMatrix h_;
  gf2::BitMatrix g_;
  std::vector<std::vector<std::uint32_t>> check_vars_;
  std::vector<std::size_t> message_positions_;
};

class CodeConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline bool row_has(const std::vector<std::uint32_t>& row, std::uint32_t v) {
  return std::find(row.begin(), row.end(), v) != row.end();
}

// Socket-dealing construction: every column contributes `degree` sockets,
// sockets are shuffled and dealt to rows `row_weight` at a time, then
// repeated entries inside a row are repaired by swaps with other rows.
inline std::optional<std::vector<std::vector<std::uint32_t>>> deal_rows(std::size_t rows, std::size_t cols,
                                                                        const LdpcShape& shape,
                                                                        CounterStream& rng) {
  const std::size_t total = rows * shape.row_weight;
  std::vector<std::uint32_t> col_order(cols);
  std::iota(col_order.begin(), col_order.end(), 0U);
  portable_shuffle(col_order, rng);

  std::vector<std::uint32_t> sockets;
  sockets.reserve(total);
  const std::size_t base = total / cols;
  const std::size_t extra = total % cols;
  for (std::size_t i = 0; i < cols; ++i) {
    const std::size_t deg = base + (i < extra ? 1 : 0);
    for (std::size_t d = 0; d < deg; ++d) sockets.push_back(col_order[i]);
  }
  portable_shuffle(sockets, rng);

  std::vector<std::vector<std::uint32_t>> row_vars(rows);
  for (std::size_t r = 0; r < rows; ++r)
    row_vars[r].assign(sockets.begin() + static_cast<std::ptrdiff_t>(r * shape.row_weight),
                       sockets.begin() + static_cast<std::ptrdiff_t>((r + 1) * shape.row_weight));

  // Repair duplicates: swap the repeated entry with a random entry of a
  // random row such that neither row ends up with a duplicate.
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t a = 0; a < shape.row_weight; ++a) {
      std::size_t guard = 0;
      while (std::count(row_vars[r].begin(), row_vars[r].end(), row_vars[r][a]) > 1) {
        if (++guard > 10000) return std::nullopt;
        const auto other = static_cast<std::size_t>(rng.below(rows));
        const auto b = static_cast<std::size_t>(rng.below(shape.row_weight));
        if (other == r) continue;
        const auto va = row_vars[r][a];
        const auto vb = row_vars[other][b];
        if (row_has(row_vars[r], vb) || row_has(row_vars[other], va)) continue;
        row_vars[r][a] = vb;
        row_vars[other][b] = va;
      }
    }
  }
  return row_vars;
}

// Two rows sharing two or more variables form a length-4 cycle.
inline std::size_t shared_count(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
  std::size_t s = 0;
  for (auto v : a) s += row_has(b, v) ? 1 : 0;
  return s;
}

inline std::size_t cycle4_rows(const std::vector<std::vector<std::uint32_t>>& rows, std::size_t r) {
  std::size_t bad = 0;
  for (std::size_t o = 0; o < rows.size(); ++o)
    if (o != r && shared_count(rows[r], rows[o]) >= 2) ++bad;
  return bad;
}

// Best-effort removal of length-4 cycles by degree-preserving swaps.
inline void break_four_cycles(std::vector<std::vector<std::uint32_t>>& rows, const LdpcShape& shape,
                              CounterStream& rng) {
  const std::size_t w = shape.row_weight;
  for (std::size_t pass = 0; pass < shape.cycle4_passes; ++pass) {
    bool clean = true;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (cycle4_rows(rows, r) == 0) continue;
      clean = false;
      const auto other = static_cast<std::size_t>(rng.below(rows.size()));
      if (other == r) continue;
      const auto a = static_cast<std::size_t>(rng.below(w));
      const auto b = static_cast<std::size_t>(rng.below(w));
      const auto va = rows[r][a];
      const auto vb = rows[other][b];
      if (row_has(rows[r], vb) || row_has(rows[other], va)) continue;
      const std::size_t before = cycle4_rows(rows, r) + cycle4_rows(rows, other);
      rows[r][a] = vb;
      rows[other][b] = va;
      const std::size_t after = cycle4_rows(rows, r) + cycle4_rows(rows, other);
      if (after > before) {
        rows[r][a] = va;
        rows[other][b] = vb;
      }
    }
    if (clean) return;
  }
}

}  // namespace detail

// Builds a rate-1/2 code with k message bits and n = 2k codeword bits.
// H has k rows with exactly `shape.row_weight` ones each; a construction
// attempt is rejected unless H has full row rank. The generator is derived
// from the reduced row echelon form of H: non-pivot columns carry the
// message, pivot columns carry parity.
inline LdpcCode construct_code(std::size_t k, Seed seed, const LdpcShape& shape = {}) {
  if (k < 8) throw std::invalid_argument("construct_code: k must be at least 8");
  const std::size_t n = 2 * k;
  const std::size_t m = n - k;
  if (shape.row_weight < 2 || shape.row_weight > n)
    throw std::invalid_argument("construct_code: row weight out of range");
  if (m * shape.row_weight < n)
    throw std::invalid_argument("construct_code: row weight too small to cover every column");

  for (std::size_t attempt = 0; attempt < shape.max_attempts; ++attempt) {
    CounterStream rng(derive_seed(seed, {stream::ldpc, attempt}));
    auto dealt = detail::deal_rows(m, n, shape, rng);
    if (!dealt) continue;
    auto rows = std::move(*dealt);
    detail::break_four_cycles(rows, shape, rng);
    for (auto& row : rows) std::sort(row.begin(), row.end());

    gf2::BitMatrix h(m, n);
    for (std::size_t r = 0; r < m; ++r)
      for (auto v : rows[r]) h.set(r, v, true);

    auto ech = gf2::row_reduce(h);
    if (ech.rank() != m) continue;

    std::vector<std::uint8_t> is_pivot(n, 0);
    for (auto c : ech.pivot_cols) is_pivot[c] = 1;
    std::vector<std::size_t> free_cols;
    for (std::size_t c = 0; c < n; ++c)
      if (!is_pivot[c]) free_cols.push_back(c);

    // Row i of the RREF reads: x[pivot_i] = sum_j R[i][free_j] * x[free_j].
    gf2::BitMatrix g(k, n);
    for (std::size_t j = 0; j < k; ++j) {
      g.set(j, free_cols[j], true);
      for (std::size_t i = 0; i < m; ++i)
        if (ech.reduced.get(i, free_cols[j])) g.set(j, ech.pivot_cols[i], true);
    }

    LdpcCode code;
    code.k_ = k;
    code.n_ = n;
    code.seed_ = seed;
    code.attempts_ = attempt + 1;
    code.h_ = std::move(h);
    code.g_ = std::move(g);
    code.check_vars_ = std::move(rows);
    code.message_positions_ = std::move(free_cols);
    return code;
  }
  std::ostringstream msg;
  msg << "construct_code: no full-rank parity-check matrix for k=" << k << " seed=" << seed << " after "
      << shape.max_attempts << " attempts";
  throw CodeConstructionError(msg.str());
}

// b = (m G) mod 2
inline Bits encode(const LdpcCode& code, std::span<const std::uint8_t> message) {
  if (message.size() != code.k()) throw std::invalid_argument("encode: message length must equal k");
  Bits word(code.n(), 0);
  const auto& g = code.generator();
  for (std::size_t j = 0; j < code.k(); ++j) {
    if (!message[j]) continue;
    for (std::size_t c = 0; c < code.n(); ++c) word[c] ^= static_cast<std::uint8_t>(g.get(j, c));
  }
  return word;
}

// s = (w H^T) mod 2
inline Bits syndrome(const LdpcCode& code, std::span<const std::uint8_t> word) {
  if (word.size() != code.n()) throw std::invalid_argument("syndrome: word length must equal n");
  Bits s(code.checks(), 0);
  const auto& rows = code.check_vars();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::uint8_t acc = 0;
    for (auto v : rows[r]) acc ^= word[v] & 1U;
    s[r] = acc;
  }
  return s;
}

inline bool is_zero(std::span<const std::uint8_t> bits) {
  return std::all_of(bits.begin(), bits.end(), [](std::uint8_t b) { return b == 0; });
}

inline Bits extract_message(const LdpcCode& code, std::span<const std::uint8_t> word) {
  Bits m(code.k());
  for (std::size_t j = 0; j < code.k(); ++j) m[j] = word[code.message_positions()[j]];
  return m;
}

struct DecodeResult {
  Bits message;
  Bits codeword;
  bool converged = false;
  int iterations = 0;
};

inline constexpr int kDefaultBpIterations = 50;
inline constexpr double kLlrClamp = 50.0;

// Sum-product decoding on the Tanner graph of H. Stops as soon as the hard
// decision has zero syndrome.
inline DecodeResult bp_decode(const LdpcCode& code, std::span<const double> llr,
                              int max_iters = kDefaultBpIterations) {
  if (max_iters < 1) throw std::invalid_argument("bp_decode: max_iters must be >= 1");
  if (llr.size() != code.n()) throw std::invalid_argument("bp_decode: LLR length must equal n");

  const auto& rows = code.check_vars();
  std::vector<std::size_t> offset(rows.size() + 1, 0);
  for (std::size_t r = 0; r < rows.size(); ++r) offset[r + 1] = offset[r] + rows[r].size();
  const std::size_t edges = offset.back();

  std::vector<double> channel(code.n());
  for (std::size_t v = 0; v < code.n(); ++v) channel[v] = std::clamp(llr[v], -kLlrClamp, kLlrClamp);

  std::vector<double> v2c(edges), c2v(edges, 0.0), total(channel);
  std::vector<double> t, fwd, bwd;
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t e = offset[r]; e < offset[r + 1]; ++e) v2c[e] = channel[rows[r][e - offset[r]]];

  DecodeResult out;
  out.codeword.assign(code.n(), 0);
  for (int it = 1; it <= max_iters; ++it) {
    // Check nodes: tanh rule with prefix/suffix products for the extrinsic terms.
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::size_t deg = offset[r + 1] - offset[r];
      t.resize(deg);
      fwd.resize(deg + 1);
      bwd.resize(deg + 1);
      for (std::size_t i = 0; i < deg; ++i) t[i] = std::tanh(0.5 * v2c[offset[r] + i]);
      fwd[0] = 1.0;
      bwd[deg] = 1.0;
      for (std::size_t i = 0; i < deg; ++i) fwd[i + 1] = fwd[i] * t[i];
      for (std::size_t i = deg; i > 0; --i) bwd[i - 1] = bwd[i] * t[i - 1];
      for (std::size_t i = 0; i < deg; ++i) {
        const double p = std::clamp(fwd[i] * bwd[i + 1], -1.0 + 1e-15, 1.0 - 1e-15);
        c2v[offset[r] + i] = std::clamp(2.0 * std::atanh(p), -kLlrClamp, kLlrClamp);
      }
    }
    // Variable nodes.
    total = channel;
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t e = offset[r]; e < offset[r + 1]; ++e) total[rows[r][e - offset[r]]] += c2v[e];
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t e = offset[r]; e < offset[r + 1]; ++e)
        v2c[e] = std::clamp(total[rows[r][e - offset[r]]] - c2v[e], -kLlrClamp, kLlrClamp);

    for (std::size_t v = 0; v < code.n(); ++v) out.codeword[v] = total[v] < 0.0 ? 1 : 0;
    out.iterations = it;
    if (is_zero(syndrome(code, out.codeword))) {
      out.converged = true;
      break;
    }
  }
  out.message = extract_message(code, out.codeword);
  return out;
}

inline constexpr std::size_t kMinPilots = 16;
// LLR magnitude bound, used in particular when the pilot residual variance is zero.
inline constexpr double kLlrCap = 30.0;

struct ChannelEstimate {
  double amplitude = 0.0;
  double noise_variance = 0.0;
};

// Amplitude A = mean(y_p * pilot); noise variance = sample variance of
// (y_p - A * pilot).
inline ChannelEstimate estimate_channel(std::span<const double> y_pilots, std::span<const int> pilot_signs) {
  if (y_pilots.size() != pilot_signs.size()) throw std::invalid_argument("estimate_channel: pilot length mismatch");
  if (y_pilots.size() < kMinPilots) throw std::invalid_argument("estimate_channel: at least 16 pilots required");
  const auto np = static_cast<double>(y_pilots.size());
  ChannelEstimate est;
  for (std::size_t i = 0; i < y_pilots.size(); ++i) est.amplitude += y_pilots[i] * pilot_signs[i];
  est.amplitude /= np;
  double mean_res = 0.0;
  for (std::size_t i = 0; i < y_pilots.size(); ++i) mean_res += y_pilots[i] - est.amplitude * pilot_signs[i];
  mean_res /= np;
  for (std::size_t i = 0; i < y_pilots.size(); ++i) {
    const double d = y_pilots[i] - est.amplitude * pilot_signs[i] - mean_res;
    est.noise_variance += d * d;
  }
  est.noise_variance /= np - 1.0;
  return est;
}

// LLR_i = 2 A y_i / v from the pilot-based channel estimate. Returns nullopt
// when A <= 0, i.e. the payload is not yet above the noise.
inline std::optional<LlrVector> llr_from_correlation(std::span<const double> y_data, std::span<const double> y_pilots,
                                                     std::span<const int> pilot_signs) {
  const auto est = estimate_channel(y_pilots, pilot_signs);
  const double amp = est.amplitude;
  if (!(amp > 0.0)) return std::nullopt;
  LlrVector llr(y_data.size());
  const bool degenerate = !(est.noise_variance > amp * amp * 1e-12);
  for (std::size_t i = 0; i < y_data.size(); ++i) {
    const double raw = degenerate ? (y_data[i] >= 0.0 ? kLlrCap : -kLlrCap) : 2.0 * amp * y_data[i] / est.noise_variance;
    llr[i] = std::clamp(raw, -kLlrCap, kLlrCap);
  }
  return llr;
}

// Sparse H as (row, col) index pairs, one per line, with a header.
inline std::string export_parity_csv(const LdpcCode& code) {
  std::ostringstream out;
  out << "row,col\n";
  const auto& rows = code.check_vars();
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (auto v : rows[r]) out << r << ',' << v << '\n';
  return out.str();
}

}  // namespace fedcomm
