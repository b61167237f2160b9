#pragma once

// Payload <-> transmitted frame.
//
// Frame layout: [LDPC codeword, 2 * 8 * bytes chips][pilots, 100 chips].
// Payload bits are taken MSB first from each byte. Codeword bit 0 maps to
// chip +1 and bit 1 to chip -1. Pilot chips are drawn from
// CounterStream(derive_seed(pilot_seed, {pilots})): chip i is +1 when the
// low bit of the i-th output is clear.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fedcomm/cdma_channel.hpp"
#include "fedcomm/ldpc_codec.hpp"
#include "fedcomm/rng.hpp"

namespace fedcomm {

inline constexpr std::size_t kPilotCount = 100;

struct Payload {
  std::vector<std::uint8_t> bytes;

  static Payload from_text(std::string_view text) {
    Payload p;
    p.bytes.assign(text.begin(), text.end());
    if (p.bytes.empty()) throw std::invalid_argument("payload must be nonempty");
    return p;
  }

  std::size_t bit_length() const noexcept { return 8 * bytes.size(); }
  std::string text() const { return {bytes.begin(), bytes.end()}; }
  bool operator==(const Payload&) const = default;
};

inline Bits payload_bits(const Payload& p) {
  Bits bits;
  bits.reserve(p.bit_length());
  for (auto byte : p.bytes)
    for (int b = 7; b >= 0; --b) bits.push_back(static_cast<std::uint8_t>((byte >> b) & 1U));
  return bits;
}

inline Payload payload_from_bits(std::span<const std::uint8_t> bits) {
  if (bits.empty() || bits.size() % 8 != 0) throw std::invalid_argument("payload_from_bits: length must be a positive multiple of 8");
  Payload p;
  p.bytes.resize(bits.size() / 8);
  for (std::size_t i = 0; i < bits.size(); ++i)
    p.bytes[i / 8] = static_cast<std::uint8_t>(p.bytes[i / 8] | ((bits[i] & 1U) << (7 - i % 8)));
  return p;
}

inline std::size_t frame_length(std::size_t payload_bytes) noexcept { return 2 * 8 * payload_bytes + kPilotCount; }

inline SignVector pilot_signs(Seed pilot_seed, std::size_t count = kPilotCount) {
  CounterStream rng(derive_seed(pilot_seed, {stream::pilots}));
  SignVector out(count);
  for (auto& s : out) s = (rng.next() & 1U) ? -1 : 1;
  return out;
}

struct Frame {
  SignVector bits;             // codeword chips followed by pilot chips
  std::size_t message_bits = 0;
  std::size_t codeword_bits = 0;
  Seed pilot_seed = 0;

  std::size_t size() const noexcept { return bits.size(); }
};

inline Frame frame(const Payload& payload, const LdpcCode& code, Seed pilot_seed) {
  if (payload.bytes.empty()) throw std::invalid_argument("frame: payload must be nonempty");
  if (code.k() != payload.bit_length()) throw std::invalid_argument("frame: code size does not match payload");
  const auto cw = encode(code, payload_bits(payload));
  Frame f;
  f.message_bits = code.k();
  f.codeword_bits = code.n();
  f.pilot_seed = pilot_seed;
  f.bits.reserve(cw.size() + kPilotCount);
  for (auto b : cw) f.bits.push_back(b ? -1 : 1);
  const auto pilots = pilot_signs(pilot_seed);
  f.bits.insert(f.bits.end(), pilots.begin(), pilots.end());
  return f;
}

// Fraction of positions where two sequences differ.
template <typename A, typename B>
double bit_error_rate(std::span<const A> decoded, std::span<const B> truth) {
  if (decoded.size() != truth.size()) throw std::invalid_argument("bit_error_rate: length mismatch");
  if (decoded.empty()) return 0.0;
  std::size_t diff = 0;
  for (std::size_t i = 0; i < decoded.size(); ++i) diff += decoded[i] != truth[i] ? 1 : 0;
  return static_cast<double>(diff) / static_cast<double>(decoded.size());
}

inline double bit_error_rate(const SignVector& decoded, const SignVector& truth) {
  return bit_error_rate(std::span<const int>(decoded), std::span<const int>(truth));
}

enum class ReceiveStatus {
  NotYetDecodable,  // pilot amplitude estimate <= 0
  Undecoded,        // BP did not reach a zero syndrome
  Delivered,
};

struct DeframeResult {
  ReceiveStatus status = ReceiveStatus::NotYetDecodable;
  std::optional<Payload> payload;
  std::optional<double> prefec_ber;  // only when the true frame is supplied
  int bp_iterations = 0;
};

// Splits y into codeword and pilot segments, estimates the channel from the
// pilots and runs BP. `truth`, when given, is the transmitted frame and is
// used only for the pre-FEC bit error rate.
inline DeframeResult deframe(std::span<const double> y, const LdpcCode& code, Seed pilot_seed,
                             const SignVector* truth = nullptr, int max_iters = kDefaultBpIterations) {
  if (y.size() != code.n() + kPilotCount) throw std::invalid_argument("deframe: correlation length does not match frame");
  const auto data = y.first(code.n());
  const auto pilot_y = y.subspan(code.n());
  DeframeResult out;
  if (truth) {
    if (truth->size() != y.size()) throw std::invalid_argument("deframe: truth length mismatch");
    const auto decided = hard_decision(data);
    out.prefec_ber = bit_error_rate(std::span<const int>(decided), std::span<const int>(*truth).first(code.n()));
  }
  const auto pilots = pilot_signs(pilot_seed);
  const auto llr = llr_from_correlation(data, pilot_y, pilots);
  if (!llr) return out;
  const auto dec = bp_decode(code, *llr, max_iters);
  out.bp_iterations = dec.iterations;
  if (!dec.converged) {
    out.status = ReceiveStatus::Undecoded;
    return out;
  }
  out.status = ReceiveStatus::Delivered;
  out.payload = payload_from_bits(dec.message);
  return out;
}

// On-demand code construction keyed by message length.
class CodeBook {
 public:
  explicit CodeBook(Seed seed, LdpcShape shape = {}) : seed_(seed), shape_(shape) {}

  const LdpcCode& for_payload(const Payload& p) { return for_message_bits(p.bit_length()); }

  const LdpcCode& for_message_bits(std::size_t k) {
    auto it = codes_.find(k);
    if (it == codes_.end()) it = codes_.emplace(k, construct_code(k, derive_seed(seed_, {stream::ldpc, k}), shape_)).first;
    return it->second;
  }

 private:
  Seed seed_;
  LdpcShape shape_;
  std::map<std::size_t, LdpcCode> codes_;
};

}  // namespace fedcomm
