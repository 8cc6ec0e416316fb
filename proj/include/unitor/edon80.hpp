#pragma once

// Edon80 binary additive stream cipher.
//
// 80-bit key, 64-bit IV padded to 80 bits, 80 pipelined quasigroup stages.
// Every 2-bit symbol is read and written MSB first. Edon80 has published
// cryptanalysis and is not recommended for new designs; it is kept here
// behind a narrow interface for fidelity with the Unitor protocol.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "unitor/qg4.hpp"

namespace unitor::edon80 {

inline constexpr std::size_t kStages = 80;
inline constexpr std::size_t kKeySymbols = 40;
/// Appended to the 64-bit IV: 1110010000011011.
inline constexpr std::uint16_t kIvPadding = 0xE41B;

/// Bit sequence packed MSB-first into bytes; the unused tail of the last
/// byte is always zero.
class BitString {
 public:
  BitString() = default;
  static BitString from_bytes(std::span<const std::uint8_t> bytes);
  static BitString from_bytes(std::span<const std::uint8_t> bytes, std::size_t n_bits);
  /// Parses a string of '0'/'1' characters.
  static BitString from_binary(std::string_view digits);

  void push_back(bool bit);
  void append(const BitString& other);
  bool operator[](std::size_t i) const { return (bytes_[i >> 3] >> (7 - (i & 7))) & 1u; }

  std::size_t size() const { return n_bits_; }
  bool empty() const { return n_bits_ == 0; }
  std::size_t count_ones() const;
  BitString prefix(std::size_t n_bits) const;

  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  std::string to_hex() const;
  std::string to_binary() const;

  friend bool operator==(const BitString&, const BitString&) = default;

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t n_bits_ = 0;
};

using Keystream = BitString;

class Key80 {
 public:
  static constexpr std::size_t kBytes = 10;

  /// 20 hex digits. Throws std::invalid_argument otherwise.
  static Key80 from_hex(std::string_view hex);
  static Key80 from_bytes(std::span<const std::uint8_t> bytes);
  static Key80 from_symbols(std::span<const qg4::Symbol> symbols);
  static Key80 random();

  const std::array<std::uint8_t, kBytes>& bytes() const { return bytes_; }
  std::string to_hex() const;
  /// K1..K40.
  std::array<qg4::Symbol, kKeySymbols> symbols() const;

  friend auto operator<=>(const Key80&, const Key80&) = default;

 private:
  std::array<std::uint8_t, kBytes> bytes_{};
};

class IV64 {
 public:
  static constexpr std::size_t kBytes = 8;

  /// 16 hex digits. Throws std::invalid_argument otherwise.
  static IV64 from_hex(std::string_view hex);
  static IV64 from_bytes(std::span<const std::uint8_t> bytes);
  /// Drawn from the OS entropy source.
  static IV64 random();

  const std::array<std::uint8_t, kBytes>& bytes() const { return bytes_; }
  std::string to_hex() const;

  friend auto operator<=>(const IV64&, const IV64&) = default;

 private:
  std::array<std::uint8_t, kBytes> bytes_{};
};

class PaddedIV {
 public:
  const std::array<std::uint8_t, 10>& bytes() const { return bytes_; }
  /// V1..V40.
  std::array<qg4::Symbol, kKeySymbols> symbols() const;

  friend bool operator==(const PaddedIV&, const PaddedIV&) = default;

 private:
  friend PaddedIV pad_iv(const IV64& iv);
  std::array<std::uint8_t, 10> bytes_{};
};

PaddedIV pad_iv(const IV64& iv);

/// Working quasigroup of each stage: stage i (0-based) uses quad member
/// K[i mod 40].
class KeySchedule {
 public:
  /// Index 0..3 into the quad for a 0-based stage.
  std::size_t selector(std::size_t stage) const { return selectors_.at(stage); }
  const qg4::Quasigroup4& stage(std::size_t i) const { return quad_[selector(i)]; }
  const qg4::QuasigroupQuad& quad() const { return quad_; }

  /// Row-major 0-based cells of each stage's table.
  const std::array<std::uint8_t, 16>& stage_cells(std::size_t i) const { return tables_[i]; }

 private:
  friend KeySchedule key_setup(const Key80& key, const qg4::QuasigroupQuad& quad);
  explicit KeySchedule(const qg4::QuasigroupQuad& quad) : quad_(quad) {}

  qg4::QuasigroupQuad quad_;
  std::array<std::uint8_t, kStages> selectors_{};
  std::array<std::array<std::uint8_t, 16>, kStages> tables_{};
};

KeySchedule key_setup(const Key80& key, const qg4::QuasigroupQuad& quad = qg4::standard_quad());

struct PipelineState {
  /// Per-stage leaders a1..a80, values 0..3.
  std::array<std::uint8_t, kStages> leaders{};
  /// Position in the periodic input 0,1,2,3,0,...
  std::uint64_t counter = 0;
  /// Low bit of a symbol whose high bit was already handed out.
  bool has_spare = false;
  bool spare = false;

  friend bool operator==(const PipelineState&, const PipelineState&) = default;
};

/// Runs the 80x80 initialization table over K1..K40 V1..V40 with row
/// leaders V40..V1 K40..K1; the last row becomes the stage leaders.
/// Throws std::invalid_argument if the schedule was not built from `key`.
PipelineState iv_setup(const KeySchedule& schedule, const PaddedIV& padded, const Key80& key);

/// Next n_bits of keystream. Advances `state`.
Keystream keystream(PipelineState& state, const KeySchedule& schedule, std::size_t n_bits);

/// message XOR keystream; the same call decrypts.
std::vector<std::uint8_t> xor_seal(const Key80& key, const IV64& iv, const qg4::QuasigroupQuad& quad,
                                   std::span<const std::uint8_t> message);

/// Keyed and IV-initialized generator.
class Edon80 {
 public:
  Edon80(const Key80& key, const IV64& iv, const qg4::QuasigroupQuad& quad = qg4::standard_quad());

  /// One 2-bit keystream symbol. Discards a pending spare bit, if any.
  std::uint8_t next_symbol();
  Keystream next_bits(std::size_t n_bits) { return keystream(state_, schedule_, n_bits); }
  /// XORs the keystream into `data` in place.
  void apply(std::span<std::uint8_t> data);

  const PipelineState& state() const { return state_; }
  const KeySchedule& schedule() const { return schedule_; }

 private:
  KeySchedule schedule_;
  PipelineState state_;
};

}  // namespace unitor::edon80
