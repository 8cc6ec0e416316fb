#include "unitor/edon80.hpp"

#include <sys/random.h>

#include <cerrno>
#include <stdexcept>
#include <system_error>

#include "unitor/hex.hpp"

namespace unitor::edon80 {

using qg4::Symbol;

namespace {

template <std::size_t N>
std::array<std::uint8_t, N> decode_fixed_hex(std::string_view hex, const char* what) {
  auto bytes = from_hex(hex);
  if (!bytes || bytes->size() != N)
    throw std::invalid_argument(std::string(what) + " must be " + std::to_string(2 * N) + " hex digits");
  std::array<std::uint8_t, N> out{};
  std::copy(bytes->begin(), bytes->end(), out.begin());
  return out;
}

template <std::size_t N>
std::array<std::uint8_t, N> copy_fixed(std::span<const std::uint8_t> bytes, const char* what) {
  if (bytes.size() != N)
    throw std::invalid_argument(std::string(what) + " must be " + std::to_string(N) + " bytes");
  std::array<std::uint8_t, N> out{};
  std::copy(bytes.begin(), bytes.end(), out.begin());
  return out;
}

void fill_random(std::span<std::uint8_t> out) {
  std::size_t done = 0;
  while (done < out.size()) {
    const auto n = ::getrandom(out.data() + done, out.size() - done, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::system_error(errno, std::generic_category(), "getrandom");
    }
    done += static_cast<std::size_t>(n);
  }
}

// Four 2-bit symbols per byte, MSB first.
template <std::size_t NBytes>
std::array<Symbol, NBytes * 4> unpack_symbols(const std::array<std::uint8_t, NBytes>& bytes) {
  std::array<Symbol, NBytes * 4> out{};
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = Symbol((bytes[i / 4] >> (6 - 2 * (i % 4))) & 3u);
  return out;
}

// One column of the keystream table; returns the last stage's output.
inline std::uint8_t step(PipelineState& state, const KeySchedule& schedule) {
  std::uint8_t x = static_cast<std::uint8_t>(state.counter & 3u);
  for (std::size_t i = 0; i < kStages; ++i) {
    x = schedule.stage_cells(i)[state.leaders[i] * 4u + x];
    state.leaders[i] = x;
  }
  ++state.counter;
  return x;
}

// Keystream symbols are the odd columns of the final stage.
inline std::uint8_t next_keystream_symbol(PipelineState& state, const KeySchedule& schedule) {
  step(state, schedule);
  return step(state, schedule);
}

}  // namespace

// --- BitString ---

BitString BitString::from_bytes(std::span<const std::uint8_t> bytes) {
  return from_bytes(bytes, bytes.size() * 8);
}

BitString BitString::from_bytes(std::span<const std::uint8_t> bytes, std::size_t n_bits) {
  if (n_bits > bytes.size() * 8) throw std::invalid_argument("bit count exceeds byte span");
  BitString s;
  s.bytes_.assign(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>((n_bits + 7) / 8));
  s.n_bits_ = n_bits;
  if (n_bits % 8 != 0) s.bytes_.back() &= static_cast<std::uint8_t>(0xff00u >> (n_bits % 8));
  return s;
}

BitString BitString::from_binary(std::string_view digits) {
  BitString s;
  for (char c : digits) {
    if (c != '0' && c != '1') throw std::invalid_argument("binary digits must be 0 or 1");
    s.push_back(c == '1');
  }
  return s;
}

void BitString::push_back(bool bit) {
  if (n_bits_ % 8 == 0) bytes_.push_back(0);
  if (bit) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (n_bits_ % 8));
  ++n_bits_;
}

void BitString::append(const BitString& other) {
  if (n_bits_ % 8 == 0) {
    bytes_.insert(bytes_.end(), other.bytes_.begin(), other.bytes_.end());
    n_bits_ += other.n_bits_;
    return;
  }
  for (std::size_t i = 0; i < other.size(); ++i) push_back(other[i]);
}

std::size_t BitString::count_ones() const {
  std::size_t n = 0;
  for (auto b : bytes_) n += static_cast<std::size_t>(__builtin_popcount(b));
  return n;
}

BitString BitString::prefix(std::size_t n_bits) const {
  if (n_bits > n_bits_) throw std::out_of_range("prefix longer than bit string");
  return from_bytes(bytes_, n_bits);
}

std::string BitString::to_hex() const { return unitor::to_hex(bytes_); }

std::string BitString::to_binary() const {
  std::string s;
  s.reserve(n_bits_);
  for (std::size_t i = 0; i < n_bits_; ++i) s.push_back((*this)[i] ? '1' : '0');
  return s;
}

// --- Key / IV ---

Key80 Key80::from_hex(std::string_view hex) {
  Key80 k;
  k.bytes_ = decode_fixed_hex<kBytes>(hex, "key");
  return k;
}

Key80 Key80::from_bytes(std::span<const std::uint8_t> bytes) {
  Key80 k;
  k.bytes_ = copy_fixed<kBytes>(bytes, "key");
  return k;
}

Key80 Key80::from_symbols(std::span<const Symbol> symbols) {
  if (symbols.size() != kKeySymbols) throw std::invalid_argument("key needs 40 symbols");
  Key80 k;
  for (std::size_t i = 0; i < symbols.size(); ++i)
    k.bytes_[i / 4] |= static_cast<std::uint8_t>(symbols[i].value() << (6 - 2 * (i % 4)));
  return k;
}

Key80 Key80::random() {
  Key80 k;
  fill_random(k.bytes_);
  return k;
}

std::string Key80::to_hex() const { return unitor::to_hex(bytes_); }

std::array<Symbol, kKeySymbols> Key80::symbols() const { return unpack_symbols(bytes_); }

IV64 IV64::from_hex(std::string_view hex) {
  IV64 v;
  v.bytes_ = decode_fixed_hex<kBytes>(hex, "IV");
  return v;
}

IV64 IV64::from_bytes(std::span<const std::uint8_t> bytes) {
  IV64 v;
  v.bytes_ = copy_fixed<kBytes>(bytes, "IV");
  return v;
}

IV64 IV64::random() {
  IV64 v;
  fill_random(v.bytes_);
  return v;
}

std::string IV64::to_hex() const { return unitor::to_hex(bytes_); }

std::array<Symbol, kKeySymbols> PaddedIV::symbols() const { return unpack_symbols(bytes_); }

PaddedIV pad_iv(const IV64& iv) {
  PaddedIV p;
  std::copy(iv.bytes().begin(), iv.bytes().end(), p.bytes_.begin());
  p.bytes_[8] = static_cast<std::uint8_t>(kIvPadding >> 8);
  p.bytes_[9] = static_cast<std::uint8_t>(kIvPadding & 0xff);
  return p;
}

// --- Setup ---

KeySchedule key_setup(const Key80& key, const qg4::QuasigroupQuad& quad) {
  KeySchedule s(quad);
  const auto k = key.symbols();
  for (std::size_t i = 0; i < kStages; ++i) {
    s.selectors_[i] = k[i % kKeySymbols].value();
    s.tables_[i] = quad[s.selectors_[i]].cells();
  }
  return s;
}

PipelineState iv_setup(const KeySchedule& schedule, const PaddedIV& padded, const Key80& key) {
  const auto k = key.symbols();
  const auto v = padded.symbols();
  for (std::size_t i = 0; i < kStages; ++i)
    if (schedule.selector(i) != k[i % kKeySymbols].value())
      throw std::invalid_argument("key schedule does not belong to this key");

  // Column headers K1..K40 V1..V40; row leaders are the same string reversed.
  std::array<std::uint8_t, kStages> row{};
  for (std::size_t j = 0; j < kKeySymbols; ++j) {
    row[j] = k[j].value();
    row[kKeySymbols + j] = v[j].value();
  }
  std::array<std::uint8_t, kStages> leaders{};
  for (std::size_t i = 0; i < kStages; ++i) leaders[i] = row[kStages - 1 - i];

  // Row i replaces the previous row in place: t[i][j] = t[i][j-1] *i t[i-1][j].
  for (std::size_t i = 0; i < kStages; ++i) {
    const auto& cells = schedule.stage_cells(i);
    std::uint8_t prev = leaders[i];
    for (std::size_t j = 0; j < kStages; ++j) {
      prev = cells[prev * 4u + row[j]];
      row[j] = prev;
    }
  }

  PipelineState state;
  state.leaders = row;
  return state;
}

Keystream keystream(PipelineState& state, const KeySchedule& schedule, std::size_t n_bits) {
  Keystream out;
  std::size_t remaining = n_bits;
  if (remaining > 0 && state.has_spare) {
    out.push_back(state.spare);
    state.has_spare = false;
    --remaining;
  }
  while (remaining >= 2) {
    const auto sym = next_keystream_symbol(state, schedule);
    out.push_back(sym & 2u);
    out.push_back(sym & 1u);
    remaining -= 2;
  }
  if (remaining == 1) {
    const auto sym = next_keystream_symbol(state, schedule);
    out.push_back(sym & 2u);
    state.has_spare = true;
    state.spare = sym & 1u;
  }
  return out;
}

std::vector<std::uint8_t> xor_seal(const Key80& key, const IV64& iv, const qg4::QuasigroupQuad& quad,
                                   std::span<const std::uint8_t> message) {
  std::vector<std::uint8_t> out(message.begin(), message.end());
  Edon80 cipher(key, iv, quad);
  cipher.apply(out);
  return out;
}

// --- Edon80 ---

Edon80::Edon80(const Key80& key, const IV64& iv, const qg4::QuasigroupQuad& quad)
    : schedule_(key_setup(key, quad)), state_(iv_setup(schedule_, pad_iv(iv), key)) {}

std::uint8_t Edon80::next_symbol() {
  state_.has_spare = false;
  return next_keystream_symbol(state_, schedule_);
}

void Edon80::apply(std::span<std::uint8_t> data) {
  std::size_t i = 0;
  if (state_.has_spare) {
    // Misaligned stream: fall back to the bit-level path.
    const auto ks = keystream(state_, schedule_, data.size() * 8);
    for (; i < data.size(); ++i) data[i] ^= ks.bytes()[i];
    return;
  }
  for (; i < data.size(); ++i) {
    std::uint8_t k = 0;
    for (int s = 0; s < 4; ++s) k = static_cast<std::uint8_t>((k << 2) | next_keystream_symbol(state_, schedule_));
    data[i] ^= k;
  }
}

}  // namespace unitor::edon80
