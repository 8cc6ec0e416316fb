#include <gtest/gtest.h>

#include <chrono>
#include <set>
#include <sstream>

#include "test_support.hpp"
#include "unitor/edon80.hpp"
#include "unitor/hex.hpp"
#include "unitor/randomness.hpp"

using namespace unitor::edon80;
using unitor::qg4::standard_quad;
using unitor::qg4::Symbol;
namespace ut = unitor::testing;

namespace {

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ')) s.pop_back();
  return s;
}

BitString zeros(std::size_t n) {
  BitString b;
  for (std::size_t i = 0; i < n; ++i) b.push_back(false);
  return b;
}

}  // namespace

TEST(Codec, KeySymbolsRoundTrip) {
  for (int i = 0; i < 200; ++i) {
    const auto key = ut::random_key();
    const auto syms = key.symbols();
    EXPECT_EQ(Key80::from_symbols(syms), key);
  }
}

TEST(Codec, SymbolsAreMsbFirst) {
  const auto key = Key80::from_hex("1b000000000000000000");  // 00 01 10 11
  const auto s = key.symbols();
  EXPECT_EQ(s[0], Symbol(0));
  EXPECT_EQ(s[1], Symbol(1));
  EXPECT_EQ(s[2], Symbol(2));
  EXPECT_EQ(s[3], Symbol(3));
}

TEST(Codec, HexValidation) {
  EXPECT_THROW(Key80::from_hex("0123"), std::invalid_argument);
  EXPECT_THROW(Key80::from_hex("0123456789abcdef012g"), std::invalid_argument);
  EXPECT_THROW(IV64::from_hex("00112233445566778"), std::invalid_argument);
  EXPECT_EQ(Key80::from_hex("0123456789ABCDEF0123").to_hex(), "0123456789abcdef0123");
}

TEST(PadIv, ZeroIv) {
  const auto padded = pad_iv(IV64{});
  const auto bits = BitString::from_bytes(padded.bytes());
  EXPECT_EQ(bits.to_binary(), std::string(64, '0') + "1110010000011011");
}

TEST(PadIv, OnesIv) {
  const auto padded = pad_iv(IV64::from_hex("ffffffffffffffff"));
  EXPECT_EQ(BitString::from_bytes(padded.bytes()).to_binary(), std::string(64, '1') + "1110010000011011");
}

TEST(PadIv, Injective) {
  std::set<std::array<std::uint8_t, 10>> seen;
  for (int i = 0; i < 500; ++i) {
    const auto iv = ut::random_iv();
    const auto padded = pad_iv(iv);
    EXPECT_TRUE(std::equal(iv.bytes().begin(), iv.bytes().end(), padded.bytes().begin()));
    seen.insert(padded.bytes());
  }
  EXPECT_EQ(seen.size(), 500u);
}

TEST(KeySetup, ZeroKeySelectsFirstMember) {
  const auto schedule = key_setup(Key80{});
  for (std::size_t i = 0; i < kStages; ++i) EXPECT_EQ(schedule.selector(i), 0u);
}

TEST(KeySetup, CyclingNibbles) {
  const auto schedule = key_setup(Key80::from_hex("1b1b1b1b1b1b1b1b1b1b"));
  for (std::size_t i = 0; i < kStages; ++i) EXPECT_EQ(schedule.selector(i), i % 4) << "stage " << i;
}

TEST(KeySetup, SecondHalfRepeatsFirst) {
  for (int t = 0; t < 100; ++t) {
    const auto key = ut::random_key();
    const auto schedule = key_setup(key);
    const auto syms = key.symbols();
    for (std::size_t i = 0; i < kKeySymbols; ++i) {
      EXPECT_EQ(schedule.selector(i), syms[i].value());
      EXPECT_EQ(schedule.selector(i + kKeySymbols), schedule.selector(i));
    }
  }
}

TEST(IvSetup, RejectsForeignSchedule) {
  const auto schedule = key_setup(Key80::from_hex("0123456789abcdef0123"));
  EXPECT_THROW(iv_setup(schedule, pad_iv(IV64{}), Key80{}), std::invalid_argument);
}

TEST(IvSetup, Deterministic) {
  const auto key = ut::random_key();
  const auto iv = ut::random_iv();
  const auto schedule = key_setup(key);
  EXPECT_EQ(iv_setup(schedule, pad_iv(iv), key), iv_setup(schedule, pad_iv(iv), key));
}

TEST(IvSetup, DistinctIvsGiveDistinctStates) {
  const auto key = ut::random_key();
  const auto schedule = key_setup(key);
  std::set<std::array<std::uint8_t, kStages>> states;
  std::set<IV64> ivs;
  for (int i = 0; i < 1000; ++i) {
    const auto iv = ut::random_iv();
    if (!ivs.insert(iv).second) continue;
    states.insert(iv_setup(schedule, pad_iv(iv), key).leaders);
  }
  EXPECT_EQ(states.size(), ivs.size());
}

TEST(Keystream, MatchesReferenceVectors) {
  const auto vectors = ut::load_vectors();
  ASSERT_GE(vectors.size(), 8u);
  for (const auto& v : vectors) {
    Edon80 gen(Key80::from_hex(v.key_hex), IV64::from_hex(v.iv_hex));
    EXPECT_EQ(gen.next_bits(128).to_hex(), v.keystream_hex) << v.key_hex << " " << v.iv_hex;
  }
}

TEST(Keystream, Matches1024BitReference) {
  const auto expected = trim(ut::read_fixture("edon80_zero_1024.hex"));
  Edon80 gen(Key80{}, IV64{});
  EXPECT_EQ(gen.next_bits(1024).to_hex(), expected);
}

TEST(Keystream, ZeroBits) {
  Edon80 gen(Key80{}, IV64{});
  EXPECT_TRUE(gen.next_bits(0).empty());
}

TEST(Keystream, PrefixProperty) {
  const auto key = ut::random_key();
  const auto iv = ut::random_iv();
  const auto full = Edon80(key, iv).next_bits(999);
  for (std::size_t n : {1u, 2u, 7u, 64u, 333u, 998u}) EXPECT_EQ(Edon80(key, iv).next_bits(n), full.prefix(n));
}

TEST(Keystream, IncrementalEqualsBulk) {
  auto& gen = ut::rng();
  for (int t = 0; t < 20; ++t) {
    const auto key = ut::random_key();
    const auto iv = ut::random_iv();
    const auto bulk = Edon80(key, iv).next_bits(2048);
    Edon80 inc(key, iv);
    BitString acc;
    while (acc.size() < 2048) acc.append(inc.next_bits(std::min<std::size_t>(gen() % 37, 2048 - acc.size())));
    ASSERT_EQ(acc, bulk);
  }
}

TEST(Seal, RoundTripRandom) {
  auto& gen = ut::rng();
  for (int t = 0; t < 200; ++t) {
    const auto key = ut::random_key();
    const auto iv = ut::random_iv();
    const auto msg = ut::random_bytes(gen() % 1025);
    const auto ct = xor_seal(key, iv, standard_quad(), msg);
    ASSERT_EQ(ct.size(), msg.size());
    ASSERT_EQ(xor_seal(key, iv, standard_quad(), ct), msg);
  }
}

TEST(Seal, EmptyMessage) { EXPECT_TRUE(xor_seal(Key80{}, IV64{}, standard_quad(), {}).empty()); }

TEST(Seal, MatchesReferenceCiphertext) {
  std::istringstream in(ut::read_fixture("edon80_seal_fox.txt"));
  std::string key, iv, text, ct;
  in >> key >> iv;
  in.get();
  std::getline(in, text);
  std::getline(in, ct);
  const std::vector<std::uint8_t> msg(text.begin(), text.end());
  EXPECT_EQ(unitor::to_hex(xor_seal(Key80::from_hex(key), IV64::from_hex(iv), standard_quad(), msg)), trim(ct));
}

TEST(Seal, ApplyMatchesXorSeal) {
  const auto key = ut::random_key();
  const auto iv = ut::random_iv();
  auto msg = ut::random_bytes(100);
  const auto expected = xor_seal(key, iv, standard_quad(), msg);
  Edon80(key, iv).apply(msg);
  EXPECT_EQ(msg, expected);
}

TEST(Randomness, RejectsShortInput) { EXPECT_THROW(nist_smoke(zeros(99)), std::invalid_argument); }

TEST(Randomness, AllZeroFailsMonobit) {
  const auto r = nist_smoke(zeros(100000));
  EXPECT_LT(r.monobit_p, 1e-6);
  EXPECT_FALSE(r.passed());
}

TEST(Randomness, AlternatingFailsRuns) {
  BitString b;
  for (int i = 0; i < 100000; ++i) b.push_back(i & 1);
  const auto r = nist_smoke(b);
  EXPECT_DOUBLE_EQ(r.monobit_p, 1.0);
  EXPECT_LT(r.runs_p, 1e-6);
}

TEST(Randomness, SpecExampleSequence) {
  // Worked example from SP 800-22 (the 100-bit epsilon of section 2.1.8):
  // monobit p = 0.109599, runs p = 0.500798.
  const auto bits = BitString::from_binary(
      "1100100100001111110110101010001000100001011010001100001000110100110001001100011001100010100010111000");
  const auto r = nist_smoke(bits);
  EXPECT_NEAR(r.monobit_p, 0.109599, 1e-6);
  EXPECT_NEAR(r.runs_p, 0.500798, 1e-6);
}

TEST(Throughput, AtLeastOneMegabitPerSecond) {
  Edon80 gen(ut::random_key(), ut::random_iv());
  const auto start = ut::thread_cpu_seconds();
  const auto bits = gen.next_bits(1 << 20);
  const auto elapsed = ut::thread_cpu_seconds() - start;
  EXPECT_EQ(bits.size(), 1u << 20);
  EXPECT_LT(elapsed, 1.0);
  RecordProperty("mbit_per_cpu_second", std::to_string(1.048576 / elapsed));
}
