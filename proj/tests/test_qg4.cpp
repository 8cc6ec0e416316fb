#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <set>

#include "test_support.hpp"
#include "unitor/qg4.hpp"

using namespace unitor::qg4;

namespace {

// Independent census: every 4-tuple of row permutations, kept when the
// columns are permutations too, then sorted.
std::vector<std::array<std::uint8_t, 16>> brute_force_squares() {
  std::vector<std::array<std::uint8_t, 4>> perms;
  std::array<std::uint8_t, 4> p{0, 1, 2, 3};
  do perms.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));

  std::vector<std::array<std::uint8_t, 16>> out;
  for (const auto& r0 : perms)
    for (const auto& r1 : perms)
      for (const auto& r2 : perms)
        for (const auto& r3 : perms) {
          const Table t{r0, r1, r2, r3};
          if (!validate(t)) continue;
          std::array<std::uint8_t, 16> flat{};
          for (int i = 0; i < 16; ++i) flat[i] = t[i / 4][i % 4];
          out.push_back(flat);
        }
  std::sort(out.begin(), out.end());
  return out;
}

SymbolString definitional_e_transform(const Quasigroup4& q, unsigned leader, const std::vector<unsigned>& xs) {
  SymbolString out;
  unsigned prev = leader;
  for (unsigned x : xs) {
    prev = q.table()[prev][x];
    out.push_back(Symbol(prev));
  }
  return out;
}

}  // namespace

TEST(Quasigroup, ApplyMatchesPrintedTables) {
  const auto& quad = standard_quad();
  EXPECT_EQ(quad[0].apply(Symbol(1), Symbol(2)), Symbol(3));
  EXPECT_EQ(quad[1].apply(Symbol(1), Symbol(1)), Symbol(1));
  EXPECT_EQ(quad[0].to_display(), "1324324124134132");
  EXPECT_EQ(quad[3].to_display(), "4321214314323214");
}

TEST(Quasigroup, RowsArePermutations) {
  for (const auto& q : standard_quad())
    for (unsigned a = 0; a < 4; ++a) {
      std::multiset<unsigned> row;
      for (unsigned b = 0; b < 4; ++b) row.insert(q.apply(Symbol(a), Symbol(b)).value());
      EXPECT_EQ(row, (std::multiset<unsigned>{0, 1, 2, 3}));
    }
}

TEST(Quasigroup, ValidateAcceptsPrintedTables) {
  for (const auto& q : standard_quad()) EXPECT_TRUE(validate(q.table()).ok());
}

TEST(Quasigroup, ValidateReportsDuplicateInRow) {
  Table t = standard_quad()[0].table();
  t[0] = {0, 0, 1, 2};
  const auto r = validate(t);
  EXPECT_FALSE(r.ok());
  ASSERT_FALSE(r.bad_rows.empty());
  EXPECT_EQ(r.bad_rows.front(), 0u);
}

TEST(Quasigroup, ValidateReportsConstantColumns) {
  Table t{};
  for (auto& row : t) row = {0, 1, 2, 3};
  const auto r = validate(t);
  EXPECT_TRUE(r.bad_rows.empty());
  EXPECT_EQ(r.bad_columns, (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(Quasigroup, ValidateFlagsOutOfRangeCell) {
  Table t = standard_quad()[2].table();
  t[2][1] = 7;
  const auto r = validate(t);
  EXPECT_EQ(r.bad_rows, (std::vector<std::size_t>{2}));
  EXPECT_EQ(r.bad_columns, (std::vector<std::size_t>{1}));
}

TEST(Quasigroup, DisplayRoundTripAndRejects) {
  const auto q = Quasigroup4::from_display("1234214334124321");
  EXPECT_EQ(q.to_display(), "1234214334124321");
  EXPECT_THROW(Quasigroup4::from_display("1234"), std::invalid_argument);
  EXPECT_THROW(Quasigroup4::from_display("1234214334124325"), std::invalid_argument);
  EXPECT_THROW(Quasigroup4::from_display("1111222233334444"), std::invalid_argument);
}

TEST(Quasigroup, SymbolRejectsOutOfRange) { EXPECT_THROW(Symbol(4), std::out_of_range); }

TEST(ETransform, DirectLookupExample) {
  const SymbolString input{Symbol(0), Symbol(1), Symbol(2)};
  EXPECT_EQ(e_transform(standard_quad()[0], Symbol(0), input), (SymbolString{Symbol(0), Symbol(2), Symbol(0)}));
}

TEST(ETransform, EmptyInput) { EXPECT_TRUE(e_transform(standard_quad()[1], Symbol(3), {}).empty()); }

TEST(ETransform, MatchesDefinitionOnRandomInputs) {
  auto& gen = unitor::testing::rng();
  const auto& all = enumerate_order4();
  for (int trial = 0; trial < 2000; ++trial) {
    const auto& q = all[gen() % all.size()];
    const unsigned leader = gen() % 4;
    std::vector<unsigned> xs(gen() % 7);
    SymbolString input;
    for (auto& x : xs) {
      x = gen() % 4;
      input.push_back(Symbol(x));
    }
    const auto out = e_transform(q, Symbol(leader), input);
    ASSERT_EQ(out.size(), input.size());
    ASSERT_EQ(out, definitional_e_transform(q, leader, xs));
  }
}

TEST(ETransform, PrefixProperty) {
  auto& gen = unitor::testing::rng();
  for (int trial = 0; trial < 200; ++trial) {
    SymbolString input;
    for (int i = 0; i < 40; ++i) input.push_back(Symbol(gen() % 4));
    const auto& q = standard_quad()[gen() % 4];
    const Symbol leader(gen() % 4);
    const auto full = e_transform(q, leader, input);
    const std::size_t cut = gen() % input.size();
    const auto part = e_transform(q, leader, std::span(input).first(cut));
    ASSERT_TRUE(std::equal(part.begin(), part.end(), full.begin()));
  }
}

TEST(Enumeration, CountAndFirstEntry) {
  const auto& all = enumerate_order4();
  ASSERT_EQ(all.size(), 576u);
  EXPECT_EQ(all.front().to_display(), "1234214334124321");
  EXPECT_EQ(quasigroup_number(576).to_display(), "4321341221431234");
  EXPECT_THROW(quasigroup_number(0), std::out_of_range);
  EXPECT_THROW(quasigroup_number(577), std::out_of_range);
}

TEST(Enumeration, StrictlyIncreasingAndValid) {
  const auto& all = enumerate_order4();
  for (std::size_t i = 0; i < all.size(); ++i) {
    EXPECT_TRUE(validate(all[i].table()).ok());
    if (i > 0) EXPECT_LT(all[i - 1], all[i]);
  }
}

TEST(Enumeration, MatchesBruteForce) {
  const auto expected = brute_force_squares();
  const auto& all = enumerate_order4();
  ASSERT_EQ(expected.size(), all.size());
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i].cells(), expected[i]) << "entry " << i + 1;
}

TEST(Enumeration, PrintedTablesAreListed) {
  const auto& all = enumerate_order4();
  for (const auto& q : standard_quad()) EXPECT_TRUE(std::binary_search(all.begin(), all.end(), q));
}

// List numbers frozen from tests/oracle/latin_squares.py.
TEST(Enumeration, SelectedEntriesMatchOracle) {
  EXPECT_EQ(quasigroup_number(4).to_display(), "1234214343213412");
  EXPECT_EQ(quasigroup_number(9).to_display(), "1234314224134321");
  EXPECT_EQ(quasigroup_number(19).to_display(), "1234431221433421");
  EXPECT_EQ(quasigroup_number(96).to_display(), "1342423131242413");
}

TEST(DateRotation, NinthOfAprilNinetySix) {
  const auto d = RotationDate::from_ymd(1996, 4, 9);
  EXPECT_EQ(rotation_indices(d), (std::array<std::size_t, 4>{9, 4, 19, 96}));
  const auto quad = quasigroups_for_date(d);
  EXPECT_EQ(quad[0], quasigroup_number(9));
  EXPECT_EQ(quad[1], quasigroup_number(4));
  EXPECT_EQ(quad[2], quasigroup_number(19));
  EXPECT_EQ(quad[3], quasigroup_number(96));
}

TEST(DateRotation, ZeroYearPartWrapsTo576) {
  const auto d = RotationDate::from_ymd(2000, 1, 1);
  EXPECT_EQ(rotation_indices(d), (std::array<std::size_t, 4>{1, 1, 20, 576}));
}

TEST(DateRotation, Deterministic) {
  const auto d = RotationDate::from_ymd(2024, 2, 29);
  EXPECT_EQ(quasigroups_for_date(d), quasigroups_for_date(d));
  EXPECT_EQ(quasigroups_for_date(d), quasigroups_for_date(RotationDate{29, 2, 20, 24}));
}

TEST(DateRotation, RejectsInvalidDates) {
  EXPECT_THROW(RotationDate::from_ymd(2023, 2, 29), std::invalid_argument);
  EXPECT_THROW(RotationDate::from_ymd(2023, 13, 1), std::invalid_argument);
}

TEST(DateRotation, PreviousDayCrossesYear) {
  EXPECT_EQ(RotationDate::from_ymd(2000, 1, 1).previous_day(), RotationDate::from_ymd(1999, 12, 31));
}
