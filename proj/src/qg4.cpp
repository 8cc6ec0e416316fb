#include "unitor/qg4.hpp"

#include <algorithm>
#include <bitset>

namespace unitor::qg4 {

ValidationResult validate(const Table& table) {
  ValidationResult result;
  for (std::size_t r = 0; r < kOrder; ++r) {
    std::bitset<kOrder> seen;
    bool bad = false;
    for (std::size_t c = 0; c < kOrder; ++c) {
      const auto v = table[r][c];
      if (v >= kOrder || seen.test(v)) {
        bad = true;
        break;
      }
      seen.set(v);
    }
    if (bad) result.bad_rows.push_back(r);
  }
  for (std::size_t c = 0; c < kOrder; ++c) {
    std::bitset<kOrder> seen;
    bool bad = false;
    for (std::size_t r = 0; r < kOrder; ++r) {
      const auto v = table[r][c];
      if (v >= kOrder || seen.test(v)) {
        bad = true;
        break;
      }
      seen.set(v);
    }
    if (bad) result.bad_columns.push_back(c);
  }
  return result;
}

Quasigroup4 Quasigroup4::from_table(const Table& table) {
  if (!validate(table)) throw std::invalid_argument("table is not a Latin square");
  Quasigroup4 q;
  for (std::size_t r = 0; r < kOrder; ++r)
    for (std::size_t c = 0; c < kOrder; ++c) q.cells_[r * kOrder + c] = table[r][c];
  return q;
}

Quasigroup4 Quasigroup4::from_display(std::string_view digits) {
  if (digits.size() != kOrder * kOrder)
    throw std::invalid_argument("quasigroup display form must have 16 digits");
  Table t{};
  for (std::size_t i = 0; i < digits.size(); ++i) {
    const char ch = digits[i];
    if (ch < '1' || ch > '4') throw std::invalid_argument("quasigroup digits must be 1-4");
    t[i / kOrder][i % kOrder] = static_cast<std::uint8_t>(ch - '1');
  }
  return from_table(t);
}

Table Quasigroup4::table() const {
  Table t{};
  for (std::size_t i = 0; i < cells_.size(); ++i) t[i / kOrder][i % kOrder] = cells_[i];
  return t;
}

std::string Quasigroup4::to_display() const {
  std::string s;
  s.reserve(cells_.size());
  for (auto v : cells_) s.push_back(static_cast<char>('1' + v));
  return s;
}

const QuasigroupQuad& standard_quad() {
  static const QuasigroupQuad quad = {
      Quasigroup4::from_display("1324324124134132"),
      Quasigroup4::from_display("2413123431424321"),
      Quasigroup4::from_display("3214234141321423"),
      Quasigroup4::from_display("4321214314323214"),
  };
  return quad;
}

SymbolString e_transform(const Quasigroup4& q, Symbol leader, std::span<const Symbol> input) {
  SymbolString out;
  out.reserve(input.size());
  Symbol y = leader;
  for (Symbol x : input) {
    y = q.apply(y, x);
    out.push_back(y);
  }
  return out;
}

namespace {

// Depth-first over rows drawn from the 24 permutations in ascending order,
// so squares come out already sorted.
void extend(Table& t, std::size_t row, const std::vector<std::array<std::uint8_t, kOrder>>& perms,
            std::vector<Quasigroup4>& out) {
  if (row == kOrder) {
    out.push_back(Quasigroup4::from_table(t));
    return;
  }
  for (const auto& p : perms) {
    bool clash = false;
    for (std::size_t r = 0; r < row && !clash; ++r)
      for (std::size_t c = 0; c < kOrder; ++c)
        if (t[r][c] == p[c]) {
          clash = true;
          break;
        }
    if (clash) continue;
    t[row] = p;
    extend(t, row + 1, perms, out);
  }
}

std::vector<Quasigroup4> build_list() {
  std::vector<std::array<std::uint8_t, kOrder>> perms;
  std::array<std::uint8_t, kOrder> p{0, 1, 2, 3};
  do {
    perms.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));

  std::vector<Quasigroup4> out;
  out.reserve(kCount);
  Table t{};
  extend(t, 0, perms, out);
  return out;
}

}  // namespace

const std::vector<Quasigroup4>& enumerate_order4() {
  static const std::vector<Quasigroup4> list = build_list();
  return list;
}

const Quasigroup4& quasigroup_number(std::size_t number) {
  const auto& list = enumerate_order4();
  if (number < 1 || number > list.size()) throw std::out_of_range("quasigroup number outside 1..576");
  return list[number - 1];
}

RotationDate RotationDate::from_ymd(std::chrono::year_month_day ymd) {
  if (!ymd.ok()) throw std::invalid_argument("invalid calendar date");
  const int year = static_cast<int>(ymd.year());
  if (year < 0 || year > 9999) throw std::invalid_argument("year outside 0..9999");
  RotationDate d;
  d.day = static_cast<unsigned>(ymd.day());
  d.month = static_cast<unsigned>(ymd.month());
  d.century = static_cast<unsigned>(year / 100);
  d.yearpart = static_cast<unsigned>(year % 100);
  return d;
}

RotationDate RotationDate::from_ymd(int year, unsigned month, unsigned day) {
  return from_ymd(std::chrono::year_month_day{std::chrono::year{year}, std::chrono::month{month},
                                              std::chrono::day{day}});
}

RotationDate RotationDate::utc_today() {
  const auto days = std::chrono::floor<std::chrono::days>(std::chrono::system_clock::now());
  return from_ymd(std::chrono::year_month_day{days});
}

RotationDate RotationDate::previous_day() const {
  const std::chrono::year_month_day ymd{std::chrono::year{static_cast<int>(century * 100 + yearpart)},
                                        std::chrono::month{month}, std::chrono::day{day}};
  return from_ymd(std::chrono::year_month_day{std::chrono::sys_days{ymd} - std::chrono::days{1}});
}

std::array<std::size_t, 4> rotation_indices(const RotationDate& date) {
  return {rotation_index(date.day), rotation_index(date.month), rotation_index(date.century),
          rotation_index(date.yearpart)};
}

QuasigroupQuad quasigroups_for_date(const RotationDate& date) {
  const auto idx = rotation_indices(date);
  return {quasigroup_number(idx[0]), quasigroup_number(idx[1]), quasigroup_number(idx[2]),
          quasigroup_number(idx[3])};
}

}  // namespace unitor::qg4
