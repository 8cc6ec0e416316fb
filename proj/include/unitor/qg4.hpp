#pragma once

// Order-4 quasigroups: the algebraic primitive behind Edon80.
//
// Symbols are held 0-based (0..3). The external display form used in
// config files and logs is 1-based: a quasigroup exports as 16 digits 1-4,
// row-major, rows indexed by the left operand.

#include <array>
#include <chrono>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace unitor::qg4 {

inline constexpr std::size_t kOrder = 4;
inline constexpr std::size_t kCount = 576;

class Symbol {
 public:
  constexpr Symbol() = default;
  /// Throws std::out_of_range unless value < 4.
  constexpr explicit Symbol(unsigned value) : value_(checked(value)) {}

  constexpr std::uint8_t value() const { return value_; }
  /// 1-based display digit ('1'..'4').
  constexpr char display() const { return static_cast<char>('1' + value_); }

  friend constexpr auto operator<=>(Symbol, Symbol) = default;

 private:
  static constexpr std::uint8_t checked(unsigned v) {
    if (v >= kOrder) throw std::out_of_range("quasigroup symbol out of range");
    return static_cast<std::uint8_t>(v);
  }
  std::uint8_t value_ = 0;
};

using SymbolString = std::vector<Symbol>;

/// Raw 4x4 table of 0-based cells, table[row][col].
using Table = std::array<std::array<std::uint8_t, kOrder>, kOrder>;

struct ValidationResult {
  std::vector<std::size_t> bad_rows;
  std::vector<std::size_t> bad_columns;

  bool ok() const { return bad_rows.empty() && bad_columns.empty(); }
  explicit operator bool() const { return ok(); }
};

/// Checks the Latin-square property. Cells outside 0..3 mark their row
/// and column as violated.
ValidationResult validate(const Table& table);

class Quasigroup4 {
 public:
  /// Throws std::invalid_argument if the table is not a Latin square.
  static Quasigroup4 from_table(const Table& table);
  /// Parses the 16-digit 1-based display form, e.g. "1324324124134132".
  static Quasigroup4 from_display(std::string_view digits);

  Symbol apply(Symbol a, Symbol b) const { return Symbol(cells_[a.value() * kOrder + b.value()]); }
  std::uint8_t cell(std::size_t row, std::size_t col) const { return cells_[row * kOrder + col]; }

  const std::array<std::uint8_t, kOrder * kOrder>& cells() const { return cells_; }
  Table table() const;
  std::string to_display() const;

  /// Lexicographic over the row-major 0-based cells.
  friend auto operator<=>(const Quasigroup4&, const Quasigroup4&) = default;

 private:
  Quasigroup4() = default;
  std::array<std::uint8_t, kOrder * kOrder> cells_{};
};

/// Four quasigroups used together by the cipher (•1..•4).
using QuasigroupQuad = std::array<Quasigroup4, 4>;

/// The four fixed Edon80 quasigroups.
const QuasigroupQuad& standard_quad();

/// y1 = leader*x1, yj = y(j-1)*xj.
SymbolString e_transform(const Quasigroup4& q, Symbol leader, std::span<const Symbol> input);

/// All 576 order-4 quasigroups in ascending lexicographic order. Computed
/// once and shared; entry n of the 1-based list is at index n-1.
const std::vector<Quasigroup4>& enumerate_order4();

/// 1-based lookup; throws std::out_of_range outside 1..576.
const Quasigroup4& quasigroup_number(std::size_t number);

struct RotationDate {
  unsigned day = 1;        // 1..31
  unsigned month = 1;      // 1..12
  unsigned century = 0;    // first two digits of the year
  unsigned yearpart = 0;   // last two digits of the year

  /// Throws std::invalid_argument for an invalid calendar date or a year
  /// outside 0..9999.
  static RotationDate from_ymd(std::chrono::year_month_day ymd);
  static RotationDate from_ymd(int year, unsigned month, unsigned day);
  /// Current UTC calendar date.
  static RotationDate utc_today();

  RotationDate previous_day() const;

  friend bool operator==(const RotationDate&, const RotationDate&) = default;
};

/// Maps a date field onto the 1-based list; 0 wraps to 576.
constexpr std::size_t rotation_index(unsigned field) {
  return (static_cast<std::size_t>(field) + kCount - 1) % kCount + 1;
}

/// List numbers (day, month, century, yearpart) used for a date.
std::array<std::size_t, 4> rotation_indices(const RotationDate& date);

QuasigroupQuad quasigroups_for_date(const RotationDate& date);

}  // namespace unitor::qg4
