#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace saltus {

/// A point of [a,b] that can carry a discontinuity. Points parsed from
/// documents keep their decimal token in canonical form so that equality of
/// locations is exact; generated points (jump series) carry only a value.
class Location {
 public:
  Location() = default;

  /// Parses a decimal string such as "0.5", "-1.25e-3". Throws
  /// std::invalid_argument on anything that is not a plain decimal number.
  static Location from_token(std::string_view token);

  /// A location with no decimal token; equality is double equality.
  static Location from_value(double value);

  double value() const noexcept { return value_; }
  const std::string& token() const noexcept { return token_; }
  bool has_token() const noexcept { return !token_.empty(); }

  /// Canonical decimal text, or a round-trippable rendering of the value.
  std::string str() const;

  friend bool operator==(const Location& x, const Location& y) noexcept;
  friend bool operator<(const Location& x, const Location& y) noexcept {
    return x.value_ < y.value_;
  }

 private:
  double value_ = 0.0;
  std::string token_;
};

/// Canonical form "[-]D.DDDDeN" with no redundant zeros; "0" for zero.
std::optional<std::string> canonical_decimal(std::string_view token);

/// Shortest round-trip text for a double.
std::string format_double(double v);

}  // namespace saltus
