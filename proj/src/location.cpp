#include "saltus/location.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <stdexcept>

namespace saltus {

std::optional<std::string> canonical_decimal(std::string_view token) {
  std::size_t i = 0;
  bool negative = false;
  if (i < token.size() && (token[i] == '+' || token[i] == '-')) {
    negative = token[i] == '-';
    ++i;
  }
  std::string digits;
  long exponent = 0;  // value = 0.digits... scaled below
  long point_shift = 0;
  bool seen_point = false;
  bool any_digit = false;
  for (; i < token.size(); ++i) {
    const char c = token[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      any_digit = true;
      digits.push_back(c);
      if (seen_point) ++point_shift;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!any_digit) return std::nullopt;
  if (i < token.size()) {
    if (token[i] != 'e' && token[i] != 'E') return std::nullopt;
    ++i;
    const std::string_view rest = token.substr(i);
    if (rest.empty()) return std::nullopt;
    const char* first = rest.data();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, rest.data() + rest.size(), exponent);
    if (ec != std::errc() || ptr != rest.data() + rest.size()) return std::nullopt;
  }
  // value = digits * 10^(exponent - point_shift)
  long scale = exponent - point_shift;
  const auto first_nz = digits.find_first_not_of('0');
  if (first_nz == std::string::npos) return std::string("0");
  digits.erase(0, first_nz);
  const auto last_nz = digits.find_last_not_of('0');
  scale += static_cast<long>(digits.size() - 1 - last_nz);
  digits.erase(last_nz + 1);
  // Scientific: d.ddd e(scale + len - 1)
  const long sci = scale + static_cast<long>(digits.size()) - 1;
  std::string out = negative ? "-" : "";
  out += digits[0];
  if (digits.size() > 1) {
    out += '.';
    out.append(digits, 1, std::string::npos);
  }
  out += 'e';
  out += std::to_string(sci);
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

Location Location::from_token(std::string_view token) {
  auto canon = canonical_decimal(token);
  if (!canon) throw std::invalid_argument("not a decimal token: " + std::string(token));
  Location loc;
  loc.token_ = *canon;
  loc.value_ = std::strtod(std::string(token).c_str(), nullptr);
  return loc;
}

Location Location::from_value(double value) {
  Location loc;
  loc.value_ = value;
  return loc;
}

std::string Location::str() const {
  if (!has_token()) return format_double(value_);
  // Prefer a plain rendering when it round-trips to the same token.
  const std::string plain = format_double(value_);
  auto canon = canonical_decimal(plain);
  if (canon && *canon == token_) return plain;
  return token_;
}

bool operator==(const Location& x, const Location& y) noexcept {
  if (x.has_token() && y.has_token()) return x.token_ == y.token_;
  return x.value_ == y.value_;
}

}  // namespace saltus
