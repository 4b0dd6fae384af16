#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace modelgate {

class DecimalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Exact base-10 number: sign * coefficient * 10^exponent.
///
/// The coefficient is kept as a string of decimal digits with no leading or
/// trailing zeros, so two Decimals holding the same value are always
/// structurally identical (2.0 == 2 == 20E-1). Addition, subtraction and
/// multiplication are exact. Division is exact whenever the quotient
/// terminates and otherwise rounds half-even to kDivisionDigits.
class Decimal {
  public:
    static constexpr int kDivisionDigits = 34;

    Decimal() = default;
    Decimal(std::int64_t v);  // NOLINT: implicit from integers is intended

    /// Parses JSON number grammar, also accepting a leading '+'.
    static Decimal parse(std::string_view text);
    static std::optional<Decimal> try_parse(std::string_view text);

    bool is_zero() const { return digits_.empty(); }
    bool is_negative() const { return negative_; }
    bool is_integer() const { return exponent_ >= 0 || digits_.empty(); }
    int sign() const { return is_zero() ? 0 : (negative_ ? -1 : 1); }

    /// Value as int64 if integral and in range.
    std::optional<std::int64_t> to_int64() const;
    double to_double() const;

    /// Canonical text; integral values within 21 digits print without exponent.
    std::string to_string() const;

    const std::string& coefficient_digits() const { return digits_; }
    std::int32_t exponent() const { return exponent_; }

    Decimal operator-() const;
    friend Decimal operator+(const Decimal& a, const Decimal& b);
    friend Decimal operator-(const Decimal& a, const Decimal& b);
    friend Decimal operator*(const Decimal& a, const Decimal& b);
    /// Throws DecimalError on division by zero.
    friend Decimal operator/(const Decimal& a, const Decimal& b);

    friend bool operator==(const Decimal& a, const Decimal& b) = default;
    friend std::strong_ordering operator<=>(const Decimal& a, const Decimal& b);

  private:
    Decimal(bool negative, std::string digits, std::int32_t exponent);
    void normalize();

    bool negative_ = false;
    std::string digits_;  // empty for zero
    std::int32_t exponent_ = 0;
};

}  // namespace modelgate
