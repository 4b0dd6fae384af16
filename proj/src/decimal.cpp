#include "modelgate/decimal.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cctype>
#include <charconv>
#include <cstdlib>

namespace modelgate {

namespace {

using BigInt = boost::multiprecision::cpp_int;

// Exponents outside this window are rejected so that aligning operands
// never materialises absurdly large integers.
constexpr std::int64_t kExponentLimit = 100000;

BigInt to_big(const std::string& digits) {
    if (digits.empty()) return 0;
    return BigInt(digits);
}

BigInt pow10(std::int64_t n) {
    return boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(n));
}

std::int64_t adjusted_exponent(const std::string& digits, std::int32_t exponent) {
    return static_cast<std::int64_t>(exponent) + static_cast<std::int64_t>(digits.size()) - 1;
}

int compare_magnitude(const std::string& ad, std::int32_t ae, const std::string& bd, std::int32_t be) {
    if (ad.empty() || bd.empty()) return static_cast<int>(!ad.empty()) - static_cast<int>(!bd.empty());
    const auto aa = adjusted_exponent(ad, ae);
    const auto ba = adjusted_exponent(bd, be);
    if (aa != ba) return aa < ba ? -1 : 1;
    const std::size_t n = std::max(ad.size(), bd.size());
    for (std::size_t i = 0; i < n; ++i) {
        const char ca = i < ad.size() ? ad[i] : '0';
        const char cb = i < bd.size() ? bd[i] : '0';
        if (ca != cb) return ca < cb ? -1 : 1;
    }
    return 0;
}

}  // namespace

Decimal::Decimal(std::int64_t v) {
    if (v == 0) return;
    negative_ = v < 0;
    // Avoid overflow on INT64_MIN by formatting directly.
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, end);
    if (s.front() == '-') s.erase(0, 1);
    digits_ = std::move(s);
    normalize();
}

Decimal::Decimal(bool negative, std::string digits, std::int32_t exponent)
    : negative_(negative), digits_(std::move(digits)), exponent_(exponent) {
    normalize();
}

void Decimal::normalize() {
    auto first = digits_.find_first_not_of('0');
    if (first == std::string::npos) {
        digits_.clear();
        negative_ = false;
        exponent_ = 0;
        return;
    }
    digits_.erase(0, first);
    auto last = digits_.find_last_not_of('0');
    const auto trailing = digits_.size() - 1 - last;
    digits_.erase(last + 1);
    const std::int64_t e = static_cast<std::int64_t>(exponent_) + static_cast<std::int64_t>(trailing);
    if (e > kExponentLimit || e < -kExponentLimit) throw DecimalError("decimal exponent out of range");
    exponent_ = static_cast<std::int32_t>(e);
}

std::optional<Decimal> Decimal::try_parse(std::string_view text) {
    std::size_t i = 0;
    const std::size_t n = text.size();
    bool negative = false;
    if (i < n && (text[i] == '-' || text[i] == '+')) {
        negative = text[i] == '-';
        ++i;
    }
    if (i >= n || !std::isdigit(static_cast<unsigned char>(text[i]))) return std::nullopt;
    std::string digits;
    if (text[i] == '0') {
        ++i;
        if (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) return std::nullopt;
        digits.push_back('0');
    } else {
        while (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) digits.push_back(text[i++]);
    }
    std::int64_t exponent = 0;
    if (i < n && text[i] == '.') {
        ++i;
        const std::size_t start = i;
        while (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) digits.push_back(text[i++]);
        if (i == start) return std::nullopt;
        exponent -= static_cast<std::int64_t>(i - start);
    }
    if (i < n && (text[i] == 'e' || text[i] == 'E')) {
        ++i;
        bool eneg = false;
        if (i < n && (text[i] == '-' || text[i] == '+')) {
            eneg = text[i] == '-';
            ++i;
        }
        const std::size_t start = i;
        std::int64_t e = 0;
        while (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) {
            e = e * 10 + (text[i++] - '0');
            if (e > 10 * kExponentLimit) return std::nullopt;
        }
        if (i == start) return std::nullopt;
        exponent += eneg ? -e : e;
    }
    if (i != n) return std::nullopt;
    // Trailing zeros may pull a wide exponent back into range during
    // normalization, hence the generous pre-check.
    if (exponent > 10 * kExponentLimit || exponent < -10 * kExponentLimit) return std::nullopt;
    try {
        const auto leading = digits.find_first_not_of('0');
        if (leading == std::string::npos) return Decimal();
        const std::int64_t trailing = static_cast<std::int64_t>(digits.size() - 1 - digits.find_last_not_of('0'));
        if (exponent + trailing > kExponentLimit || exponent + trailing < -kExponentLimit) return std::nullopt;
        return Decimal(negative, std::move(digits), static_cast<std::int32_t>(exponent));
    } catch (const DecimalError&) {
        return std::nullopt;
    }
}

Decimal Decimal::parse(std::string_view text) {
    auto d = try_parse(text);
    if (!d) throw DecimalError("invalid decimal literal: " + std::string(text));
    return *d;
}

std::optional<std::int64_t> Decimal::to_int64() const {
    if (!is_integer()) return std::nullopt;
    if (digits_.size() + static_cast<std::size_t>(exponent_) > 19) return std::nullopt;
    BigInt v = to_big(digits_) * pow10(exponent_);
    if (negative_) v = -v;
    if (v > BigInt(INT64_MAX) || v < BigInt(INT64_MIN)) return std::nullopt;
    return static_cast<std::int64_t>(v);
}

double Decimal::to_double() const {
    if (is_zero()) return 0.0;
    std::string s = (negative_ ? "-" : "") + digits_ + "e" + std::to_string(exponent_);
    return std::strtod(s.c_str(), nullptr);
}

std::string Decimal::to_string() const {
    if (is_zero()) return "0";
    std::string out = negative_ ? "-" : "";
    const auto n = static_cast<std::int64_t>(digits_.size());
    const auto adjusted = adjusted_exponent(digits_, exponent_);
    if (exponent_ >= 0 && adjusted < 21) {
        out += digits_;
        out.append(static_cast<std::size_t>(exponent_), '0');
    } else if (exponent_ < 0 && adjusted >= -7) {
        if (adjusted >= 0) {
            out += digits_.substr(0, static_cast<std::size_t>(adjusted + 1));
            out += '.';
            out += digits_.substr(static_cast<std::size_t>(adjusted + 1));
        } else {
            out += "0.";
            out.append(static_cast<std::size_t>(-adjusted - 1), '0');
            out += digits_;
        }
    } else {
        out += digits_[0];
        if (n > 1) {
            out += '.';
            out += digits_.substr(1);
        }
        out += 'E';
        if (adjusted >= 0) out += '+';
        out += std::to_string(adjusted);
    }
    return out;
}

Decimal Decimal::operator-() const {
    Decimal r = *this;
    if (!r.is_zero()) r.negative_ = !r.negative_;
    return r;
}

Decimal operator+(const Decimal& a, const Decimal& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    const std::int32_t e = std::min(a.exponent_, b.exponent_);
    BigInt av = to_big(a.digits_) * pow10(a.exponent_ - e);
    BigInt bv = to_big(b.digits_) * pow10(b.exponent_ - e);
    if (a.negative_) av = -av;
    if (b.negative_) bv = -bv;
    BigInt sum = av + bv;
    const bool neg = sum < 0;
    if (neg) sum = -sum;
    return Decimal(neg, sum.str(), e);
}

Decimal operator-(const Decimal& a, const Decimal& b) { return a + (-b); }

Decimal operator*(const Decimal& a, const Decimal& b) {
    if (a.is_zero() || b.is_zero()) return Decimal();
    BigInt p = to_big(a.digits_) * to_big(b.digits_);
    const std::int64_t e = static_cast<std::int64_t>(a.exponent_) + b.exponent_;
    if (e > kExponentLimit || e < -kExponentLimit) throw DecimalError("decimal exponent out of range");
    return Decimal(a.negative_ != b.negative_, p.str(), static_cast<std::int32_t>(e));
}

Decimal operator/(const Decimal& a, const Decimal& b) {
    if (b.is_zero()) throw DecimalError("division by zero");
    if (a.is_zero()) return Decimal();
    const BigInt num = to_big(a.digits_);
    const BigInt den = to_big(b.digits_);
    // Scale the numerator so the integer quotient carries at least one guard
    // digit beyond the target precision.
    std::int64_t k = static_cast<std::int64_t>(b.digits_.size()) - static_cast<std::int64_t>(a.digits_.size()) +
                     Decimal::kDivisionDigits + 1;
    if (k < 0) k = 0;
    BigInt q, r;
    boost::multiprecision::divide_qr(num * pow10(k), den, q, r);
    std::int64_t exponent = static_cast<std::int64_t>(a.exponent_) - b.exponent_ - k;
    if (r != 0) {
        std::string qs = q.str();
        const auto extra = static_cast<std::int64_t>(qs.size()) - Decimal::kDivisionDigits;
        if (extra > 0) {
            BigInt q2, r2;
            const BigInt scale = pow10(extra);
            boost::multiprecision::divide_qr(q, scale, q2, r2);
            // r != 0, so the discarded tail is never an exact half: ties
            // cannot occur and comparing against half the scale suffices.
            const bool round_up = r2 * 2 >= scale;
            if (round_up) q2 += 1;
            q = q2;
            exponent += extra;
        }
    }
    if (exponent > kExponentLimit || exponent < -kExponentLimit) throw DecimalError("decimal exponent out of range");
    return Decimal(a.negative_ != b.negative_, q.str(), static_cast<std::int32_t>(exponent));
}

std::strong_ordering operator<=>(const Decimal& a, const Decimal& b) {
    const int sa = a.sign();
    const int sb = b.sign();
    if (sa != sb) return sa <=> sb;
    if (sa == 0) return std::strong_ordering::equal;
    int c = compare_magnitude(a.digits_, a.exponent_, b.digits_, b.exponent_);
    if (sa < 0) c = -c;
    return c <=> 0;
}

}  // namespace modelgate
