#include <gtest/gtest.h>

#include <random>

#include "modelgate/decimal.hpp"

using modelgate::Decimal;

TEST(Decimal, ParsesAndCanonicalizes) {
    EXPECT_EQ(Decimal::parse("2.0"), Decimal::parse("2"));
    EXPECT_EQ(Decimal::parse("20E-1"), Decimal(2));
    EXPECT_EQ(Decimal::parse("-0.0"), Decimal(0));
    EXPECT_EQ(Decimal::parse("0.1").to_string(), "0.1");
    EXPECT_EQ(Decimal::parse("1e6").to_string(), "1000000");
    EXPECT_EQ(Decimal::parse("1.5E-10").to_string(), "1.5E-10");
    EXPECT_EQ(Decimal::parse("-12.3400").to_string(), "-12.34");
    EXPECT_FALSE(Decimal::try_parse("01"));
    EXPECT_FALSE(Decimal::try_parse("1."));
    EXPECT_FALSE(Decimal::try_parse(".5"));
    EXPECT_FALSE(Decimal::try_parse("1e"));
    EXPECT_FALSE(Decimal::try_parse(""));
}

TEST(Decimal, KeepsThirtyFourDigitsExactly) {
    const std::string lexical = "1234567890123456789012345678901234";
    const auto d = Decimal::parse(lexical);
    EXPECT_EQ(d.coefficient_digits(), lexical);
    EXPECT_EQ(d.to_string(), "1.234567890123456789012345678901234E+33");
    EXPECT_EQ(Decimal::parse(d.to_string()), d);
    EXPECT_EQ(Decimal::parse("0.1234567890123456789012345678901234").to_string(),
              "0.1234567890123456789012345678901234");
}

TEST(Decimal, Int64RangeIsExact) {
    EXPECT_EQ(Decimal::parse("9223372036854775807").to_int64(), INT64_MAX);
    EXPECT_EQ(Decimal(INT64_MIN).to_int64(), INT64_MIN);
    EXPECT_FALSE(Decimal::parse("9223372036854775808").to_int64());
    EXPECT_FALSE(Decimal::parse("2.5").to_int64());
}

TEST(Decimal, ArithmeticIsExact) {
    // 0.1 + 0.2 is the classic binary floating point failure.
    EXPECT_EQ(Decimal::parse("0.1") + Decimal::parse("0.2"), Decimal::parse("0.3"));
    EXPECT_EQ(Decimal::parse("1.5") * Decimal(3600), Decimal(5400));
    EXPECT_EQ(Decimal(30) * Decimal(1000), Decimal(30000));
    EXPECT_EQ(Decimal(1) - Decimal::parse("0.01"), Decimal::parse("0.99"));
    EXPECT_EQ(Decimal(5400) / Decimal(3600), Decimal::parse("1.5"));
    EXPECT_THROW(Decimal(1) / Decimal(0), modelgate::DecimalError);
}

TEST(Decimal, NonTerminatingDivisionRoundsHalfEvenAt34Digits) {
    const auto third = Decimal(1) / Decimal(3);
    EXPECT_EQ(third.to_string(), "0." + std::string(34, '3'));
    const auto two_thirds = Decimal(2) / Decimal(3);
    EXPECT_EQ(two_thirds.to_string(), "0." + std::string(33, '6') + "7");
}

TEST(Decimal, OrderingMatchesIntegers) {
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> dist(-100000, 100000);
    for (int i = 0; i < 2000; ++i) {
        const int a = dist(rng), b = dist(rng);
        // Scaling both by the same power of ten must not change the order.
        const auto da = Decimal(a) / Decimal(1000), db = Decimal(b) / Decimal(1000);
        EXPECT_EQ(da < db, a < b);
        EXPECT_EQ(da == db, a == b);
        EXPECT_EQ(da + db, Decimal(a + b) / Decimal(1000));
    }
}

TEST(Decimal, MultiplyDivideRoundTripsThroughScales) {
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> dist(-1000000, 1000000);
    const Decimal scales[] = {Decimal(1000), Decimal(1000000), Decimal(3600), Decimal(60), Decimal::parse("0.01")};
    for (int i = 0; i < 500; ++i) {
        const auto v = Decimal(dist(rng)) / Decimal(100);
        for (const auto& s : scales) EXPECT_EQ((v * s) / s, v);
    }
}
