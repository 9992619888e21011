#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "irreg/io.hpp"

using namespace irreg;

TEST(Io, ShortestDecimalRoundTrips) {
  RandomStream rng(4);
  for (int i = 0; i < 10000; ++i) {
    const double x = std::ldexp(rng.uniform(-1.0, 1.0), static_cast<int>(rng.uniform(-60.0, 60.0)));
    EXPECT_EQ(io::parse_double(io::format_double(x)), x);
  }
  EXPECT_EQ(io::format_double(0.1), "0.1");
  EXPECT_EQ(io::format_double(-0.0), "-0");
  EXPECT_TRUE(std::signbit(io::parse_double("-0")));
}

TEST(Io, HexIsFixedWidth) {
  EXPECT_EQ(io::format_hex(255), "00000000000000ff");
  EXPECT_EQ(io::format_hex(std::numeric_limits<std::uint64_t>::max()), "ffffffffffffffff");
}

TEST(Io, RejectsMalformedNumbers) {
  EXPECT_THROW(io::parse_double("1.5x"), ValidationError);
  EXPECT_THROW(io::parse_double(""), ValidationError);
  EXPECT_THROW(io::parse_u64("-3"), ValidationError);
}

TEST(Io, TableRoundTrip) {
  io::Table t;
  t.meta = {{"a", "1"}, {"b", "two"}};
  t.columns = {"x", "y"};
  t.rows = {{0.1, 1e-300}, {-2.5, 3.0}};
  std::stringstream ss(io::to_string(t));
  const auto u = io::read_table(ss);
  EXPECT_EQ(u.meta, t.meta);
  EXPECT_EQ(u.columns, t.columns);
  EXPECT_EQ(u.rows, t.rows);
}

TEST(Io, RaggedRowsAndMissingHeaderRejected) {
  std::stringstream ragged("x,y\n1,2\n3\n");
  EXPECT_THROW(io::read_table(ragged), ValidationError);
  std::stringstream empty("# only=meta\n");
  EXPECT_THROW(io::read_table(empty), ValidationError);
}

TEST(Io, RealizationRoundTrip) {
  PointProcessRealization x;
  x.tag = ProcessTag::X_u;
  x.n = 123.5;
  x.y_bound = 2.0;
  x.seed = 99;
  x.intensity_mass = 7.25;
  x.points = {{0.1, 0.2, 1, true}, {0.3, -0.4, 2, false}};
  const auto y = io::realization_from_table(io::to_table(x));
  EXPECT_EQ(y.tag, x.tag);
  EXPECT_EQ(y.n, x.n);
  EXPECT_EQ(y.seed, x.seed);
  ASSERT_EQ(y.size(), 2u);
  EXPECT_EQ(y.points[0].pass, 1);
  EXPECT_TRUE(y.points[0].extreme);
  EXPECT_EQ(y.points[1].y, -0.4);
}

TEST(Io, RegressionHeaderCountChecked) {
  io::Table t;
  t.meta["n"] = "3";
  t.columns = {"x", "y"};
  t.rows = {{0.0, 1.0}, {1.0, 2.0}};
  EXPECT_THROW(io::regression_from_table(t), ValidationError);
  t.meta.erase("n");
  t.rows = {{0.5, 1.0}, {0.1, 2.0}};
  EXPECT_THROW(io::regression_from_table(t), ValidationError);
}

TEST(Io, AlignedColumns) {
  EXPECT_EQ(io::aligned({{"a", "1"}, {"long", "2"}}), "a     1\nlong  2\n");
}
