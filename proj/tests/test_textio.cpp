#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "coil/errors.hpp"
#include "coil/stats.hpp"
#include "coil/textio.hpp"

using namespace coil;

TEST_CASE("reals round-trip through their shortest text") {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 1e308, 0.0, 123456789.125}) CHECK(parse_real(format_real(x), "x") == x);
  CHECK(format_real(0.1) == "0.1");
  CHECK(format_real(2.0) == "2");
  CHECK(std::isnan(parse_real(format_real(std::nan("")), "x")));
  CHECK(parse_real(format_real(-std::numeric_limits<double>::infinity()), "x") < 0);
  CHECK_THROWS_AS(parse_real("1.5x", "x"), InputError);
  CHECK_THROWS_AS(parse_real("", "x"), InputError);
}

TEST_CASE("integers and booleans") {
  CHECK(parse_int64("-42", "n") == -42);
  CHECK(parse_int(" 7 ", "n") == 7);
  CHECK_THROWS_AS(parse_int("3.5", "n"), InputError);
  CHECK_THROWS_AS(parse_int("99999999999", "n"), InputError);
  CHECK(parse_bool("true", "b"));
  CHECK_FALSE(parse_bool("0", "b"));
  CHECK_THROWS_AS(parse_bool("maybe", "b"), InputError);
}

TEST_CASE("split and trim") {
  CHECK(split("a;b;;c", ';') == std::vector<std::string>{"a", "b", "", "c"});
  CHECK(trim("  x y \t") == "x y");
}

TEST_CASE("key-value files") {
  std::stringstream in("# comment\nseed = 7\n\nenv.kind=chain  # trailing\n");
  const auto kv = read_key_values(in);
  CHECK(kv.at("seed") == "7");
  CHECK(kv.at("env.kind") == "chain");
  std::stringstream out;
  write_key_values(out, kv);
  std::stringstream back(out.str());
  CHECK(read_key_values(back) == kv);
  std::stringstream no_eq("a = 1\nbroken\n");
  try {
    read_key_values(no_eq);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::stringstream dup("a = 1\na = 2\n");
  CHECK_THROWS_AS(read_key_values(dup), ParseError);
  CHECK_THROWS_AS(read_key_values_file("/nonexistent/file.txt"), InputError);
}

TEST_CASE("summaries and ranks") {
  const std::vector<double> xs{1, 2, 3, 4};
  const auto s = summarize(xs);
  CHECK(s.mean == 2.5);
  CHECK(s.stddev == doctest::Approx(std::sqrt(1.25)));
  CHECK(s.min == 1);
  CHECK(s.max == 4);
  CHECK(ranks(std::vector<double>{10, 20, 20, 5}) == std::vector<double>{2, 3.5, 3.5, 1});
  CHECK(spearman(xs, std::vector<double>{1, 4, 9, 16}) == doctest::Approx(1.0));
  CHECK(spearman(xs, std::vector<double>{4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman(xs, std::vector<double>{1, 1, 1, 1}) == 0.0);
  CHECK(linear_slope(xs, std::vector<double>{3, 5, 7, 9}) == doctest::Approx(2.0));
  CHECK(top_fraction_mean(std::vector<double>{1, 9, 5, 7}, 0.5) == 8.0);
  CHECK(top_fraction_mean(std::vector<double>{1, 9, 5, 7}, 0.01) == 9.0);
}
