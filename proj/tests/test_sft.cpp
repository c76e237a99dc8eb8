#include <doctest.h>

#include <sstream>

#include "support.hpp"
#include "thermoflow/sft.hpp"

using namespace thermoflow::sft;

TEST_CASE("golden mean word counts are Fibonacci") {
  auto a = golden_mean();
  long f0 = 2, f1 = 3;
  CHECK(enumerate_words(a, 1).size() == 2);
  CHECK(enumerate_words(a, 2).size() == 3);
  for (int m = 3; m <= 14; ++m) {
    long f2 = f0 + f1;
    CHECK(static_cast<long>(enumerate_words(a, m).size()) == f2);
    f0 = f1;
    f1 = f2;
  }
}

TEST_CASE("enumeration is lexicographic and admissible") {
  auto a = testing_support::cat_map_shift();
  auto words = enumerate_words(a, 5);
  for (std::size_t i = 0; i < words.size(); ++i) {
    CHECK(admissible(a, words[i]));
    if (i) CHECK(words[i - 1] < words[i]);
  }
  // brute force over all 5^5 strings
  std::size_t count = 0;
  Word w(5);
  for (int c = 0; c < 3125; ++c) {
    int r = c;
    for (int t = 4; t >= 0; --t) {
      w[t] = r % 5;
      r /= 5;
    }
    if (admissible(a, w)) ++count;
  }
  CHECK(count == words.size());
}

TEST_CASE("transition convention a(next, cur)") {
  auto a = golden_mean();
  // symbol 2 (index 1) cannot follow itself
  CHECK_FALSE(a.allows(1, 1));
  CHECK(admissible(a, {0, 1, 0, 0}));
  CHECK_FALSE(admissible(a, {0, 1, 1}));
  CHECK(a.successors(1) == std::vector<int>{0});
  CHECK(a.predecessors(1) == std::vector<int>{0});
}

TEST_CASE("mixing exponents") {
  CHECK(is_mixing(full_shift(3), 5).value() == 1);
  CHECK(is_mixing(golden_mean(), wielandt_bound(golden_mean())).value() == 2);
  TransitionMatrix swap({{0, 1}, {1, 0}});
  CHECK_FALSE(is_mixing(swap, 50).has_value());
  auto cat = testing_support::cat_map_shift();
  auto e = is_mixing(cat, wielandt_bound(cat));
  REQUIRE(e.has_value());
  CHECK(*e <= wielandt_bound(cat));
}

TEST_CASE("invalid matrices are rejected") {
  CHECK_THROWS_AS(TransitionMatrix({{1, 0}, {1, 0}}), Error);  // column 2 empty
  CHECK_THROWS_AS(TransitionMatrix({{1, 2}, {1, 1}}), Error);
  CHECK_THROWS_AS(TransitionMatrix({{1, 1}}), Error);
  CHECK_THROWS_AS(enumerate_words(golden_mean(), 0), Error);
}

TEST_CASE("d_sigma") {
  CHECK(d_sigma({0, 1, 0}, {0, 0, 0}).value == doctest::Approx(std::exp(-1.0)));
  CHECK(d_sigma({1}, {0}).value == 1.0);
  auto d = d_sigma({0, 1}, {0, 1, 1});
  CHECK_FALSE(d.exact);
  CHECK(d.bound == doctest::Approx(std::exp(-2.0)));
}

TEST_CASE("shift drops the first symbol") {
  CHECK(shift({2, 0, 1}) == Word{0, 1});
  CHECK_THROWS_AS(shift({1}), Error);
}

TEST_CASE("word index finds every word and rejects the rest") {
  auto a = golden_mean();
  WordIndex idx(a, 6);
  for (int i = 0; i < idx.size(); ++i) CHECK(idx.find(idx.word(i)) == i);
  CHECK(idx.find(Word{1, 1, 0, 0, 0, 0}) == -1);
  CHECK(idx.find(Word{0, 0}) == -1);
}

TEST_CASE("matrix and word files round trip with 1-based symbols") {
  auto a = testing_support::cat_map_shift();
  std::stringstream ss;
  write_matrix(ss, a);
  auto b = read_matrix(ss);
  CHECK(b.rows() == a.rows());

  auto words = enumerate_words(a, 3);
  std::stringstream ws;
  write_words_csv(ws, words);
  CHECK(ws.str().rfind("1,1,1\n", 0) == 0);
  CHECK(read_words_csv(ws) == words);
  CHECK(parse_word("3,1,2") == Word{2, 0, 1});
  CHECK_THROWS_AS(parse_word("0,1"), Error);
}
