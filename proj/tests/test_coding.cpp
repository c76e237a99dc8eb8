#include <doctest.h>

#include <numbers>

#include "support.hpp"
#include "thermoflow/coding.hpp"

using namespace thermoflow;
using namespace thermoflow::coding;
using testing_support::constant_f;
using testing_support::generic_f;
using testing_support::generic_system;
using testing_support::linear_system;
using testing_support::random_point;

namespace {

double torus_gap(Vec2 a, Vec2 b) {
  Vec2 d = reduce(a) - reduce(b);
  auto wrap = [](double x) { return std::abs(x - std::round(x)); };
  return std::max(wrap(d.x), wrap(d.y));
}

}  // namespace

TEST_CASE("cat map eigenstructure") {
  ToralAutomorphism b;
  const double phi = std::numbers::phi;
  CHECK(b.lambda_u() == doctest::Approx(phi * phi).epsilon(1e-14));
  CHECK(b.lambda_u() * b.lambda_s() == doctest::Approx(1.0).epsilon(1e-14));
  Vec2 x{0.3, -0.7};
  Vec2 y = b.apply_inverse(b.apply(x));
  CHECK(norm(y - x) < 1e-14);
  Vec2 e = b.to_eig(b.apply(x)), e0 = b.to_eig(x);
  CHECK(e.x == doctest::Approx(b.lambda_u() * e0.x).epsilon(1e-13));
  CHECK(e.y == doctest::Approx(b.lambda_s() * e0.y).epsilon(1e-12));
  CHECK_THROWS_AS(ToralAutomorphism({{{1, 1}, {0, 1}}}), Error);
}

TEST_CASE("trigonometric polynomial evaluation") {
  TrigPoly t{0.5, {{1, 2, 0.3, -0.2}}};
  Vec2 x{0.1, 0.35};
  double arg = 2.0 * std::numbers::pi * (0.1 + 0.7);
  CHECK(t(x) == doctest::Approx(0.5 + 0.3 * std::cos(arg) - 0.2 * std::sin(arg)).epsilon(1e-14));
  CHECK(t.lower_bound() <= t(x));
  CHECK(t.upper_bound() >= t(x));
}

TEST_CASE("suspension flow is a flow") {
  auto sys = generic_system();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 2.5);
  for (int i = 0; i < 50; ++i) {
    FlowPoint p = random_point(sys, rng);
    double s = u(rng), t = u(rng);
    FlowPoint a = sys.flow(sys.flow(p, s), t), b = sys.flow(p, s + t);
    CHECK(torus_gap(a.x, b.x) < 1e-10);
    CHECK(std::abs(a.s - b.s) < 1e-10);
    FlowPoint back = sys.flow(b, -(s + t));
    CHECK(torus_gap(back.x, p.x) < 1e-10);
  }
}

TEST_CASE("Markov partition") {
  for (int level : {0, 1}) {
    auto mp = MarkovPartition::build(ToralAutomorphism(), level);
    auto rep = mp.check(32);
    CHECK(rep.area_defect < 1e-12);
    CHECK(rep.cover_failures == 0);
    CHECK(rep.inclusion_failures == 0);
    CHECK(rep.mixing);
  }
  auto mp = MarkovPartition::build(ToralAutomorphism(), 0);
  CHECK(mp.size() == 5);
  auto fine = MarkovPartition::build_for_delta(ToralAutomorphism(), 0.5);
  CHECK(fine.max_diameter() < 0.5 / 8);
}

TEST_CASE("pi_A recovers the chart coordinate of the itinerary") {
  auto sys = generic_system();
  auto mp = MarkovPartition::build(sys.base(), 0);
  std::mt19937_64 rng(2);
  int used = 0;
  for (int i = 0; i < 200; ++i) {
    auto it = itinerary(sys, mp, random_point(sys, rng), 40);
    if (it.degenerate) continue;
    ++used;
    CHECK(sft::admissible(mp.transition(), it.xi));
    auto a = pi_A(mp, it.xi);
    CHECK(std::abs(a.y - it.local[0].x) <= 1e-6);
    CHECK(a.radius < 1e-12);
  }
  CHECK(used > 190);
}

TEST_CASE("pi_A contracts at rate log lambda_u") {
  auto mp = MarkovPartition::build(ToralAutomorphism(), 0);
  auto words = sft::enumerate_words(mp.transition(), 12);
  std::vector<double> xs, ys;
  for (int m = 4; m <= 12; ++m) {
    double worst = 0.0;
    for (std::size_t i = 0; i < words.size(); i += 97)
      worst = std::max(worst, pi_A(mp, sft::Word(words[i].begin(), words[i].begin() + m)).radius);
    xs.push_back(m);
    ys.push_back(std::log(worst));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
  mx /= xs.size();
  my /= ys.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) sxy += (xs[i] - mx) * (ys[i] - my), sxx += (xs[i] - mx) * (xs[i] - mx);
  double rate = -sxy / sxx;
  CHECK(std::abs(rate - std::log(mp.base().lambda_u())) <= 0.05 * std::log(mp.base().lambda_u()));
}

TEST_CASE("u: closed form against quadrature, additivity and flow relation") {
  auto sys = generic_system();
  auto f = generic_f();
  const auto& b = sys.base();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 8; ++i) {
    FlowPoint p = random_point(sys, rng);
    FlowPoint q{p.x + (u(rng) - 0.5) * 0.4 * b.e_s(), u(rng) * 0.5};
    FlowPoint z{p.x + (u(rng) - 0.5) * 0.4 * b.e_s(), u(rng) * 0.5};
    auto uc = u_closed(sys, f, p, q);
    auto uq = u_quadrature(sys, f, p, q);
    CHECK(std::abs(uc.value - uq.value) <= 1e-6);
    CHECK(std::abs(u_closed(sys, f, p, z).value - uc.value - u_closed(sys, f, q, z).value) <= 1e-10);
    double t = 2.0 * u(rng);
    double lhs = u_closed(sys, f, {p.x, p.s + t}, {q.x, q.s + t}).value;
    double rhs = uc.value - f.integral(sys, q, t) + f.integral(sys, p, t);
    CHECK(std::abs(lhs - rhs) <= 1e-10);
  }
  FlowPoint p{{0.2, 0.3}, 0.1}, q{{0.6, 0.1}, 0.1};
  CHECK_THROWS(u_closed(sys, f, p, q));
}

TEST_CASE("f_A is the return time for a constant roof and f = 1") {
  for (double c : {0.7, 1.0, 1.6}) {
    auto sys = linear_system(c);
    auto mp = MarkovPartition::build(sys.base(), 0);
    auto g = f_A_potential(sys, mp, constant_f(1.0), 4);
    CHECK(g.inf() == doctest::Approx(c).epsilon(1e-12));
    CHECK(g.sup() == doctest::Approx(c).epsilon(1e-12));
  }
}

TEST_CASE("natural f gives f_A = log lambda_u") {
  auto sys = generic_system();
  auto mp = MarkovPartition::build(sys.base(), 0);
  auto g = f_A_potential(sys, mp, FlowFunction::natural(sys), 4);
  CHECK(g.inf() == doctest::Approx(sys.log_lambda_u()).epsilon(1e-10));
  CHECK(g.sup() == doctest::Approx(sys.log_lambda_u()).epsilon(1e-10));
}

TEST_CASE("positive f gives eventually positive f_A") {
  auto sys = generic_system();
  auto f = generic_f();
  REQUIRE(f.lower_bound(sys) > 0.0);
  auto mp = MarkovPartition::build(sys.base(), 0);
  auto g = f_A_potential(sys, mp, f, 4);
  bool found = false;
  for (int m = 1; m <= 16 && !found; ++m) found = thermo::min_birkhoff_sum(mp.transition(), g, m) > 0.0;
  CHECK(found);
}

TEST_CASE("telescoping identity along itineraries") {
  auto sys = generic_system();
  auto mp = MarkovPartition::build(sys.base(), 0);
  auto f = generic_f();
  std::mt19937_64 rng(4);
  for (int i = 0; i < 12; ++i) {
    auto r = telescoping_check(sys, mp, f, random_point(sys, rng), 1 + i % 6);
    CHECK(r.residual <= 1e-4);
  }
}

TEST_CASE("cocycles") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  SUBCASE("linear model closed form") {
    auto sys = linear_system(1.0);
    for (int i = 0; i < 10; ++i) {
      FlowPoint p = random_point(sys, rng);
      double t = u(rng);
      auto c = cocycles(sys, p, t);
      CHECK(c.alpha_perp == doctest::Approx(t * sys.log_lambda_u()).epsilon(1e-12));
      CHECK(c.alpha == doctest::Approx(-t * sys.log_lambda_u()).epsilon(1e-12));
    }
  }
  SUBCASE("additivity and subadditivity") {
    for (const auto& sys : {linear_system(1.3), generic_system()}) {
      for (int i = 0; i < 20; ++i) {
        FlowPoint p = random_point(sys, rng);
        double s = u(rng), t = u(rng);
        auto c0 = cocycles(sys, p, 0.0);
        CHECK(c0.alpha == 0.0);
        CHECK(c0.alpha_perp == 0.0);
        auto a = cocycles(sys, p, s + t), b = cocycles(sys, p, s), c = cocycles(sys, {p.x, p.s + s}, t);
        CHECK(std::abs(a.alpha - b.alpha - c.alpha) <= 1e-10);
        CHECK(std::abs(a.alpha_perp - b.alpha_perp - c.alpha_perp) <= 1e-10);
        CHECK(a.beta <= b.beta + c.beta + 1e-10);
      }
    }
  }
  SUBCASE("property A on the linear model") {
    auto rep = check_property_A(linear_system(1.0), 1.0, 0.1, 1.0);
    CHECK(rep.first);
    CHECK(rep.second);
  }
}
