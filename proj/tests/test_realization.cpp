#include <doctest.h>

#include <algorithm>

#include "support.hpp"
#include "thermoflow/realization.hpp"

using namespace thermoflow;
using namespace thermoflow::realization;
using coding::Error;
using coding::TrigPoly;
using testing_support::constant_f;
using testing_support::generic_f;
using testing_support::generic_system;
using testing_support::linear_system;
using testing_support::random_point;

namespace {

RealizeOptions opts(int depth, int N) {
  RealizeOptions o;
  o.depth = depth;
  o.N = N;
  return o;
}

}  // namespace

TEST_CASE("linear model: uniform family and exact Radon-Nikodym identity") {
  auto sys = linear_system(1.0);
  auto mp = MarkovPartition::build(sys.base(), 0);
  LeafMeasureFamily fam(sys, mp, constant_f(1.0), opts(8, 4096));
  CHECK(fam.rho() == doctest::Approx(sys.log_lambda_u()).epsilon(1e-12));
  FlowPoint p{{0.3, 0.2}, 0.4};
  auto seg = fam.segment(p);
  auto m = fam.masses(seg);
  auto [lo, hi] = std::minmax_element(m.begin(), m.end());
  CHECK((*hi - *lo) / *hi <= 1e-10);
  auto rp = reparametrize(fam, seg, m);
  const double total = rp.eta[seg.N] - rp.eta[0];
  for (int i = 0; i <= seg.N; i += 64)
    CHECK(std::abs(rp.eta[i] - rp.eta[0] - total * i / seg.N) <= 1e-10 * total);
  for (double t : {0.4, 1.0, 2.3}) CHECK(verify_radon_nikodym(fam, p, t).rel_err <= 1e-6);
}

TEST_CASE("leaf measure bookkeeping") {
  auto sys = generic_system();
  auto mp = MarkovPartition::build(sys.base(), 0);
  LeafMeasureFamily fam(sys, mp, generic_f(), opts(6, 2048));
  SUBCASE("mu' of a whole model segment is the cylinder mass") {
    for (int i = 0; i < mp.size(); ++i) {
      const auto& b = mp.piece(i).box;
      CHECK(fam.mu_prime(i, b.u0, b.u1) == doctest::Approx(fam.gibbs().cylinder_mass({i})).epsilon(1e-12));
      CHECK(fam.mu_prime_cdf(i, b.u0) == doctest::Approx(0.0));
    }
  }
  SUBCASE("cell masses add up to the segment mass, independent of thread count") {
    FlowPoint p{{0.61, 0.27}, 0.3};
    auto seg = fam.segment(p);
    auto m1 = fam.masses(seg);
    double s = 0.0;
    for (double x : m1) s += x;
    CHECK(s == doctest::Approx(fam.nu(p, -seg.half_length, seg.half_length).mass).epsilon(1e-9));
    RealizeOptions o4 = opts(6, 2048);
    o4.threads = 4;
    LeafMeasureFamily fam4(sys, mp, generic_f(), o4);
    CHECK(fam4.masses(seg) == m1);
  }
  SUBCASE("segments on one leaf agree on their overlap") {
    FlowPoint p{{0.15, 0.72}, 0.55};
    auto seg = fam.segment(p);
    const int shift = 300;
    FlowPoint q = sys.strong_unstable_point(p, shift * seg.cell());
    auto a = fam.masses(seg), b = fam.masses(fam.segment(q));
    double worst = 0.0;
    for (int c = shift; c < seg.N; ++c) worst = std::max(worst, std::abs(a[c] - b[c - shift]) / a[c]);
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("generic system: Radon-Nikodym identity and holonomy derivative") {
  auto sys = generic_system();
  auto mp = MarkovPartition::build(sys.base(), 0);
  LeafMeasureFamily fam(sys, mp, generic_f(), opts(8, 4096));
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 4; ++i) {
    FlowPoint p = random_point(sys, rng);
    double t = 0.25 + 2.75 * u(rng);
    auto rn = verify_radon_nikodym(fam, p, t);
    CHECK(rn.rel_err <= 0.02);
    CHECK(rn.rhs == doctest::Approx(fam.rho() * fam.flow_function().integral(sys, p, t)));
    FlowPoint q = sys.strong_stable_point(p, (u(rng) - 0.5) * 0.2);
    q.s += (u(rng) - 0.5) * 0.2;
    CHECK(holonomy_derivative(fam, p, q).rel_err <= 0.02);
  }
  FlowPoint p{{0.4, 0.4}, 0.2};
  FlowPoint off = sys.strong_unstable_point(p, 0.05);
  CHECK_THROWS_AS(holonomy_derivative(fam, p, off), Error);
}

TEST_CASE("reparametrization") {
  auto sys = generic_system();
  auto mp = MarkovPartition::build(sys.base(), 0);
  LeafMeasureFamily fam(sys, mp, generic_f(), opts(8, 4096));
  auto seg = fam.segment({{0.37, 0.81}, 0.2});
  auto rp = reparametrize(fam, seg);
  CHECK(rp.eta[seg.N / 2] == 0.0);
  for (int i = 0; i < seg.N; ++i) CHECK(rp.eta[i + 1] > rp.eta[i]);
  double worst = 0.0;
  for (int i = 0; i < 400; ++i) {
    double y = -1.0 + 2.0 * (i + 0.37) / 400;
    worst = std::max(worst, std::abs(rp.inverse(rp.eval(y)) - y));
  }
  CHECK(worst <= 2.0 / seg.N);
  auto band = holder_band(fam);
  CHECK(band.first <= band.second);
  CHECK(rp.holder_forward > 0.0);
  CHECK(rp.holder_forward <= rp.holder_backward);
  // fitted exponents sit inside the band up to finite-scale slack
  CHECK(rp.holder_forward >= band.first - 0.1);
  CHECK(rp.holder_backward <= band.second + 0.1);

  std::vector<double> bad(seg.N, 1.0);
  bad[7] = 0.0;
  CHECK_THROWS_AS(reparametrize(fam, seg, bad), Error);
}

TEST_CASE("chart transitions") {
  auto sys = generic_system();
  auto mp = MarkovPartition::build(sys.base(), 0);
  LeafMeasureFamily fam(sys, mp, generic_f(), opts(10, 4096));
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 3; ++i) {
    FlowPoint p = random_point(sys, rng);
    FlowPoint q = sys.strong_stable_point(p, (u(rng) - 0.5) * 0.4);
    auto c = check_chart_transition(fam, p, q);
    CHECK(c.max_residual_cells <= 3.0);
    CHECK(c.samples > 0);
  }
  // the same leaf read in a neighbouring chart
  FlowPoint p{{0.52, 0.18}, 0.3};
  int compared = 0;
  for (int j = 0; j < mp.size(); ++j) {
    auto r = chart_overlap_residual(fam, p, j);
    if (!r) continue;
    ++compared;
    CHECK(*r <= 3.0);
  }
  CHECK(compared > 0);
}

TEST_CASE("deformed cocycle") {
  SUBCASE("linear model") {
    auto sys = linear_system(1.3);
    auto mp = MarkovPartition::build(sys.base(), 0);
    LeafMeasureFamily fam(sys, mp, FlowFunction::natural(sys), opts(8, 4096));
    auto d = deformed_cocycle_check(fam, {{0.2, 0.7}, 0.5}, 2.0);
    CHECK(d.residual <= 1e-6);
  }
  SUBCASE("generic system") {
    auto sys = generic_system();
    auto mp = MarkovPartition::build(sys.base(), 0);
    LeafMeasureFamily fam(sys, mp, FlowFunction::natural(sys), opts(8, 4096));
    std::mt19937_64 rng(41);
    for (int i = 0; i < 2; ++i) {
      auto d = deformed_cocycle_check(fam, random_point(sys, rng), 0.5 + i);
      CHECK(d.residual <= 0.02 * std::abs(d.alpha));
    }
  }
}

TEST_CASE("rho equals one for the natural f") {
  TrigPoly pert{0.0, {{2, 1, 0.03, -0.02}}};
  for (const auto& sys : {linear_system(1.0), linear_system(1.3), generic_system()}) {
    auto mp = MarkovPartition::build(sys.base(), 0);
    auto r = rho_equals_one_check(sys, mp, 6, pert);
    CHECK(r.deviation <= 1e-6);
    CHECK(r.drift <= 1e-8);
    CHECK(r.rho_scaled == doctest::Approx(0.5 * r.rho).epsilon(1e-9));
  }
}

TEST_CASE("flow image counts section crossings") {
  auto sys = linear_system(1.0);
  FlowPoint p{{0.3, 0.3}, 0.25};
  auto a = flow_image(sys, p, 2.5);
  CHECK(a.returns == 2);
  CHECK(a.point.s == doctest::Approx(0.75));
  auto b = flow_image(sys, p, -0.5);
  CHECK(b.returns == -1);
  CHECK(b.point.s == doctest::Approx(0.75));
}

TEST_CASE("option validation") {
  auto sys = generic_system();
  auto mp = MarkovPartition::build(sys.base(), 0);
  CHECK_THROWS_AS(LeafMeasureFamily(sys, mp, generic_f(), opts(1, 4096)), Error);
  CHECK_THROWS_AS(LeafMeasureFamily(sys, mp, generic_f(), opts(8, 4095)), Error);
  // cells wider than depth-12 cylinder images
  CHECK_THROWS_AS(LeafMeasureFamily(sys, mp, generic_f(), opts(12, 64)), Error);
}
