#include <doctest.h>

#include <cmath>
#include <numbers>

#include "thermoflow/volume.hpp"

using namespace thermoflow::volume;

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

ScalarField trig_h(int dim, int m) {
  return ScalarField::sample(dim, m, [dim](const double* x) {
    double h = 0.2 * std::sin(kTau * x[0]) + 0.1 * std::cos(kTau * x[1]);
    if (dim == 3) h += 0.15 * std::sin(kTau * x[2]);
    return h;
  });
}

VectorField generic_field(int dim, int m) {
  VectorField y = VectorField::zeros(dim, m);
  for (int a = 0; a < dim; ++a)
    y.c[a] = ScalarField::sample(dim, m, [a, dim](const double* x) {
      double s = std::cos(kTau * (x[0] + 2 * x[1])) + 0.5 * std::sin(kTau * (a + 1) * x[a]);
      if (dim == 3) s += 0.3 * std::cos(kTau * (x[2] - x[0]));
      return s;
    });
  return y;
}

}  // namespace

TEST_CASE("divergence of simple fields") {
  const int m = 32;
  SUBCASE("constant field") {
    VectorField x = VectorField::zeros(2, m);
    for (auto& v : x.c[0].v) v = 1.3;
    for (auto& v : x.c[1].v) v = -0.4;
    CHECK(sup_norm(divergence(x)) <= 1e-12);
  }
  SUBCASE("curl field") {
    // (d_y psi, -d_x psi) for psi = sin(2 pi x) sin(2 pi y)
    VectorField x = VectorField::zeros(2, m);
    x.c[0] = ScalarField::sample(2, m, [](const double* p) { return kTau * std::sin(kTau * p[0]) * std::cos(kTau * p[1]); });
    x.c[1] = ScalarField::sample(2, m, [](const double* p) { return -kTau * std::cos(kTau * p[0]) * std::sin(kTau * p[1]); });
    CHECK(sup_norm(divergence(x)) <= 1e-10);
  }
  SUBCASE("(sin 2 pi x, 0) converges at second order") {
    double prev = 0.0;
    for (int mm : {16, 32, 64}) {
      VectorField x = VectorField::zeros(2, mm);
      x.c[0] = ScalarField::sample(2, mm, [](const double* p) { return std::sin(kTau * p[0]); });
      auto d = divergence(x);
      auto exact = ScalarField::sample(2, mm, [](const double* p) { return kTau * std::cos(kTau * p[0]); });
      double err = 0.0;
      for (std::size_t i = 0; i < d.size(); ++i) err = std::max(err, std::abs(d[i] - exact[i]));
      if (prev > 0.0) CHECK(prev / err == doctest::Approx(4.0).epsilon(0.05));
      prev = err;
    }
  }
}

TEST_CASE("conservative and conformal divergences agree to second order") {
  double prev = 0.0;
  for (int m : {16, 32, 64}) {
    auto y = generic_field(2, m);
    auto h = trig_h(2, m);
    auto a = divergence(y, h), b = weighted_divergence(y, h);
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
    if (prev > 0.0) CHECK(prev / diff > 3.5);
    prev = diff;
  }
}

TEST_CASE("weighted Laplacian is self-adjoint and negative") {
  for (int dim : {2, 3}) {
    const int m = dim == 2 ? 24 : 12;
    auto h = trig_h(dim, m);
    auto f = ScalarField::sample(dim, m, [](const double* x) { return std::sin(kTau * x[0]) + x[1] * x[1]; });
    auto g = ScalarField::sample(dim, m, [](const double* x) { return std::cos(kTau * (x[0] - x[1])); });
    double fg = weighted_inner(weighted_laplacian(f, h), g, h);
    double gf = weighted_inner(f, weighted_laplacian(g, h), h);
    CHECK(std::abs(fg - gf) <= 1e-12 * std::max(1.0, std::abs(fg)));
    CHECK(weighted_inner(weighted_laplacian(f, h), f, h) < 0.0);
  }
}

TEST_CASE("mollifier") {
  const int m = 64;
  auto f = ScalarField::sample(2, m, [](const double* x) { return std::sin(kTau * x[0]) * std::cos(kTau * 3 * x[1]) + 0.5; });
  SUBCASE("constants are fixed and the mean is preserved") {
    auto c = ScalarField::sample(2, m, [](const double*) { return 2.5; });
    auto mc = mollify(c, 0.1);
    for (double v : mc.v) CHECK(v == doctest::Approx(2.5).epsilon(1e-14));
    auto mf = mollify(f, 0.2);
    CHECK(std::abs(pairwise_sum(mf.v.data(), mf.size()) - pairwise_sum(f.v.data(), f.size())) / f.size() <= 1e-12);
  }
  SUBCASE("linear and positive") {
    auto g = ScalarField::sample(2, m, [](const double* x) { return x[0] * x[1]; });
    auto lhs = f;
    for (std::size_t i = 0; i < lhs.size(); ++i) lhs[i] = 2.0 * f[i] - 3.0 * g[i];
    auto a = mollify(lhs, 0.15), b = mollify(f, 0.15), c = mollify(g, 0.15);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - (2.0 * b[i] - 3.0 * c[i])) <= 1e-12);
    auto pos = mollify(g, 0.15);
    for (double v : pos.v) CHECK(v >= 0.0);
  }
  SUBCASE("error shrinks with the bandwidth") {
    double prev = 1e300;
    for (double bw : {0.5, 0.25, 0.125}) {
      auto mf = mollify(f, bw);
      double err = 0.0;
      for (std::size_t i = 0; i < f.size(); ++i) err = std::max(err, std::abs(mf[i] - f[i]));
      CHECK(err < prev);
      prev = err;
    }
  }
  SUBCASE("bandwidth below two cells is rejected") {
    CHECK_THROWS_AS(mollify(f, 1.5 / m), Error);
    CHECK_NOTHROW(mollify(f, 0.5));
  }
}

TEST_CASE("Poisson correction") {
  SUBCASE("divergence-free input is returned unchanged") {
    // e^{-2h} (1, 0) with h depending on y only
    const int m = 32;
    auto h = ScalarField::sample(2, m, [](const double* x) { return 0.3 * std::cos(kTau * x[1]); });
    VectorField y = VectorField::zeros(2, m);
    for (std::size_t i = 0; i < h.size(); ++i) y.c[0][i] = std::exp(-2.0 * h[i]);
    auto r = poisson_correct(y, h);
    CHECK(r.iterations == 0);
    CHECK(sup_norm(difference(r.x, y)) <= 1e-12);
  }
  SUBCASE("a weighted gradient is removed entirely") {
    const int m = 32;
    auto h = trig_h(2, m);
    auto g = ScalarField::sample(2, m, [](const double* x) { return std::sin(kTau * x[0]) * std::cos(kTau * x[1]); });
    auto y = weighted_gradient(g, h);
    auto r = poisson_correct(y, h);
    CHECK(r.projected <= 1e-12);
    CHECK(sup_norm(r.x) <= 1e-6 * sup_norm(y));
  }
  SUBCASE("correction is linear in the input and idempotent") {
    const int m = 32;
    auto h = trig_h(2, m);
    auto y = generic_field(2, m);
    auto a = poisson_correct(y, h, {1e-12, 20000});
    auto y2 = y;
    for (auto& comp : y2.c)
      for (auto& v : comp.v) v *= -2.0;
    auto b = poisson_correct(y2, h, {1e-12, 20000});
    double worst = 0.0;
    for (int c = 0; c < 2; ++c)
      for (std::size_t i = 0; i < a.x.c[c].size(); ++i)
        worst = std::max(worst, std::abs(b.x.c[c][i] + 2.0 * a.x.c[c][i]));
    CHECK(worst <= 1e-8);
    auto again = poisson_correct(a.x, h, {1e-12, 20000});
    CHECK(sup_norm(difference(again.x, a.x)) <= 1e-8);
  }
  SUBCASE("reaches 1e-8 on 64^2 and 32^3") {
    for (int dim : {2, 3}) {
      const int m = dim == 2 ? 64 : 32;
      auto h = trig_h(dim, m);
      auto r = poisson_correct(generic_field(dim, m), h, {1e-9, 20000});
      CHECK(sup_norm(weighted_divergence(r.x, h)) <= 1e-8);
      CHECK(r.residual <= 1e-8);
    }
  }
  SUBCASE("iteration cap is reported") {
    auto h = trig_h(2, 32);
    CHECK_THROWS_AS(poisson_correct(generic_field(2, 32), h, {1e-12, 3}), Error);
  }
}

TEST_CASE("analytic pair") {
  for (int dim : {2, 3}) {
    auto p = analytic_pair(dim, 16);
    CHECK(p.symbolic_residual <= 1e-12);
    // second-order convergence of the discrete identity
    double prev = 0.0;
    for (int m : {16, 32, 64}) {
      if (dim == 3 && m == 64) break;
      auto q = analytic_pair(dim, m);
      double err = sup_norm(divergence(q.x0, q.h0));
      if (prev > 0.0) CHECK(prev / err == doctest::Approx(4.0).epsilon(0.15));
      prev = err;
    }
  }
}

TEST_CASE("invariant volume demo converges as the bandwidth shrinks") {
  auto p = analytic_pair(2, 64);
  auto rep = invariant_volume_demo(p.x0, p.h0, {2, 4, 8, 16});
  REQUIRE(rep.rows.size() == 4);
  CHECK(rep.consistency <= 1e-2);
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    CHECK(rep.rows[i].divergence <= 1e-8);
    if (i) CHECK(rep.rows[i].c1_distance < rep.rows[i - 1].c1_distance);
  }
}

TEST_CASE("shape mismatches are rejected") {
  auto h = ScalarField::zeros(2, 16);
  CHECK_THROWS_AS(divergence(VectorField::zeros(2, 32), h), Error);
  CHECK_THROWS_AS(ScalarField::zeros(4, 8), Error);
}
