#include <doctest.h>

#include <Eigen/Dense>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "support.hpp"
#include "thermoflow/thermo.hpp"

using namespace thermoflow;
using namespace thermoflow::thermo;
using testing_support::cat_map_shift;
using testing_support::random_potential;

namespace {

// log spectral radius of M(w0, w1) = [w1 may follow w0] exp(g), g of depth <= 2
double eigen_pressure(const TransitionMatrix& a, const Potential& g) {
  const int k = a.size();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      if (!a.allows(j, i)) continue;
      Word w = g.depth() == 1 ? Word{i} : Word{i, j};
      m(i, j) = std::exp(g.at(w));
    }
  Eigen::EigenSolver<Eigen::MatrixXd> es(m);
  double r = 0.0;
  for (int i = 0; i < k; ++i) r = std::max(r, std::abs(es.eigenvalues()[i]));
  return std::log(r);
}

// log of sum over m-words of sup over one-symbol extensions of exp(S_m g)
double brute_log_partition(const TransitionMatrix& a, const Potential& g, int m) {
  const int k = g.depth();
  auto words = sft::enumerate_words(a, m + k - 1);
  std::map<Word, double> best;
  for (const auto& w : words) {
    double s = 0.0;
    for (int t = 0; t < m; ++t) s += g.at(w.data() + t);
    Word head(w.begin(), w.begin() + m);
    auto it = best.find(head);
    if (it == best.end()) best.emplace(head, s);
    else it->second = std::max(it->second, s);
  }
  double z = 0.0;
  for (auto& [w, s] : best) z += std::exp(s);
  return std::log(z);
}

}  // namespace

TEST_CASE("spectral pressure matches the Eigen spectral radius") {
  std::mt19937_64 rng(11);
  for (const auto& a : {sft::golden_mean(), cat_map_shift(), sft::full_shift(3)}) {
    CHECK(transfer_spectral_pressure(a, Potential::constant(a, 1, 0.0)).value ==
          doctest::Approx(eigen_pressure(a, Potential::constant(a, 1, 0.0))).epsilon(1e-11));
    for (int depth : {1, 2}) {
      auto g = random_potential(a, depth, rng);
      CHECK(transfer_spectral_pressure(a, g).value == doctest::Approx(eigen_pressure(a, g)).epsilon(1e-10));
    }
  }
  // frozen: log of the golden ratio
  CHECK(transfer_spectral_pressure(sft::golden_mean(), Potential::constant(sft::golden_mean(), 1, 0.0)).value ==
        doctest::Approx(0.48121182505960347).epsilon(1e-12));
}

TEST_CASE("partition sum dynamic program matches enumeration") {
  std::mt19937_64 rng(5);
  for (const auto& a : {sft::golden_mean(), cat_map_shift()}) {
    for (int depth : {1, 2, 3}) {
      auto g = random_potential(a, depth, rng);
      for (int m : {depth, 4, 7})
        CHECK(log_partition_sum(a, g, m) == doctest::Approx(brute_log_partition(a, g, m)).epsilon(1e-12));
    }
  }
  auto a = sft::golden_mean();
  CHECK_THROWS_AS(log_partition_sum(a, Potential::constant(a, 3, 0.0), 2), sft::Error);
}

TEST_CASE("partition sum estimate is within its error bound of the spectral value") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto a = trial % 2 ? sft::golden_mean() : cat_map_shift();
    auto g = random_potential(a, 1 + trial % 2, rng);
    auto ps = pressure_partition_sum(a, g, 12);
    auto sp = transfer_spectral_pressure(a, g);
    CHECK(std::abs(ps.value - sp.value) <= ps.error_bound);
    CHECK(ps.value >= sp.value - 1e-12);  // a_m / m decreases to P
  }
}

TEST_CASE("pressure is 1-Lipschitz in the sup norm") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    auto a = cat_map_shift();
    auto g1 = random_potential(a, 2, rng), g2 = random_potential(a, 2, rng);
    double d = 0.0;
    for (int i = 0; i < g1.size(); ++i) d = std::max(d, std::abs(g1.values[i] - g2.values[i]));
    CHECK(std::abs(transfer_spectral_pressure(a, g1).value - transfer_spectral_pressure(a, g2).value) <=
          d + 1e-9);
  }
}

TEST_CASE("iterate system pressure is m times the pressure") {
  std::mt19937_64 rng(13);
  for (int m : {2, 3}) {
    for (int depth : {1, 2, 3}) {
      auto a = sft::golden_mean();
      auto g = random_potential(a, depth, rng);
      auto it = iterate_system(a, g, m);
      CHECK(std::abs(transfer_spectral_pressure(it.a, it.g).value - m * transfer_spectral_pressure(a, g).value) <=
            1e-8);
    }
  }
}

TEST_CASE("min Birkhoff sum matches enumeration") {
  std::mt19937_64 rng(17);
  auto a = cat_map_shift();
  auto g = random_potential(a, 2, rng);
  for (int m : {1, 3, 5}) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& w : sft::enumerate_words(a, m + 1)) {
      double s = 0.0;
      for (int t = 0; t < m; ++t) s += g.at(w.data() + t);
      best = std::min(best, s);
    }
    CHECK(min_birkhoff_sum(a, g, m) == doctest::Approx(best).epsilon(1e-14));
  }
}

TEST_CASE("find_rho") {
  auto a = cat_map_shift();
  double p0 = transfer_spectral_pressure(a, Potential::constant(a, 1, 0.0)).value;
  SUBCASE("constant potential") {
    for (double c : {0.5, 1.0, 2.7}) {
      auto r = find_rho(a, Potential::constant(a, 2, c));
      CHECK(std::abs(r.rho - p0 / c) <= 1e-10);
      CHECK(std::abs(r.residual) <= 1e-10);
    }
  }
  SUBCASE("root of the pressure, invariant under coboundaries") {
    std::mt19937_64 rng(19);
    auto g = random_potential(a, 2, rng, 0.3, 1.5);
    auto r = find_rho(a, g);
    CHECK(std::abs(transfer_spectral_pressure(a, scaled(g, -r.rho)).value) <= 1e-10);
    std::vector<double> phi(5);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    for (double& v : phi) v = u(rng);
    auto r2 = find_rho(a, add_coboundary(a, g, phi));
    CHECK(std::abs(r2.rho - r.rho) <= 1e-8);
  }
  SUBCASE("eventually positive but not pointwise positive") {
    // Birkhoff sums of length 2 are all positive
    auto g = Potential::from_function(sft::golden_mean(), 2, [](const Word& w) { return w == Word{0, 1} ? -0.5 : 1.0; });
    auto r = find_rho(sft::golden_mean(), g);
    CHECK(r.m_positive == 2);
    CHECK(std::abs(r.residual) <= 1e-10);
  }
  SUBCASE("negative potential has no root") {
    CHECK_THROWS_AS(find_rho(a, Potential::constant(a, 1, -1.0)), sft::Error);
  }
}

TEST_CASE("Gibbs measure") {
  std::mt19937_64 rng(23);
  auto a = cat_map_shift();
  SUBCASE("conformality and shift invariance for a depth-1 potential") {
    auto g = random_potential(a, 1, rng);
    auto gd = gibbs(a, g, 6);
    CHECK(gd.pressure == doctest::Approx(transfer_spectral_pressure(a, g).value).epsilon(1e-12));
    for (int d = 1; d <= 6; ++d) {
      double total = 0.0, total_h = 0.0;
      for (const auto& w : sft::enumerate_words(a, d)) {
        total += gd.cylinder_mass(w);
        total_h += gd.h_mu(w);
        // mu(sigma[w]) = exp(P - g(w0)) mu([w])
        double image = 0.0;
        if (d == 1) {
          for (int j : a.successors(w[0])) image += gd.cylinder_mass({j});
        } else {
          image = gd.cylinder_mass(sft::shift(w));
        }
        CHECK(std::abs(image - std::exp(gd.pressure - g.at(w)) * gd.cylinder_mass(w)) <= 1e-8 * image + 1e-15);
        double pre = 0.0;
        for (int i : a.predecessors(w[0])) {
          Word iw{i};
          iw.insert(iw.end(), w.begin(), w.end());
          pre += gd.h_mu(iw);
        }
        CHECK(std::abs(pre - gd.h_mu(w)) <= 1e-8);
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(total_h == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  SUBCASE("cylinder masses decay geometrically") {
    auto g = random_potential(a, 2, rng);
    auto gd = gibbs(a, g, 8);
    double prev = 1.0;
    for (int d = 1; d <= 8; ++d) {
      const auto& t = gd.table(d);
      double mx = *std::max_element(t.begin(), t.end());
      if (d > 1) CHECK(mx / prev < 0.95);
      prev = mx;
    }
  }
  SUBCASE("Parry measure of the golden mean shift") {
    auto gm = sft::golden_mean();
    auto gd = gibbs(gm, Potential::constant(gm, 1, 0.0), 2);
    // phi^2 / (1 + phi^2)
    const double phi = std::numbers::phi;
    CHECK(gd.h_mu({0}) == doctest::Approx(phi * phi / (1 + phi * phi)).epsilon(1e-12));
    CHECK(gd.h_mu({0}) == doctest::Approx(0.7236067977499790).epsilon(1e-12));
  }
}

TEST_CASE("potential CSV round trip") {
  std::mt19937_64 rng(29);
  auto a = cat_map_shift();
  auto g = random_potential(a, 2, rng);
  std::stringstream ss;
  write_potential_csv(ss, g);
  auto h = read_potential_csv(a, ss);
  CHECK(h.values == g.values);
  std::stringstream bad("1,1,0.5\n5,5,0.2\n");
  CHECK_THROWS_AS(read_potential_csv(a, bad), sft::Error);
}
