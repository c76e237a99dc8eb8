#pragma once

#include <cmath>
#include <random>

#include "thermoflow/sft.hpp"
#include "thermoflow/thermo.hpp"

namespace testing_support {

using thermoflow::sft::TransitionMatrix;
using thermoflow::thermo::Potential;

inline TransitionMatrix cat_map_shift() {
  // transition matrix of the standard five-rectangle partition of [[2,1],[1,1]]
  return TransitionMatrix({{1, 1, 0, 1, 0}, {1, 1, 0, 1, 0}, {1, 1, 0, 1, 0}, {0, 0, 1, 0, 1}, {0, 0, 1, 0, 1}});
}

// Values uniform in [lo, hi] on words of the given depth.
inline Potential random_potential(const TransitionMatrix& a, int depth, std::mt19937_64& rng, double lo = -1.0,
                                  double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Potential g = Potential::constant(a, depth, 0.0);
  for (double& v : g.values) v = u(rng);
  return g;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace testing_support

#include "thermoflow/coding.hpp"

namespace testing_support {

using namespace thermoflow::coding;

// Cat map, trigonometric roof and weight, bump profile.
inline SuspensionSystem generic_system() {
  TrigPoly roof{1.0, {{1, 0, 0.12, 0.05}, {0, 1, 0.07, 0.0}, {1, 1, 0.0, 0.04}}};
  TrigPoly w{0.0, {{1, 0, 0.05, 0.02}, {0, 1, 0.0, 0.03}}};
  return SuspensionSystem(ToralAutomorphism(), roof, w, Profile::bump);
}

inline FlowFunction generic_f() {
  FlowFunction f;
  f.c0 = 0.4;
  f.G = {0.0, {{1, 1, 0.1, 0.0}, {0, 1, 0.0, 0.05}}};
  f.kappa = 0.6;
  f.W = {0.0, {{1, 0, 0.05, 0.02}, {0, 1, 0.0, 0.03}}};
  f.profile = Profile::bump;
  return f;
}

inline SuspensionSystem linear_system(double roof = 1.0) {
  return SuspensionSystem(ToralAutomorphism(), TrigPoly::constant(roof), TrigPoly::constant(0.0), Profile::flat);
}

inline FlowFunction constant_f(double c) {
  FlowFunction f;
  f.c0 = c;
  return f;
}

inline FlowPoint random_point(const SuspensionSystem& sys, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec2 x{u(rng), u(rng)};
  return {x, u(rng) * sys.r(x)};
}

}  // namespace testing_support
