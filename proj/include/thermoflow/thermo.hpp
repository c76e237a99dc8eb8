#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "thermoflow/sft.hpp"

namespace thermoflow::thermo {

using sft::TransitionMatrix;
using sft::Word;

// Locally constant potential: g(xi) = values[index of xi(0..depth-1)].
struct Potential {
  std::shared_ptr<const sft::WordIndex> index;
  std::vector<double> values;

  int depth() const { return index->depth(); }
  int size() const { return index->size(); }
  double at(const int* first) const;
  double at(const Word& w) const { return at(w.data()); }
  double sup() const;
  double inf() const;

  static Potential constant(const TransitionMatrix& a, int depth, double c);
  static Potential from_function(const TransitionMatrix& a, int depth,
                                 const std::function<double(const Word&)>& fn);
};

Potential scaled(const Potential& g, double c);
Potential sum(const Potential& g1, const Potential& g2);
// Re-express g on words of a larger depth.
Potential lift(const TransitionMatrix& a, const Potential& g, int depth);
// g + phi o sigma - phi, phi a table over words of depth g.depth()-1.
Potential add_coboundary(const TransitionMatrix& a, const Potential& g,
                         const std::vector<double>& phi);

enum class Method { partition_sum, spectral };
std::string method_name(Method m);

struct PressureEstimate {
  double value = 0.0;
  Method method = Method::spectral;
  int m = 0;
  double error_bound = 0.0;
  int iterations = 0;
};

struct SpectralOptions {
  double tol = 1e-12;
  int max_iters = 200000;
};

PressureEstimate pressure_partition_sum(const TransitionMatrix& a, const Potential& g, int m,
                                        double budget = 4e8);

// log Z_m with Z_m the sup-partition sum; exposed for tests.
double log_partition_sum(const TransitionMatrix& a, const Potential& g, int m,
                         double budget = 4e8);

PressureEstimate transfer_spectral_pressure(const TransitionMatrix& a, const Potential& g,
                                            const SpectralOptions& opt = {});

// Minimum over admissible extended words of the Birkhoff m-sum of g.
double min_birkhoff_sum(const TransitionMatrix& a, const Potential& g, int m);

struct RhoOptions {
  int m_budget = 64;
  double tol = 1e-10;
  int max_bisections = 200;
  int monotone_grid = 16;
  SpectralOptions spectral;
};

struct RhoResult {
  double rho = 0.0;
  double residual = 0.0;  // P(-rho g)
  double lo = 0.0, hi = 0.0;
  int m_positive = 0;
  int evaluations = 0;
};

RhoResult find_rho(const TransitionMatrix& a, const Potential& g, const RhoOptions& opt = {});

struct GibbsData {
  double pressure = 0.0;
  int k = 0;   // potential depth
  int k1 = 0;  // depth of the marginal used by the cylinder recursion, max(k-1,1)
  Potential g;
  std::shared_ptr<const sft::WordIndex> states;  // depth-k words
  std::vector<double> h;                         // over states
  // mu[d-1] is the table of masses of depth-d cylinders, d = 1..max(depth,k),
  // in the order of enumerate_words.
  std::vector<std::vector<double>> mu;
  std::vector<std::shared_ptr<const sft::WordIndex>> mu_index;

  double cylinder_mass(const Word& w) const;
  // mu([w j]) / mu([w]) where w ends with the depth-k1 word whose index in
  // mu_index[k1-1] is last.
  double conditional(int last, int j) const;
  const std::vector<double>& table(int depth) const { return mu.at(depth - 1); }
  // (h mu)([w]) for |w| <= max table depth.
  double h_mu(const Word& w) const;
};

GibbsData gibbs(const TransitionMatrix& a, const Potential& g, int depth,
                const SpectralOptions& opt = {});

// The sigma^m system: alphabet = admissible m-blocks, potential = S_m g.
struct IterateSystem {
  TransitionMatrix a;
  Potential g;
  std::vector<Word> blocks;
};
IterateSystem iterate_system(const TransitionMatrix& a, const Potential& g, int m);

// Potential CSV: one row per word, "s1,...,sk,value" with 1-based symbols;
// the last field is the value.
Potential read_potential_csv(const TransitionMatrix& a, std::istream& in);
void write_potential_csv(std::ostream& out, const Potential& g);

}  // namespace thermoflow::thermo
