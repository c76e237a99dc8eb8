#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace thermoflow::volume {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Stencils run on THERMOFLOW_THREADS workers.

// Values at the nodes x = i / m of the flat torus [0,1)^dim, dim in {2,3},
// x-index fastest.
struct ScalarField {
  int dim = 2;
  int m = 0;
  std::vector<double> v;

  static ScalarField zeros(int dim, int m);
  // fn receives the node coordinates (dim entries).
  static ScalarField sample(int dim, int m, const std::function<double(const double*)>& fn);
  std::size_t size() const { return v.size(); }
  double spacing() const { return 1.0 / m; }
  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }
};

struct VectorField {
  std::vector<ScalarField> c;  // dim components

  static VectorField zeros(int dim, int m);
  int dim() const { return static_cast<int>(c.size()); }
  int m() const { return c.empty() ? 0 : c[0].m; }
};

// Fixed-order pairwise summation.
double pairwise_sum(const double* x, std::size_t n);
double sup_norm(const ScalarField& f);
double sup_norm(const VectorField& x);
// sup |x| + sup over components and axes of the centred difference
double c1_norm(const VectorField& x);
VectorField difference(const VectorField& a, const VectorField& b);

// Centred difference along an axis, periodic.
ScalarField partial(const ScalarField& f, int axis);

// Flat divergence plus the conformal term dim * X.grad h (h omitted: zero).
ScalarField divergence(const VectorField& x);
ScalarField divergence(const VectorField& x, const ScalarField& h);
// Divergence for the volume e^{dim h} dx in conservative form,
// e^{-dim h} sum_i d_i(e^{dim h} X_i). Same continuum operator as
// divergence(x, h); the two differ at second order in the grid spacing.
ScalarField weighted_divergence(const VectorField& x, const ScalarField& h);
// Gradient for the metric e^{2h} g0: e^{-2h} grad f.
VectorField weighted_gradient(const ScalarField& f, const ScalarField& h);
ScalarField weighted_laplacian(const ScalarField& f, const ScalarField& h);
// sum e^{dim h} f g dx
double weighted_inner(const ScalarField& f, const ScalarField& g, const ScalarField& h);

// Periodic convolution with a separable smooth bump of radius `bandwidth`,
// normalized to unit discrete mass.
ScalarField mollify(const ScalarField& f, double bandwidth);
VectorField mollify(const VectorField& x, double bandwidth);

struct PoissonOptions {
  double tol = 1e-10;  // on the weighted divergence of the result, sup norm
  int max_iters = 20000;
};

struct PoissonResult {
  VectorField x;
  ScalarField f;
  double projected = 0.0;  // largest component removed from the right-hand side
  double residual = 0.0;   // final sup of the weighted divergence of x
  int iterations = 0;
};

// X = Y + weighted_gradient(f) with weighted_laplacian(f) = -weighted_divergence(Y).
PoissonResult poisson_correct(const VectorField& y, const ScalarField& h,
                              const PoissonOptions& opt = {});

struct DemoRow {
  int k = 0;
  double bandwidth = 0.0;
  double c1_distance = 0.0;    // |X_k - X_0| in the discrete C^1 norm
  double divergence = 0.0;     // sup |weighted divergence of X_k for h_k|
  double before = 0.0;         // sup |weighted divergence of Y_k for h_k|
  double projected = 0.0;
  int iterations = 0;
};

struct DemoReport {
  double consistency = 0.0;  // sup |weighted_divergence(X_0, h_0)| on the grid
  std::vector<DemoRow> rows;
};

DemoReport invariant_volume_demo(const VectorField& x0, const ScalarField& h0, const std::vector<int>& ks,
                                 const PoissonOptions& opt = {}, double consistency_tol = 1e-2);

// X_0 = e^{-dim h_0} (constant + curl of a trigonometric stream function),
// h_0 trigonometric; dim * X_0 h_0 = -div X_0 holds exactly.
struct AnalyticPair {
  VectorField x0;
  ScalarField h0;
  double symbolic_residual = 0.0;  // identity checked with exact derivatives at the nodes
};
AnalyticPair analytic_pair(int dim, int m);

}  // namespace thermoflow::volume
