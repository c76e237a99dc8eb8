#pragma once

#include <array>
#include <stdexcept>
#include <vector>

namespace thermoflow::coding {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Vec2 {
  double x = 0.0, y = 0.0;
};
inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double c, Vec2 a) { return {c * a.x, c * a.y}; }
double norm(Vec2 a);

// Reduce into [0,1)^2.
Vec2 reduce(Vec2 x);

// Integer 2x2 hyperbolic matrix with positive eigenvalues. Eigencoordinates
// (u, sigma) satisfy x = u e_u + sigma e_s, and B acts on them as
// diag(lambda_u, lambda_s).
class ToralAutomorphism {
 public:
  using Matrix = std::array<std::array<int, 2>, 2>;
  explicit ToralAutomorphism(const Matrix& m = {{{2, 1}, {1, 1}}});

  const Matrix& matrix() const { return m_; }
  double lambda_u() const { return lu_; }
  double lambda_s() const { return ls_; }
  Vec2 e_u() const { return eu_; }
  Vec2 e_s() const { return es_; }

  // Lifted action on R^2 (no reduction).
  Vec2 apply(Vec2 x) const;
  Vec2 apply_inverse(Vec2 x) const;
  Vec2 to_eig(Vec2 x) const;
  Vec2 from_eig(Vec2 e) const;
  // Eigencoordinates of the integer vector (m, k).
  Vec2 lattice_eig(int m, int k) const { return to_eig({double(m), double(k)}); }

 private:
  Matrix m_;
  double lu_ = 0, ls_ = 0;
  Vec2 eu_, es_;
  double inv_[2][2] = {};  // inverse of [e_u e_s]
};

// c + sum_j a_j cos(2 pi k_j.x) + b_j sin(2 pi k_j.x)
struct TrigTerm {
  int kx = 0, ky = 0;
  double a = 0.0, b = 0.0;
};

struct TrigPoly {
  double c = 0.0;
  std::vector<TrigTerm> terms;

  double operator()(Vec2 x) const;
  double amplitude() const;  // sum of sqrt(a^2+b^2)
  double lower_bound() const { return c - amplitude(); }
  double upper_bound() const { return c + amplitude(); }
  double lipschitz() const;
  bool is_constant() const { return terms.empty(); }
  static TrigPoly constant(double c) { return TrigPoly{c, {}}; }
};

// Metric profile along the fibre: P(theta) is the fibre density of the
// transverse log-expansion, Q its primitive with Q(0)=0, Q(1)=1.
enum class Profile { flat, bump };
double profile_density(Profile p, double theta);
double profile_primitive(Profile p, double theta);

// Point of the suspension. x is a lift to R^2 in standard coordinates, s is
// the height; s outside [0, r(x)) is allowed and interpreted through the
// identification (x, r(x)) ~ (Bx, 0).
struct FlowPoint {
  Vec2 x;
  double s = 0.0;
};

class SuspensionSystem {
 public:
  SuspensionSystem(ToralAutomorphism base, TrigPoly roof, TrigPoly weight, Profile profile);

  const ToralAutomorphism& base() const { return base_; }
  const TrigPoly& roof() const { return roof_; }
  const TrigPoly& weight() const { return weight_; }
  Profile profile() const { return profile_; }
  double r(Vec2 x) const { return roof_(x); }
  double log_lambda_u() const;
  double inf_roof() const { return roof_.lower_bound(); }
  double sup_roof() const { return roof_.upper_bound(); }
  // Contraction rate of the strong-stable foliation per unit time.
  double beta2() const;

  // Bring s into [0, r(x)) by applying B or B^-1; x is reduced.
  FlowPoint normalize(FlowPoint p) const;
  FlowPoint flow(FlowPoint p, double t) const;
  double theta(const FlowPoint& p) const;  // s / r(x) after normalization

  // D(x', x) = sum_{k>=0} r(B^k x') - r(B^k x) for x' - x along e_s.
  double stable_offset(Vec2 x, double dsigma) const;
  // sum_{k>=1} r(B^-k x) - r(B^-k x') for x' - x along e_u.
  double unstable_offset(Vec2 x, double du) const;
  // Point of the strong-stable (resp. strong-unstable) leaf of p whose base
  // is displaced by dsigma e_s (resp. du e_u).
  FlowPoint strong_stable_point(const FlowPoint& p, double dsigma) const;
  FlowPoint strong_unstable_point(const FlowPoint& p, double du) const;
  // Flow time with Phi^eta(p) in F^ss(q); q must lie on the lifted stable
  // line of p.
  double eta(const FlowPoint& p, const FlowPoint& q) const;
  // sigma-displacement of q relative to p; throws when the lifts are not on
  // a common stable line.
  double stable_displacement(const FlowPoint& p, const FlowPoint& q) const;

 private:
  ToralAutomorphism base_;
  TrigPoly roof_, weight_;
  Profile profile_;
};

// f = c0 + (G(x) + kappa / r(x)) P(theta) - X w,  w = sin^2(pi theta) W(x).
// The last term is a flow derivative, so it integrates in closed form.
struct FlowFunction {
  double c0 = 0.0;
  TrigPoly G;
  double kappa = 0.0;
  TrigPoly W;
  Profile profile = Profile::flat;

  // -d alpha/dt at t=0 for the system's conformal flow-box metric.
  static FlowFunction natural(const SuspensionSystem& sys);

  double operator()(const SuspensionSystem& sys, const FlowPoint& p) const;
  // integral of f along the fibre over x from height s0 to s1, 0<=s0<=s1<=r(x)
  double fiber_integral(const SuspensionSystem& sys, Vec2 x, double s0, double s1) const;
  // integral over one full return from (x, 0)
  double full_return(const SuspensionSystem& sys, Vec2 x) const;
  // Signed integral of f along the orbit of (x, 0) up to time s.
  double prim(const SuspensionSystem& sys, Vec2 x, double s) const;
  // integral_0^t f(Phi^tau p) dtau
  double integral(const SuspensionSystem& sys, const FlowPoint& p, double t) const;
  double lipschitz_full_return(const SuspensionSystem& sys) const;
  double lower_bound(const SuspensionSystem& sys) const;
  double upper_bound(const SuspensionSystem& sys) const;
};

}  // namespace thermoflow::coding
