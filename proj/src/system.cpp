#include "thermoflow/system.hpp"

#include <cmath>
#include <numbers>

namespace thermoflow::coding {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kOffsetTol = 1e-15;
constexpr int kMaxTerms = 400;
}  // namespace

double norm(Vec2 a) { return std::hypot(a.x, a.y); }

Vec2 reduce(Vec2 x) {
  Vec2 r{x.x - std::floor(x.x), x.y - std::floor(x.y)};
  // floor of a tiny negative number can round back to exactly 1
  if (r.x >= 1.0) r.x = 0.0;
  if (r.y >= 1.0) r.y = 0.0;
  return r;
}

ToralAutomorphism::ToralAutomorphism(const Matrix& m) : m_(m) {
  const double a = m[0][0], b = m[0][1], c = m[1][0], d = m[1][1];
  const double det = a * d - b * c;
  const double tr = a + d;
  if (std::abs(det - 1.0) > 0.5) throw Error("toral automorphism must have determinant 1");
  if (tr <= 2.0) throw Error("toral automorphism must be hyperbolic with trace > 2");
  const double disc = std::sqrt(tr * tr - 4.0);
  lu_ = 0.5 * (tr + disc);
  ls_ = 1.0 / lu_;
  auto eigvec = [&](double lam) {
    Vec2 v = std::abs(b) > 0 ? Vec2{b, lam - a} : Vec2{lam - d, c};
    double n = norm(v);
    return Vec2{v.x / n, v.y / n};
  };
  eu_ = eigvec(lu_);
  es_ = eigvec(ls_);
  auto set_inverse = [&] {
    double det_e = eu_.x * es_.y - es_.x * eu_.y;
    inv_[0][0] = es_.y / det_e;
    inv_[0][1] = -es_.x / det_e;
    inv_[1][0] = -eu_.y / det_e;
    inv_[1][1] = eu_.x / det_e;
  };
  set_inverse();
  // orient so that (1,0) and (0,1) have positive u and (0,1) positive sigma
  if (to_eig({1, 0}).x < 0 && to_eig({0, 1}).x < 0) eu_ = -1.0 * eu_;
  set_inverse();
  if (to_eig({0, 1}).y < 0) es_ = -1.0 * es_;
  set_inverse();
}

Vec2 ToralAutomorphism::apply(Vec2 x) const {
  return {m_[0][0] * x.x + m_[0][1] * x.y, m_[1][0] * x.x + m_[1][1] * x.y};
}

Vec2 ToralAutomorphism::apply_inverse(Vec2 x) const {
  // det = 1
  return {m_[1][1] * x.x - m_[0][1] * x.y, -m_[1][0] * x.x + m_[0][0] * x.y};
}

Vec2 ToralAutomorphism::to_eig(Vec2 x) const {
  return {inv_[0][0] * x.x + inv_[0][1] * x.y, inv_[1][0] * x.x + inv_[1][1] * x.y};
}

Vec2 ToralAutomorphism::from_eig(Vec2 e) const { return e.x * eu_ + e.y * es_; }

double TrigPoly::operator()(Vec2 x) const {
  double v = c;
  for (const auto& t : terms) {
    double ph = 2.0 * kPi * (t.kx * x.x + t.ky * x.y);
    v += t.a * std::cos(ph) + t.b * std::sin(ph);
  }
  return v;
}

double TrigPoly::amplitude() const {
  double s = 0.0;
  for (const auto& t : terms) s += std::hypot(t.a, t.b);
  return s;
}

double TrigPoly::lipschitz() const {
  double s = 0.0;
  for (const auto& t : terms) s += 2.0 * kPi * std::hypot(double(t.kx), double(t.ky)) * std::hypot(t.a, t.b);
  return s;
}

double profile_density(Profile p, double theta) {
  if (p == Profile::flat) return 1.0;
  double s = std::sin(kPi * theta);
  return 2.0 * s * s;
}

double profile_primitive(Profile p, double theta) {
  if (p == Profile::flat) return theta;
  return theta - std::sin(2.0 * kPi * theta) / (2.0 * kPi);
}

SuspensionSystem::SuspensionSystem(ToralAutomorphism base, TrigPoly roof, TrigPoly weight,
                                   Profile profile)
    : base_(std::move(base)), roof_(std::move(roof)), weight_(std::move(weight)), profile_(profile) {
  if (!(roof_.lower_bound() > 0.0))
    throw Error("roof function must satisfy inf r > 0 (constant minus amplitudes is not positive)");
}

double SuspensionSystem::log_lambda_u() const { return std::log(base_.lambda_u()); }

double SuspensionSystem::beta2() const { return std::log(1.0 / base_.lambda_s()) / sup_roof(); }

FlowPoint SuspensionSystem::normalize(FlowPoint p) const {
  Vec2 x = reduce(p.x);
  double s = p.s;
  const long guard = 16 + static_cast<long>(std::abs(s) / inf_roof()) * 2;
  long it = 0;
  for (double rx = r(x); s >= rx; rx = r(x)) {
    s -= rx;
    x = reduce(base_.apply(x));
    if (++it > guard) throw Error("normalize: height did not settle");
  }
  while (s < 0.0) {
    x = reduce(base_.apply_inverse(x));
    s += r(x);
    if (++it > guard) throw Error("normalize: height did not settle");
  }
  return {x, s};
}

FlowPoint SuspensionSystem::flow(FlowPoint p, double t) const { return normalize({p.x, p.s + t}); }

double SuspensionSystem::theta(const FlowPoint& p) const {
  FlowPoint q = normalize(p);
  return q.s / r(q.x);
}

double SuspensionSystem::stable_offset(Vec2 x, double dsigma) const {
  if (dsigma == 0.0 || roof_.is_constant()) return 0.0;
  const double lip = roof_.lipschitz();
  const double ls = base_.lambda_s();
  Vec2 y = reduce(x);
  Vec2 d = dsigma * base_.e_s();
  double sum = 0.0, scale = std::abs(dsigma);
  for (int k = 0; k < kMaxTerms; ++k) {
    sum += r(y + d) - r(y);
    scale *= ls;
    if (lip * scale / (1.0 - ls) <= kOffsetTol) break;
    y = reduce(base_.apply(y));
    d = ls * d;
  }
  return sum;
}

double SuspensionSystem::unstable_offset(Vec2 x, double du) const {
  if (du == 0.0 || roof_.is_constant()) return 0.0;
  const double lip = roof_.lipschitz();
  const double ls = base_.lambda_s();
  Vec2 y = reduce(x);
  Vec2 d = du * base_.e_u();
  double sum = 0.0, scale = std::abs(du);
  for (int k = 1; k < kMaxTerms; ++k) {
    y = reduce(base_.apply_inverse(y));
    d = ls * d;
    scale *= ls;
    sum += r(y) - r(y + d);
    if (lip * scale / (1.0 - ls) <= kOffsetTol) break;
  }
  return sum;
}

FlowPoint SuspensionSystem::strong_stable_point(const FlowPoint& p, double dsigma) const {
  return {p.x + dsigma * base_.e_s(), p.s + stable_offset(p.x, dsigma)};
}

FlowPoint SuspensionSystem::strong_unstable_point(const FlowPoint& p, double du) const {
  return {p.x + du * base_.e_u(), p.s + unstable_offset(p.x, du)};
}

double SuspensionSystem::stable_displacement(const FlowPoint& p, const FlowPoint& q) const {
  Vec2 e = base_.to_eig(q.x - p.x);
  if (std::abs(e.x) > 1e-9 * (1.0 + std::abs(e.y)))
    throw Error("points are not on a common lifted stable line");
  return e.y;
}

double SuspensionSystem::eta(const FlowPoint& p, const FlowPoint& q) const {
  double ds = stable_displacement(p, q);
  return q.s - p.s - stable_offset(p.x, ds);
}

FlowFunction FlowFunction::natural(const SuspensionSystem& sys) {
  FlowFunction f;
  f.kappa = sys.log_lambda_u();
  f.W = sys.weight();
  f.profile = sys.profile();
  return f;
}

double FlowFunction::operator()(const SuspensionSystem& sys, const FlowPoint& p) const {
  FlowPoint q = sys.normalize(p);
  double r = sys.r(q.x);
  double th = q.s / r;
  double xw = W.is_constant() && W.c == 0.0 ? 0.0 : kPi * std::sin(2.0 * kPi * th) * W(q.x) / r;
  return c0 + (G(q.x) + kappa / r) * profile_density(profile, th) - xw;
}

double FlowFunction::fiber_integral(const SuspensionSystem& sys, Vec2 x, double s0, double s1) const {
  double r = sys.r(x);
  double t0 = s0 / r, t1 = s1 / r;
  double dq = profile_primitive(profile, t1) - profile_primitive(profile, t0);
  double v = c0 * (s1 - s0) + (G(x) * r + kappa) * dq;
  if (!(W.is_constant() && W.c == 0.0)) {
    double a = std::sin(kPi * t0), b = std::sin(kPi * t1);
    v -= (b * b - a * a) * W(x);
  }
  return v;
}

double FlowFunction::full_return(const SuspensionSystem& sys, Vec2 x) const {
  return (c0 + G(x)) * sys.r(x) + kappa;
}

double FlowFunction::prim(const SuspensionSystem& sys, Vec2 x, double s) const {
  Vec2 y = reduce(x);
  const auto& b = sys.base();
  double acc = 0.0;
  if (s >= 0.0) {
    for (double ry = sys.r(y); s >= ry; ry = sys.r(y)) {
      acc += full_return(sys, y);
      s -= ry;
      y = reduce(b.apply(y));
    }
  } else {
    while (s < 0.0) {
      y = reduce(b.apply_inverse(y));
      s += sys.r(y);
      acc -= full_return(sys, y);
    }
  }
  return acc + fiber_integral(sys, y, 0.0, s);
}

double FlowFunction::integral(const SuspensionSystem& sys, const FlowPoint& p, double t) const {
  return prim(sys, p.x, p.s + t) - prim(sys, p.x, p.s);
}

double FlowFunction::lipschitz_full_return(const SuspensionSystem& sys) const {
  double sup_cg = std::max(std::abs(c0 + G.upper_bound()), std::abs(c0 + G.lower_bound()));
  return G.lipschitz() * sys.sup_roof() + sup_cg * sys.roof().lipschitz();
}

namespace {
struct Range {
  double lo, hi;
};
Range profile_range(Profile p) { return p == Profile::flat ? Range{1.0, 1.0} : Range{0.0, 2.0}; }
double weight_sup(const TrigPoly& w) { return std::abs(w.c) + w.amplitude(); }
Range gk_range(const FlowFunction& f, const SuspensionSystem& sys) {
  double klo = f.kappa >= 0 ? f.kappa / sys.sup_roof() : f.kappa / sys.inf_roof();
  double khi = f.kappa >= 0 ? f.kappa / sys.inf_roof() : f.kappa / sys.sup_roof();
  return {f.G.lower_bound() + klo, f.G.upper_bound() + khi};
}
}  // namespace

double FlowFunction::lower_bound(const SuspensionSystem& sys) const {
  Range pr = profile_range(profile), g = gk_range(*this, sys);
  double term = std::min({g.lo * pr.lo, g.lo * pr.hi});
  return c0 + term - kPi * weight_sup(W) / sys.inf_roof();
}

double FlowFunction::upper_bound(const SuspensionSystem& sys) const {
  Range pr = profile_range(profile), g = gk_range(*this, sys);
  double term = std::max({g.hi * pr.lo, g.hi * pr.hi});
  return c0 + term + kPi * weight_sup(W) / sys.inf_roof();
}

}  // namespace thermoflow::coding
