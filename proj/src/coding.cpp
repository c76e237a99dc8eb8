#include "thermoflow/coding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace thermoflow::coding {

Itinerary itinerary(const SuspensionSystem& sys, const MarkovPartition& mp, const FlowPoint& p, int m) {
  if (m < 1) throw Error("itinerary length must be positive");
  FlowPoint q = sys.normalize(p);
  Location loc = mp.locate(q.x);
  Itinerary it;
  it.degenerate = loc.degenerate;
  it.xi.push_back(loc.piece);
  it.local.push_back(loc.local);
  it.tau.push_back(0.0);
  it.tau.push_back(sys.r(q.x) - q.s);
  for (int j = 1; j < m; ++j) {
    Vec2 e = mp.step(it.xi.back(), it.local.back());
    bool deg = false;
    int next = mp.successor(it.xi.back(), e, &deg);
    it.degenerate = it.degenerate || deg;
    it.xi.push_back(next);
    it.local.push_back(e);
    it.tau.push_back(it.tau.back() + sys.r(mp.to_plane(e)));
  }
  return it;
}

Box cylinder_image(const MarkovPartition& mp, const sft::Word& xi) {
  if (xi.empty()) throw Error("pi_A: empty word");
  if (!sft::admissible(mp.transition(), xi)) throw Error("pi_A: inadmissible word");
  const double lu = mp.base().lambda_u();
  const Box& last = mp.piece(xi.back()).box;
  double lo = last.u0, hi = last.u1;
  for (int j = static_cast<int>(xi.size()) - 2; j >= 0; --j) {
    double sh = mp.piece(xi[j]).shift_eig.x;
    lo = (lo + sh) / lu;
    hi = (hi + sh) / lu;
  }
  const Box& first = mp.piece(xi.front()).box;
  return {lo, hi, first.s0, first.s1};
}

PiA pi_A(const MarkovPartition& mp, const sft::Word& xi) {
  Box b = cylinder_image(mp, xi);
  PiA r;
  r.piece = xi.front();
  r.y = b.mid_u();
  r.radius = 0.5 * b.width_u();
  return r;
}

FlowPoint model_point(const SuspensionSystem& sys, const MarkovPartition& mp, int piece, double y) {
  Vec2 x = mp.to_plane({y, mp.sigma_ref(piece)});
  return {x, kThetaRef * sys.r(x)};
}

FlowPoint project(const SuspensionSystem& sys, const MarkovPartition& mp, int piece, Vec2 local) {
  return model_point(sys, mp, piece, local.x);
}

UValue u_closed(const SuspensionSystem& sys, const FlowFunction& f, const FlowPoint& p,
                const FlowPoint& q, double tol) {
  const double ds = sys.stable_displacement(p, q);
  UValue out;
  out.value = f.prim(sys, p.x, p.s) - f.prim(sys, q.x, q.s);
  if (ds == 0.0) return out;
  // D_F(x_q, x_p) along the exact stable displacement
  const auto& b = sys.base();
  const double ls = b.lambda_s();
  const double lip = f.lipschitz_full_return(sys);
  Vec2 y = reduce(p.x);
  Vec2 d = ds * b.e_s();
  double scale = std::abs(ds), sum = 0.0;
  int k = 0;
  for (; k < 400; ++k) {
    sum += f.full_return(sys, y + d) - f.full_return(sys, y);
    scale *= ls;
    if (lip * scale / (1.0 - ls) <= tol) break;
    y = reduce(b.apply(y));
    d = ls * d;
  }
  out.value += sum;
  out.terms = k + 1;
  out.bound = lip * scale / (1.0 - ls);
  return out;
}

double adaptive_simpson(const std::function<double(double)>& fn, double a, double b, double tol,
                        int max_depth) {
  struct Rec {
    const std::function<double(double)>& fn;
    double run(double a, double b, double fa, double fm, double fb, double whole, double tol, int depth) {
      double m = 0.5 * (a + b);
      double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
      double flm = fn(lm), frm = fn(rm);
      double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
      double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
      double delta = left + right - whole;
      if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
      return run(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
             run(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
    }
  } rec{fn};
  if (a == b) return 0.0;
  double fa = fn(a), fb = fn(b), fm = fn(0.5 * (a + b));
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return rec.run(a, b, fa, fm, fb, whole, tol, max_depth);
}

namespace {

double panel_integral(const std::function<double(double)>& fn, double a, double b, double panel,
                      double tol) {
  if (a == b) return 0.0;
  double sign = 1.0;
  if (b < a) {
    std::swap(a, b);
    sign = -1.0;
  }
  int n = std::max(1, static_cast<int>(std::ceil((b - a) / panel)));
  double h = (b - a) / n, s = 0.0;
  for (int i = 0; i < n; ++i) s += adaptive_simpson(fn, a + i * h, a + (i + 1) * h, tol);
  return sign * s;
}

// Crude Lipschitz bound for f in the suspension metric, used only for the
// quadrature tail estimate.
double flow_function_lipschitz(const SuspensionSystem& sys, const FlowFunction& f) {
  double pmax = f.profile == Profile::flat ? 1.0 : 2.0;
  double ir = sys.inf_roof();
  double lr = sys.roof().lipschitz();
  double gk = std::max(std::abs(f.G.lower_bound()), std::abs(f.G.upper_bound())) + std::abs(f.kappa) / ir;
  double w = std::abs(f.W.c) + f.W.amplitude();
  double dx = pmax * (f.G.lipschitz() + std::abs(f.kappa) * lr / (ir * ir)) +
              std::numbers::pi * (f.W.lipschitz() / ir + w * lr / (ir * ir));
  double dtheta = gk * 2.0 * std::numbers::pi + 2.0 * std::numbers::pi * std::numbers::pi * w / ir;
  return dx + dtheta * (1.0 + sys.sup_roof() * lr / ir) / ir;
}

}  // namespace

namespace {

// Base orbit of a lifted point with cumulative return heights, evaluated
// lazily. An optional stable displacement is carried exactly along the
// orbit so that paired orbits stay coherent for any horizon.
class FibreOrbit {
 public:
  FibreOrbit(const SuspensionSystem& sys, Vec2 x, const FibreOrbit* partner = nullptr, double dsigma = 0.0)
      : sys_(sys), partner_(partner), dsigma_(dsigma) {
    if (partner_) {
      x0_ = x;
    } else {
      fwd_.push_back(reduce(x));
    }
  }

  double operator()(const FlowFunction& f, double s) {
    if (s >= 0.0) {
      int k = 0;
      while (true) {
        Vec2 y = fwd(k);
        double r = sys_.r(y);
        if (s < r) return f(sys_, {y, s});
        s -= r;
        ++k;
      }
    }
    int k = 0;
    while (s < 0.0) {
      ++k;
      s += sys_.r(bwd(k));
    }
    return f(sys_, {bwd(k), s});
  }

 private:
  Vec2 fwd(int k) const {
    if (partner_) {
      Vec2 d = (dsigma_ * std::pow(sys_.base().lambda_s(), k)) * sys_.base().e_s();
      return reduce(partner_->fwd(k) + d);
    }
    while (static_cast<int>(fwd_.size()) <= k) fwd_.push_back(reduce(sys_.base().apply(fwd_.back())));
    return fwd_[k];
  }
  Vec2 bwd(int k) const {
    if (bwd_.empty()) bwd_.push_back(partner_ ? reduce(x0_) : fwd_[0]);
    while (static_cast<int>(bwd_.size()) <= k) bwd_.push_back(reduce(sys_.base().apply_inverse(bwd_.back())));
    return bwd_[k];
  }

  const SuspensionSystem& sys_;
  const FibreOrbit* partner_;
  double dsigma_;
  Vec2 x0_;
  mutable std::vector<Vec2> fwd_, bwd_;
};

}  // namespace

UValue u_quadrature(const SuspensionSystem& sys, const FlowFunction& f, const FlowPoint& p,
                    const FlowPoint& q, const QuadOptions& opt) {
  const double ds = sys.stable_displacement(p, q);
  const double eta = sys.eta(p, q);
  const double beta2 = sys.beta2();
  const double lip = flow_function_lipschitz(sys, f);
  const double c = lip * std::abs(ds) / beta2;
  double T = opt.t_max;
  if (T <= 0.0) T = c > opt.tail_tol ? std::log(c / opt.tail_tol) / beta2 : 0.0;
  UValue out;
  out.bound = c * std::exp(-beta2 * T);
  if (out.bound > opt.tail_tol * (1.0 + 1e-9))
    throw Error("u_quadrature: tail bound " + std::to_string(out.bound) + " above tolerance; use t_max >= " +
                std::to_string(std::log(c / opt.tail_tol) / beta2));
  const double panel = opt.panel * sys.inf_roof();
  FibreOrbit op(sys, p.x);
  FibreOrbit oq(sys, q.x, &op, ds);
  auto diff = [&](double t) { return oq(f, q.s + t) - op(f, p.s + eta + t); };
  auto along_p = [&](double t) { return op(f, p.s + t); };
  out.value = panel_integral(diff, 0.0, T, panel, opt.tol) - panel_integral(along_p, 0.0, eta, panel, opt.tol);
  out.terms = static_cast<int>(std::ceil(T / panel));
  return out;
}

double f_A(const SuspensionSystem& sys, const MarkovPartition& mp, const FlowFunction& f,
           const sft::Word& xi) {
  if (xi.size() < 2) throw Error("f_A needs a word of length at least 2");
  PiA a0 = pi_A(mp, xi);
  sft::Word tail(xi.begin() + 1, xi.end());
  PiA a1 = pi_A(mp, tail);
  const auto& b = mp.base();
  const Piece& p0 = mp.piece(xi[0]);
  FlowPoint q = model_point(sys, mp, xi[0], a0.y);
  // pi_A(sigma xi) pulled back by one return; it shares the u coordinate a0.y
  // with q, so both lie on one lifted stable line
  double z1s = (mp.sigma_ref(xi[1]) + p0.shift_eig.y) / b.lambda_s();
  Vec2 z1 = b.from_eig({a0.y, z1s});
  Vec2 x1 = mp.to_plane({a1.y, mp.sigma_ref(xi[1])});
  FlowPoint p{z1, kThetaRef * sys.r(x1) + sys.r(z1)};
  return u_closed(sys, f, p, q).value;
}

thermo::Potential f_A_potential(const SuspensionSystem& sys, const MarkovPartition& mp,
                                const FlowFunction& f, int k) {
  if (k < 2) throw Error("f_A potential depth must be at least 2");
  return thermo::Potential::from_function(mp.transition(), k,
                                          [&](const sft::Word& w) { return f_A(sys, mp, f, w); });
}

TelescopingCheck telescoping_check(const SuspensionSystem& sys, const MarkovPartition& mp,
                                   const FlowFunction& f, const FlowPoint& p, int m,
                                   const QuadOptions& quad, int tail) {
  if (m < 1) throw Error("telescoping: m must be positive");
  if (tail < 2) throw Error("telescoping: tail must be at least 2");
  Itinerary it = itinerary(sys, mp, p, m + tail);
  FlowPoint pn = sys.normalize(p);
  FlowPoint start{mp.to_plane(it.local[0]), pn.s};
  auto fn = [&](double t) { return f(sys, {start.x, start.s + t}); };
  // f has kinks only at section crossings; integrate return by return
  TelescopingCheck out;
  out.m = m;
  const double panel = quad.panel * sys.inf_roof();
  for (int j = 0; j < m; ++j) {
    double a = it.tau[j], b = it.tau[j + 1];
    int n = std::max(1, static_cast<int>(std::ceil((b - a) / panel)));
    for (int i = 0; i < n; ++i)
      out.lhs += adaptive_simpson(fn, a + (b - a) * i / n, a + (b - a) * (i + 1) / n, quad.tol / n);
  }
  sft::Word w0(it.xi.begin(), it.xi.end());
  sft::Word wm(it.xi.begin() + m, it.xi.end());
  FlowPoint q0 = model_point(sys, mp, w0[0], pi_A(mp, w0).y);
  FlowPoint pm{mp.to_plane(it.local[m]), 0.0};
  FlowPoint qm = model_point(sys, mp, wm[0], pi_A(mp, wm).y);
  double sum = 0.0;
  for (int j = 0; j < m; ++j) sum += f_A(sys, mp, f, sft::Word(it.xi.begin() + j, it.xi.end()));
  out.rhs = u_closed(sys, f, pm, qm).value - u_closed(sys, f, start, q0).value + sum;
  out.residual = std::abs(out.lhs - out.rhs);
  return out;
}

double profile_change(const SuspensionSystem& sys, const FlowPoint& p, double t) {
  FlowFunction q;
  q.kappa = 1.0;
  q.profile = sys.profile();
  return q.integral(sys, p, t);
}

double conformal_weight(const SuspensionSystem& sys, const FlowPoint& p) {
  const auto& w = sys.weight();
  if (w.is_constant() && w.c == 0.0) return 0.0;
  FlowPoint q = sys.normalize(p);
  double s = std::sin(std::numbers::pi * q.s / sys.r(q.x));
  return s * s * w(q.x);
}

Cocycles cocycles(const SuspensionSystem& sys, const FlowPoint& p, double t) {
  double dq = profile_change(sys, p, t);
  double dw = conformal_weight(sys, {p.x, p.s + t}) - conformal_weight(sys, p);
  double l = sys.log_lambda_u();
  Cocycles c;
  c.alpha_perp = l * dq + dw;
  c.alpha = -l * dq + dw;
  c.beta = c.alpha;
  return c;
}

PropertyAReport check_property_A(const SuspensionSystem& sys, double rho, double eps, double T, int grid) {
  PropertyAReport rep;
  rep.C = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j)
      for (int k = 0; k < grid; ++k) {
        Vec2 x{(i + 0.5) / grid, (j + 0.5) / grid};
        FlowPoint p{x, (k + 0.5) / grid * sys.r(x)};
        Cocycles c = cocycles(sys, p, T);
        rep.C = std::min(rep.C, std::min(c.alpha_perp, -c.beta));
        rep.margin = std::max(rep.margin, std::abs(rho * c.alpha + c.alpha_perp));
        ++rep.samples;
      }
  rep.first = rep.C > 0.0;
  rep.second = rep.first && rep.margin < eps * rep.C;
  return rep;
}

}  // namespace thermoflow::coding
