#include "thermoflow/realization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "thermoflow/parallel.hpp"

namespace thermoflow::realization {

using coding::Box;
using coding::Error;
using coding::Vec2;

namespace {

constexpr double kProbe = 1e-9;
constexpr int kMaxMeasureDepth = 48;

double max_unstable_width(const MarkovPartition& mp) {
  double w = 0.0;
  for (const auto& pc : mp.pieces()) w = std::max(w, pc.box.width_u());
  return w;
}

// Least-squares slope of ys against xs.
double slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  return sxy / sxx;
}

// Intercept at centroid 0 of log ratio against centroid; the finest window
// when the centroids do not spread.
WindowEstimate extrapolate(std::vector<double> windows, std::vector<double> centroid,
                           std::vector<double> log_ratio, double scale) {
  WindowEstimate e;
  e.windows = std::move(windows);
  e.centroid = std::move(centroid);
  e.log_ratio = std::move(log_ratio);
  auto [lo, hi] = std::minmax_element(e.centroid.begin(), e.centroid.end());
  std::size_t finest = std::min_element(e.windows.begin(), e.windows.end()) - e.windows.begin();
  double amin = e.windows[finest] * scale;
  if (e.windows.size() < 2 || *hi - *lo < 1e-3 * amin) {
    e.value = e.log_ratio[finest];
    return e;
  }
  double b = slope(e.centroid, e.log_ratio);
  double mc = std::accumulate(e.centroid.begin(), e.centroid.end(), 0.0) / e.centroid.size();
  double ml = std::accumulate(e.log_ratio.begin(), e.log_ratio.end(), 0.0) / e.log_ratio.size();
  e.value = ml - b * mc;
  e.regressed = true;
  return e;
}

}  // namespace

FlowPoint LeafSegment::at(const SuspensionSystem& sys, double y) const {
  return sys.strong_unstable_point(anchor, y * half_length);
}

FlowImage flow_image(const SuspensionSystem& sys, const FlowPoint& p, double t) {
  const auto& b = sys.base();
  Vec2 x = coding::reduce(p.x);
  double s = p.s + t;
  int n = 0;
  const long guard = 64 + static_cast<long>(2.0 * (std::abs(s) + std::abs(p.s)) / sys.inf_roof());
  for (double rx = sys.r(x); s >= rx; rx = sys.r(x)) {
    s -= rx;
    x = coding::reduce(b.apply(x));
    if (++n > guard) throw Error("flow_image: height did not settle");
  }
  while (s < 0.0) {
    x = coding::reduce(b.apply_inverse(x));
    s += sys.r(x);
    if (--n < -guard) throw Error("flow_image: height did not settle");
  }
  return {{x, s}, n};
}

LeafMeasureFamily::LeafMeasureFamily(const SuspensionSystem& sys, const MarkovPartition& mp,
                                     const FlowFunction& f, const RealizeOptions& opt)
    : sys_(std::make_shared<SuspensionSystem>(sys)),
      mp_(std::make_shared<MarkovPartition>(mp)),
      f_(f),
      opt_(opt) {
  if (opt_.depth < 2) throw Error("realize: depth must be at least 2");
  if (opt_.N < 2 || opt_.N % 2 != 0) throw Error("realize: N must be even and at least 2");
  if (!(opt_.half_length > 0.0)) throw Error("realize: segment half length must be positive");
  const double lu = mp.base().lambda_u();
  const double wmax = max_unstable_width(mp);
  const double cylinder = wmax * std::pow(lu, -(opt_.depth - 1));
  if (cell() > cylinder)
    throw Error("realize: cells are coarser than depth-k cylinder images; increase N or decrease depth");
  measure_depth_ = opt_.depth;
  while (measure_depth_ < kMaxMeasureDepth && wmax * std::pow(lu, -(measure_depth_ - 1)) > cell())
    ++measure_depth_;

  fA_ = coding::f_A_potential(sys, mp, f, opt_.depth);
  rho_ = thermo::find_rho(mp.transition(), fA_, opt_.rho);
  gibbs_ = std::make_shared<thermo::GibbsData>(
      thermo::gibbs(mp.transition(), thermo::scaled(fA_, -rho_.rho), opt_.depth, opt_.rho.spectral));

  const int n = mp.size();
  child_frac_.assign(n, std::vector<std::pair<double, double>>(n, {0.0, 0.0}));
  for (int l = 0; l < n; ++l) {
    const Box& bl = mp.piece(l).box;
    double sh = mp.piece(l).shift_eig.x;
    for (int j : mp.transition().successors(l)) {
      const Box& bj = mp.piece(j).box;
      child_frac_[l][j] = {((bj.u0 + sh) / lu - bl.u0) / bl.width_u(),
                           ((bj.u1 + sh) / lu - bl.u0) / bl.width_u()};
    }
  }
  build_tree();
}

LeafSegment LeafMeasureFamily::segment(const FlowPoint& anchor) const {
  return {anchor, opt_.half_length, opt_.N};
}

void LeafMeasureFamily::build_tree() {
  const auto& gd = *gibbs_;
  const auto& a = mp_->transition();
  const int k1 = gd.k1;
  tree_.assign(k1, {});
  for (int d = 1; d <= k1; ++d) {
    const auto& idx = *gd.mu_index[d - 1];
    auto& level = tree_[d - 1];
    level.resize(idx.size());
    for (int i = 0; i < idx.size(); ++i) {
      const sft::Word& w = idx.word(i);
      for (int j : a.successors(w.back())) {
        Child c{j, -1, 0.0};
        if (d < k1) {
          sft::Word wj = w;
          wj.push_back(j);
          c.next = gd.mu_index[d]->find(wj);
          if (c.next >= 0) c.value = gd.mu[d][c.next];
        } else {
          sft::Word nxt(w.begin() + 1, w.end());
          nxt.push_back(j);
          c.next = gd.mu_index[k1 - 1]->find(nxt);
          if (c.next >= 0) c.value = gd.conditional(i, j);
        }
        if (c.next >= 0) level[i].push_back(c);
      }
    }
  }
}

double LeafMeasureFamily::mu_prime_cdf(int piece, double y) const {
  const Box& b = mp_->piece(piece).box;
  const auto& gd = *gibbs_;
  if (y <= b.u0) return 0.0;
  int idx = gd.mu_index[0]->find(&piece);
  double mass = gd.mu[0][idx];
  if (y >= b.u1) return mass;
  const int k1 = gd.k1;
  double lo = b.u0, width = b.width_u(), acc = 0.0;
  int last = piece, d = 1;
  for (int L = 1; L < measure_depth_; ++L) {
    const auto& kids = tree_[d - 1][idx];
    const Child* next = nullptr;
    double next_lo = 0.0, next_w = 0.0, next_mass = 0.0;
    for (const Child& c : kids) {
      auto [f0, f1] = child_frac_[last][c.symbol];
      double c0 = lo + f0 * width, c1 = lo + f1 * width;
      double cm = d < k1 ? c.value : mass * c.value;
      if (c1 <= y) {
        acc += cm;
      } else if (c0 <= y && !next) {
        next = &c;
        next_lo = c0;
        next_w = c1 - c0;
        next_mass = cm;
      }
    }
    if (!next) return acc;  // y in a gap left by rounding
    last = next->symbol;
    idx = next->next;
    d = std::min(d + 1, k1);
    lo = next_lo;
    width = next_w;
    mass = next_mass;
  }
  return acc + mass * std::clamp((y - lo) / width, 0.0, 1.0);
}

double LeafMeasureFamily::mu_prime(int piece, double y0, double y1) const {
  return mu_prime_cdf(piece, y1) - mu_prime_cdf(piece, y0);
}

std::vector<ChartSpan> LeafMeasureFamily::charts(const FlowPoint& p, double v0, double v1) const {
  std::vector<ChartSpan> out;
  const Vec2 eu = sys_->base().e_u();
  double v = v0;
  int guard = 0;
  while (v < v1) {
    double probe = v + std::min(kProbe, 0.5 * (v1 - v));
    coding::Location loc = mp_->locate(p.x + probe * eu);
    ChartSpan c;
    c.piece = loc.piece;
    c.offset = loc.local.x - probe;
    c.sigma = loc.local.y;
    const Box& b = mp_->piece(loc.piece).box;
    c.v0 = v;
    c.v1 = std::min(v1, b.u1 - c.offset);
    if (c.v1 <= probe) c.v1 = std::min(v1, probe + kProbe);  // rounding at a corner
    out.push_back(c);
    v = c.v1;
    if (++guard > 1000000) throw Error("charts: leaf window crosses too many rectangles");
  }
  return out;
}

std::optional<ChartSpan> LeafMeasureFamily::forced_chart(const FlowPoint& p, int piece, double v0,
                                                         double v1, double max_dsigma) const {
  const auto& b = sys_->base();
  const Box& box = mp_->piece(piece).box;
  Vec2 xr = coding::reduce(p.x);
  Vec2 er = b.to_eig(xr);
  std::optional<ChartSpan> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (int m = -4; m <= 4; ++m)
    for (int k = -4; k <= 4; ++k) {
      Vec2 e = er + b.to_eig({double(m), double(k)});
      double ds = std::max({0.0, box.s0 - e.y, e.y - box.s1});
      if (ds > max_dsigma || ds >= best_d) continue;
      // xr - p.x is a lattice vector, so chart u = v + e.x
      double offset = e.x;
      double a = std::max(v0, box.u0 - offset), c = std::min(v1, box.u1 - offset);
      if (c <= a) continue;
      best = ChartSpan{a, c, piece, offset, e.y};
      best_d = ds;
    }
  return best;
}

double LeafMeasureFamily::weight(const FlowPoint& p, const ChartSpan& c, double v) const {
  const double rho = rho_.rho;
  double s = p.s + sys_->unstable_offset(p.x, v);
  double u = v + c.offset;
  FlowPoint q{mp_->to_plane({u, c.sigma}), s};
  FlowPoint pq = coding::model_point(*sys_, *mp_, c.piece, u);
  return rho * std::exp(rho * coding::u_closed(*sys_, f_, q, pq).value);
}

// Calls sink(cell index, mass, lo, hi) for each piece of [v0, v1] cut at
// cell and chart boundaries, in increasing v.
template <class Sink>
void LeafMeasureFamily::stream(const FlowPoint& p, const std::vector<ChartSpan>& spans, double v0,
                               double v1, Sink&& sink) const {
  const double h = cell();
  for (const auto& sp : spans) {
    double a = std::max(v0, sp.v0), b = std::min(v1, sp.v1);
    if (b <= a) continue;
    // a on a cell boundary must not round into the cell below
    double ah = a / h, r = std::round(ah);
    long c = static_cast<long>(std::abs(ah - r) < 1e-9 ? r : std::floor(ah));
    double prev_v = a, prev_cdf = mu_prime_cdf(sp.piece, a + sp.offset);
    while (prev_v < b) {
      double cell_lo = c * h, cell_hi = (c + 1) * h;
      double hi = std::min(b, cell_hi);
      if (hi > prev_v) {
        double wl = std::max(cell_lo, sp.v0), wh = std::min(cell_hi, sp.v1);
        double cdf = mu_prime_cdf(sp.piece, hi + sp.offset);
        sink(c, (cdf - prev_cdf) * weight(p, sp, 0.5 * (wl + wh)), prev_v, hi);
        prev_cdf = cdf;
        prev_v = hi;
      }
      ++c;
    }
  }
}

LeafMeasureFamily::Mass LeafMeasureFamily::nu_in(const FlowPoint& p, const std::vector<ChartSpan>& spans,
                                                 double v0, double v1) const {
  Mass out;
  stream(p, spans, v0, v1, [&](long, double dm, double lo, double hi) {
    out.mass += dm;
    out.moment += dm * 0.5 * (lo + hi);
  });
  return out;
}

LeafMeasureFamily::Mass LeafMeasureFamily::nu(const FlowPoint& p, double v0, double v1) const {
  return nu_in(p, charts(p, v0, v1), v0, v1);
}

std::vector<double> LeafMeasureFamily::masses(const LeafSegment& seg) const {
  return masses(seg, charts(seg.anchor, -seg.half_length, seg.half_length));
}

std::vector<double> LeafMeasureFamily::masses(const LeafSegment& seg,
                                              const std::vector<ChartSpan>& spans) const {
  if (seg.N != opt_.N || seg.half_length != opt_.half_length)
    throw Error("masses: segment not registered with this family's resolution");
  const double h = cell();
  const long first = -seg.N / 2;
  std::vector<double> m(seg.N, 0.0);
  const int workers = resolve_threads(opt_.threads);
  const std::size_t chunks = std::min<std::size_t>(std::max(workers, 1) * 4, seg.N);
  const long per = (seg.N + static_cast<long>(chunks) - 1) / static_cast<long>(chunks);
  parallel_for(0, chunks, workers, [&](std::size_t ch) {
    long c0 = static_cast<long>(ch) * per, c1 = std::min<long>(seg.N, c0 + per);
    if (c0 >= c1) return;
    stream(seg.anchor, spans, (first + c0) * h, (first + c1) * h,
           [&](long c, double dm, double, double) { m[c - first] += dm; });
  });
  return m;
}

std::vector<double> default_windows() { return {1.0 / 64, 1.0 / 128, 1.0 / 256}; }

RNCheck verify_radon_nikodym(const LeafMeasureFamily& fam, const FlowPoint& p, double t,
                             const std::vector<double>& windows) {
  const auto& sys = fam.system();
  const double ell = fam.options().half_length;
  FlowImage img = flow_image(sys, p, t);
  const double stretch = std::pow(sys.base().lambda_u(), img.returns);
  std::vector<double> cs, ls;
  for (double a : windows) {
    if (a * stretch > 1.0) throw Error("verify_radon_nikodym: window escapes the registered segment");
    auto m0 = fam.nu(p, -a * ell, a * ell);
    auto m1 = fam.nu(img.point, -a * ell * stretch, a * ell * stretch);
    cs.push_back(m0.moment / m0.mass);
    ls.push_back(std::log(m1.mass / m0.mass));
  }
  RNCheck out;
  out.returns = img.returns;
  out.estimate = extrapolate(windows, cs, ls, ell);
  out.lhs = out.estimate.value;
  out.rhs = fam.rho() * fam.flow_function().integral(sys, p, t);
  double d = std::abs(out.lhs - out.rhs);
  out.rel_err = out.rhs != 0.0 ? d / std::abs(out.rhs) : d;
  return out;
}

HolonomyCheck holonomy_derivative(const LeafMeasureFamily& fam, const FlowPoint& p,
                                  const FlowPoint& q, const std::vector<double>& windows) {
  const auto& sys = fam.system();
  Vec2 d = sys.base().to_eig(q.x - p.x);
  if (std::abs(d.x) > 1e-9 * (1.0 + std::abs(d.y)))
    throw Error("holonomy_derivative: q is not on the weak-stable leaf of p");
  if (std::abs(d.y) > fam.partition().delta0())
    throw Error("holonomy_derivative: holonomy undefined beyond delta0");
  const double ell = fam.options().half_length;
  std::vector<double> cs, ls;
  for (double a : windows) {
    auto mp = fam.nu(p, -a * ell, a * ell);
    auto mq = fam.nu(q, -a * ell, a * ell);
    cs.push_back(mp.moment / mp.mass);
    ls.push_back(std::log(mq.mass / mp.mass));
  }
  HolonomyCheck out;
  out.estimate = extrapolate(windows, cs, ls, ell);
  out.derivative = std::exp(out.estimate.value);
  out.expected = std::exp(fam.rho() * coding::u_closed(sys, fam.flow_function(), q, p).value);
  out.rel_err = std::abs(out.derivative - out.expected) / out.expected;
  return out;
}

double Reparametrization::eval(double y) const {
  const int n = segment.N;
  double x = (y + 1.0) * 0.5 * n;
  int i = std::clamp(static_cast<int>(std::floor(x)), 0, n - 1);
  double f = x - i;
  return eta[i] + f * (eta[i + 1] - eta[i]);
}

double Reparametrization::inverse(double e) const {
  const int n = segment.N;
  auto it = std::upper_bound(eta.begin(), eta.end(), e);
  int i = std::clamp(static_cast<int>(it - eta.begin()) - 1, 0, n - 1);
  double f = (e - eta[i]) / (eta[i + 1] - eta[i]);
  return knot(i) + f * 2.0 / n;
}

Reparametrization reparametrize(const LeafMeasureFamily& fam, const LeafSegment& seg) {
  return reparametrize(fam, seg, fam.masses(seg));
}

Reparametrization reparametrize(const LeafMeasureFamily&, const LeafSegment& seg,
                                const std::vector<double>& masses) {
  const int n = seg.N;
  if (static_cast<int>(masses.size()) != n) throw Error("reparametrize: mass table size mismatch");
  for (double m : masses)
    if (!(m > 0.0) || !std::isfinite(m))
      throw Error("reparametrize: integrity error, a subinterval has zero mass");
  Reparametrization r;
  r.segment = seg;
  r.eta.assign(n + 1, 0.0);
  const int c = n / 2;
  for (int i = c; i < n; ++i) r.eta[i + 1] = r.eta[i] + masses[i];
  for (int i = c; i > 0; --i) r.eta[i - 1] = r.eta[i] - masses[i - 1];

  // dyadic blocks: largest and smallest mass at each scale
  std::vector<double> lx, lmax, lmin;
  for (int blocks = 4; n / blocks >= 4; blocks *= 2) {
    const int bs = n / blocks;
    double mx = 0.0, mn = std::numeric_limits<double>::infinity();
    for (int b = 0; b < blocks; ++b) {
      double m = r.eta[(b + 1) * bs] - r.eta[b * bs];
      mx = std::max(mx, m);
      mn = std::min(mn, m);
    }
    lx.push_back(std::log(2.0 / blocks));
    lmax.push_back(std::log(mx));
    lmin.push_back(std::log(mn));
  }
  if (lx.size() >= 2) {
    r.holder_forward = slope(lx, lmax);
    r.holder_backward = slope(lx, lmin);
  }
  return r;
}

std::pair<double, double> holder_band(const LeafMeasureFamily& fam) {
  double l = fam.system().log_lambda_u();
  return {fam.rho() * fam.f_A().inf() / l, fam.rho() * fam.f_A().sup() / l};
}

ChartTransition check_chart_transition(const LeafMeasureFamily& fam, const FlowPoint& p,
                                       const FlowPoint& q, int samples) {
  const auto& sys = fam.system();
  Vec2 d = sys.base().to_eig(q.x - p.x);
  if (std::abs(d.x) > 1e-9 * (1.0 + std::abs(d.y)))
    throw Error("check_chart_transition: leaves are not related by stable holonomy");
  if (std::abs(d.y) > fam.partition().delta0())
    throw Error("check_chart_transition: charts disjoint (points farther apart than delta0)");
  LeafSegment sp = fam.segment(p), sq = fam.segment(q);
  auto mp = fam.masses(sp), mq = fam.masses(sq);
  Reparametrization ep = reparametrize(fam, sp, mp);
  const int n = sp.N;
  const double h = sp.cell(), rho = fam.rho();
  auto jac = [&](double v) {
    FlowPoint pv = sys.strong_unstable_point(p, v), qv = sys.strong_unstable_point(q, v);
    return std::exp(rho * coding::u_closed(sys, fam.flow_function(), pv, qv).value);
  };
  std::vector<double> pred(n);
  parallel_for(0, n, resolve_threads(fam.options().threads), [&](std::size_t c) {
    pred[c] = mq[c] * jac(-sp.half_length + (c + 0.5) * h);
  });
  std::vector<double> eta_hat(n + 1, 0.0);
  for (int i = n / 2; i < n; ++i) eta_hat[i + 1] = eta_hat[i] + pred[i];
  for (int i = n / 2; i > 0; --i) eta_hat[i - 1] = eta_hat[i] - pred[i - 1];

  ChartTransition out;
  const int stride = std::max(1, n / std::max(samples, 1));
  const double cell_y = 2.0 / n;
  for (int i = stride / 2; i <= n; i += stride) {
    double y = ep.knot(i);
    double yy = ep.inverse(eta_hat[i]);
    out.max_residual_cells = std::max(out.max_residual_cells, std::abs(yy - y) / cell_y);
    // derivative of eta_p o eta_q^-1 over a block of cells around the knot
    int b0 = std::max(0, i - 4), b1 = std::min(n, i + 4);
    double dp = ep.eta[b1] - ep.eta[b0], dj = 0.0;
    for (int c = b0; c < b1; ++c) dj += pred[c];
    out.max_derivative_rel = std::max(out.max_derivative_rel, std::abs(dp / dj - 1.0));
    ++out.samples;
  }
  return out;
}

std::optional<double> chart_overlap_residual(const LeafMeasureFamily& fam, const FlowPoint& p,
                                             int other_piece) {
  const double ell = fam.options().half_length, h = fam.cell();
  auto forced = fam.forced_chart(p, other_piece, -ell, ell, fam.partition().delta0());
  if (!forced) return std::nullopt;
  // whole cells inside the forced span
  long c0 = static_cast<long>(std::ceil(forced->v0 / h)), c1 = static_cast<long>(std::floor(forced->v1 / h));
  if (c1 - c0 < 2) return std::nullopt;
  auto natural = fam.charts(p, c0 * h, c1 * h);
  std::vector<ChartSpan> one{*forced};
  const std::size_t n = static_cast<std::size_t>(c1 - c0);
  std::vector<double> a(n), b(n);
  parallel_for(0, n, resolve_threads(fam.options().threads), [&](std::size_t i) {
    double v0 = (c0 + static_cast<long>(i)) * h;
    a[i] = fam.nu_in(p, natural, v0, v0 + h).mass;
    b[i] = fam.nu_in(p, one, v0, v0 + h).mass;
  });
  std::vector<double> ca(n + 1, 0.0), cb(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    ca[i + 1] = ca[i] + a[i];
    cb[i + 1] = cb[i] + b[i];
  }
  // position of cb[i] on the natural cumulative scale, in cells
  double worst = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    auto it = std::upper_bound(ca.begin(), ca.end(), cb[i]);
    std::size_t j = std::clamp<std::size_t>(it - ca.begin(), 1, n) - 1;
    double f = (cb[i] - ca[j]) / (ca[j + 1] - ca[j]);
    worst = std::max(worst, std::abs(static_cast<double>(j) + f - static_cast<double>(i)));
  }
  return worst;
}

DeformedCocycle deformed_cocycle_check(const LeafMeasureFamily& fam, const FlowPoint& p, double t,
                                       const std::vector<double>& windows) {
  const auto& sys = fam.system();
  FlowImage img = flow_image(sys, p, t);
  const double stretch = std::pow(sys.base().lambda_u(), img.returns);
  LeafSegment s0 = fam.segment(p), s1 = fam.segment(img.point);
  auto m0 = fam.masses(s0);
  Reparametrization e0 = reparametrize(fam, s0, m0);
  Reparametrization e1 = reparametrize(fam, s1);
  std::vector<double> cs, ls;
  const int n = s0.N;
  for (double a : windows) {
    if (a * stretch > 1.0) throw Error("deformed_cocycle_check: orbit leaves the registered segment");
    double num = e1.eval(a * stretch) - e1.eval(-a * stretch);
    double den = e0.eval(a) - e0.eval(-a);
    ls.push_back(std::log(num / den));
    // nu-centroid of the window in y units
    int i0 = static_cast<int>(std::lround((1.0 - a) * 0.5 * n));
    int i1 = static_cast<int>(std::lround((1.0 + a) * 0.5 * n));
    double mm = 0.0, mom = 0.0;
    for (int c = i0; c < i1; ++c) {
      mm += m0[c];
      mom += m0[c] * (e0.knot(c) + 1.0 / n);
    }
    cs.push_back(mom / mm);
  }
  WindowEstimate est = extrapolate(windows, cs, ls, 1.0);
  DeformedCocycle out;
  out.alpha_check_perp = est.value;
  out.alpha = coding::cocycles(sys, p, t).alpha;
  out.minus_rho_alpha = -fam.rho() * out.alpha;
  out.residual = std::abs(out.alpha_check_perp - out.minus_rho_alpha);
  return out;
}

RhoOneReport rho_equals_one_check(const SuspensionSystem& sys, const MarkovPartition& mp, int depth,
                                  const coding::TrigPoly& perturbation,
                                  const thermo::RhoOptions& opt) {
  RealizeOptions ro;
  ro.depth = depth;
  ro.rho = opt;
  // resolution is irrelevant here; pick the coarsest admissible grid
  const double cyl = max_unstable_width(mp) * std::pow(mp.base().lambda_u(), -(depth - 1));
  ro.N = 2 * static_cast<int>(std::ceil(ro.half_length / cyl));
  FlowFunction f = FlowFunction::natural(sys);
  LeafMeasureFamily fam(sys, mp, f, ro);

  RhoOneReport rep;
  rep.rho = fam.rho();
  rep.deviation = std::abs(rep.rho - 1.0);

  coding::TrigPoly w = sys.weight();
  w.c += perturbation.c;
  w.terms.insert(w.terms.end(), perturbation.terms.begin(), perturbation.terms.end());
  SuspensionSystem sys2(sys.base(), sys.roof(), w, sys.profile());
  auto fA2 = coding::f_A_potential(sys2, mp, FlowFunction::natural(sys2), depth);
  rep.rho_perturbed = thermo::find_rho(mp.transition(), fA2, opt).rho;
  rep.drift = std::abs(rep.rho_perturbed - rep.rho);

  FlowFunction f2 = f;
  f2.c0 *= 2.0;
  f2.kappa *= 2.0;
  f2.G.c *= 2.0;
  for (auto& tm : f2.G.terms) tm.a *= 2.0, tm.b *= 2.0;
  f2.W.c *= 2.0;
  for (auto& tm : f2.W.terms) tm.a *= 2.0, tm.b *= 2.0;
  auto fA3 = coding::f_A_potential(sys, mp, f2, depth);
  rep.rho_scaled = thermo::find_rho(mp.transition(), fA3, opt).rho;
  return rep;
}

}  // namespace thermoflow::realization
