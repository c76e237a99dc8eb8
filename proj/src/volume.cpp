#include "thermoflow/volume.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "thermoflow/parallel.hpp"

namespace thermoflow::volume {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_same(const ScalarField& a, const ScalarField& b) {
  if (a.dim != b.dim || a.m != b.m) throw Error("grid sizes do not match");
}

void require_same(const VectorField& x, const ScalarField& h) {
  if (x.dim() != h.dim) throw Error("vector field and scalar field have different dimensions");
  for (const auto& c : x.c) require_same(c, h);
}

std::size_t stride(const ScalarField& f, int axis) {
  std::size_t s = 1;
  for (int a = 0; a < axis; ++a) s *= f.m;
  return s;
}

// Visits every node as (index, neighbour offsets along axis) in parallel
// over the slowest axis.
template <class Body>
void for_nodes(const ScalarField& f, Body&& body) {
  const std::size_t m = f.m;
  const std::size_t outer = m;
  const std::size_t inner = f.size() / m;
  parallel_for(0, outer, resolve_threads(0), [&](std::size_t o) {
    for (std::size_t i = 0; i < inner; ++i) body(o * inner + i);
  });
}

// index of the node shifted by +-1 along axis, periodic
inline std::size_t shifted(std::size_t idx, std::size_t st, std::size_t m, int dir) {
  std::size_t coord = (idx / st) % m;
  if (dir > 0) return coord + 1 == m ? idx + st - m * st : idx + st;
  return coord == 0 ? idx + (m - 1) * st : idx - st;
}

std::vector<double> bump_weights(double bandwidth, int m) {
  const double hx = 1.0 / m;
  const int r = static_cast<int>(std::floor(bandwidth / hx));
  if (r < 2) throw Error("mollify: bandwidth below two grid cells");
  std::vector<double> w(2 * r + 1, 0.0);
  for (int j = -r; j <= r; ++j) {
    double t = j * hx / bandwidth;
    w[j + r] = std::abs(t) < 1.0 ? std::exp(-1.0 / (1.0 - t * t)) : 0.0;
  }
  double s = pairwise_sum(w.data(), w.size());
  for (double& x : w) x /= s;
  return w;
}

}  // namespace

ScalarField ScalarField::zeros(int dim, int m) {
  if (dim != 2 && dim != 3) throw Error("grid dimension must be 2 or 3");
  if (m < 4) throw Error("grid needs at least 4 nodes per axis");
  ScalarField f;
  f.dim = dim;
  f.m = m;
  std::size_t n = 1;
  for (int a = 0; a < dim; ++a) n *= m;
  f.v.assign(n, 0.0);
  return f;
}

ScalarField ScalarField::sample(int dim, int m, const std::function<double(const double*)>& fn) {
  ScalarField f = zeros(dim, m);
  for (std::size_t i = 0; i < f.size(); ++i) {
    double x[3] = {0, 0, 0};
    std::size_t r = i;
    for (int a = 0; a < dim; ++a) {
      x[a] = static_cast<double>(r % m) / m;
      r /= m;
    }
    f.v[i] = fn(x);
  }
  for (double x : f.v)
    if (!std::isfinite(x)) throw Error("sampled field is not finite");
  return f;
}

VectorField VectorField::zeros(int dim, int m) {
  VectorField x;
  x.c.assign(dim, ScalarField::zeros(dim, m));
  return x;
}

double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  std::size_t h = n / 2;
  return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

double sup_norm(const ScalarField& f) {
  double s = 0.0;
  for (double x : f.v) s = std::max(s, std::abs(x));
  return s;
}

double sup_norm(const VectorField& x) {
  double s = 0.0;
  for (const auto& c : x.c) s = std::max(s, sup_norm(c));
  return s;
}

double c1_norm(const VectorField& x) {
  double d = 0.0;
  for (const auto& c : x.c)
    for (int a = 0; a < x.dim(); ++a) d = std::max(d, sup_norm(partial(c, a)));
  return sup_norm(x) + d;
}

VectorField difference(const VectorField& a, const VectorField& b) {
  if (a.dim() != b.dim()) throw Error("vector fields have different dimensions");
  VectorField d = a;
  for (int i = 0; i < a.dim(); ++i) {
    require_same(a.c[i], b.c[i]);
    for (std::size_t j = 0; j < d.c[i].size(); ++j) d.c[i].v[j] -= b.c[i].v[j];
  }
  return d;
}

ScalarField partial(const ScalarField& f, int axis) {
  if (axis < 0 || axis >= f.dim) throw Error("partial: axis out of range");
  ScalarField d = ScalarField::zeros(f.dim, f.m);
  const std::size_t st = stride(f, axis), m = f.m;
  const double inv = 0.5 * m;
  for_nodes(f, [&](std::size_t i) {
    d.v[i] = (f.v[shifted(i, st, m, +1)] - f.v[shifted(i, st, m, -1)]) * inv;
  });
  return d;
}

ScalarField divergence(const VectorField& x) {
  if (x.c.empty()) throw Error("divergence: empty vector field");
  ScalarField out = ScalarField::zeros(x.c[0].dim, x.m());
  if (x.dim() != out.dim) throw Error("divergence: component count differs from grid dimension");
  for (int a = 0; a < x.dim(); ++a) {
    require_same(x.c[a], out);
    ScalarField d = partial(x.c[a], a);
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += d.v[i];
  }
  return out;
}

ScalarField divergence(const VectorField& x, const ScalarField& h) {
  require_same(x, h);
  ScalarField out = divergence(x);
  const double n = h.dim;
  for (int a = 0; a < x.dim(); ++a) {
    ScalarField dh = partial(h, a);
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += n * x.c[a].v[i] * dh.v[i];
  }
  return out;
}

ScalarField weighted_divergence(const VectorField& x, const ScalarField& h) {
  require_same(x, h);
  const double n = h.dim;
  VectorField wx = x;
  for (auto& c : wx.c)
    for (std::size_t i = 0; i < c.size(); ++i) c.v[i] *= std::exp(n * h.v[i]);
  ScalarField out = divergence(wx);
  for (std::size_t i = 0; i < out.size(); ++i) out.v[i] *= std::exp(-n * h.v[i]);
  return out;
}

VectorField weighted_gradient(const ScalarField& f, const ScalarField& h) {
  require_same(f, h);
  VectorField g;
  for (int a = 0; a < f.dim; ++a) {
    ScalarField d = partial(f, a);
    for (std::size_t i = 0; i < d.size(); ++i) d.v[i] *= std::exp(-2.0 * h.v[i]);
    g.c.push_back(std::move(d));
  }
  return g;
}

ScalarField weighted_laplacian(const ScalarField& f, const ScalarField& h) {
  return weighted_divergence(weighted_gradient(f, h), h);
}

double weighted_inner(const ScalarField& f, const ScalarField& g, const ScalarField& h) {
  require_same(f, g);
  require_same(f, h);
  std::vector<double> t(f.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::exp(f.dim * h.v[i]) * f.v[i] * g.v[i];
  return pairwise_sum(t.data(), t.size()) / static_cast<double>(t.size());
}

ScalarField mollify(const ScalarField& f, double bandwidth) {
  std::vector<double> w = bump_weights(bandwidth, f.m);
  const int r = static_cast<int>(w.size() / 2);
  ScalarField cur = f;
  const std::size_t m = f.m;
  for (int a = 0; a < f.dim; ++a) {
    ScalarField next = ScalarField::zeros(f.dim, f.m);
    const std::size_t st = stride(f, a);
    for_nodes(f, [&](std::size_t i) {
      std::size_t coord = (i / st) % m;
      std::size_t base = i - coord * st;
      double s = 0.0;
      for (int j = -r; j <= r; ++j) {
        long long c = (static_cast<long long>(coord) + j) % static_cast<long long>(m);
        if (c < 0) c += static_cast<long long>(m);
        s += w[j + r] * cur.v[base + static_cast<std::size_t>(c) * st];
      }
      next.v[i] = s;
    });
    cur = std::move(next);
  }
  return cur;
}

VectorField mollify(const VectorField& x, double bandwidth) {
  VectorField y;
  for (const auto& c : x.c) y.c.push_back(mollify(c, bandwidth));
  return y;
}

PoissonResult poisson_correct(const VectorField& y, const ScalarField& h, const PoissonOptions& opt) {
  require_same(y, h);
  const int dim = h.dim;
  const std::size_t n = h.size();
  std::vector<double> omega(n), inv_omega(n);
  for (std::size_t i = 0; i < n; ++i) {
    omega[i] = std::exp(dim * h.v[i]);
    inv_omega[i] = 1.0 / omega[i];
  }
  // A f = -sum_i d_i(omega e^{-2h} d_i f), symmetric and semidefinite; the
  // divergence of Y + grad_w f is omega^-1 (c - A f) with c = sum d_i(omega Y_i)
  ScalarField coef = h;
  for (std::size_t i = 0; i < n; ++i) coef.v[i] = std::exp((dim - 2) * h.v[i]);
  auto apply = [&](const ScalarField& f) {
    VectorField g;
    for (int a = 0; a < dim; ++a) {
      ScalarField d = partial(f, a);
      for (std::size_t i = 0; i < n; ++i) d.v[i] *= coef.v[i];
      g.c.push_back(std::move(d));
    }
    ScalarField out = divergence(g);
    for (double& v : out.v) v = -v;
    return out;
  };
  VectorField wy = y;
  for (auto& c : wy.c)
    for (std::size_t i = 0; i < n; ++i) c.v[i] *= omega[i];
  ScalarField c = divergence(wy);

  // The centred stencil decouples the 2^dim parity sublattices; remove the
  // mean of c on each (zero up to rounding, since c is a discrete divergence).
  PoissonResult res;
  {
    const std::size_t m = h.m;
    const int classes = 1 << dim;
    std::vector<std::vector<double>> vals(classes);
    auto cls = [&](std::size_t i) {
      int k = 0;
      std::size_t r = i;
      for (int a = 0; a < dim; ++a) {
        k |= static_cast<int>((r % m) & 1u) << a;
        r /= m;
      }
      return k;
    };
    for (std::size_t i = 0; i < n; ++i) vals[cls(i)].push_back(c.v[i]);
    std::vector<double> mean(classes);
    for (int k = 0; k < classes; ++k) {
      mean[k] = vals[k].empty() ? 0.0 : pairwise_sum(vals[k].data(), vals[k].size()) / vals[k].size();
      res.projected = std::max(res.projected, std::abs(mean[k]));
    }
    for (std::size_t i = 0; i < n; ++i) c.v[i] -= mean[cls(i)];
  }

  auto dot = [&](const ScalarField& a, const ScalarField& b) {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = a.v[i] * b.v[i];
    return pairwise_sum(t.data(), n);
  };
  auto div_sup = [&](const ScalarField& r) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s = std::max(s, std::abs(r.v[i] * inv_omega[i]));
    return s;
  };
  ScalarField f = ScalarField::zeros(dim, h.m);
  ScalarField r = c, p = c;
  double rr = dot(r, r);
  int it = 0;
  double sup = div_sup(r);
  while (sup > opt.tol && it < opt.max_iters) {
    ScalarField ap = apply(p);
    double pap = dot(p, ap);
    if (!(pap > 0.0)) break;
    double alpha = rr / pap;
    for (std::size_t i = 0; i < n; ++i) {
      f.v[i] += alpha * p.v[i];
      r.v[i] -= alpha * ap.v[i];
    }
    double rr_new = dot(r, r);
    double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < n; ++i) p.v[i] = r.v[i] + beta * p.v[i];
    ++it;
    // the recursive residual drifts; refresh it now and then
    if (it % 50 == 0) {
      ScalarField af = apply(f);
      for (std::size_t i = 0; i < n; ++i) r.v[i] = c.v[i] - af.v[i];
      rr = dot(r, r);
    }
    sup = div_sup(r);
  }
  res.iterations = it;
  res.f = f;
  VectorField g = weighted_gradient(f, h);
  res.x = y;
  for (int a = 0; a < dim; ++a)
    for (std::size_t i = 0; i < n; ++i) res.x.c[a].v[i] += g.c[a].v[i];
  res.residual = sup_norm(weighted_divergence(res.x, h));
  if (res.residual > opt.tol * 100.0 || sup > opt.tol)
    throw Error("poisson_correct: conjugate gradient did not converge within " +
                std::to_string(opt.max_iters) + " iterations");
  return res;
}

DemoReport invariant_volume_demo(const VectorField& x0, const ScalarField& h0, const std::vector<int>& ks,
                                 const PoissonOptions& opt, double consistency_tol) {
  require_same(x0, h0);
  DemoReport rep;
  rep.consistency = sup_norm(weighted_divergence(x0, h0));
  if (rep.consistency > consistency_tol * std::max(1.0, sup_norm(x0)))
    throw Error("invariant_volume_demo: h0 is not an invariant density of X0 (residual " +
                std::to_string(rep.consistency) + ")");
  for (int k : ks) {
    if (k <= 0) throw Error("invariant_volume_demo: k must be positive");
    DemoRow row;
    row.k = k;
    row.bandwidth = 1.0 / k;
    ScalarField hk = mollify(h0, row.bandwidth);
    VectorField yk = mollify(x0, row.bandwidth);
    row.before = sup_norm(weighted_divergence(yk, hk));
    PoissonResult pr = poisson_correct(yk, hk, opt);
    row.divergence = pr.residual;
    row.projected = pr.projected;
    row.iterations = pr.iterations;
    row.c1_distance = c1_norm(difference(pr.x, x0));
    rep.rows.push_back(row);
  }
  return rep;
}

AnalyticPair analytic_pair(int dim, int m) {
  if (dim != 2 && dim != 3) throw Error("analytic_pair: dimension must be 2 or 3");
  const double tp = kTwoPi, e = 0.1;
  using V3 = std::array<double, 3>;
  // h0 and its gradient
  auto h = [&](const double* x) {
    double v = 0.2 * std::sin(tp * x[0]) + 0.1 * std::cos(tp * x[1]);
    if (dim == 3) v += 0.15 * std::sin(tp * x[2]);
    return v;
  };
  auto grad_h = [&](const double* x) {
    V3 g{0.2 * tp * std::cos(tp * x[0]), -0.1 * tp * std::sin(tp * x[1]), 0.0};
    if (dim == 3) g[2] = 0.15 * tp * std::cos(tp * x[2]);
    return g;
  };
  // divergence-free V and the diagonal of its Jacobian
  auto vel = [&](const double* x) -> V3 {
    double sx = std::sin(tp * x[0]), cx = std::cos(tp * x[0]);
    double sy = std::sin(tp * x[1]), cy = std::cos(tp * x[1]);
    if (dim == 2) return {1.0 + e * tp * sx * cy, 0.5 - e * tp * cx * sy, 0.0};
    double sz = std::sin(tp * x[2]), cz = std::cos(tp * x[2]);
    return {1.0 + e * tp * sx * cy, 0.5 + e * tp * sy * cz - e * tp * cx * sy, 0.25 - e * tp * cy * sz};
  };
  auto vel_diag = [&](const double* x) -> V3 {
    double cx = std::cos(tp * x[0]), cy = std::cos(tp * x[1]);
    double k = e * tp * tp;
    if (dim == 2) return {k * cx * cy, -k * cx * cy, 0.0};
    double cz = std::cos(tp * x[2]);
    return {k * cx * cy, k * cy * cz - k * cx * cy, -k * cy * cz};
  };
  AnalyticPair out;
  out.h0 = ScalarField::sample(dim, m, h);
  for (int a = 0; a < dim; ++a)
    out.x0.c.push_back(ScalarField::sample(dim, m, [&](const double* x) {
      return std::exp(-dim * h(x)) * vel(x)[a];
    }));
  // dim X0.grad h0 + div X0 with exact derivatives:
  // div X0 = e^{-dim h}(div V - dim grad h.V)
  ScalarField res = ScalarField::sample(dim, m, [&](const double* x) {
    V3 v = vel(x), g = grad_h(x), d = vel_diag(x);
    double w = std::exp(-dim * h(x));
    double xh = 0.0, divv = 0.0;
    for (int a = 0; a < dim; ++a) {
      xh += w * v[a] * g[a];
      divv += d[a];
    }
    double divx = w * (divv - dim * (v[0] * g[0] + v[1] * g[1] + v[2] * g[2]));
    return dim * xh + divx;
  });
  out.symbolic_residual = sup_norm(res);
  return out;
}

}  // namespace thermoflow::volume
