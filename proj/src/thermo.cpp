#include "thermoflow/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace thermoflow::thermo {

using sft::Error;
using sft::WordIndex;

double Potential::at(const int* first) const {
  int i = index->find(first);
  if (i < 0) throw Error("potential evaluated on a word outside its table");
  return values[i];
}

double Potential::sup() const { return *std::max_element(values.begin(), values.end()); }
double Potential::inf() const { return *std::min_element(values.begin(), values.end()); }

Potential Potential::constant(const TransitionMatrix& a, int depth, double c) {
  Potential g;
  g.index = std::make_shared<WordIndex>(a, depth);
  g.values.assign(g.index->size(), c);
  return g;
}

Potential Potential::from_function(const TransitionMatrix& a, int depth,
                                   const std::function<double(const Word&)>& fn) {
  Potential g;
  g.index = std::make_shared<WordIndex>(a, depth);
  g.values.resize(g.index->size());
  for (int i = 0; i < g.size(); ++i) g.values[i] = fn(g.index->word(i));
  return g;
}

Potential scaled(const Potential& g, double c) {
  Potential out = g;
  for (double& v : out.values) v *= c;
  return out;
}

Potential sum(const Potential& g1, const Potential& g2) {
  if (g1.depth() != g2.depth()) throw Error("sum: potentials of different depth");
  Potential out = g1;
  for (int i = 0; i < out.size(); ++i) out.values[i] += g2.values[i];
  return out;
}

Potential lift(const TransitionMatrix& a, const Potential& g, int depth) {
  if (depth < g.depth()) throw Error("lift: target depth below potential depth");
  if (depth == g.depth()) return g;
  return Potential::from_function(a, depth, [&](const Word& w) { return g.at(w.data()); });
}

Potential add_coboundary(const TransitionMatrix& a, const Potential& g,
                         const std::vector<double>& phi) {
  const int k = g.depth();
  if (k < 2) throw Error("add_coboundary: potential depth must be at least 2");
  WordIndex sub(a, k - 1);
  if (static_cast<int>(phi.size()) != sub.size())
    throw Error("add_coboundary: phi table size mismatch");
  Potential out = g;
  for (int i = 0; i < g.size(); ++i) {
    const Word& w = g.index->word(i);
    int head = sub.find(w.data());
    int tail = sub.find(w.data() + 1);
    if (head < 0 || tail < 0) throw Error("add_coboundary: sub-word missing");
    out.values[i] += phi[tail] - phi[head];
  }
  return out;
}

std::string method_name(Method m) {
  return m == Method::spectral ? "spectral" : "partition_sum";
}

namespace {

// Transfer operator on depth-k words v: (L x)(v) = sum over children c = i.v(0..k-2)
// of exp(g(c)) x(c). parents is the reverse relation.
struct TransferGraph {
  std::vector<std::vector<int>> children;
  std::vector<std::vector<int>> parents;

  TransferGraph(const TransitionMatrix& a, const WordIndex& idx) {
    const int n = idx.size();
    const int k = idx.depth();
    children.assign(n, {});
    parents.assign(n, {});
    Word c(k);
    for (int v = 0; v < n; ++v) {
      const Word& w = idx.word(v);
      for (int i : a.predecessors(w[0])) {
        c[0] = i;
        for (int t = 1; t < k; ++t) c[t] = w[t - 1];
        int ci = idx.find(c);
        if (ci < 0) continue;
        children[v].push_back(ci);
        parents[ci].push_back(v);
      }
    }
  }
};

struct PowerResult {
  double lambda = 0.0;  // of the shifted matrix exp(g - shift)
  double lo = 0.0, hi = 0.0;
  std::vector<double> vec;
  int iters = 0;
};

// Collatz-Wielandt bracketed power iteration; transpose selects the left
// eigenvector.
PowerResult power_iteration(const TransferGraph& tg, const std::vector<double>& w, bool transpose,
                            const SpectralOptions& opt) {
  const size_t n = w.size();
  std::vector<double> x(n, 1.0), y(n);
  PowerResult r;
  for (int it = 1; it <= opt.max_iters; ++it) {
    if (!transpose) {
      for (size_t v = 0; v < n; ++v) {
        double s = 0.0;
        for (int c : tg.children[v]) s += w[c] * x[c];
        y[v] = s;
      }
    } else {
      for (size_t c = 0; c < n; ++c) {
        double s = 0.0;
        for (int v : tg.parents[c]) s += x[v];
        y[c] = w[c] * s;
      }
    }
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0, mx = 0.0;
    for (size_t v = 0; v < n; ++v) {
      double q = y[v] / x[v];
      lo = std::min(lo, q);
      hi = std::max(hi, q);
      mx = std::max(mx, y[v]);
    }
    for (size_t v = 0; v < n; ++v) x[v] = y[v] / mx;
    r.lo = lo;
    r.hi = hi;
    r.iters = it;
    if (hi - lo <= opt.tol * hi) break;
  }
  if (r.hi - r.lo > opt.tol * r.hi)
    throw Error("power iteration did not converge within " + std::to_string(opt.max_iters) +
                " iterations");
  r.lambda = 0.5 * (r.lo + r.hi);
  r.vec = std::move(x);
  return r;
}

void require_mixing(const TransitionMatrix& a) {
  if (!sft::is_mixing(a, sft::wielandt_bound(a)))
    throw Error("transition matrix is not mixing");
}

std::vector<double> shifted_weights(const Potential& g, double shift) {
  std::vector<double> w(g.size());
  for (int i = 0; i < g.size(); ++i) w[i] = std::exp(g.values[i] - shift);
  return w;
}

}  // namespace

double log_partition_sum(const TransitionMatrix& a, const Potential& g, int m, double budget) {
  const int k = g.depth();
  if (m < k) throw Error("partition sum: m must be at least the potential depth");
  const WordIndex& idx = *g.index;
  const int n = idx.size();
  double work = static_cast<double>(m + k - 1) * n * a.size();
  if (work > budget)
    throw Error("partition sum: depth " + std::to_string(m + k - 1) +
                " exceeds the enumeration budget");
  TransferGraph tg(a, idx);
  // tail: T(v) = max over continuations t of the k-1 windows that start
  // inside the last k-1 symbols of v
  std::vector<double> tail(n, 0.0);
  if (k >= 2) {
    std::vector<double> val(g.values), next(n);
    for (int level = k - 3; level >= 0; --level) {
      for (int v = 0; v < n; ++v) {
        double best = -std::numeric_limits<double>::infinity();
        for (int p : tg.parents[v]) best = std::max(best, val[p]);
        next[v] = g.values[v] + best;
      }
      val.swap(next);
    }
    for (int v = 0; v < n; ++v) {
      double best = -std::numeric_limits<double>::infinity();
      for (int p : tg.parents[v]) best = std::max(best, val[p]);
      tail[v] = best;
    }
  }
  const double shift = g.sup();
  std::vector<double> f(n), nf(n);
  double log_scale = 0.0;
  for (int v = 0; v < n; ++v) f[v] = std::exp(g.values[v] - shift);
  log_scale += shift;
  for (int step = 0; step < m - k; ++step) {
    double mx = 0.0;
    for (int v = 0; v < n; ++v) {
      double s = 0.0;
      for (int c : tg.children[v]) s += f[c];
      nf[v] = s * std::exp(g.values[v] - shift);
      mx = std::max(mx, nf[v]);
    }
    for (int v = 0; v < n; ++v) f[v] = nf[v] / mx;
    log_scale += shift + std::log(mx);
  }
  double tmax = k >= 2 ? *std::max_element(tail.begin(), tail.end()) : 0.0;
  double z = 0.0;
  for (int v = 0; v < n; ++v) z += f[v] * std::exp(tail[v] - tmax);
  return log_scale + tmax + std::log(z);
}

PressureEstimate pressure_partition_sum(const TransitionMatrix& a, const Potential& g, int m,
                                        double budget) {
  double am = log_partition_sum(a, g, m, budget);
  double a2m = log_partition_sum(a, g, 2 * m, budget);
  PressureEstimate e;
  e.method = Method::partition_sum;
  e.m = m;
  e.value = am / m;
  // a_m is subadditive, so a_m/m decreases to P; the defect against 2m
  // estimates the remaining O(1/m) gap
  double defect = std::max(0.0, am / m - a2m / (2.0 * m));
  e.error_bound = 3.0 * defect + 1e-12 * (1.0 + std::abs(e.value));
  return e;
}

PressureEstimate transfer_spectral_pressure(const TransitionMatrix& a, const Potential& g,
                                            const SpectralOptions& opt) {
  require_mixing(a);
  TransferGraph tg(a, *g.index);
  double shift = g.sup();
  auto w = shifted_weights(g, shift);
  auto r = power_iteration(tg, w, false, opt);
  PressureEstimate e;
  e.method = Method::spectral;
  e.m = g.depth();
  e.value = std::log(r.lambda) + shift;
  e.error_bound = std::log(r.hi / r.lo);
  e.iterations = r.iters;
  return e;
}

double min_birkhoff_sum(const TransitionMatrix& a, const Potential& g, int m) {
  if (m < 1) throw Error("min_birkhoff_sum: m must be positive");
  const int n = g.size();
  TransferGraph tg(a, *g.index);
  std::vector<double> v(g.values), nv(n);
  for (int step = 1; step < m; ++step) {
    for (int s = 0; s < n; ++s) {
      double best = std::numeric_limits<double>::infinity();
      for (int c : tg.children[s]) best = std::min(best, v[c]);
      nv[s] = g.values[s] + best;
    }
    v.swap(nv);
  }
  return *std::min_element(v.begin(), v.end());
}

RhoResult find_rho(const TransitionMatrix& a, const Potential& g, const RhoOptions& opt) {
  RhoResult res;
  int m_pos = 0;
  double c_m = 0.0;
  for (int m = 1; m <= opt.m_budget; ++m) {
    double c = min_birkhoff_sum(a, g, m);
    if (c > 0.0) {
      m_pos = m;
      c_m = c;
      break;
    }
  }
  if (m_pos == 0) throw Error("not eventually positive: Birkhoff sums of g are not positive within m <= " +
                              std::to_string(opt.m_budget));
  res.m_positive = m_pos;
  auto P = [&](double rho) {
    ++res.evaluations;
    return transfer_spectral_pressure(a, scaled(g, -rho), opt.spectral).value;
  };
  double p0 = P(0.0);
  if (!(p0 > 0.0)) throw Error("find_rho: P(0) is not positive, no positive root");
  double lo = p0 / g.sup();
  double hi = m_pos * p0 / c_m;
  double plo = P(lo), phi = P(hi);
  // the bounds are exact up to eigen-solver error; widen slightly if needed
  for (int i = 0; i < 60 && plo < 0.0; ++i) {
    lo *= 0.5;
    plo = P(lo);
  }
  for (int i = 0; i < 60 && phi > 0.0; ++i) {
    hi *= 2.0;
    phi = P(hi);
  }
  if (plo < 0.0 || phi > 0.0) throw Error("find_rho: bracket not found");
  res.lo = lo;
  res.hi = hi;
  // a constant g gives lo == hi and nothing to check
  if (opt.monotone_grid > 1 && hi - lo > 1e-12 * hi) {
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= opt.monotone_grid; ++i) {
      double r = lo + (hi - lo) * i / opt.monotone_grid;
      double v = P(r);
      if (!(v < prev)) throw Error("find_rho: rho -> P(-rho g) not strictly decreasing on bracket");
      prev = v;
    }
  }
  double l = lo, h = hi, mid = 0.5 * (lo + hi), pm = P(mid);
  for (int it = 0; it < opt.max_bisections && std::abs(pm) > opt.tol; ++it) {
    if (pm > 0.0)
      l = mid;
    else
      h = mid;
    double nm = 0.5 * (l + h);
    if (nm == mid) break;
    mid = nm;
    pm = P(mid);
  }
  if (std::abs(pm) > opt.tol) throw Error("find_rho: bisection did not reach tolerance");
  res.rho = mid;
  res.residual = pm;
  return res;
}

double GibbsData::cylinder_mass(const Word& w) const {
  const int d = static_cast<int>(w.size());
  if (d == 0) return 1.0;
  if (d <= static_cast<int>(mu.size()) && mu_index[d - 1]) {
    int i = mu_index[d - 1]->find(w);
    return i < 0 ? 0.0 : mu[d - 1][i];
  }
  double m = 1.0;
  for (int j = 0; j + k1 < d; ++j) {
    int gi = g.index->find(w.data() + j);
    if (gi < 0) return 0.0;
    m *= std::exp(g.values[gi] - pressure);
  }
  int li = mu_index[k1 - 1]->find(w.data() + (d - k1));
  return li < 0 ? 0.0 : m * mu[k1 - 1][li];
}

double GibbsData::conditional(int last, int j) const {
  const Word& s = mu_index[k1 - 1]->word(last);
  Word block;
  if (k >= 2) {
    block = s;
    block.push_back(j);
  } else {
    block = {s[0]};
  }
  int gi = g.index->find(block);
  if (gi < 0) return 0.0;
  Word nxt(s.begin() + 1, s.end());
  nxt.push_back(j);
  int ni = mu_index[k1 - 1]->find(nxt);
  if (ni < 0) return 0.0;
  return std::exp(g.values[gi] - pressure) * mu[k1 - 1][ni] / mu[k1 - 1][last];
}

double GibbsData::h_mu(const Word& w) const {
  const int d = static_cast<int>(w.size());
  if (d >= k) {
    int hi = states->find(w.data());
    return hi < 0 ? 0.0 : h[hi] * cylinder_mass(w);
  }
  double s = 0.0;
  for (int v = 0; v < states->size(); ++v) {
    const Word& sw = states->word(v);
    if (std::equal(w.begin(), w.end(), sw.begin())) s += h[v] * mu[k - 1][v];
  }
  return s;
}

GibbsData gibbs(const TransitionMatrix& a, const Potential& g, int depth,
                const SpectralOptions& opt) {
  require_mixing(a);
  GibbsData out;
  out.g = g;
  out.k = g.depth();
  out.k1 = std::max(out.k - 1, 1);
  out.states = g.index;
  TransferGraph tg(a, *g.index);
  double shift = g.sup();
  auto w = shifted_weights(g, shift);
  auto right = power_iteration(tg, w, false, opt);
  auto left = power_iteration(tg, w, true, opt);
  out.pressure = std::log(right.lambda) + shift;
  std::vector<double> muk = left.vec;
  double total = 0.0;
  for (double v : muk) total += v;
  for (double& v : muk) v /= total;
  double norm = 0.0;
  for (size_t v = 0; v < muk.size(); ++v) norm += muk[v] * right.vec[v];
  out.h = right.vec;
  for (double& v : out.h) v /= norm;

  const int top = std::max(depth, out.k);
  out.mu.resize(top);
  out.mu_index.resize(top);
  out.mu_index[out.k - 1] = g.index;
  out.mu[out.k - 1] = muk;
  for (int d = out.k - 1; d >= 1; --d) {
    auto idx = std::make_shared<WordIndex>(a, d);
    std::vector<double> t(idx->size(), 0.0);
    const auto& upper = *out.mu_index[d];
    for (int i = 0; i < upper.size(); ++i) {
      int j = idx->find(upper.word(i).data());
      t[j] += out.mu[d][i];
    }
    out.mu_index[d - 1] = idx;
    out.mu[d - 1] = std::move(t);
  }
  for (int d = out.k + 1; d <= top; ++d) {
    auto idx = std::make_shared<WordIndex>(a, d);
    std::vector<double> t(idx->size());
    for (int i = 0; i < idx->size(); ++i) t[i] = out.cylinder_mass(idx->word(i));
    out.mu_index[d - 1] = idx;
    out.mu[d - 1] = std::move(t);
  }
  return out;
}

IterateSystem iterate_system(const TransitionMatrix& a, const Potential& g, int m) {
  if (m < 1) throw Error("iterate_system: m must be positive");
  IterateSystem s;
  s.blocks = sft::enumerate_words(a, m);
  const int nb = static_cast<int>(s.blocks.size());
  std::vector<std::vector<int>> rows(nb, std::vector<int>(nb, 0));
  for (int cur = 0; cur < nb; ++cur)
    for (int next = 0; next < nb; ++next)
      if (a.allows(s.blocks[next].front(), s.blocks[cur].back())) rows[next][cur] = 1;
  s.a = TransitionMatrix(rows);
  const int k = g.depth();
  const int bd = 1 + (k - 1 + m - 1) / m;
  s.g = Potential::from_function(s.a, bd, [&](const Word& bw) {
    Word seq;
    for (int b : bw) seq.insert(seq.end(), s.blocks[b].begin(), s.blocks[b].end());
    double sum = 0.0;
    for (int j = 0; j < m; ++j) sum += g.at(seq.data() + j);
    return sum;
  });
  return s;
}

Potential read_potential_csv(const TransitionMatrix& a, std::istream& in) {
  std::vector<std::pair<Word, double>> rows;
  std::string line;
  int depth = -1;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto pos = line.rfind(',');
    if (pos == std::string::npos) throw Error("potential CSV: expected word,value");
    Word w = sft::parse_word(line.substr(0, pos));
    double v = std::stod(line.substr(pos + 1));
    if (depth < 0) depth = static_cast<int>(w.size());
    if (static_cast<int>(w.size()) != depth) throw Error("potential CSV: mixed word lengths");
    rows.emplace_back(std::move(w), v);
  }
  if (depth <= 0) throw Error("potential CSV: no rows");
  Potential g;
  g.index = std::make_shared<WordIndex>(a, depth);
  g.values.assign(g.index->size(), std::numeric_limits<double>::quiet_NaN());
  for (auto& [w, v] : rows) {
    int i = g.index->find(w);
    if (i < 0) throw Error("potential CSV: inadmissible word " + sft::format_word(w));
    g.values[i] = v;
  }
  for (int i = 0; i < g.size(); ++i)
    if (std::isnan(g.values[i]))
      throw Error("potential CSV: missing word " + sft::format_word(g.index->word(i)));
  return g;
}

void write_potential_csv(std::ostream& out, const Potential& g) {
  out.precision(17);
  for (int i = 0; i < g.size(); ++i) out << sft::format_word(g.index->word(i)) << ',' << g.values[i] << '\n';
}

}  // namespace thermoflow::thermo
