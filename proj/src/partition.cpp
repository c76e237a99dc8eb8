#include "thermoflow/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

namespace thermoflow::coding {

namespace {

constexpr double kAreaTol = 1e-12;
constexpr double kContainTol = 1e-11;

std::optional<Box> intersect(const Box& a, const Box& b) {
  Box c{std::max(a.u0, b.u0), std::min(a.u1, b.u1), std::max(a.s0, b.s0), std::min(a.s1, b.s1)};
  if (c.width_u() <= kAreaTol || c.width_s() <= kAreaTol) return std::nullopt;
  return c;
}

Box shifted(const Box& a, Vec2 e) { return {a.u0 + e.x, a.u1 + e.x, a.s0 + e.y, a.s1 + e.y}; }

Box forward(const ToralAutomorphism& b, const Box& a) {
  return {b.lambda_u() * a.u0, b.lambda_u() * a.u1, b.lambda_s() * a.s0, b.lambda_s() * a.s1};
}

Box backward(const ToralAutomorphism& b, const Box& a) {
  return {a.u0 / b.lambda_u(), a.u1 / b.lambda_u(), a.s0 / b.lambda_s(), a.s1 / b.lambda_s()};
}

struct LatticePoint {
  int m, k;
  Vec2 eig;
};

// Integer vectors whose eigencoordinates fall in the closed box.
std::vector<LatticePoint> lattice_in(const ToralAutomorphism& b, const Box& box) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (double u : {box.u0, box.u1})
    for (double s : {box.s0, box.s1}) {
      Vec2 p = b.from_eig({u, s});
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
  std::vector<LatticePoint> out;
  for (int m = int(std::floor(xmin)) - 1; m <= int(std::ceil(xmax)) + 1; ++m)
    for (int k = int(std::floor(ymin)) - 1; k <= int(std::ceil(ymax)) + 1; ++k) {
      Vec2 e = b.lattice_eig(m, k);
      if (box.contains(e, kContainTol)) out.push_back({m, k, e});
    }
  return out;
}

// {P_i cap B^-1(Q_j + l)}
std::vector<Piece> join_preimage(const ToralAutomorphism& b, const std::vector<Piece>& p,
                                 const std::vector<Piece>& q) {
  std::vector<Piece> out;
  for (const auto& pi : p) {
    Box img = forward(b, pi.box);
    for (const auto& qj : q) {
      Box diff{img.u0 - qj.box.u1, img.u1 - qj.box.u0, img.s0 - qj.box.s1, img.s1 - qj.box.s0};
      for (const auto& l : lattice_in(b, diff)) {
        auto c = intersect(img, shifted(qj.box, l.eig));
        if (!c) continue;
        Piece n = pi;
        n.box = backward(b, *c);
        out.push_back(n);
      }
    }
  }
  return out;
}

// {P_i cap (B Q_j + l)}
std::vector<Piece> join_image(const ToralAutomorphism& b, const std::vector<Piece>& p,
                              const std::vector<Piece>& q) {
  std::vector<Piece> out;
  for (const auto& pi : p) {
    for (const auto& qj : q) {
      Box img = forward(b, qj.box);
      Box diff{pi.box.u0 - img.u1, pi.box.u1 - img.u0, pi.box.s0 - img.s1, pi.box.s1 - img.s0};
      for (const auto& l : lattice_in(b, diff)) {
        auto c = intersect(pi.box, shifted(img, l.eig));
        if (!c) continue;
        Piece n = pi;
        n.box = *c;
        out.push_back(n);
      }
    }
  }
  return out;
}

}  // namespace

MarkovPartition MarkovPartition::build(const ToralAutomorphism& b, int level) {
  if (level < 0) throw Error("partition level must be nonnegative");
  MarkovPartition mp(b);
  Vec2 v1 = b.lattice_eig(1, 0), v2 = b.lattice_eig(0, 1);
  if (!(v1.x > 0 && v2.x > 0 && v2.y > 0 && v1.y < 0))
    throw Error("two-rectangle construction needs u(1,0), u(0,1), s(0,1) > 0 > s(1,0)");
  mp.base_rects_[0] = {0.0, v1.x, 0.0, v2.y};
  mp.base_rects_[1] = {-v2.x, 0.0, 0.0, -v1.y};
  std::vector<Piece> r(2);
  for (int i = 0; i < 2; ++i) {
    r[i].base = i;
    r[i].box = mp.base_rects_[i];
  }
  std::vector<Piece> p = join_preimage(b, r, r);
  for (int l = 0; l < level; ++l) p = join_image(b, join_preimage(b, p, p), p);
  mp.pieces_ = std::move(p);
  mp.level_ = level;
  mp.finish();
  mp.delta0_ = 8.0 * mp.max_diameter() * (1.0 + 1e-6);
  return mp;
}

MarkovPartition MarkovPartition::build_for_delta(const ToralAutomorphism& b, double delta0) {
  if (!(delta0 > 0)) throw Error("delta0 must be positive");
  for (int level = 0; level <= 4; ++level) {
    MarkovPartition mp = build(b, level);
    if (mp.max_diameter() < delta0 / 8.0) {
      mp.delta0_ = delta0;
      return mp;
    }
  }
  throw Error("delta0 too small: refinement level 4 still exceeds delta0/8");
}

void MarkovPartition::finish() {
  std::sort(pieces_.begin(), pieces_.end(), [](const Piece& x, const Piece& y) {
    if (x.base != y.base) return x.base < y.base;
    if (x.box.u0 != y.box.u0) return x.box.u0 < y.box.u0;
    return x.box.s0 < y.box.s0;
  });
  const int n = size();
  // image translate of each piece
  for (auto& pc : pieces_) {
    Box img = forward(base_, pc.box);
    Vec2 c{img.mid_u(), img.mid_s()};
    bool found = false;
    for (int bi = 0; bi < 2 && !found; ++bi) {
      Box d{c.x - base_rects_[bi].u1, c.x - base_rects_[bi].u0, c.y - base_rects_[bi].s1,
            c.y - base_rects_[bi].s0};
      for (const auto& l : lattice_in(base_, d)) {
        Box rel = shifted(img, {-l.eig.x, -l.eig.y});
        const Box& br = base_rects_[bi];
        double tol = 1e-9;
        if (rel.u0 >= br.u0 - tol && rel.u1 <= br.u1 + tol && rel.s0 >= br.s0 - tol &&
            rel.s1 <= br.s1 + tol) {
          pc.image_base = bi;
          pc.shift = {l.m, l.k};
          pc.shift_eig = l.eig;
          found = true;
          break;
        }
      }
    }
    if (!found) throw Error("partition: rectangle image not inside a single translate");
  }
  std::vector<std::vector<int>> rows(n, std::vector<int>(n, 0));
  for (int j = 0; j < n; ++j) {
    const Piece& pj = pieces_[j];
    Box rel = shifted(forward(base_, pj.box), {-pj.shift_eig.x, -pj.shift_eig.y});
    for (int i = 0; i < n; ++i)
      if (pieces_[i].base == pj.image_base && intersect(rel, pieces_[i].box)) rows[i][j] = 1;
  }
  a_ = sft::TransitionMatrix(rows);
  if (!sft::is_mixing(a_, sft::wielandt_bound(a_))) throw Error("partition transition matrix is not mixing");
}

double MarkovPartition::diameter(int i) const {
  const Box& b = pieces_[i].box;
  Vec2 d1 = base_.from_eig({b.width_u(), b.width_s()});
  Vec2 d2 = base_.from_eig({b.width_u(), -b.width_s()});
  return std::max(norm(d1), norm(d2));
}

double MarkovPartition::max_diameter() const {
  double m = 0.0;
  for (int i = 0; i < size(); ++i) m = std::max(m, diameter(i));
  return m;
}

Location MarkovPartition::locate(Vec2 x) const {
  Vec2 y = reduce(x);
  Location best;
  for (int m = -3; m <= 3; ++m)
    for (int k = -3; k <= 3; ++k) {
      Vec2 e = base_.to_eig({y.x + m, y.y + k});
      for (int bi = 0; bi < 2; ++bi) {
        if (!base_rects_[bi].contains(e, kContainTol)) continue;
        for (int i = 0; i < size(); ++i) {
          if (best.piece >= 0 && i >= best.piece) break;
          if (pieces_[i].base == bi && pieces_[i].box.contains(e, kContainTol)) {
            best.piece = i;
            best.local = e;
            break;
          }
        }
      }
    }
  if (best.piece < 0) throw Error("locate: point not covered by the partition");
  const Box& b = pieces_[best.piece].box;
  const double tol = 1e-10;
  bool on_u = std::abs(best.local.x - b.u0) < tol || std::abs(best.local.x - b.u1) < tol;
  bool on_s = std::abs(best.local.y - b.s0) < tol || std::abs(best.local.y - b.s1) < tol;
  best.degenerate = on_u && on_s;
  return best;
}

Vec2 MarkovPartition::step(int cur, Vec2 local) const {
  const Piece& p = pieces_[cur];
  return {base_.lambda_u() * local.x - p.shift_eig.x, base_.lambda_s() * local.y - p.shift_eig.y};
}

int MarkovPartition::successor(int cur, Vec2 e, bool* degenerate) const {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i : a_.successors(cur)) {
    const Box& b = pieces_[i].box;
    if (b.contains(e, kContainTol)) {
      if (degenerate) {
        const double tol = 1e-10;
        bool on_u = std::abs(e.x - b.u0) < tol || std::abs(e.x - b.u1) < tol;
        bool on_s = std::abs(e.y - b.s0) < tol || std::abs(e.y - b.s1) < tol;
        *degenerate = on_u && on_s;
      }
      return i;
    }
    double du = std::max({0.0, b.u0 - e.x, e.x - b.u1});
    double ds = std::max({0.0, b.s0 - e.y, e.y - b.s1});
    double d = std::hypot(du, ds);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  if (degenerate) *degenerate = false;
  return best;
}

MarkovReport MarkovPartition::check(int samples_per_pair, unsigned seed) const {
  MarkovReport rep;
  Vec2 eu = base_.e_u(), es = base_.e_s();
  double jac = std::abs(eu.x * es.y - es.x * eu.y);
  double area = 0.0;
  for (const auto& p : pieces_) area += p.box.width_u() * p.box.width_s() * jac;
  rep.area_defect = std::abs(area - 1.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int cover_samples = samples_per_pair * std::max(1, size());
  for (int t = 0; t < cover_samples; ++t) {
    Vec2 x{unif(rng), unif(rng)};
    int count = 0;
    for (int m = -3; m <= 3; ++m)
      for (int k = -3; k <= 3; ++k) {
        Vec2 e = base_.to_eig({x.x + m, x.y + k});
        for (const auto& p : pieces_)
          if (e.x > p.box.u0 && e.x < p.box.u1 && e.y > p.box.s0 && e.y < p.box.s1) ++count;
      }
    if (count != 1) ++rep.cover_failures;
  }
  rep.samples = cover_samples;
  // stable segments map into stable segments, unstable segments pull back
  // into unstable segments
  for (int j = 0; j < size(); ++j) {
    const Piece& pj = pieces_[j];
    Box rel = shifted(forward(base_, pj.box), {-pj.shift_eig.x, -pj.shift_eig.y});
    for (int i : a_.successors(j)) {
      auto c = intersect(rel, pieces_[i].box);
      if (!c) continue;
      const Box& bi = pieces_[i].box;
      double worst = 0.0;
      auto outside = [](const Box& b, Vec2 e) {
        return std::max({0.0, b.u0 - e.x, e.x - b.u1, b.s0 - e.y, e.y - b.s1});
      };
      const double lu = base_.lambda_u(), ls = base_.lambda_s();
      for (int t = 0; t < samples_per_pair; ++t) {
        Vec2 y{c->u0 + unif(rng) * c->width_u(), c->s0 + unif(rng) * c->width_s()};
        // image of the stable segment of P_j through B^-1(y) lies in P_i
        for (double s : {pj.box.s0, pj.box.s1})
          worst = std::max(worst, outside(bi, {y.x, ls * s - pj.shift_eig.y}));
        // preimage of the unstable segment of P_i through y lies in P_j
        for (double u : {bi.u0, bi.u1})
          worst = std::max(worst, outside(pj.box, {(u + pj.shift_eig.x) / lu, (y.y + pj.shift_eig.y) / ls}));
      }
      rep.worst_inclusion = std::max(rep.worst_inclusion, worst);
      if (worst > 1e-9) ++rep.inclusion_failures;
    }
  }
  rep.mixing = sft::is_mixing(a_, sft::wielandt_bound(a_)).has_value();
  return rep;
}

}  // namespace thermoflow::coding
