#pragma once

#include <array>
#include <vector>

#include "thermoflow/sft.hpp"
#include "thermoflow/system.hpp"

namespace thermoflow::coding {

// Axis-aligned box in eigencoordinates: [u0,u1] x [s0,s1].
struct Box {
  double u0 = 0, u1 = 0, s0 = 0, s1 = 0;
  double width_u() const { return u1 - u0; }
  double width_s() const { return s1 - s0; }
  double mid_u() const { return 0.5 * (u0 + u1); }
  double mid_s() const { return 0.5 * (s0 + s1); }
  bool contains(Vec2 e, double tol = 0.0) const {
    return e.x >= u0 - tol && e.x <= u1 + tol && e.y >= s0 - tol && e.y <= s1 + tol;
  }
};

// A rectangle of the partition. Its chart coordinates are the
// eigencoordinates of a fixed lift, so points of the rectangle are
// from_eig(local) mod Z^2.
struct Piece {
  int base = 0;  // index of the fundamental-domain rectangle it refines
  Box box;
  // B(piece) lies in (base rectangle image_base) + shift, shift in Z^2
  int image_base = 0;
  std::array<int, 2> shift{0, 0};
  Vec2 shift_eig;
};

struct Location {
  int piece = -1;
  Vec2 local;
  bool degenerate = false;  // hit a rectangle corner within tolerance
};

struct MarkovReport {
  double area_defect = 0.0;     // |sum of areas - 1|
  int cover_failures = 0;       // sampled points not in exactly one open rectangle
  int inclusion_failures = 0;   // transitions violating the Markov inclusions
  double worst_inclusion = 0.0; // largest inclusion violation seen
  bool mixing = false;
  int samples = 0;
};

class MarkovPartition {
 public:
  // Refine the two-rectangle fundamental domain `level` times.
  static MarkovPartition build(const ToralAutomorphism& b, int level);
  // Refine until every rectangle has diameter < delta0 / 8.
  static MarkovPartition build_for_delta(const ToralAutomorphism& b, double delta0);

  const ToralAutomorphism& base() const { return base_; }
  int size() const { return static_cast<int>(pieces_.size()); }
  const Piece& piece(int i) const { return pieces_[i]; }
  const std::vector<Piece>& pieces() const { return pieces_; }
  const Box& base_rect(int b) const { return base_rects_[b]; }
  const sft::TransitionMatrix& transition() const { return a_; }
  int level() const { return level_; }
  double delta0() const { return delta0_; }
  double delta1() const { return 2.0 * delta0_; }
  double delta2() const { return 4.0 * delta0_; }
  double max_diameter() const;
  double diameter(int i) const;

  double sigma_ref(int i) const { return pieces_[i].box.mid_s(); }
  Vec2 to_plane(Vec2 local) const { return base_.from_eig(local); }

  // Rectangle containing the torus point x (lowest index on boundaries).
  Location locate(Vec2 x) const;
  // Chart coordinates of B(point) relative to the image translate of cur.
  Vec2 step(int cur, Vec2 local) const;
  // Lowest-index successor of cur whose closed box contains e; the nearest
  // one when rounding leaves e just outside all of them.
  int successor(int cur, Vec2 e, bool* degenerate = nullptr) const;

  MarkovReport check(int samples_per_pair, unsigned seed = 1) const;

 private:
  MarkovPartition(ToralAutomorphism b) : base_(std::move(b)) {}
  void finish();
  ToralAutomorphism base_;
  std::array<Box, 2> base_rects_;
  std::vector<Piece> pieces_;
  sft::TransitionMatrix a_;
  int level_ = 0;
  double delta0_ = 0.0;
};

}  // namespace thermoflow::coding
