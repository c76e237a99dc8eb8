#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "thermoflow/coding.hpp"
#include "thermoflow/partition.hpp"
#include "thermoflow/system.hpp"
#include "thermoflow/thermo.hpp"

namespace thermoflow::realization {

using coding::FlowFunction;
using coding::FlowPoint;
using coding::MarkovPartition;
using coding::SuspensionSystem;

struct RealizeOptions {
  int depth = 8;           // depth of the f_A potential
  int N = 1 << 16;         // cells per registered segment
  double half_length = 0.1;  // base-u half length of a segment
  thermo::RhoOptions rho;
  int threads = 0;
};

// Strong-unstable segment through anchor, parametrized by y in (-1, 1): the
// base point moves by y * half_length along e_u, the height follows the leaf.
struct LeafSegment {
  FlowPoint anchor;
  double half_length = 0.1;
  int N = 1 << 16;

  double cell() const { return 2.0 * half_length / N; }  // in base-u units
  FlowPoint at(const SuspensionSystem& sys, double y) const;
  // Unit tangent of the base curve, always e_u.
  coding::Vec2 tangent(const SuspensionSystem& sys) const { return sys.base().e_u(); }
};

// Maximal piece of a leaf (displacement v from the anchor) inside one chart:
// chart u = v + offset, chart sigma fixed.
struct ChartSpan {
  double v0 = 0.0, v1 = 0.0;
  int piece = -1;
  double offset = 0.0;
  double sigma = 0.0;
};

class LeafMeasureFamily {
 public:
  // f_A at depth k, rho from find_rho, Gibbs measure of -rho f_A, and the leaf
  // measures nu_p built from it on demand.
  LeafMeasureFamily(const SuspensionSystem& sys, const MarkovPartition& mp, const FlowFunction& f,
                    const RealizeOptions& opt = {});

  const SuspensionSystem& system() const { return *sys_; }
  const MarkovPartition& partition() const { return *mp_; }
  const FlowFunction& flow_function() const { return f_; }
  const RealizeOptions& options() const { return opt_; }
  double rho() const { return rho_.rho; }
  const thermo::RhoResult& rho_result() const { return rho_; }
  const thermo::Potential& f_A() const { return fA_; }
  const thermo::GibbsData& gibbs() const { return *gibbs_; }
  int depth() const { return opt_.depth; }
  // Cylinder depth at which mu' is refined before linear interpolation.
  int measure_depth() const { return measure_depth_; }
  int N() const { return opt_.N; }
  double cell() const { return 2.0 * opt_.half_length / opt_.N; }
  LeafSegment segment(const FlowPoint& anchor) const;

  // mu' = mu o pi_A^-1 restricted to the model segment of piece, as a
  // function of the chart u coordinate.
  double mu_prime_cdf(int piece, double y) const;
  double mu_prime(int piece, double y0, double y1) const;

  // Charts covering the leaf of p for displacements in [v0, v1].
  std::vector<ChartSpan> charts(const FlowPoint& p, double v0, double v1) const;
  // The leaf of p read in the chart of `piece` extended along the stable
  // direction: the part of [v0, v1] whose chart u lies in the piece. Empty
  // when no lift of the piece is within max_dsigma in the stable direction.
  std::optional<ChartSpan> forced_chart(const FlowPoint& p, int piece, double v0, double v1,
                                        double max_dsigma) const;

  // rho exp(rho u(q, pi_i q)) at the leaf point with displacement v.
  double weight(const FlowPoint& p, const ChartSpan& c, double v) const;

  struct Mass {
    double mass = 0.0;
    double moment = 0.0;  // integral of v
  };
  // nu_p of displacements [v0, v1]. The weight is frozen per grid cell
  // (cells of width cell() centred on p), mu' is exact up to measure_depth.
  Mass nu(const FlowPoint& p, double v0, double v1) const;
  Mass nu_in(const FlowPoint& p, const std::vector<ChartSpan>& spans, double v0, double v1) const;
  // Masses of the N cells of the segment.
  std::vector<double> masses(const LeafSegment& seg) const;
  std::vector<double> masses(const LeafSegment& seg, const std::vector<ChartSpan>& spans) const;

 private:
  std::shared_ptr<const SuspensionSystem> sys_;
  std::shared_ptr<const MarkovPartition> mp_;
  FlowFunction f_;
  RealizeOptions opt_;
  thermo::Potential fA_;
  thermo::RhoResult rho_;
  std::shared_ptr<const thermo::GibbsData> gibbs_;
  int measure_depth_ = 0;
  // u-interval of the one-step preimage of successor j inside piece i,
  // as fractions of the width of piece i
  std::vector<std::vector<std::pair<double, double>>> child_frac_;
  // Descent tree over words of depth d <= k1: for each word and successor,
  // the child's index (depth d+1, or the shifted depth-k1 suffix once d = k1)
  // and its mass (absolute below k1, conditional at k1).
  struct Child {
    int symbol;
    int next;
    double value;
  };
  std::vector<std::vector<std::vector<Child>>> tree_;
  void build_tree();
  template <class Sink>
  void stream(const FlowPoint& p, const std::vector<ChartSpan>& spans, double v0, double v1,
              Sink&& sink) const;
};

// Windowed ratio estimate extrapolated to a point.
struct WindowEstimate {
  double value = 0.0;  // extrapolated log ratio
  std::vector<double> windows, centroid, log_ratio;
  bool regressed = false;
};
// Default window half-widths, as fractions of the segment half-length.
std::vector<double> default_windows();

struct RNCheck {
  double lhs = 0.0;  // extrapolated log of the mass ratio
  double rhs = 0.0;  // rho * integral of f
  double rel_err = 0.0;
  int returns = 0;
  WindowEstimate estimate;
};
// log[nu_{Phi^t p}(Phi^t W) / nu_p(W)] against rho int_0^t f(Phi^tau p).
RNCheck verify_radon_nikodym(const LeafMeasureFamily& fam, const FlowPoint& p, double t,
                             const std::vector<double>& windows = default_windows());

struct HolonomyCheck {
  double derivative = 0.0;  // windowed estimate of d(nu_q o h_qp)/d nu_p at p
  double expected = 0.0;    // exp(rho u(q, p))
  double rel_err = 0.0;
  WindowEstimate estimate;
};
// q must share the lifted stable line of p up to a flow shift, within delta0.
HolonomyCheck holonomy_derivative(const LeafMeasureFamily& fam, const FlowPoint& p,
                                  const FlowPoint& q,
                                  const std::vector<double>& windows = default_windows());

struct Reparametrization {
  LeafSegment segment;
  std::vector<double> eta;  // N+1 knots at y_i = -1 + 2i/N, zero at the centre
  double holder_forward = 0.0;   // mass(I) <~ |I|^holder_forward
  double holder_backward = 0.0;  // mass(I) >~ |I|^holder_backward

  double eval(double y) const;
  double inverse(double e) const;
  double knot(int i) const { return -1.0 + 2.0 * i / segment.N; }
};
Reparametrization reparametrize(const LeafMeasureFamily& fam, const LeafSegment& seg);
Reparametrization reparametrize(const LeafMeasureFamily& fam, const LeafSegment& seg,
                                const std::vector<double>& masses);
// [rho min f_A / log lambda_u, rho max f_A / log lambda_u]
std::pair<double, double> holder_band(const LeafMeasureFamily& fam);

struct ChartTransition {
  double max_residual_cells = 0.0;
  double max_derivative_rel = 0.0;  // finite-difference derivative vs holonomy field
  int samples = 0;
};
// Compares eta_p o eta_q^-1 (the holonomy is the identity in base-u
// coordinates) with the integral of the holonomy derivative
// exp(rho u(p(y), q(y))) against eta_q. Residual in cells.
ChartTransition check_chart_transition(const LeafMeasureFamily& fam, const FlowPoint& p,
                                       const FlowPoint& q, int samples = 64);

// Same leaf read in two charts: largest disagreement of the cumulative
// masses, in cells. nullopt when the piece has no lift near p.
std::optional<double> chart_overlap_residual(const LeafMeasureFamily& fam, const FlowPoint& p,
                                             int other_piece);

struct DeformedCocycle {
  double alpha_check_perp = 0.0;  // from the eta-conjugated interval maps
  double minus_rho_alpha = 0.0;
  double residual = 0.0;
  double alpha = 0.0;
};
DeformedCocycle deformed_cocycle_check(const LeafMeasureFamily& fam, const FlowPoint& p, double t,
                                       const std::vector<double>& windows = default_windows());

struct RhoOneReport {
  double rho = 0.0;
  double deviation = 0.0;  // |rho - 1|
  double rho_perturbed = 0.0;
  double drift = 0.0;      // |rho_perturbed - rho|
  double rho_scaled = 0.0; // rho for 2f
};
// Natural f of the system's metric, then the same with the conformal weight
// perturbed by `perturbation`.
RhoOneReport rho_equals_one_check(const SuspensionSystem& sys, const MarkovPartition& mp, int depth,
                                  const coding::TrigPoly& perturbation,
                                  const thermo::RhoOptions& opt = {});

// Normalized endpoint of Phi^[0,t] p and the signed number of section
// crossings on the way.
struct FlowImage {
  FlowPoint point;
  int returns = 0;
};
FlowImage flow_image(const SuspensionSystem& sys, const FlowPoint& p, double t);

}  // namespace thermoflow::realization
