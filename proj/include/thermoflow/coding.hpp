#pragma once

#include <functional>
#include <vector>

#include "thermoflow/partition.hpp"
#include "thermoflow/system.hpp"
#include "thermoflow/thermo.hpp"

namespace thermoflow::coding {

// Height of the reference section used for pi_A and the unstable model
// segments, as a fraction of the roof.
inline constexpr double kThetaRef = 0.0;

struct Itinerary {
  std::vector<double> tau;  // m+1 entries, tau[0] = 0
  sft::Word xi;             // m symbols
  std::vector<Vec2> local;  // chart coordinates of the j-th section crossing
  bool degenerate = false;
};

// p is normalized first. tau[1] is the time to reach the section.
Itinerary itinerary(const SuspensionSystem& sys, const MarkovPartition& mp, const FlowPoint& p, int m);

// Point of the unstable model segment of piece xi[0] (u-coordinate y, sigma
// at the piece's reference value) whose coding starts with xi.
struct PiA {
  int piece = -1;
  double y = 0.0;
  double radius = 0.0;
};
PiA pi_A(const MarkovPartition& mp, const sft::Word& xi);
// Image interval of the cylinder [xi] in the unstable model segment.
Box cylinder_image(const MarkovPartition& mp, const sft::Word& xi);
// pi_A as a point of the suspension (lifted chart coordinates, reference height).
FlowPoint model_point(const SuspensionSystem& sys, const MarkovPartition& mp, int piece, double y);
// Projection of the chart point along the stable direction onto the model
// segment of that piece.
FlowPoint project(const SuspensionSystem& sys, const MarkovPartition& mp, int piece, Vec2 local);

struct UValue {
  double value = 0.0;
  double bound = 0.0;  // truncation bound
  int terms = 0;
};

// u(p, q) in closed form. p and q must lie on a common lifted stable line;
// keep lifts unnormalized (use {x, s + t} rather than flow()) when moving
// along the flow.
UValue u_closed(const SuspensionSystem& sys, const FlowFunction& f, const FlowPoint& p,
                const FlowPoint& q, double tol = 1e-14);

struct QuadOptions {
  double tol = 1e-10;     // per panel, adaptive Simpson
  double t_max = 0.0;     // 0: choose from the tail bound
  double tail_tol = 1e-9;
  double panel = 0.125;   // panel length as a fraction of inf r
};
// u(p, q) from its defining integrals by adaptive quadrature; an
// independent check on u_closed.
UValue u_quadrature(const SuspensionSystem& sys, const FlowFunction& f, const FlowPoint& p,
                    const FlowPoint& q, const QuadOptions& opt = {});

double adaptive_simpson(const std::function<double(double)>& fn, double a, double b, double tol,
                        int max_depth = 40);

// f_A(xi) = u(pi_A(sigma xi), pi_A(xi)); xi needs at least two symbols.
double f_A(const SuspensionSystem& sys, const MarkovPartition& mp, const FlowFunction& f,
           const sft::Word& xi);
// Depth-k locally constant version, one representative per cylinder.
thermo::Potential f_A_potential(const SuspensionSystem& sys, const MarkovPartition& mp,
                                const FlowFunction& f, int k);

struct TelescopingCheck {
  int m = 0;
  double lhs = 0.0;  // integral of f up to the m-th section crossing, by quadrature
  double rhs = 0.0;  // boundary u terms plus the Birkhoff sum of f_A
  double residual = 0.0;
};
// The orbit segment of p up to its m-th section crossing against the
// m-step Birkhoff sum of f_A along its itinerary (coded `tail` symbols deep).
TelescopingCheck telescoping_check(const SuspensionSystem& sys, const MarkovPartition& mp,
                                   const FlowFunction& f, const FlowPoint& p, int m,
                                   const QuadOptions& quad = {}, int tail = 40);

struct Cocycles {
  double alpha = 0.0;
  double alpha_perp = 0.0;
  double beta = 0.0;
};
// Unwrapped change of the metric profile along Phi^[0,t] p.
double profile_change(const SuspensionSystem& sys, const FlowPoint& p, double t);
double conformal_weight(const SuspensionSystem& sys, const FlowPoint& p);
Cocycles cocycles(const SuspensionSystem& sys, const FlowPoint& p, double t);

struct PropertyAReport {
  double C = 0.0;       // inf of min(alpha_perp, -beta)
  double margin = 0.0;  // sup |rho alpha + alpha_perp|
  bool first = false;   // C > 0
  bool second = false;  // margin < eps C
  int samples = 0;
};
PropertyAReport check_property_A(const SuspensionSystem& sys, double rho, double eps, double T,
                                 int grid = 8);

}  // namespace thermoflow::coding
