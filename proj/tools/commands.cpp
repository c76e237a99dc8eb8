#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "thermoflow/coding.hpp"
#include "thermoflow/realization.hpp"
#include "thermoflow/sft.hpp"
#include "thermoflow/thermo.hpp"
#include "thermoflow/volume.hpp"

namespace thermoflow::cli {

using coding::FlowPoint;
using coding::Vec2;
using io::fmt;

void Context::write(const std::string& name, const std::string& text) {
  io::write_text(path(name), text);
  outputs.push_back(name);
}

void Context::write_json(const std::string& name, const json& j) {
  io::write_json(path(name), j);
  outputs.push_back(name);
}

namespace {

template <class T>
T cfg(const Context& ctx, const char* key, T def) {
  if (!ctx.config.contains(key)) return def;
  try {
    return ctx.config.at(key).get<T>();
  } catch (const json::exception& e) {
    throw io::Error(std::string("config '") + key + "': " + e.what());
  }
}

int positive(int v, const char* what) {
  if (v <= 0) throw io::Error(std::string(what) + " must be positive");
  return v;
}

double positive(double v, const char* what) {
  if (!(v > 0.0)) throw io::Error(std::string(what) + " must be positive");
  return v;
}

io::SystemSpec system_spec(const Context& ctx) {
  if (ctx.config.contains("system_path")) return io::read_system(ctx.config.at("system_path").get<std::string>());
  if (ctx.config.contains("system")) return io::system_from_json(ctx.config.at("system"));
  return io::default_system();
}

sft::TransitionMatrix shift_matrix(const Context& ctx) {
  return io::matrix_from_json(ctx.config.value("shift", json("golden-mean")));
}

thermo::Potential potential(const Context& ctx, const sft::TransitionMatrix& a) {
  return io::potential_from_json(a, ctx.config.value("potential", json{{"depth", 1}, {"constant", 0.0}}));
}

thermo::SpectralOptions spectral(const Context& ctx) {
  thermo::SpectralOptions s;
  if (ctx.tol) s.tol = positive(*ctx.tol, "--tol");
  if (ctx.max_power_iters) s.max_iters = positive(*ctx.max_power_iters, "--max-power-iters");
  return s;
}

thermo::RhoOptions rho_options(const Context& ctx) {
  thermo::RhoOptions o;
  o.spectral = spectral(ctx);
  if (ctx.tol) o.tol = *ctx.tol;
  return o;
}

FlowPoint random_point(const coding::SuspensionSystem& sys, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec2 x{u(rng), u(rng)};
  return {x, u(rng) * sys.r(x)};
}

std::string word_prefix(const sft::Word& w, std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < std::min(n, w.size()); ++i) s += (i ? " " : "") + std::to_string(w[i] + 1);
  return s;
}

realization::RealizeOptions realize_options(const Context& ctx, int default_N) {
  realization::RealizeOptions o;
  o.depth = ctx.depth.value_or(8);
  o.N = positive(cfg(ctx, "N", default_N), "N");
  o.half_length = positive(cfg(ctx, "half_length", 0.1), "half_length");
  o.rho = rho_options(ctx);
  o.threads = ctx.threads;
  return o;
}

void finish_check(Context& ctx, const std::string& name, const std::vector<io::VerificationRow>& rows,
                  double worst, double tol, json extra = json::object()) {
  ctx.write(name + ".csv", io::verification_csv(rows));
  json s{{"check", name}, {"samples", rows.size()}, {"worst", worst}, {"tolerance", tol}, {"pass", worst <= tol}};
  for (auto& [k, v] : extra.items()) s[k] = v;
  ctx.write_json(name + ".json", s);
  if (!(worst <= tol))
    throw CheckFailed(name + ": worst " + fmt(worst) + " exceeds tolerance " + fmt(tol));
}

}  // namespace

void run_sft(Context& ctx) {
  auto a = shift_matrix(ctx);
  int len = positive(cfg(ctx, "length", 6), "length");
  auto words = sft::enumerate_words(a, len);
  std::ostringstream csv;
  sft::write_words_csv(csv, words);
  ctx.write("words.csv", csv.str());
  std::ostringstream mat;
  sft::write_matrix(mat, a);
  ctx.write("matrix.txt", mat.str());
  json counts = json::array();
  for (int m = 1; m <= len; ++m) counts.push_back(sft::enumerate_words(a, m).size());
  auto mix = sft::is_mixing(a, sft::wielandt_bound(a));
  ctx.write_json("sft.json", json{{"symbols", a.size()},
                                  {"mixing", mix.has_value()},
                                  {"primitivity_exponent", mix ? json(*mix) : json(nullptr)},
                                  {"wielandt_bound", sft::wielandt_bound(a)},
                                  {"word_counts", counts}});
}

void run_pressure(Context& ctx) {
  auto a = shift_matrix(ctx);
  auto g = potential(ctx, a);
  int m = positive(cfg(ctx, "m", 12), "m");
  auto ps = thermo::pressure_partition_sum(a, g, m);
  auto sp = thermo::transfer_spectral_pressure(a, g, spectral(ctx));
  std::string csv = "method,m,value,error_bound,iterations\n";
  for (const auto& e : {ps, sp})
    csv += thermo::method_name(e.method) + "," + std::to_string(e.m) + "," + fmt(e.value) + "," +
           fmt(e.error_bound) + "," + std::to_string(e.iterations) + "\n";
  ctx.write("pressure.csv", csv);
}

void run_rho(Context& ctx) {
  thermo::Potential g;
  sft::TransitionMatrix a;
  json source;
  if (ctx.config.contains("potential")) {
    a = shift_matrix(ctx);
    g = potential(ctx, a);
    source = "potential";
  } else {
    auto spec = system_spec(ctx);
    auto sys = spec.system();
    auto mp = spec.partition();
    a = mp.transition();
    g = coding::f_A_potential(sys, mp, spec.flow_function(sys), ctx.depth.value_or(6));
    source = "f_A";
  }
  auto r = thermo::find_rho(a, g, rho_options(ctx));
  ctx.write_json("rho.json", json{{"source", source},
                                  {"depth", g.depth()},
                                  {"rho", r.rho},
                                  {"residual", r.residual},
                                  {"bracket", {r.lo, r.hi}},
                                  {"m_positive", r.m_positive},
                                  {"evaluations", r.evaluations}});
}

void run_gibbs(Context& ctx) {
  auto a = shift_matrix(ctx);
  auto g = potential(ctx, a);
  auto gd = thermo::gibbs(a, g, ctx.depth.value_or(4), spectral(ctx));
  ctx.write_json("gibbs.json", io::gibbs_json(gd));
  std::ostringstream csv;
  thermo::write_potential_csv(csv, g);
  ctx.write("potential.csv", csv.str());
}

void run_partition(Context& ctx) {
  auto spec = system_spec(ctx);
  auto mp = spec.partition();
  auto rep = mp.check(positive(cfg(ctx, "samples_per_pair", 64), "samples_per_pair"),
                      static_cast<unsigned>(ctx.seed));
  json pieces = json::array();
  for (int i = 0; i < mp.size(); ++i) {
    const auto& p = mp.piece(i);
    pieces.push_back(json{{"symbol", i + 1},
                          {"base", p.base},
                          {"box", {p.box.u0, p.box.u1, p.box.s0, p.box.s1}},
                          {"image_base", p.image_base},
                          {"shift", {p.shift[0], p.shift[1]}}});
  }
  ctx.write_json("partition.json", json{{"level", mp.level()},
                                        {"pieces", pieces},
                                        {"delta0", mp.delta0()},
                                        {"max_diameter", mp.max_diameter()},
                                        {"check",
                                         {{"area_defect", rep.area_defect},
                                          {"cover_failures", rep.cover_failures},
                                          {"inclusion_failures", rep.inclusion_failures},
                                          {"worst_inclusion", rep.worst_inclusion},
                                          {"mixing", rep.mixing},
                                          {"samples", rep.samples}}}});
  std::ostringstream mat;
  sft::write_matrix(mat, mp.transition());
  ctx.write("transition.txt", mat.str());
  if (rep.cover_failures || rep.inclusion_failures || !rep.mixing)
    throw CheckFailed("partition: Markov property check failed");
}

void run_code(Context& ctx) {
  auto spec = system_spec(ctx);
  auto sys = spec.system();
  auto mp = spec.partition();
  int n = positive(cfg(ctx, "samples", 100), "samples");
  int m = positive(cfg(ctx, "length", 40), "length");
  double tol = ctx.tol.value_or(1e-6);
  std::mt19937_64 rng(ctx.seed);
  std::string csv = "p_x,p_y,p_s,prefix,tau_1,pi_A_y,chart_u,error,radius\n";
  double worst = 0.0;
  int degenerate = 0;
  for (int i = 0; i < n; ++i) {
    FlowPoint p = random_point(sys, rng);
    auto it = coding::itinerary(sys, mp, p, m);
    auto a = coding::pi_A(mp, it.xi);
    double err = std::abs(a.y - it.local[0].x);
    if (it.degenerate) ++degenerate;
    else worst = std::max(worst, err);
    csv += fmt(p.x.x) + "," + fmt(p.x.y) + "," + fmt(p.s) + "," + word_prefix(it.xi, 8) + "," +
           fmt(it.tau[1]) + "," + fmt(a.y) + "," + fmt(it.local[0].x) + "," + fmt(err) + "," + fmt(a.radius) +
           "\n";
  }
  ctx.write("itineraries.csv", csv);
  ctx.write_json("code.json", json{{"samples", n}, {"length", m}, {"worst_error", worst},
                                   {"degenerate", degenerate}, {"tolerance", tol}});
  if (worst > tol) throw CheckFailed("code: round-trip error " + fmt(worst) + " exceeds " + fmt(tol));
}

void run_realize(Context& ctx) {
  auto spec = system_spec(ctx);
  auto sys = spec.system();
  auto mp = spec.partition();
  realization::LeafMeasureFamily fam(sys, mp, spec.flow_function(sys), realize_options(ctx, 4096));
  int n = positive(cfg(ctx, "segments", 2), "segments");
  std::mt19937_64 rng(ctx.seed);
  std::vector<realization::LeafSegment> segs;
  std::vector<std::vector<double>> masses;
  json holder = json::array();
  for (int i = 0; i < n; ++i) {
    segs.push_back(fam.segment(random_point(sys, rng)));
    masses.push_back(fam.masses(segs.back()));
    auto rp = realization::reparametrize(fam, segs.back(), masses.back());
    holder.push_back({rp.holder_forward, rp.holder_backward});
  }
  std::vector<std::string> written;
  io::write_family(ctx.out, fam, io::config_hash(io::to_json(spec)), segs, masses, &written);
  ctx.outputs.insert(ctx.outputs.end(), written.begin(), written.end());
  auto band = realization::holder_band(fam);
  ctx.write_json("realize.json", json{{"rho", fam.rho()},
                                      {"holder_fits", holder},
                                      {"holder_band", {band.first, band.second}}});
}

void run_verify(Context& ctx, const std::string& check) {
  auto spec = system_spec(ctx);
  int n = positive(cfg(ctx, "samples", 10), "samples");
  std::mt19937_64 rng(ctx.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<io::VerificationRow> rows;
  double worst = 0.0;

  if (check == "rho-one") {
    auto sys = spec.system();
    auto mp = spec.partition();
    coding::TrigPoly pert = io::trig_from_json(
        ctx.config.value("perturbation", io::to_json(coding::TrigPoly{0.0, {{2, 1, 0.03, -0.02}}})));
    auto r = realization::rho_equals_one_check(sys, mp, ctx.depth.value_or(8), pert, rho_options(ctx));
    rows.push_back({{}, 0.0, r.rho, 1.0, r.deviation});
    rows.push_back({{}, 0.0, r.rho_perturbed, r.rho, r.drift});
    double tol = ctx.tol.value_or(1e-6);
    double drift_tol = cfg(ctx, "drift_tol", 1e-8);
    ctx.write("rho-one.csv", io::verification_csv(rows));
    bool pass = r.deviation <= tol && r.drift <= drift_tol;
    ctx.write_json("rho-one.json", json{{"check", check},
                                        {"rho", r.rho},
                                        {"deviation", r.deviation},
                                        {"rho_perturbed", r.rho_perturbed},
                                        {"drift", r.drift},
                                        {"rho_scaled", r.rho_scaled},
                                        {"tolerance", tol},
                                        {"drift_tolerance", drift_tol},
                                        {"pass", pass}});
    if (!pass) throw CheckFailed("rho-one: |rho - 1| = " + fmt(r.deviation) + ", drift " + fmt(r.drift));
    return;
  }

  if (check == "telescoping") {
    auto sys = spec.system();
    auto mp = spec.partition();
    auto f = spec.flow_function(sys);
    for (int i = 0; i < n; ++i) {
      FlowPoint p = random_point(sys, rng);
      auto r = coding::telescoping_check(sys, mp, f, p, 1 + i % 6);
      rows.push_back({p, static_cast<double>(r.m), r.lhs, r.rhs, r.residual});
      worst = std::max(worst, r.residual);
    }
    finish_check(ctx, check, rows, worst, ctx.tol.value_or(1e-4), json{{"t_column", "m"}});
    return;
  }

  if (check == "deformed-cocycle") spec.f.reset();  // the identity concerns the natural f
  auto sys = spec.system();
  auto mp = spec.partition();
  realization::LeafMeasureFamily fam(sys, mp, spec.flow_function(sys), realize_options(ctx, 1 << 14));
  double t_max = positive(cfg(ctx, "t_max", 3.0), "t_max");
  double tol = ctx.tol.value_or(0.02);
  for (int i = 0; i < n; ++i) {
    FlowPoint p = random_point(sys, rng);
    double t = 0.25 + (t_max - 0.25) * u(rng);
    if (check == "radon-nikodym") {
      auto r = realization::verify_radon_nikodym(fam, p, t);
      rows.push_back({p, t, r.lhs, r.rhs, r.rel_err});
      worst = std::max(worst, r.rel_err);
    } else if (check == "holonomy") {
      FlowPoint q = sys.strong_stable_point(p, (u(rng) - 0.5) * 0.2);
      q.s += (u(rng) - 0.5) * 0.2;
      auto h = realization::holonomy_derivative(fam, p, q);
      rows.push_back({p, q.s - p.s, h.derivative, h.expected, h.rel_err});
      worst = std::max(worst, h.rel_err);
    } else if (check == "deformed-cocycle") {
      auto d = realization::deformed_cocycle_check(fam, p, t);
      double rel = d.residual / std::max(std::abs(d.alpha), 1e-300);
      rows.push_back({p, t, d.alpha_check_perp, d.minus_rho_alpha, rel});
      worst = std::max(worst, rel);
    } else {
      throw io::Error("unknown check '" + check + "'");
    }
  }
  finish_check(ctx, check, rows, worst, tol, json{{"rho", fam.rho()}, {"N", fam.N()}, {"depth", fam.depth()}});
}

void run_volume(Context& ctx) {
  int dim = cfg(ctx, "dim", 2);
  int m = positive(cfg(ctx, "m", dim == 2 ? 64 : 32), "m");
  auto ks = cfg(ctx, "ks", std::vector<int>{2, 4, 8, 16});
  volume::PoissonOptions opt;
  if (ctx.tol) opt.tol = positive(*ctx.tol, "--tol");
  opt.max_iters = positive(cfg(ctx, "max_iters", opt.max_iters), "max_iters");

  auto pair = volume::analytic_pair(dim, m);
  auto rep = volume::invariant_volume_demo(pair.x0, pair.h0, ks, opt);
  std::string csv = "k,bandwidth,c1_distance,divergence,before,projected,iterations\n";
  for (const auto& r : rep.rows)
    csv += std::to_string(r.k) + "," + fmt(r.bandwidth) + "," + fmt(r.c1_distance) + "," + fmt(r.divergence) +
           "," + fmt(r.before) + "," + fmt(r.projected) + "," + std::to_string(r.iterations) + "\n";
  ctx.write("volume.csv", csv);

  // second-order check of the conformal divergence on the same pair
  std::string ref = "m,residual,ratio\n";
  double prev = 0.0;
  for (int g : cfg(ctx, "refine", std::vector<int>{16, 32, 64})) {
    auto p = volume::analytic_pair(dim, g);
    double r = volume::sup_norm(volume::divergence(p.x0, p.h0));
    ref += std::to_string(g) + "," + fmt(r) + "," + (prev > 0.0 ? fmt(prev / r) : std::string()) + "\n";
    prev = r;
  }
  ctx.write("refinement.csv", ref);

  std::vector<std::string> written;
  io::write_field(ctx.path("x0"), pair.x0, &written);
  io::write_field(ctx.path("h0"), pair.h0, &written);
  if (!ks.empty()) {
    double b = 1.0 / ks.back();
    auto pr = volume::poisson_correct(volume::mollify(pair.x0, b), volume::mollify(pair.h0, b), opt);
    io::write_field(ctx.path("x_k"), pr.x, &written);
  }
  ctx.outputs.insert(ctx.outputs.end(), written.begin(), written.end());
  ctx.write_json("volume.json", json{{"dim", dim},
                                     {"m", m},
                                     {"symbolic_residual", pair.symbolic_residual},
                                     {"consistency", rep.consistency}});
}

}  // namespace thermoflow::cli
