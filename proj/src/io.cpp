#include "thermoflow/io.hpp"

#include <bit>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace thermoflow::io {

namespace {

coding::Profile profile_from_string(const std::string& s) {
  if (s == "flat") return coding::Profile::flat;
  if (s == "bump") return coding::Profile::bump;
  throw Error("unknown profile '" + s + "' (expected flat or bump)");
}

std::string profile_name(coding::Profile p) { return p == coding::Profile::flat ? "flat" : "bump"; }

template <class T>
T get_or(const json& j, const char* key, T def) {
  if (!j.contains(key)) return def;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(std::string("bad value for '") + key + "': " + e.what());
  }
}

json point_json(const coding::FlowPoint& p) { return json::array({p.x.x, p.x.y, p.s}); }

}  // namespace

coding::SuspensionSystem SystemSpec::system() const {
  return coding::SuspensionSystem(coding::ToralAutomorphism(matrix), roof, weight, profile);
}

coding::MarkovPartition SystemSpec::partition() const {
  return coding::MarkovPartition::build(coding::ToralAutomorphism(matrix), partition_level);
}

coding::FlowFunction SystemSpec::flow_function(const coding::SuspensionSystem& sys) const {
  return f ? *f : coding::FlowFunction::natural(sys);
}

SystemSpec default_system() {
  SystemSpec s;
  s.roof = {1.0, {{1, 0, 0.12, 0.05}, {0, 1, 0.07, 0.0}, {1, 1, 0.0, 0.04}}};
  s.weight = {0.0, {{1, 0, 0.05, 0.02}, {0, 1, 0.0, 0.03}}};
  s.profile = coding::Profile::bump;
  coding::FlowFunction f;
  f.c0 = 0.4;
  f.G = {0.0, {{1, 1, 0.1, 0.0}, {0, 1, 0.0, 0.05}}};
  f.kappa = 0.6;
  f.W = s.weight;
  f.profile = coding::Profile::bump;
  s.f = f;
  return s;
}

SystemSpec linear_model() {
  SystemSpec s;
  s.profile = coding::Profile::flat;
  return s;
}

coding::TrigPoly trig_from_json(const json& j) {
  if (j.is_number()) return coding::TrigPoly::constant(j.get<double>());
  if (!j.is_object()) throw Error("trigonometric polynomial must be a number or {c, terms}");
  coding::TrigPoly t;
  t.c = get_or(j, "c", 0.0);
  if (j.contains("terms")) {
    for (const auto& e : j.at("terms")) {
      if (!e.is_array() || e.size() != 4) throw Error("trig term must be [kx, ky, a, b]");
      t.terms.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<double>(), e[3].get<double>()});
    }
  }
  return t;
}

json to_json(const coding::TrigPoly& t) {
  json terms = json::array();
  for (const auto& e : t.terms) terms.push_back(json::array({e.kx, e.ky, e.a, e.b}));
  return json{{"c", t.c}, {"terms", terms}};
}

coding::FlowFunction flow_function_from_json(const json& j) {
  coding::FlowFunction f;
  f.c0 = get_or(j, "c0", 0.0);
  if (j.contains("G")) f.G = trig_from_json(j.at("G"));
  f.kappa = get_or(j, "kappa", 0.0);
  if (j.contains("W")) f.W = trig_from_json(j.at("W"));
  f.profile = profile_from_string(get_or<std::string>(j, "profile", "flat"));
  return f;
}

json to_json(const coding::FlowFunction& f) {
  return json{{"c0", f.c0}, {"G", to_json(f.G)}, {"kappa", f.kappa}, {"W", to_json(f.W)},
              {"profile", profile_name(f.profile)}};
}

SystemSpec system_from_json(const json& j) {
  if (!j.is_object()) throw Error("system spec must be a JSON object");
  SystemSpec s;
  if (j.contains("preset")) {
    std::string p = j.at("preset").get<std::string>();
    if (p == "default") s = default_system();
    else if (p == "linear") s = linear_model();
    else throw Error("unknown system preset '" + p + "'");
  }
  if (j.contains("matrix")) {
    const auto& m = j.at("matrix");
    if (!m.is_array() || m.size() != 2 || m[0].size() != 2 || m[1].size() != 2)
      throw Error("matrix must be 2x2");
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) s.matrix[r][c] = m[r][c].get<int>();
  }
  if (j.contains("roof")) s.roof = trig_from_json(j.at("roof"));
  if (j.contains("weight")) s.weight = trig_from_json(j.at("weight"));
  if (j.contains("profile")) s.profile = profile_from_string(j.at("profile").get<std::string>());
  s.partition_level = get_or(j, "partition_level", s.partition_level);
  if (j.contains("flow_function")) {
    const auto& f = j.at("flow_function");
    if (f.is_string() && f.get<std::string>() == "natural") s.f.reset();
    else s.f = flow_function_from_json(f);
  }
  if (s.partition_level < 0 || s.partition_level > 8) throw Error("partition_level must be in [0, 8]");
  if (s.roof.lower_bound() <= 0.0) throw Error("roof must be bounded below by a positive constant");
  return s;
}

json to_json(const SystemSpec& s) {
  json j;
  j["matrix"] = json::array({json::array({s.matrix[0][0], s.matrix[0][1]}),
                             json::array({s.matrix[1][0], s.matrix[1][1]})});
  j["roof"] = to_json(s.roof);
  j["weight"] = to_json(s.weight);
  j["profile"] = profile_name(s.profile);
  j["partition_level"] = s.partition_level;
  j["flow_function"] = s.f ? to_json(*s.f) : json("natural");
  return j;
}

SystemSpec read_system(const std::string& path) { return system_from_json(read_json(path)); }

sft::TransitionMatrix matrix_from_json(const json& j) {
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s == "golden-mean") return sft::golden_mean();
    if (s.rfind("full:", 0) == 0) return sft::full_shift(std::stoi(s.substr(5)));
    throw Error("unknown shift '" + s + "'");
  }
  try {
    return sft::TransitionMatrix(j.get<std::vector<std::vector<int>>>());
  } catch (const json::exception& e) {
    throw Error(std::string("bad transition matrix: ") + e.what());
  }
}

thermo::Potential potential_from_json(const sft::TransitionMatrix& a, const json& j) {
  if (j.contains("csv")) {
    std::ifstream in(j.at("csv").get<std::string>());
    if (!in) throw Error("cannot open potential CSV " + j.at("csv").get<std::string>());
    return thermo::read_potential_csv(a, in);
  }
  int depth = get_or(j, "depth", 1);
  if (j.contains("values")) {
    auto values = j.at("values").get<std::vector<double>>();
    auto g = thermo::Potential::constant(a, depth, 0.0);
    if (values.size() != g.values.size())
      throw Error("potential needs " + std::to_string(g.values.size()) + " values at depth " +
                  std::to_string(depth));
    g.values = values;
    return g;
  }
  return thermo::Potential::constant(a, depth, get_or(j, "constant", 0.0));
}

uint64_t fnv1a(std::string_view data) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const json& j) { return hex64(fnv1a(j.dump())); }

std::string fmt(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

void write_text(const std::string& path, const std::string& text) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("write failed for " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw Error("cannot parse " + path + ": " + e.what());
  }
}

json to_json(const Manifest& m) {
  return json{{"command", m.command},
              {"config_hash", config_hash(m.config)},
              {"config", m.config},
              {"seed", m.seed},
              {"threads", m.threads},
              {"version", kVersion},
              {"libraries",
               {{"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                {"compiler", __VERSION__}}},
              {"wall_time_s", m.wall_time},
              {"outputs", m.outputs}};
}

json gibbs_json(const thermo::GibbsData& g) {
  json h = json::object(), mu = json::object();
  for (int i = 0; i < g.states->size(); ++i) h[sft::format_word(g.states->word(i))] = g.h[i];
  for (std::size_t d = 0; d < g.mu.size(); ++d) {
    json level = json::object();
    const auto& idx = *g.mu_index[d];
    for (int i = 0; i < idx.size(); ++i) level[sft::format_word(idx.word(i))] = g.mu[d][i];
    mu[std::to_string(d + 1)] = level;
  }
  return json{{"pressure", g.pressure}, {"depth", static_cast<int>(g.mu.size())}, {"k", g.k},
              {"h", h}, {"mu", mu}};
}

void write_family(const std::string& dir, const realization::LeafMeasureFamily& fam,
                  const std::string& system_hash, const std::vector<realization::LeafSegment>& segments,
                  const std::vector<std::vector<double>>& masses, std::vector<std::string>* written) {
  if (segments.size() != masses.size()) throw Error("write_family: one mass table per segment");
  json segs = json::array();
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const auto& seg = segments[s];
    if (masses[s].size() != static_cast<std::size_t>(seg.N)) throw Error("write_family: mass table size");
    std::string name = "segment_" + std::to_string(s) + ".csv";
    std::string text = "index,y,mass\n";
    for (int i = 0; i < seg.N; ++i) {
      double y = -1.0 + (2.0 * i + 1.0) / seg.N;
      text += std::to_string(i) + "," + fmt(y) + "," + fmt(masses[s][i]) + "\n";
    }
    write_text(dir + "/" + name, text);
    if (written) written->push_back(name);
    segs.push_back(json{{"anchor", point_json(seg.anchor)}, {"half_length", seg.half_length}, {"file", name}});
  }
  json head{{"rho", fam.rho()},
            {"depth", fam.depth()},
            {"N", fam.N()},
            {"measure_depth", fam.measure_depth()},
            {"half_length", fam.options().half_length},
            {"system_hash", system_hash},
            {"segments", segs}};
  write_json(dir + "/family.json", head);
  if (written) written->push_back("family.json");
}

std::vector<double> read_masses_csv(const std::string& path) {
  std::stringstream in(read_text(path));
  std::string line;
  std::getline(in, line);
  if (line != "index,y,mass") throw Error(path + ": unexpected header");
  std::vector<double> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto pos = line.rfind(',');
    if (pos == std::string::npos) throw Error(path + ": malformed row");
    out.push_back(std::stod(line.substr(pos + 1)));
  }
  return out;
}

void write_field(const std::string& base, const volume::VectorField& x, std::vector<std::string>* written) {
  static_assert(std::endian::native == std::endian::little, "field files are little-endian");
  if (x.c.empty()) throw Error("write_field: empty field");
  std::filesystem::path p(base + ".bin");
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  for (const auto& c : x.c)
    out.write(reinterpret_cast<const char*>(c.v.data()), static_cast<std::streamsize>(c.v.size() * sizeof(double)));
  if (!out) throw Error("write failed for " + p.string());
  json side{{"dim", x.c[0].dim},
            {"m", x.m()},
            {"components", x.dim()},
            {"dtype", "float64, little-endian"},
            {"order", "component-major, then x fastest"},
            {"file", p.filename().string()}};
  write_json(base + ".json", side);
  if (written) {
    written->push_back(p.filename().string());
    written->push_back(std::filesystem::path(base + ".json").filename().string());
  }
}

void write_field(const std::string& base, const volume::ScalarField& f, std::vector<std::string>* written) {
  volume::VectorField x;
  x.c.push_back(f);
  write_field(base, x, written);
}

volume::VectorField read_field(const std::string& base) {
  json side = read_json(base + ".json");
  int dim = side.at("dim").get<int>(), m = side.at("m").get<int>(), comps = side.at("components").get<int>();
  std::ifstream in(base + ".bin", std::ios::binary);
  if (!in) throw Error("cannot read " + base + ".bin");
  volume::VectorField x;
  for (int c = 0; c < comps; ++c) {
    auto f = volume::ScalarField::zeros(dim, m);
    in.read(reinterpret_cast<char*>(f.v.data()), static_cast<std::streamsize>(f.v.size() * sizeof(double)));
    if (!in) throw Error(base + ".bin is shorter than its sidecar says");
    x.c.push_back(std::move(f));
  }
  return x;
}

std::string verification_csv(const std::vector<VerificationRow>& rows) {
  std::string out = "p_x,p_y,p_s,t,lhs,rhs,rel_err\n";
  for (const auto& r : rows)
    out += fmt(r.p.x.x) + "," + fmt(r.p.x.y) + "," + fmt(r.p.s) + "," + fmt(r.t) + "," + fmt(r.lhs) + "," +
           fmt(r.rhs) + "," + fmt(r.rel_err) + "\n";
  return out;
}

}  // namespace thermoflow::io
