#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "thermoflow/coding.hpp"
#include "thermoflow/realization.hpp"
#include "thermoflow/thermo.hpp"
#include "thermoflow/volume.hpp"

namespace thermoflow::io {

using json = nlohmann::ordered_json;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kVersion = "0.1.0";

// Everything needed to rebuild the suspension, its partition and f.
struct SystemSpec {
  coding::ToralAutomorphism::Matrix matrix{{{2, 1}, {1, 1}}};
  coding::TrigPoly roof = coding::TrigPoly::constant(1.0);
  coding::TrigPoly weight;
  coding::Profile profile = coding::Profile::bump;
  int partition_level = 0;
  std::optional<coding::FlowFunction> f;  // nullopt: the natural f of the metric

  coding::SuspensionSystem system() const;
  coding::MarkovPartition partition() const;
  coding::FlowFunction flow_function(const coding::SuspensionSystem& sys) const;
};

// Cat map with a trigonometric roof and weight, bump profile, generic f.
SystemSpec default_system();
// Constant roof 1, zero weight, flat profile, natural f.
SystemSpec linear_model();

SystemSpec system_from_json(const json& j);
json to_json(const SystemSpec& s);
SystemSpec read_system(const std::string& path);

coding::TrigPoly trig_from_json(const json& j);
json to_json(const coding::TrigPoly& t);
coding::FlowFunction flow_function_from_json(const json& j);
json to_json(const coding::FlowFunction& f);

// "golden-mean", "full:K" or a list of 0/1 rows.
sft::TransitionMatrix matrix_from_json(const json& j);
// {"depth": d, "constant": c} | {"depth": d, "values": [...]} | {"csv": path}
thermo::Potential potential_from_json(const sft::TransitionMatrix& a, const json& j);

uint64_t fnv1a(std::string_view data);
std::string hex64(uint64_t h);
// Hash of the canonical dump of j.
std::string config_hash(const json& j);
// Shortest round-tripping decimal form.
std::string fmt(double x);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);
void write_json(const std::string& path, const json& j);
json read_json(const std::string& path);

struct Manifest {
  std::string command;
  json config;
  uint64_t seed = 0;
  int threads = 1;
  double wall_time = 0.0;
  std::vector<std::string> outputs;
};
json to_json(const Manifest& m);

// {pressure, depth, k, h: {word: value}, mu: {word: value}}, words 1-based.
json gibbs_json(const thermo::GibbsData& g);

// family.json with {rho, depth, N, system_hash, ...} and one mass CSV per
// segment ("index,y,mass").
void write_family(const std::string& dir, const realization::LeafMeasureFamily& fam,
                  const std::string& system_hash, const std::vector<realization::LeafSegment>& segments,
                  const std::vector<std::vector<double>>& masses, std::vector<std::string>* written = nullptr);
std::vector<double> read_masses_csv(const std::string& path);

// Raw little-endian float64 values (components one after another) plus a
// sidecar "<base>.json".
void write_field(const std::string& base, const volume::VectorField& x, std::vector<std::string>* written = nullptr);
void write_field(const std::string& base, const volume::ScalarField& f, std::vector<std::string>* written = nullptr);
volume::VectorField read_field(const std::string& base);

struct VerificationRow {
  coding::FlowPoint p;
  double t = 0.0;
  double lhs = 0.0, rhs = 0.0, rel_err = 0.0;
};
std::string verification_csv(const std::vector<VerificationRow>& rows);

}  // namespace thermoflow::io
