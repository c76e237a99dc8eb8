#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "thermoflow/io.hpp"

namespace thermoflow::cli {

using io::json;

// Verification ran but missed its tolerance.
class CheckFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Context {
  std::string command;  // "verify holonomy" etc.
  json config = json::object();
  std::string out = "out";
  uint64_t seed = 1;
  int threads = 0;
  std::optional<double> tol;
  std::optional<int> depth;
  std::optional<int> max_power_iters;
  std::vector<std::string> outputs;

  // Writes below out and records the file name for the manifest.
  void write(const std::string& name, const std::string& text);
  void write_json(const std::string& name, const json& j);
  std::string path(const std::string& name) const { return out + "/" + name; }
};

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"sft",  "pressure", "rho",    "gibbs", "partition",
                                                 "code", "realize",  "verify", "volume"};
  return names;
}
inline const char* describe(const std::string& name) {
  if (name == "sft") return "enumerate admissible words";
  if (name == "pressure") return "topological pressure by partition sums and transfer operator";
  if (name == "rho") return "root rho of P(-rho g) = 0";
  if (name == "gibbs") return "Gibbs measure cylinder tables";
  if (name == "partition") return "build and check the Markov partition";
  if (name == "code") return "itineraries and pi_A round trips";
  if (name == "realize") return "leaf measure family on registered segments";
  if (name == "verify") return "check one identity of the realized family";
  if (name == "volume") return "mollify and Poisson-correct a conformal vector field";
  return "";
}
inline const std::vector<std::string>& checks() {
  static const std::vector<std::string> names = {"radon-nikodym", "holonomy", "telescoping",
                                                 "deformed-cocycle", "rho-one"};
  return names;
}

void run_sft(Context& ctx);
void run_pressure(Context& ctx);
void run_rho(Context& ctx);
void run_gibbs(Context& ctx);
void run_partition(Context& ctx);
void run_code(Context& ctx);
void run_realize(Context& ctx);
void run_verify(Context& ctx, const std::string& check);
void run_volume(Context& ctx);

}  // namespace thermoflow::cli
