#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "thermoflow/parallel.hpp"

using namespace thermoflow;
using cli::json;

namespace {

int fail(int code, const std::string& kind, const std::string& message, const json& extra = json::object()) {
  json e{{"error", kind}, {"message", message}, {"exit_code", code}};
  for (auto& [k, v] : extra.items()) e[k] = v;
  std::cerr << e.dump() << "\n";
  return code;
}

void add_common(CLI::App* app, cli::Context& ctx, std::string& config_path, int& threads, double& tol,
                int& depth, int& max_power_iters) {
  app->add_option("--config", config_path, "experiment config (JSON)");
  app->add_option("--out", ctx.out, "output directory")->capture_default_str();
  app->add_option("--seed", ctx.seed, "random seed")->capture_default_str();
  app->add_option("--threads", threads, "worker threads (default THERMOFLOW_THREADS, else 1)");
  app->add_option("--tol", tol, "tolerance override");
  app->add_option("--depth", depth, "potential or table depth");
  app->add_option("--max-power-iters", max_power_iters, "power iteration budget");
}

}  // namespace

int main(int argc, char** argv) {
  const auto& names = cli::subcommands();
  if (argc >= 2) {
    std::string first = argv[1];
    bool is_flag = !first.empty() && first[0] == '-';
    if (!is_flag && std::find(names.begin(), names.end(), first) == names.end())
      return fail(2, "unknown_subcommand", "unknown subcommand '" + first + "'",
                  json{{"subcommand", first}, {"known", names}});
  }

  CLI::App app{"thermoflow: pressure, coding, leaf measures and volume correction"};
  app.require_subcommand(1);
  cli::Context ctx;
  std::string config_path, check;
  int threads = 0, depth = 0, max_power_iters = 0;
  double tol = 0.0;
  for (const auto& n : names) {
    auto* sub = app.add_subcommand(n, cli::describe(n));
    add_common(sub, ctx, config_path, threads, tol, depth, max_power_iters);
    if (n == "verify")
      sub->add_option("check", check, "which identity to check")->required()->check(CLI::IsMember(cli::checks()));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(2, "usage", e.what());
  }

  auto* sub = app.get_subcommands().front();
  ctx.command = sub->get_name() + (check.empty() ? "" : " " + check);
  auto start = std::chrono::steady_clock::now();
  try {
    if (!config_path.empty()) ctx.config = io::read_json(config_path);
    if (!ctx.config.is_object()) throw io::Error("config must be a JSON object");
    if (sub->count("--threads")) {
      if (threads <= 0) throw io::Error("--threads must be positive");
      ctx.threads = threads;
      // the volume stencils read the environment
      setenv("THERMOFLOW_THREADS", std::to_string(threads).c_str(), 1);
    }
    if (sub->count("--tol")) ctx.tol = tol;
    if (sub->count("--depth")) ctx.depth = depth;
    if (sub->count("--max-power-iters")) ctx.max_power_iters = max_power_iters;
  } catch (const std::exception& e) {
    return fail(2, "invalid_config", e.what());
  }

  int code = 0;
  try {
    const std::string& n = sub->get_name();
    if (n == "sft") cli::run_sft(ctx);
    else if (n == "pressure") cli::run_pressure(ctx);
    else if (n == "rho") cli::run_rho(ctx);
    else if (n == "gibbs") cli::run_gibbs(ctx);
    else if (n == "partition") cli::run_partition(ctx);
    else if (n == "code") cli::run_code(ctx);
    else if (n == "realize") cli::run_realize(ctx);
    else if (n == "verify") cli::run_verify(ctx, check);
    else cli::run_volume(ctx);
  } catch (const cli::CheckFailed& e) {
    code = fail(1, "check_failed", e.what(), json{{"command", ctx.command}});
  } catch (const io::Error& e) {
    return fail(2, "invalid_config", e.what(), json{{"command", ctx.command}});
  } catch (const std::exception& e) {
    return fail(3, "runtime", e.what(), json{{"command", ctx.command}});
  }

  io::Manifest m;
  m.command = ctx.command;
  m.config = json{{"config", ctx.config},
                  {"seed", ctx.seed},
                  {"tol", ctx.tol ? json(*ctx.tol) : json(nullptr)},
                  {"depth", ctx.depth ? json(*ctx.depth) : json(nullptr)},
                  {"max_power_iters", ctx.max_power_iters ? json(*ctx.max_power_iters) : json(nullptr)}};
  m.seed = ctx.seed;
  m.threads = resolve_threads(ctx.threads);
  m.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  m.outputs = ctx.outputs;
  json mj = io::to_json(m);
  mj["libraries"]["CLI11"] = CLI11_VERSION;
  try {
    io::write_json(ctx.path("manifest.json"), mj);
  } catch (const std::exception& e) {
    return fail(3, "runtime", e.what());
  }
  return code;
}
