#include "stlrrt/error.hpp"
#include "stlrrt/scenario.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace stlrrt;

namespace {

struct Options {
  std::string scenario;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> iters;
  std::string trajectory;
  std::optional<double> dt;
  int frames = 100;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw InvalidArgument("cannot write '" + path.string() + "'");
  f << text << '\n';
}

int run_encode(const Options& o) {
  const Scenario sc = load_scenario(o.scenario);
  const Encoding enc = encode_scenario(sc);
  fs::create_directories(o.out);
  const std::string text = encoding_json(sc, enc);
  write_text(fs::path(o.out) / "encoding.json", text);
  std::cout << text << '\n';
  return 0;
}

int run_plan(const Options& o) {
  const Scenario sc = load_scenario(o.scenario);
  const Encoding enc = encode_scenario(sc);
  const PlanResult res = plan_scenario(sc, enc, o.seed, o.iters);
  const double rho = monitor_scenario(sc, res.trajectory.states);
  fs::create_directories(o.out);
  const fs::path out(o.out);
  write_text(out / "encoding.json", encoding_json(sc, enc));
  write_csv(res.trajectory, (out / "trajectory.csv").string());
  const std::string stats = stats_json(sc, res, rho, enc.robustness());
  write_text(out / "stats.json", stats);
  write_barrier_frames(enc.barrier(), o.frames, (out / "barrier_frames.csv").string());
  std::cout << stats << '\n';
  return 0;
}

int run_simulate(const Options& o) {
  const Scenario sc = load_scenario(o.scenario);
  const Encoding enc = encode_scenario(sc);
  const double dt = o.dt.value_or(sc.simulate_dt);
  const Rollout ro = simulate_scenario(sc, enc, sc.x0, dt);
  const double rho = monitor_scenario(sc, ro.trajectory.states);
  fs::create_directories(o.out);
  write_csv(ro.trajectory, (fs::path(o.out) / "rollout.csv").string());
  json j{{"dt", dt},
         {"knots", ro.trajectory.size()},
         {"min_barrier", ro.min_barrier},
         {"robustness", rho},
         {"r_star", enc.robustness()}};
  write_text(fs::path(o.out) / "simulate.json", j.dump(2));
  std::cout << j.dump(2) << '\n';
  return 0;
}

int run_monitor(const Options& o) {
  const Scenario sc = load_scenario(o.scenario);
  if (o.trajectory.empty()) throw InvalidArgument("monitor needs --trajectory");
  const Trajectory traj = read_csv(o.trajectory, sc.dynamics.n());
  const double rho = monitor_scenario(sc, traj.states);
  std::cout << json{{"robustness", rho}, {"formula", to_string(sc.formula)}}.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"STL planning with time-varying barrier sets and RRT*"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--scenario", o.scenario, "scenario JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory");
  };
  CLI::App* enc = app.add_subcommand("encode", "solve the barrier parameter LP per disjunct");
  CLI::App* pl = app.add_subcommand("plan", "encode, then run the planner");
  CLI::App* sim = app.add_subcommand("simulate", "encode, then roll out the CBF-QP controller");
  CLI::App* mon = app.add_subcommand("monitor", "evaluate robustness of a trajectory CSV");
  for (CLI::App* sub : {enc, pl, sim, mon}) {
    common(sub);
    sub->add_option("--seed", o.seed, "planner seed");
    sub->add_option("--iters", o.iters, "planner iterations");
  }
  pl->add_option("--frames", o.frames, "barrier frames to export");
  sim->add_option("--dt", o.dt, "rollout step");
  mon->add_option("--trajectory", o.trajectory, "trajectory CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    if (enc->parsed()) return run_encode(o);
    if (pl->parsed()) return run_plan(o);
    if (sim->parsed()) return run_simulate(o);
    return run_monitor(o);
  } catch (const Error& e) {
    std::cerr << json{{"error", e.code()}, {"message", e.what()}}.dump() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << json{{"error", "IoError"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "InternalError"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
}
