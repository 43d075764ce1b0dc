// Command line front end: validate inputs, solve single equilibria, run
// protocol sweeps and compare trajectories.
//
// Exit codes: 0 on success, 2 when the solver fails to converge, 1 for bad
// input or any other error.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rodstatics/scenario.hpp"

namespace {

using namespace rodstatics;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNoConvergence = 2;

Eigen::VectorXd parse_angles(const std::string& text, int expected) {
  std::vector<double> values;
  std::istringstream in(text);
  std::string field;
  while (std::getline(in, field, ',')) {
    std::size_t pos = 0;
    values.push_back(std::stod(field, &pos));
    if (pos != field.size()) {
      throw Error("--theta: cannot parse '" + field + "'");
    }
  }
  if (static_cast<int>(values.size()) != expected) {
    throw Error("--theta: got " + std::to_string(values.size()) +
                " angles, robot has " + std::to_string(expected) + " motors");
  }
  return Eigen::Map<Eigen::VectorXd>(values.data(),
                                     static_cast<long>(values.size()));
}

void write_record(const TrajectoryRecord& record, const std::string& path) {
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
    export_json(record, path);
  } else {
    export_csv(record, path);
  }
}

LoadSet maybe_loads(const std::string& path, const RobotModel& model) {
  if (path.empty()) {
    return {};
  }
  return load_loads(path, model);
}

int run_validate(const std::string& robot_path,
                 const std::string& protocol_path,
                 const std::string& loads_path) {
  const RobotDescription desc = load_description(robot_path);
  const RobotModel model = build_model(desc);
  const IndexMap idx(model);
  std::printf("robot:    %s (%d motors, %d rods, %d unknowns)\n",
              desc.name.c_str(), model.motor_count(), model.rod_count(),
              idx.dimension());
  if (!protocol_path.empty()) {
    const ActuationProtocol protocol = load_protocol(protocol_path);
    if (static_cast<int>(protocol.phases.size()) != model.motor_count()) {
      throw Error("protocol has " + std::to_string(protocol.phases.size()) +
                  " phases for " + std::to_string(model.motor_count()) +
                  " motors");
    }
    std::printf("protocol: %zu samples\n", generate_protocol(protocol).size());
  }
  if (!loads_path.empty()) {
    const LoadSet loads = maybe_loads(loads_path, model);
    std::printf("loads:    %zu nodal wrenches, %zu pulley loads\n",
                loads.nodal_wrenches.size(), loads.pulley_loads.size());
  }
  std::printf("ok\n");
  return kExitOk;
}

int run_solve(const std::string& robot_path, const std::string& theta_text,
              const std::string& loads_path, const std::string& out_path,
              const SolverConfig& config) {
  const RobotModel model = build_model(load_description(robot_path));
  const Eigen::VectorXd theta = parse_angles(theta_text, model.motor_count());
  const LoadSet loads = maybe_loads(loads_path, model);

  SolveReport report;
  try {
    report = solve(model, initial_guess(model, theta), loads, config);
  } catch (const NoConvergence& e) {
    std::fprintf(stderr, "no convergence: %s\n", e.what());
    return kExitNoConvergence;
  }

  const Pose& ee = report.final_state.ee_pose;
  std::printf("converged in %d iterations, residual %.3e\n", report.iterations,
              report.residual_history.back());
  std::printf("ee position: %.9f %.9f %.9f\n", ee.position.x(),
              ee.position.y(), ee.position.z());

  if (!out_path.empty()) {
    TrajectoryRecord record;
    record.motor_count = model.motor_count();
    SampleRecord sample;
    sample.index = 0;
    sample.theta = theta;
    sample.ee_pose = ee;
    sample.residual = report.residual_history.back();
    sample.iterations = report.iterations;
    sample.converged = report.converged;
    record.samples.push_back(sample);
    write_record(record, out_path);
  }
  return kExitOk;
}

int run_sweep_cmd(const std::string& robot_path,
                  const std::string& protocol_path,
                  const std::string& loads_path, const std::string& out_path,
                  int shapes, bool cold_start, const SolverConfig& config) {
  const RobotModel model = build_model(load_description(robot_path));
  const ActuationProtocol protocol = load_protocol(protocol_path);
  const LoadSet loads = maybe_loads(loads_path, model);

  const SweepResult result =
      run_sweep(model, protocol, loads, config, shapes, cold_start);
  write_record(result.record, out_path);

  if (result.failed_sample) {
    std::fprintf(stderr,
                 "no convergence at sample %d; wrote %zu completed samples\n",
                 *result.failed_sample, result.record.samples.size());
    return kExitNoConvergence;
  }
  int worst = 0;
  for (const SampleRecord& s : result.record.samples) {
    worst = std::max(worst, s.iterations);
  }
  std::printf("%zu samples converged (max %d iterations), wrote %s\n",
              result.record.samples.size(), worst, out_path.c_str());
  return kExitOk;
}

int run_metrics(const std::string& sim_path, const std::string& ref_path) {
  const TrajectoryRecord sim = read_trajectory(sim_path);
  const TrajectoryRecord ref = read_trajectory(ref_path);
  const ErrorMetrics em = compute_error_metrics(sim, ref);
  std::printf("samples: %zu\n", em.per_sample_mm.size());
  std::printf("mean position error: %.6f mm\n", em.mean_mm);
  std::printf("max position error:  %.6f mm\n", em.max_mm);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equilibrium solver for motor-driven elastic rod platforms"};
  app.require_subcommand(1);

  std::string robot_path, protocol_path, loads_path, out_path, theta_text;
  std::string sim_path, ref_path;
  int shapes = 0;
  bool cold_start = false;
  SolverConfig config;

  CLI::App* validate = app.add_subcommand("validate", "Check input files");
  validate->add_option("--robot", robot_path, "Robot description")->required();
  validate->add_option("--protocol", protocol_path, "Actuation protocol");
  validate->add_option("--loads", loads_path, "External loads");

  CLI::App* solve_cmd =
      app.add_subcommand("solve", "Solve one equilibrium at fixed angles");
  solve_cmd->add_option("--robot", robot_path, "Robot description")
      ->required();
  solve_cmd
      ->add_option("--theta", theta_text,
                   "Comma separated motor angles in radians")
      ->required();
  solve_cmd->add_option("--loads", loads_path, "External loads");
  solve_cmd->add_option("--out", out_path, "Write result (.csv or .json)");
  solve_cmd->add_option("--tol", config.residual_tolerance,
                        "Residual tolerance");
  solve_cmd->add_option("--max-iters", config.max_iterations,
                        "Iteration limit");

  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "Solve every sample of a protocol");
  sweep_cmd->add_option("--robot", robot_path, "Robot description")
      ->required();
  sweep_cmd->add_option("--protocol", protocol_path, "Actuation protocol")
      ->required();
  sweep_cmd->add_option("--loads", loads_path, "External loads");
  sweep_cmd->add_option("--out", out_path, "Trajectory output (.csv or .json)")
      ->required();
  sweep_cmd->add_option("--shapes", shapes,
                        "Record this many rod stations per element");
  sweep_cmd->add_flag("--cold-start", cold_start,
                      "Restart every sample from the straight guess");
  sweep_cmd->add_option("--tol", config.residual_tolerance,
                        "Residual tolerance");
  sweep_cmd->add_option("--max-iters", config.max_iterations,
                        "Iteration limit");

  CLI::App* metrics_cmd = app.add_subcommand(
      "metrics", "Compare two trajectories sample by sample");
  metrics_cmd->add_option("--sim", sim_path, "Simulated trajectory")
      ->required();
  metrics_cmd->add_option("--ref", ref_path, "Reference trajectory")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) {
      return run_validate(robot_path, protocol_path, loads_path);
    }
    if (solve_cmd->parsed()) {
      return run_solve(robot_path, theta_text, loads_path, out_path, config);
    }
    if (sweep_cmd->parsed()) {
      return run_sweep_cmd(robot_path, protocol_path, loads_path, out_path,
                           shapes, cold_start, config);
    }
    if (metrics_cmd->parsed()) {
      return run_metrics(sim_path, ref_path);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return kExitError;
}
