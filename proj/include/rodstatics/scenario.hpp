// Robot descriptions, actuation protocols, load files, sweep driver and
// trajectory records.
//
// All on-disk formats are JSON documents with a format_version field and a
// strict schema; anything unexpected is rejected with the offending field
// path in the message. Trajectory CSVs are written with 17 significant
// digits so positions round-trip exactly.

#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "solver.hpp"

namespace rodstatics {

// =============================================================================
// Section properties
// =============================================================================

/// Material and cross-section of a circular rod.
struct SectionParams {
  double youngs_modulus = 0.0;
  double diameter = 0.0;
  double poisson_ratio = 0.3;
  double shear_correction = 0.9;
};

/// Diagonal stiffness diag(EI, EI, GJ, ks G A, ks G A, E A) for a solid
/// circular section, in the [angular; linear] strain ordering with the
/// tangent along the third linear axis.
[[nodiscard]] inline Matrix6d section_stiffness(const SectionParams& p) {
  const double d2 = p.diameter * p.diameter;
  const double area = M_PI * d2 / 4.0;
  const double inertia = M_PI * d2 * d2 / 64.0;
  const double polar = 2.0 * inertia;
  const double shear_modulus =
      p.youngs_modulus / (2.0 * (1.0 + p.poisson_ratio));
  Matrix6d k = Matrix6d::Zero();
  k(0, 0) = k(1, 1) = p.youngs_modulus * inertia;
  k(2, 2) = shear_modulus * polar;
  k(3, 3) = k(4, 4) = p.shear_correction * shear_modulus * area;
  k(5, 5) = p.youngs_modulus * area;
  return k;
}

// =============================================================================
// Robot description
// =============================================================================

struct RodDescription {
  int motor = 0;
  int element_count = 0;
  double element_length = 0.0;
  Pose install_pose;
  Pose platform_attachment;
  std::optional<SectionParams> section;
  std::optional<Twist> natural_strain;
};

struct RobotDescription {
  int format_version = 1;
  std::string name;
  std::string notes;
  SectionParams section;
  Twist natural_strain = ElementMaterial::straight_strain();
  std::vector<MotorAxis> motors;
  std::vector<RodDescription> rods;
};

namespace detail {

using nlohmann::json;

[[nodiscard]] inline const json& require(const json& j, const std::string& key,
                                         const std::string& path) {
  if (!j.is_object() || !j.contains(key)) {
    throw SchemaError(path + "." + key + ": missing required field");
  }
  return j.at(key);
}

[[nodiscard]] inline double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) {
    throw SchemaError(path + ": expected a number");
  }
  return j.get<double>();
}

[[nodiscard]] inline int as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) {
    throw SchemaError(path + ": expected an integer");
  }
  return j.get<int>();
}

[[nodiscard]] inline Vector3d as_vec3(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) {
    throw SchemaError(path + ": expected an array of 3 numbers");
  }
  Vector3d v;
  for (int i = 0; i < 3; ++i) {
    v[i] = as_number(j.at(i), path + "[" + std::to_string(i) + "]");
  }
  return v;
}

[[nodiscard]] inline Twist as_twist(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 6) {
    throw SchemaError(path + ": expected an array of 6 numbers");
  }
  Twist t;
  for (int i = 0; i < 6; ++i) {
    t[i] = as_number(j.at(i), path + "[" + std::to_string(i) + "]");
  }
  return t;
}

[[nodiscard]] inline Pose as_pose(const json& j, const std::string& path) {
  Pose g;
  const json& rot = require(j, "rotation", path);
  if (!rot.is_array() || rot.size() != 3) {
    throw SchemaError(path + ".rotation: expected 3 rows of 3 numbers");
  }
  for (int r = 0; r < 3; ++r) {
    const json& row = rot.at(r);
    if (!row.is_array() || row.size() != 3) {
      throw SchemaError(path + ".rotation: expected 3 rows of 3 numbers");
    }
    for (int c = 0; c < 3; ++c) {
      g.rotation(r, c) = as_number(row.at(c), path + ".rotation");
    }
  }
  g.position = as_vec3(require(j, "position", path), path + ".position");
  if (!is_valid_pose(g)) {
    throw SchemaError(path + ": rotation is not orthonormal with det +1");
  }
  return g;
}

[[nodiscard]] inline SectionParams as_section(const json& j,
                                              const std::string& path) {
  SectionParams p;
  p.youngs_modulus =
      as_number(require(j, "youngs_modulus", path), path + ".youngs_modulus");
  p.diameter = as_number(require(j, "diameter", path), path + ".diameter");
  if (j.contains("poisson_ratio")) {
    p.poisson_ratio = as_number(j.at("poisson_ratio"), path + ".poisson_ratio");
  }
  if (j.contains("shear_correction")) {
    p.shear_correction =
        as_number(j.at("shear_correction"), path + ".shear_correction");
  }
  if (!(p.youngs_modulus > 0.0)) {
    throw SchemaError(path + ".youngs_modulus: must be positive");
  }
  if (!(p.diameter > 0.0)) {
    throw SchemaError(path + ".diameter: must be positive");
  }
  if (!(p.poisson_ratio > -1.0 && p.poisson_ratio < 0.5)) {
    throw SchemaError(path + ".poisson_ratio: must lie in (-1, 0.5)");
  }
  if (!(p.shear_correction > 0.0)) {
    throw SchemaError(path + ".shear_correction: must be positive");
  }
  return p;
}

inline void check_version(const json& j, const std::string& path) {
  const int v = as_int(require(j, "format_version", path),
                       path + ".format_version");
  if (v != 1) {
    throw SchemaError(path + ".format_version: unsupported version " +
                      std::to_string(v));
  }
}

[[nodiscard]] inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open " + path);
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
  return j;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot open " + path + " for writing");
  }
  out << text;
  if (!out) {
    throw Error("failed writing " + path);
  }
}

[[nodiscard]] inline json pose_to_json(const Pose& g) {
  json rot = json::array();
  for (int r = 0; r < 3; ++r) {
    rot.push_back({g.rotation(r, 0), g.rotation(r, 1), g.rotation(r, 2)});
  }
  return {{"rotation", rot},
          {"position", {g.position.x(), g.position.y(), g.position.z()}}};
}

[[nodiscard]] inline NodeId as_node_id(const json& j, const std::string& path) {
  if (j.is_string()) {
    if (j.get<std::string>() == "ee") {
      return NodeId::EndEffector_();
    }
    throw SchemaError(path + ": expected \"ee\" or {rod, node}");
  }
  if (!j.is_object()) {
    throw SchemaError(path + ": expected \"ee\" or {rod, node}");
  }
  return NodeId::Interior_(as_int(require(j, "rod", path), path + ".rod"),
                           as_int(require(j, "node", path), path + ".node"));
}

[[nodiscard]] inline json node_id_to_json(const NodeId& id) {
  if (id.kind == NodeId::Kind::EndEffector) {
    return "ee";
  }
  return {{"rod", id.rod}, {"node", id.node}};
}

}  // namespace detail

[[nodiscard]] inline RobotDescription description_from_json(
    const nlohmann::json& j) {
  using detail::require;
  RobotDescription d;
  detail::check_version(j, "robot");
  d.name = require(j, "name", "robot").get<std::string>();
  if (j.contains("notes")) {
    d.notes = j.at("notes").get<std::string>();
  }
  d.section = detail::as_section(require(j, "section", "robot"),
                                 "robot.section");
  if (j.contains("natural_strain")) {
    d.natural_strain =
        detail::as_twist(j.at("natural_strain"), "robot.natural_strain");
  }
  const nlohmann::json& motors = require(j, "motors", "robot");
  if (!motors.is_array() || motors.empty()) {
    throw SchemaError("robot.motors: expected a non-empty array");
  }
  for (std::size_t m = 0; m < motors.size(); ++m) {
    const std::string path = "robot.motors[" + std::to_string(m) + "]";
    MotorAxis axis;
    axis.direction =
        detail::as_vec3(require(motors.at(m), "direction", path),
                        path + ".direction");
    axis.point = detail::as_vec3(require(motors.at(m), "point", path),
                                 path + ".point");
    if (std::abs(axis.direction.norm() - 1.0) > 1e-12) {
      throw SchemaError(path + ".direction: must be a unit vector");
    }
    d.motors.push_back(axis);
  }
  const nlohmann::json& rods = require(j, "rods", "robot");
  if (!rods.is_array() || rods.empty()) {
    throw SchemaError("robot.rods: expected a non-empty array");
  }
  for (std::size_t k = 0; k < rods.size(); ++k) {
    const std::string path = "robot.rods[" + std::to_string(k) + "]";
    const nlohmann::json& rj = rods.at(k);
    RodDescription rod;
    rod.motor = detail::as_int(require(rj, "motor", path), path + ".motor");
    if (rod.motor < 0 || rod.motor >= static_cast<int>(d.motors.size())) {
      throw SchemaError(path + ".motor: references motor " +
                        std::to_string(rod.motor) + " but only " +
                        std::to_string(d.motors.size()) + " motors defined");
    }
    rod.element_count = detail::as_int(require(rj, "element_count", path),
                                       path + ".element_count");
    if (rod.element_count < 1) {
      throw SchemaError(path + ".element_count: must be at least 1");
    }
    rod.element_length = detail::as_number(
        require(rj, "element_length", path), path + ".element_length");
    if (!(rod.element_length > 0.0)) {
      throw SchemaError(path + ".element_length: must be positive");
    }
    rod.install_pose = detail::as_pose(require(rj, "install_pose", path),
                                       path + ".install_pose");
    rod.platform_attachment =
        detail::as_pose(require(rj, "platform_attachment", path),
                        path + ".platform_attachment");
    if (rj.contains("section")) {
      rod.section = detail::as_section(rj.at("section"), path + ".section");
    }
    if (rj.contains("natural_strain")) {
      rod.natural_strain =
          detail::as_twist(rj.at("natural_strain"), path + ".natural_strain");
    }
    d.rods.push_back(rod);
  }
  return d;
}

[[nodiscard]] inline nlohmann::json description_to_json(
    const RobotDescription& d) {
  nlohmann::json j;
  j["format_version"] = d.format_version;
  j["name"] = d.name;
  if (!d.notes.empty()) {
    j["notes"] = d.notes;
  }
  j["section"] = {{"youngs_modulus", d.section.youngs_modulus},
                  {"diameter", d.section.diameter},
                  {"poisson_ratio", d.section.poisson_ratio},
                  {"shear_correction", d.section.shear_correction}};
  j["natural_strain"] = std::vector<double>(d.natural_strain.data(),
                                            d.natural_strain.data() + 6);
  j["motors"] = nlohmann::json::array();
  for (const MotorAxis& m : d.motors) {
    j["motors"].push_back(
        {{"direction", {m.direction.x(), m.direction.y(), m.direction.z()}},
         {"point", {m.point.x(), m.point.y(), m.point.z()}}});
  }
  j["rods"] = nlohmann::json::array();
  for (const RodDescription& r : d.rods) {
    nlohmann::json rj;
    rj["motor"] = r.motor;
    rj["element_count"] = r.element_count;
    rj["element_length"] = r.element_length;
    rj["install_pose"] = detail::pose_to_json(r.install_pose);
    rj["platform_attachment"] = detail::pose_to_json(r.platform_attachment);
    if (r.section) {
      rj["section"] = {{"youngs_modulus", r.section->youngs_modulus},
                       {"diameter", r.section->diameter},
                       {"poisson_ratio", r.section->poisson_ratio},
                       {"shear_correction", r.section->shear_correction}};
    }
    if (r.natural_strain) {
      rj["natural_strain"] = std::vector<double>(
          r.natural_strain->data(), r.natural_strain->data() + 6);
    }
    j["rods"].push_back(rj);
  }
  return j;
}

[[nodiscard]] inline RobotDescription load_description(
    const std::string& path) {
  return description_from_json(detail::read_json_file(path));
}

inline void save_description(const RobotDescription& d,
                             const std::string& path) {
  detail::write_text_file(path, description_to_json(d).dump(2) + "\n");
}

/// Lower a description to the model the assembly works on. Per-rod section
/// and natural-strain overrides fall back to the document-level values.
[[nodiscard]] inline RobotModel build_model(const RobotDescription& d) {
  RobotModel model;
  model.motors = d.motors;
  for (const RodDescription& r : d.rods) {
    RodSpec spec;
    spec.element_count = r.element_count;
    spec.element_length = r.element_length;
    spec.motor_index = r.motor;
    spec.install_pose = r.install_pose;
    spec.platform_attachment = r.platform_attachment;
    const SectionParams& section = r.section ? *r.section : d.section;
    const Twist& xi0 =
        r.natural_strain ? *r.natural_strain : d.natural_strain;
    spec.material = ElementMaterial(section_stiffness(section), xi0);
    model.rods.push_back(spec);
  }
  validate_model(model);
  return model;
}

// =============================================================================
// Actuation protocol
// =============================================================================

/// Sinusoidal motor schedule theta_m(t) = scale * (sin(omega t + phase_m)
/// + offset). The ramp duration is the time the hardware takes from the zero
/// pose to the schedule start; statics only needs the sampled angles, so it
/// is carried for documentation.
struct ActuationProtocol {
  double scale = 0.0;
  double offset = 0.0;
  std::vector<double> phases;
  double omega = 0.0;
  double ramp_duration = 0.0;
  int phase_samples = 0;
};

[[nodiscard]] inline ActuationProtocol protocol_from_json(
    const nlohmann::json& j) {
  using detail::require;
  detail::check_version(j, "protocol");
  ActuationProtocol p;
  p.scale = detail::as_number(require(j, "scale", "protocol"),
                              "protocol.scale");
  p.offset = detail::as_number(require(j, "offset", "protocol"),
                               "protocol.offset");
  const nlohmann::json& phases = require(j, "phases", "protocol");
  if (!phases.is_array() || phases.empty()) {
    throw SchemaError("protocol.phases: expected a non-empty array");
  }
  for (std::size_t i = 0; i < phases.size(); ++i) {
    p.phases.push_back(detail::as_number(
        phases.at(i), "protocol.phases[" + std::to_string(i) + "]"));
  }
  p.omega = detail::as_number(require(j, "omega", "protocol"),
                              "protocol.omega");
  if (!(p.omega > 0.0)) {
    throw SchemaError("protocol.omega: must be positive");
  }
  if (j.contains("ramp_duration")) {
    p.ramp_duration =
        detail::as_number(j.at("ramp_duration"), "protocol.ramp_duration");
  }
  p.phase_samples = detail::as_int(require(j, "phase_samples", "protocol"),
                                   "protocol.phase_samples");
  if (p.phase_samples < 1) {
    throw SchemaError("protocol.phase_samples: must be at least 1");
  }
  return p;
}

[[nodiscard]] inline ActuationProtocol load_protocol(const std::string& path) {
  return protocol_from_json(detail::read_json_file(path));
}

struct ProtocolSample {
  int index = 0;
  Eigen::VectorXd theta;
};

/**
 * @brief Sampled angle schedule.
 *
 * Sample 0 is the zero pose. Samples 1 .. phase_samples+1 walk one full
 * period inclusively, so sample 1 is the post-ramp schedule start and the
 * last sample repeats its angles at phase 2*pi; that closure duplicate
 * makes phase_samples + 1 distinct angle sets overall.
 */
[[nodiscard]] inline std::vector<ProtocolSample> generate_protocol(
    const ActuationProtocol& p) {
  const int m = static_cast<int>(p.phases.size());
  const double period = 2.0 * M_PI / p.omega;
  std::vector<ProtocolSample> out;
  out.push_back({0, Eigen::VectorXd::Zero(m)});
  for (int i = 0; i <= p.phase_samples; ++i) {
    const double t = period * static_cast<double>(i) /
                     static_cast<double>(p.phase_samples);
    Eigen::VectorXd theta(m);
    for (int j = 0; j < m; ++j) {
      theta[j] = p.scale * (std::sin(p.omega * t + p.phases[j]) + p.offset);
    }
    out.push_back({i + 1, theta});
  }
  return out;
}

// =============================================================================
// Loads file
// =============================================================================

[[nodiscard]] inline LoadSet loads_from_json(const nlohmann::json& j,
                                             const RobotModel& model) {
  detail::check_version(j, "loads");
  LoadSet loads;
  if (j.contains("nodal_wrenches")) {
    const nlohmann::json& arr = j.at("nodal_wrenches");
    if (!arr.is_array()) {
      throw SchemaError("loads.nodal_wrenches: expected an array");
    }
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path =
          "loads.nodal_wrenches[" + std::to_string(i) + "]";
      NodalWrench w;
      w.node = detail::as_node_id(detail::require(arr.at(i), "node", path),
                                  path + ".node");
      w.wrench = detail::as_twist(detail::require(arr.at(i), "wrench", path),
                                  path + ".wrench");
      try {
        check_node_id(model, w.node);
      } catch (const Error& e) {
        throw SchemaError(path + ".node: " + e.what());
      }
      loads.nodal_wrenches.push_back(w);
    }
  }
  if (j.contains("pulley_loads")) {
    const nlohmann::json& arr = j.at("pulley_loads");
    if (!arr.is_array()) {
      throw SchemaError("loads.pulley_loads: expected an array");
    }
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "loads.pulley_loads[" + std::to_string(i) + "]";
      PulleyLoad p;
      p.anchor = detail::as_vec3(detail::require(arr.at(i), "anchor", path),
                                 path + ".anchor");
      p.magnitude = detail::as_number(
          detail::require(arr.at(i), "magnitude", path), path + ".magnitude");
      p.node = detail::as_node_id(detail::require(arr.at(i), "node", path),
                                  path + ".node");
      try {
        check_node_id(model, p.node);
      } catch (const Error& e) {
        throw SchemaError(path + ".node: " + e.what());
      }
      loads.pulley_loads.push_back(p);
    }
  }
  return loads;
}

[[nodiscard]] inline LoadSet load_loads(const std::string& path,
                                        const RobotModel& model) {
  return loads_from_json(detail::read_json_file(path), model);
}

// =============================================================================
// Trajectory records
// =============================================================================

struct StationPose {
  double arc_length = 0.0;
  Pose pose;
};

struct SampleRecord {
  int index = 0;
  Eigen::VectorXd theta;
  Pose ee_pose;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Optional dense rod shapes, [rod][station].
  std::vector<std::vector<StationPose>> shapes;
};

struct TrajectoryRecord {
  int motor_count = 0;
  std::vector<SampleRecord> samples;
};

/// Rod poses at stations_per_element equispaced stations per element (plus
/// the rod start), via the element interpolation map.
[[nodiscard]] inline std::vector<std::vector<StationPose>> sample_shapes(
    const RobotModel& model, const GeneralizedState& q,
    int stations_per_element) {
  std::vector<std::vector<StationPose>> shapes(model.rod_count());
  if (stations_per_element < 1) {
    return shapes;
  }
  for (const ElementContext& ctx : element_contexts(model, q)) {
    const ElementKinematics kin = recover_kinematics(ctx.state);
    const double h = ctx.state.length;
    std::vector<StationPose>& rod = shapes[ctx.rod];
    if (ctx.element == 0) {
      rod.push_back({0.0, ctx.state.pose_a});
    }
    for (int j = 1; j <= stations_per_element; ++j) {
      const double local =
          h * static_cast<double>(j) / static_cast<double>(stations_per_element);
      rod.push_back({ctx.element * h + local,
                     interpolate_pose(ctx.state, kin, local)});
    }
  }
  return shapes;
}

// =============================================================================
// Sweep
// =============================================================================

struct SweepResult {
  TrajectoryRecord record;
  /// Index of the first sample that failed to converge, if any; the record
  /// then holds the samples completed before it.
  std::optional<int> failed_sample;
};

/**
 * @brief Solve the prescribed-angle equilibrium at every protocol sample.
 *
 * Warm-starts each sample from the previous solution by default; cold_start
 * solves every sample from the straight-rod guess instead.
 */
[[nodiscard]] inline SweepResult run_sweep(const RobotModel& model,
                                           const ActuationProtocol& protocol,
                                           const LoadSet& loads,
                                           SolverConfig config = {},
                                           int stations_per_element = 0,
                                           bool cold_start = false) {
  if (static_cast<int>(protocol.phases.size()) != model.motor_count()) {
    throw Error("sweep: protocol has " +
                std::to_string(protocol.phases.size()) + " phases for " +
                std::to_string(model.motor_count()) + " motors");
  }
  config.theta_mode = SolverConfig::ThetaMode::Prescribed;
  SweepResult result;
  result.record.motor_count = model.motor_count();
  const std::vector<ProtocolSample> samples = generate_protocol(protocol);
  GeneralizedState q = initial_guess(model, samples.front().theta);
  for (const ProtocolSample& sample : samples) {
    if (cold_start) {
      q = initial_guess(model, sample.theta);
    } else {
      q.motor_angles = sample.theta;
    }
    SolveReport report;
    try {
      report = solve(model, q, loads, config);
    } catch (const NoConvergence&) {
      result.failed_sample = sample.index;
      return result;
    }
    q = report.final_state;
    SampleRecord rec;
    rec.index = sample.index;
    rec.theta = sample.theta;
    rec.ee_pose = q.ee_pose;
    rec.residual = report.residual_history.back();
    rec.iterations = report.iterations;
    rec.converged = report.converged;
    rec.shapes = sample_shapes(model, q, stations_per_element);
    result.record.samples.push_back(std::move(rec));
  }
  return result;
}

// =============================================================================
// Error metrics
// =============================================================================

struct ErrorMetrics {
  std::vector<double> per_sample_mm;
  double mean_mm = 0.0;
  double max_mm = 0.0;
};

/// Pointwise end-effector position errors between two records of the same
/// samples, in millimetres.
[[nodiscard]] inline ErrorMetrics compute_error_metrics(
    const TrajectoryRecord& sim, const TrajectoryRecord& ref) {
  if (sim.samples.size() != ref.samples.size()) {
    throw Error("metrics: records have " + std::to_string(sim.samples.size()) +
                " and " + std::to_string(ref.samples.size()) + " samples");
  }
  if (sim.samples.empty()) {
    throw Error("metrics: records are empty");
  }
  ErrorMetrics em;
  for (std::size_t i = 0; i < sim.samples.size(); ++i) {
    if (sim.samples[i].index != ref.samples[i].index) {
      throw Error("metrics: sample indices disagree at position " +
                  std::to_string(i));
    }
    const double mm =
        1e3 *
        (sim.samples[i].ee_pose.position - ref.samples[i].ee_pose.position)
            .norm();
    em.per_sample_mm.push_back(mm);
    em.mean_mm += mm;
    em.max_mm = std::max(em.max_mm, mm);
  }
  em.mean_mm /= static_cast<double>(em.per_sample_mm.size());
  return em;
}

// =============================================================================
// Export / import
// =============================================================================

namespace detail {

[[nodiscard]] inline std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace detail

/// CSV with one row per sample: index, angles, end-effector position,
/// residual, iterations. 17 significant digits.
inline void export_csv(const TrajectoryRecord& record,
                       const std::string& path) {
  std::ostringstream out;
  out << "index";
  for (int m = 1; m <= record.motor_count; ++m) {
    out << ",theta" << m;
  }
  out << ",x,y,z,residual,iterations\n";
  for (const SampleRecord& s : record.samples) {
    out << s.index;
    for (int m = 0; m < record.motor_count; ++m) {
      out << "," << detail::fmt17(s.theta[m]);
    }
    out << "," << detail::fmt17(s.ee_pose.position.x()) << ","
        << detail::fmt17(s.ee_pose.position.y()) << ","
        << detail::fmt17(s.ee_pose.position.z()) << ","
        << detail::fmt17(s.residual) << "," << s.iterations << "\n";
  }
  detail::write_text_file(path, out.str());
}

/// Structured export: full poses plus optional shape stations.
inline void export_json(const TrajectoryRecord& record,
                        const std::string& path) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["motor_count"] = record.motor_count;
  j["samples"] = nlohmann::json::array();
  for (const SampleRecord& s : record.samples) {
    nlohmann::json sj;
    sj["index"] = s.index;
    sj["theta"] =
        std::vector<double>(s.theta.data(), s.theta.data() + s.theta.size());
    sj["ee_pose"] = detail::pose_to_json(s.ee_pose);
    sj["residual"] = s.residual;
    sj["iterations"] = s.iterations;
    sj["converged"] = s.converged;
    if (!s.shapes.empty() && !s.shapes.front().empty()) {
      sj["shapes"] = nlohmann::json::array();
      for (const std::vector<StationPose>& rod : s.shapes) {
        nlohmann::json rj = nlohmann::json::array();
        for (const StationPose& st : rod) {
          nlohmann::json pj = detail::pose_to_json(st.pose);
          pj["arc_length"] = st.arc_length;
          rj.push_back(pj);
        }
        sj["shapes"].push_back(rj);
      }
    }
    j["samples"].push_back(sj);
  }
  detail::write_text_file(path, j.dump(2) + "\n");
}

namespace detail {

[[nodiscard]] inline std::vector<std::string> split_csv_line(
    const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    fields.push_back(field);
  }
  return fields;
}

[[nodiscard]] inline TrajectoryRecord read_csv_trajectory(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw SchemaError(path + ": empty file");
  }
  const std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 6 || header.front() != "index") {
    throw SchemaError(path + ": unrecognized trajectory header");
  }
  const int motor_count = static_cast<int>(header.size()) - 6;
  TrajectoryRecord record;
  record.motor_count = motor_count;
  int row = 1;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    const std::vector<std::string> f = split_csv_line(line);
    if (static_cast<int>(f.size()) != motor_count + 6) {
      throw SchemaError(path + ": row " + std::to_string(row) +
                        " has the wrong field count");
    }
    SampleRecord s;
    std::size_t pos = 0;
    s.index = std::stoi(f[0]);
    s.theta.resize(motor_count);
    for (int m = 0; m < motor_count; ++m) {
      s.theta[m] = std::stod(f[1 + m], &pos);
    }
    s.ee_pose.position.x() = std::stod(f[motor_count + 1]);
    s.ee_pose.position.y() = std::stod(f[motor_count + 2]);
    s.ee_pose.position.z() = std::stod(f[motor_count + 3]);
    s.residual = std::stod(f[motor_count + 4]);
    s.iterations = std::stoi(f[motor_count + 5]);
    s.converged = true;  // the CSV carries positions only
    record.samples.push_back(std::move(s));
    ++row;
  }
  return record;
}

[[nodiscard]] inline TrajectoryRecord read_json_trajectory(
    const std::string& path) {
  const json j = read_json_file(path);
  check_version(j, "trajectory");
  TrajectoryRecord record;
  record.motor_count =
      as_int(require(j, "motor_count", "trajectory"), "trajectory.motor_count");
  const json& samples = require(j, "samples", "trajectory");
  if (!samples.is_array()) {
    throw SchemaError("trajectory.samples: expected an array");
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::string spath = "trajectory.samples[" + std::to_string(i) + "]";
    const json& sj = samples.at(i);
    SampleRecord s;
    s.index = as_int(require(sj, "index", spath), spath + ".index");
    const json& theta = require(sj, "theta", spath);
    if (!theta.is_array() ||
        static_cast<int>(theta.size()) != record.motor_count) {
      throw SchemaError(spath + ".theta: wrong angle count");
    }
    s.theta.resize(record.motor_count);
    for (int m = 0; m < record.motor_count; ++m) {
      s.theta[m] = as_number(theta.at(m), spath + ".theta");
    }
    s.ee_pose = as_pose(require(sj, "ee_pose", spath), spath + ".ee_pose");
    s.residual =
        as_number(require(sj, "residual", spath), spath + ".residual");
    s.iterations =
        as_int(require(sj, "iterations", spath), spath + ".iterations");
    s.converged = require(sj, "converged", spath).get<bool>();
    record.samples.push_back(std::move(s));
  }
  return record;
}

}  // namespace detail

/// Read a trajectory back from a .csv or .json export.
[[nodiscard]] inline TrajectoryRecord read_trajectory(const std::string& path) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") {
    return detail::read_csv_trajectory(path);
  }
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
    return detail::read_json_trajectory(path);
  }
  throw Error("read_trajectory: unrecognized extension on " + path);
}

}  // namespace rodstatics
