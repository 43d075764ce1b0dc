// Robot model and global assembly.
//
// A robot is a rigid base carrying revolute motors, a set of elastic rods,
// and a rigid end-effector platform. Each rod is a chain of linear-strain
// elements. The generalized coordinates are the motor angles, the
// end-effector pose, the interior node poses of every rod, and one strain
// slope per element; base and platform end nodes are eliminated through the
// kinematic embeddings, so no constraint equations appear.

#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "element.hpp"

namespace rodstatics {

// =============================================================================
// Model
// =============================================================================

/// Revolute axis fixed to the base: unit direction through a point, both in
/// world coordinates.
struct MotorAxis {
  Vector3d direction = Vector3d::UnitZ();
  Vector3d point = Vector3d::Zero();
};

struct RodSpec {
  int element_count = 0;
  double element_length = 0.0;
  ElementMaterial material;
  int motor_index = 0;
  /// Base node pose at zero motor angle (world frame).
  Pose install_pose;
  /// Platform node pose relative to the end-effector frame.
  Pose platform_attachment;

  [[nodiscard]] double rod_length() const {
    return element_count * element_length;
  }
};

struct RobotModel {
  std::vector<MotorAxis> motors;
  std::vector<RodSpec> rods;

  [[nodiscard]] int motor_count() const {
    return static_cast<int>(motors.size());
  }
  [[nodiscard]] int rod_count() const { return static_cast<int>(rods.size()); }
};

inline void validate_model(const RobotModel& model) {
  if (model.motors.empty() || model.rods.empty()) {
    throw Error("model: needs at least one motor and one rod");
  }
  for (std::size_t m = 0; m < model.motors.size(); ++m) {
    if (std::abs(model.motors[m].direction.norm() - 1.0) > 1e-12) {
      throw Error("model: motor " + std::to_string(m) +
                  " direction is not a unit vector");
    }
  }
  for (std::size_t k = 0; k < model.rods.size(); ++k) {
    const RodSpec& rod = model.rods[k];
    const std::string label = "model: rod " + std::to_string(k);
    if (rod.element_count < 1) {
      throw Error(label + " needs at least one element");
    }
    if (!(rod.element_length > 0.0)) {
      throw Error(label + " element length must be positive");
    }
    if (rod.motor_index < 0 || rod.motor_index >= model.motor_count()) {
      throw Error(label + " references motor " +
                  std::to_string(rod.motor_index) + " but only " +
                  std::to_string(model.motor_count()) + " motors exist");
    }
    if (!is_valid_pose(rod.install_pose) ||
        !is_valid_pose(rod.platform_attachment)) {
      throw Error(label + " has a non-rigid install or attachment pose");
    }
  }
}

// =============================================================================
// State, nodes and loads
// =============================================================================

/// Generalized coordinates. interior[k] holds the poses of rod k's nodes
/// 1..n_k-1; slopes[k] one twist per element.
struct GeneralizedState {
  Eigen::VectorXd motor_angles;
  Pose ee_pose;
  std::vector<std::vector<Pose>> interior;
  std::vector<std::vector<Twist>> slopes;
};

inline void check_state(const RobotModel& model, const GeneralizedState& q) {
  if (q.motor_angles.size() != model.motor_count() ||
      q.interior.size() != model.rods.size() ||
      q.slopes.size() != model.rods.size()) {
    throw Error("state: shape does not match the model");
  }
  for (int k = 0; k < model.rod_count(); ++k) {
    const int n = model.rods[k].element_count;
    if (static_cast<int>(q.interior[k].size()) != n - 1 ||
        static_cast<int>(q.slopes[k].size()) != n) {
      throw Error("state: rod " + std::to_string(k) +
                  " has the wrong node or slope count");
    }
  }
}

/// Addresses an independent node: the end-effector or an interior node of a
/// rod (node index in 1..element_count-1).
struct NodeId {
  enum class Kind { EndEffector, Interior };
  Kind kind = Kind::EndEffector;
  int rod = 0;
  int node = 0;

  [[nodiscard]] static NodeId EndEffector_() {
    return NodeId{Kind::EndEffector, 0, 0};
  }
  [[nodiscard]] static NodeId Interior_(int rod, int node) {
    return NodeId{Kind::Interior, rod, node};
  }
};

/// Constant wrench in the loaded node's body frame, [moment; force].
struct NodalWrench {
  NodeId node;
  Wrench wrench = Wrench::Zero();
};

/// Cable over an ideal pulley: pulls the node toward a fixed world anchor
/// with constant magnitude. Direction follows the node, so it is re-evaluated
/// at every configuration.
struct PulleyLoad {
  Vector3d anchor = Vector3d::Zero();
  double magnitude = 0.0;
  NodeId node;
};

struct LoadSet {
  std::vector<NodalWrench> nodal_wrenches;
  std::vector<PulleyLoad> pulley_loads;
};

inline void check_node_id(const RobotModel& model, const NodeId& id) {
  if (id.kind == NodeId::Kind::EndEffector) {
    return;
  }
  if (id.rod < 0 || id.rod >= model.rod_count() || id.node < 1 ||
      id.node > model.rods[id.rod].element_count - 1) {
    throw Error("load: node (rod " + std::to_string(id.rod) + ", node " +
                std::to_string(id.node) + ") is not an independent node");
  }
}

// =============================================================================
// Index map
// =============================================================================

/**
 * @brief Layout of the global tangent vector.
 *
 * Blocks in order: motor angles (one entry each), end-effector (6), interior
 * nodes rod-major (6 each), strain slopes rod-major (6 each). Putting the
 * motor block first makes the prescribed-angle reduction a plain tail view.
 */
class IndexMap {
 public:
  explicit IndexMap(const RobotModel& model) {
    validate_model(model);
    motor_count_ = model.motor_count();
    interior_base_.reserve(model.rods.size());
    slope_base_.reserve(model.rods.size());
    int cursor = motor_count_ + 6;  // motors, then the end-effector block
    for (const RodSpec& rod : model.rods) {
      interior_base_.push_back(cursor);
      cursor += 6 * (rod.element_count - 1);
    }
    for (const RodSpec& rod : model.rods) {
      slope_base_.push_back(cursor);
      cursor += 6 * rod.element_count;
    }
    dim_ = cursor;
  }

  [[nodiscard]] int motor_count() const { return motor_count_; }
  [[nodiscard]] int theta_offset(int m) const { return m; }
  [[nodiscard]] int ee_offset() const { return motor_count_; }
  [[nodiscard]] int interior_offset(int rod, int node) const {
    return interior_base_[rod] + 6 * (node - 1);
  }
  [[nodiscard]] int slope_offset(int rod, int element) const {
    return slope_base_[rod] + 6 * element;
  }
  [[nodiscard]] int node_offset(const NodeId& id) const {
    return id.kind == NodeId::Kind::EndEffector
               ? ee_offset()
               : interior_offset(id.rod, id.node);
  }

  /// Full dimension: motors + 6 * independent nodes + 6 * elements.
  [[nodiscard]] int dimension() const { return dim_; }
  /// Dimension with the motor angles prescribed.
  [[nodiscard]] int reduced_dimension() const { return dim_ - motor_count_; }

 private:
  int motor_count_ = 0;
  int dim_ = 0;
  std::vector<int> interior_base_;
  std::vector<int> slope_base_;
};

// =============================================================================
// Boundary embeddings
// =============================================================================

/// Base node pose under motor rotation, with the screw that maps a motor
/// angle increment to the node's right-trivialized twist.
struct BaseEmbedding {
  Pose pose;
  Twist screw;
};

[[nodiscard]] inline BaseEmbedding base_embedding(const RodSpec& rod,
                                                  const MotorAxis& axis,
                                                  double theta) {
  const Matrix3d r = so3_exp(theta * axis.direction);
  const Pose motor{r, axis.point - r * axis.point};
  const Pose pose = motor * rod.install_pose;
  // Spatial screw of the axis, pulled back to the node's body frame.
  const Twist spatial =
      make_twist(axis.direction, -axis.direction.cross(axis.point));
  return {pose, adjoint_group(pose.inverse()) * spatial};
}

/// Platform node pose, with the 6x6 map from an end-effector twist to the
/// node's body twist.
struct PlatformEmbedding {
  Pose pose;
  Matrix6d jacobian;
};

[[nodiscard]] inline PlatformEmbedding platform_embedding(const RodSpec& rod,
                                                          const Pose& ee) {
  return {ee * rod.platform_attachment,
          adjoint_group(rod.platform_attachment.inverse())};
}

// =============================================================================
// Element contexts and scatter
// =============================================================================

/// Where one local 6-dof block of an element lands in the global vector:
/// dz_local = transform.leftCols(width) * dq.segment(offset, width).
struct BlockTarget {
  int offset = 0;
  int width = 6;
  Matrix6d transform = Matrix6d::Identity();
};

struct ElementContext {
  int rod = 0;
  int element = 0;
  ElementState state;
  std::array<BlockTarget, 3> targets;  // pose_a, pose_b, slope
};

/**
 * @brief Resolve every element's end poses and global coupling.
 *
 * Boundary nodes go through the embeddings; the per-element targets realize
 * the projection onto global coordinates as small contractions, so the
 * sparse projection matrices never exist in memory.
 */
[[nodiscard]] inline std::vector<ElementContext> element_contexts(
    const RobotModel& model, const GeneralizedState& q) {
  check_state(model, q);
  const IndexMap idx(model);
  std::vector<ElementContext> out;
  for (int k = 0; k < model.rod_count(); ++k) {
    const RodSpec& rod = model.rods[k];
    const int n = rod.element_count;
    const BaseEmbedding base =
        base_embedding(rod, model.motors[rod.motor_index],
                       q.motor_angles[rod.motor_index]);
    const PlatformEmbedding platform = platform_embedding(rod, q.ee_pose);

    for (int e = 0; e < n; ++e) {
      ElementContext ctx;
      ctx.rod = k;
      ctx.element = e;
      ctx.state.length = rod.element_length;
      ctx.state.slope = q.slopes[k][e];

      if (e == 0) {
        ctx.state.pose_a = base.pose;
        Matrix6d t = Matrix6d::Zero();
        t.col(0) = base.screw;
        ctx.targets[0] = {idx.theta_offset(rod.motor_index), 1, t};
      } else {
        ctx.state.pose_a = q.interior[k][e - 1];
        ctx.targets[0] = {idx.interior_offset(k, e), 6, Matrix6d::Identity()};
      }

      if (e == n - 1) {
        ctx.state.pose_b = platform.pose;
        ctx.targets[1] = {idx.ee_offset(), 6, platform.jacobian};
      } else {
        ctx.state.pose_b = q.interior[k][e];
        ctx.targets[1] = {idx.interior_offset(k, e + 1), 6,
                          Matrix6d::Identity()};
      }

      ctx.targets[2] = {idx.slope_offset(k, e), 6, Matrix6d::Identity()};
      out.push_back(std::move(ctx));
    }
  }
  return out;
}

inline void scatter_vector(const ElementContext& ctx, const ElementVector& g,
                           Eigen::VectorXd& r) {
  for (int i = 0; i < 3; ++i) {
    const BlockTarget& t = ctx.targets[i];
    r.segment(t.offset, t.width) +=
        t.transform.leftCols(t.width).transpose() * g.segment<6>(6 * i);
  }
}

inline void scatter_matrix(const ElementContext& ctx, const ElementMatrix& h,
                           Eigen::MatrixXd& k) {
  for (int i = 0; i < 3; ++i) {
    const BlockTarget& ti = ctx.targets[i];
    for (int c = 0; c < 3; ++c) {
      const BlockTarget& tc = ctx.targets[c];
      k.block(ti.offset, tc.offset, ti.width, tc.width) +=
          ti.transform.leftCols(ti.width).transpose() *
          h.block<6, 6>(6 * i, 6 * c) * tc.transform.leftCols(tc.width);
    }
  }
}

namespace detail {

template <typename F>
auto with_element_label(int rod, int element, F&& f) {
  const auto label = [&] {
    return "rod " + std::to_string(rod) + " element " +
           std::to_string(element) + ": ";
  };
  try {
    return f();
  } catch (const RotationNearPi& e) {
    throw RotationNearPi(label() + e.what());
  } catch (const ElementRotationBound& e) {
    throw ElementRotationBound(label() + e.what());
  } catch (const SingularAMatrix& e) {
    throw SingularAMatrix(label() + e.what());
  }
}

}  // namespace detail

// =============================================================================
// Loads
// =============================================================================

[[nodiscard]] inline Pose node_pose(const RobotModel& model,
                                    const GeneralizedState& q,
                                    const NodeId& id) {
  check_node_id(model, id);
  return id.kind == NodeId::Kind::EndEffector ? q.ee_pose
                                              : q.interior[id.rod][id.node - 1];
}

/// Body-frame wrench of a pulley cable at the given node pose: zero moment,
/// constant-magnitude force toward the anchor.
[[nodiscard]] inline Wrench pulley_wrench(const PulleyLoad& load,
                                          const Pose& node) {
  const Vector3d d = load.anchor - node.position;
  const double dist = d.norm();
  if (dist < 1e-9) {
    throw PulleyCoincident("pulley anchor coincides with the loaded node");
  }
  const Vector3d force = (load.magnitude / dist) * d;
  return make_twist(Vector3d::Zero(), node.rotation.transpose() * force);
}

/// All external wrenches at the current configuration, resolved per node.
/// Nodal wrenches pass through; pulley loads are evaluated at the node pose.
[[nodiscard]] inline std::vector<std::pair<NodeId, Wrench>> external_wrenches(
    const RobotModel& model, const GeneralizedState& q, const LoadSet& loads) {
  std::vector<std::pair<NodeId, Wrench>> out;
  out.reserve(loads.nodal_wrenches.size() + loads.pulley_loads.size());
  for (const NodalWrench& w : loads.nodal_wrenches) {
    check_node_id(model, w.node);
    out.emplace_back(w.node, w.wrench);
  }
  for (const PulleyLoad& p : loads.pulley_loads) {
    out.emplace_back(p.node, pulley_wrench(p, node_pose(model, q, p.node)));
  }
  return out;
}

// =============================================================================
// Assembly
// =============================================================================

[[nodiscard]] inline double total_elastic_energy(const RobotModel& model,
                                                 const GeneralizedState& q) {
  double u = 0.0;
  for (const ElementContext& ctx : element_contexts(model, q)) {
    const ElementKinematics kin = detail::with_element_label(
        ctx.rod, ctx.element, [&] { return recover_kinematics(ctx.state); });
    u += element_energy(ctx.state, model.rods[ctx.rod].material, kin);
  }
  return u;
}

/**
 * @brief Global residual: elastic gradient minus external loads.
 *
 * Elements are visited in a fixed order (rod-major, then element), so the
 * result is bit-reproducible for identical inputs. Element errors propagate
 * with the rod and element index attached.
 */
[[nodiscard]] inline Eigen::VectorXd assemble_residual(
    const RobotModel& model, const GeneralizedState& q, const LoadSet& loads) {
  const IndexMap idx(model);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(idx.dimension());
  for (const ElementContext& ctx : element_contexts(model, q)) {
    const ElementMaterial& mat = model.rods[ctx.rod].material;
    const ElementKinematics kin = detail::with_element_label(
        ctx.rod, ctx.element, [&] { return recover_kinematics(ctx.state); });
    scatter_vector(ctx, element_residual(ctx.state, mat, kin), r);
  }
  for (const auto& [id, wrench] : external_wrenches(model, q, loads)) {
    r.segment<6>(idx.node_offset(id)) -= wrench;
  }
  return r;
}

/**
 * @brief Global tangent stiffness with frozen strain Jacobians.
 *
 * Pulley forces follow the configuration but contribute no stiffness term,
 * matching the frozen-derivative convention of the element tangent. The
 * mirrored scatter contractions agree only to roundoff, so the result is
 * symmetrized before returning; the symmetrized form is exact.
 */
[[nodiscard]] inline Eigen::MatrixXd assemble_tangent(
    const RobotModel& model, const GeneralizedState& q) {
  const IndexMap idx(model);
  Eigen::MatrixXd k =
      Eigen::MatrixXd::Zero(idx.dimension(), idx.dimension());
  for (const ElementContext& ctx : element_contexts(model, q)) {
    const ElementMaterial& mat = model.rods[ctx.rod].material;
    const ElementKinematics kin = detail::with_element_label(
        ctx.rod, ctx.element, [&] { return recover_kinematics(ctx.state); });
    scatter_matrix(ctx, element_tangent(ctx.state, mat, kin), k);
  }
  return 0.5 * (k + k.transpose());
}

}  // namespace rodstatics
