#pragma once

#include <Eigen/Geometry>
#include <cmath>
#include <vector>

#include "rems/error.hpp"

namespace rems {

/// One revolute joint followed by a fixed offset. The link transform is
/// Rot(axis, q) * Trans(offset) * Rot(rotation).
template <typename Scalar>
struct ArmLink {
  Eigen::Matrix<Scalar, 3, 1> axis = Eigen::Matrix<Scalar, 3, 1>::UnitZ();
  Eigen::Matrix<Scalar, 3, 1> offset = Eigen::Matrix<Scalar, 3, 1>::Zero();
  Eigen::Quaternion<Scalar> rotation = Eigen::Quaternion<Scalar>::Identity();
};

template <typename Scalar>
class ArmParams {
 public:
  explicit ArmParams(std::vector<ArmLink<Scalar>> links) : links_(std::move(links)) {
    using std::abs;
    for (const auto& l : links_) {
      if (abs(l.axis.norm() - Scalar(1)) > Scalar(1e-9)) {
        throw Error(ErrorKind::invalid_argument, "arm joint axes must be unit length");
      }
      if (abs(l.rotation.norm() - Scalar(1)) > Scalar(1e-9)) {
        throw Error(ErrorKind::invalid_argument, "arm fixed rotations must be unit quaternions");
      }
    }
  }
  std::size_t dof() const noexcept { return links_.size(); }
  const std::vector<ArmLink<Scalar>>& links() const noexcept { return links_; }

 private:
  std::vector<ArmLink<Scalar>> links_;
};

template <typename Scalar>
struct Pose3 {
  Eigen::Matrix<Scalar, 3, 1> position = Eigen::Matrix<Scalar, 3, 1>::Zero();
  Eigen::Quaternion<Scalar> orientation = Eigen::Quaternion<Scalar>::Identity();
};

using Pose3d = Pose3<double>;
using ArmParamsd = ArmParams<double>;

/// Base-to-tip pose for the given joint angles. Throws DofMismatch.
template <typename Scalar, typename Derived>
Pose3<Scalar> arm_fk(const Eigen::MatrixBase<Derived>& joints, const ArmParams<Scalar>& params) {
  if (static_cast<std::size_t>(joints.size()) != params.dof()) {
    throw Error(ErrorKind::dof_mismatch, "expected " + std::to_string(params.dof()) + " joint values, got " +
                                             std::to_string(joints.size()));
  }
  Pose3<Scalar> pose;
  for (std::size_t i = 0; i < params.dof(); ++i) {
    const auto& link = params.links()[i];
    const Eigen::Quaternion<Scalar> joint(
        Eigen::AngleAxis<Scalar>(joints(static_cast<Eigen::Index>(i)), link.axis));
    pose.orientation = pose.orientation * joint;
    pose.position += pose.orientation * link.offset;
    pose.orientation = (pose.orientation * link.rotation).normalized();
  }
  return pose;
}

}  // namespace rems
