#include "crepe/camera.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "crepe/errors.hpp"

namespace crepe {

UcmCamera::UcmCamera(double fx, double fy, double cx, double cy, double xi, int width, int height)
    : fx_(fx), fy_(fy), cx_(cx), cy_(cy), xi_(xi), width_(width), height_(height) {
    if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
        throw InputError("UcmCamera: focal lengths must be positive and finite");
    }
    if (!std::isfinite(cx) || !std::isfinite(cy)) {
        throw InputError("UcmCamera: principal point must be finite");
    }
    if (!(xi >= 0.0 && xi <= 1.0)) {
        throw InputError("UcmCamera: xi must lie in [0, 1], got " + std::to_string(xi));
    }
    if (width < 1 || height < 1) {
        throw InputError("UcmCamera: image size must be positive");
    }
}

double orthonormality_error(const Eigen::Matrix3d& rotation) {
    if (!rotation.allFinite() || rotation.determinant() <= 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    const Eigen::Matrix3d gram = rotation.transpose() * rotation;
    return (gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
}

Eigen::Matrix3d project_to_rotation(const Eigen::Matrix3d& m) {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
    d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    return svd.matrixU() * d * svd.matrixV().transpose();
}

RigidTransform::RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation,
                               double tolerance)
    : rotation_(rotation), translation_(translation) {
    if (!translation.allFinite()) {
        throw InputError("RigidTransform: translation must be finite");
    }
    const double err = orthonormality_error(rotation);
    if (!(err <= tolerance) || std::abs(rotation.determinant() - 1.0) > tolerance) {
        throw InputError("RigidTransform: rotation is not a proper orthonormal matrix (error " +
                         std::to_string(err) + ")");
    }
}

RigidTransform RigidTransform::identity() {
    return RigidTransform(Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero());
}

RigidTransform RigidTransform::inverse() const {
    const Eigen::Matrix3d rt = rotation_.transpose();
    return RigidTransform(rt, -(rt * translation_));
}

RigidTransform RigidTransform::operator*(const RigidTransform& other) const {
    return RigidTransform(rotation_ * other.rotation_, rotation_ * other.translation_ + translation_);
}

Ray::Ray(const Eigen::Vector3d& direction) {
    const double n = direction.norm();
    if (!std::isfinite(n) || n == 0.0) {
        throw InputError("Ray: direction must be finite and non-zero");
    }
    direction_ = direction / n;
}

Ray ucm_unproject(const UcmCamera& cam, const Eigen::Vector2d& pixel) {
    if (!pixel.allFinite()) {
        throw InputError("ucm_unproject: pixel must be finite");
    }
    const double x = (pixel.x() - cam.cx()) / cam.fx();
    const double y = (pixel.y() - cam.cy()) / cam.fy();
    const double xi = cam.xi();
    const double r2 = x * x + y * y;
    const double gamma = (xi + std::sqrt(1.0 + (1.0 - xi * xi) * r2)) / (1.0 + r2);
    return Ray(Eigen::Vector3d(gamma * x, gamma * y, gamma - xi));
}

double guard_denominator(double beta) {
    if (std::abs(beta) >= kBetaGuard) {
        return beta;
    }
    return std::signbit(beta) ? -kBetaGuard : kBetaGuard;
}

Eigen::Vector2d ucm_project(const UcmCamera& cam, const Eigen::Vector3d& point) {
    if (!point.allFinite()) {
        throw InputError("ucm_project: point must be finite");
    }
    const double n = point.norm();
    if (n == 0.0) {
        throw InputError("ucm_project: point must have non-zero norm");
    }
    const double beta = guard_denominator(point.z() + cam.xi() * n);
    return {cam.fx() * point.x() / beta + cam.cx(), cam.fy() * point.y() / beta + cam.cy()};
}

RigidTransform relative_transform(const RigidTransform& pose_source, const RigidTransform& pose_query) {
    return pose_query.inverse() * pose_source;
}

Eigen::Vector3d lift_point(const Ray& ray, double r) {
    if (!(r > 0.0) || !std::isfinite(r)) {
        throw InputError("lift_point: radial distance must be positive and finite");
    }
    return r * ray.direction();
}

}  // namespace crepe
