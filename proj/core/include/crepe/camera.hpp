#pragma once

#include <Eigen/Core>

namespace crepe {

// Unified Camera Model intrinsics. Frame convention: +X right, +Y down, +Z forward;
// pixel (i, j) covers [i, i+1) x [j, j+1) so its center sits at (i + 0.5, j + 0.5).
class UcmCamera {
public:
    // Throws InputError when fx, fy <= 0, sizes < 1, or xi outside [0, 1].
    UcmCamera(double fx, double fy, double cx, double cy, double xi, int width, int height);

    double fx() const { return fx_; }
    double fy() const { return fy_; }
    double cx() const { return cx_; }
    double cy() const { return cy_; }
    double xi() const { return xi_; }
    int width() const { return width_; }
    int height() const { return height_; }

private:
    double fx_, fy_, cx_, cy_, xi_;
    int width_, height_;
};

// Proper rigid motion x -> R x + t.
class RigidTransform {
public:
    // Throws InputError unless the rotation is orthonormal with det +1 within `tolerance`.
    RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation,
                   double tolerance = 1e-9);

    static RigidTransform identity();

    const Eigen::Matrix3d& rotation() const { return rotation_; }
    const Eigen::Vector3d& translation() const { return translation_; }

    Eigen::Vector3d apply(const Eigen::Vector3d& point) const { return rotation_ * point + translation_; }
    RigidTransform inverse() const;
    // (*this) * other applies `other` first.
    RigidTransform operator*(const RigidTransform& other) const;

private:
    Eigen::Matrix3d rotation_;
    Eigen::Vector3d translation_;
};

// Max deviation of R^T R from I, or infinity when det(R) <= 0.
double orthonormality_error(const Eigen::Matrix3d& rotation);

// Nearest proper rotation in the Frobenius sense (SVD projection).
Eigen::Matrix3d project_to_rotation(const Eigen::Matrix3d& m);

// Unit viewing direction in the camera frame.
class Ray {
public:
    // Normalizes `direction`; throws InputError on zero or non-finite input.
    explicit Ray(const Eigen::Vector3d& direction);

    const Eigen::Vector3d& direction() const { return direction_; }

private:
    Eigen::Vector3d direction_;
};

Ray ucm_unproject(const UcmCamera& cam, const Eigen::Vector2d& pixel);

// Denominator Z + xi |X| is kept away from zero with its sign preserved (|beta| >= 1e-8).
Eigen::Vector2d ucm_project(const UcmCamera& cam, const Eigen::Vector3d& point);

inline constexpr double kBetaGuard = 1e-8;

// Sign-preserving clamp of a projection denominator; zero maps to +kBetaGuard.
double guard_denominator(double beta);

// Both poses camera-to-world; result maps source-frame points to query-frame points.
RigidTransform relative_transform(const RigidTransform& pose_source, const RigidTransform& pose_query);

Eigen::Vector3d lift_point(const Ray& ray, double r);

}  // namespace crepe
