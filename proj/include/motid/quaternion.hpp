#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace motid {

// Unit quaternion, component order (x, y, z, w). q and -q denote the same
// rotation; callers must not rely on the sign.
struct Quaternion {
    double x = 0.0, y = 0.0, z = 0.0, w = 1.0;

    static Quaternion identity() { return {0, 0, 0, 1}; }

    double norm() const { return std::sqrt(x * x + y * y + z * z + w * w); }

    Quaternion normalized() const {
        double n = norm();
        return {x / n, y / n, z / n, w / n};
    }

    Quaternion conjugate() const { return {-x, -y, -z, w}; }

    Quaternion operator-() const { return {-x, -y, -z, -w}; }

    double dot(const Quaternion& o) const {
        return x * o.x + y * o.y + z * o.z + w * o.w;
    }

    // Hamilton product: (*this) applied after o when rotating vectors.
    Quaternion operator*(const Quaternion& o) const {
        return {w * o.x + x * o.w + y * o.z - z * o.y,
                w * o.y - x * o.z + y * o.w + z * o.x,
                w * o.z + x * o.y - y * o.x + z * o.w,
                w * o.w - x * o.x - y * o.y - z * o.z};
    }

    Eigen::Vector3d rotate(const Eigen::Vector3d& v) const {
        Eigen::Vector3d u(x, y, z);
        Eigen::Vector3d t = 2.0 * u.cross(v);
        return v + w * t + u.cross(t);
    }

    static Quaternion from_axis_angle(const Eigen::Vector3d& axis, double angle) {
        Eigen::Vector3d a = axis.normalized();
        double s = std::sin(angle / 2.0);
        return {a.x() * s, a.y() * s, a.z() * s, std::cos(angle / 2.0)};
    }

    static Quaternion from_yaw(double yaw) {
        return from_axis_angle(Eigen::Vector3d::UnitY(), yaw);
    }

    // yaw about +Y, then pitch about +X, then roll about +Z.
    static Quaternion from_euler(double yaw, double pitch, double roll) {
        return from_yaw(yaw) * from_axis_angle(Eigen::Vector3d::UnitX(), pitch) *
               from_axis_angle(Eigen::Vector3d::UnitZ(), roll);
    }

    // Angular distance accounting for the double cover. The chord-length
    // atan2 form stays accurate near zero where acos(dot) loses ~8 digits:
    // atan2(|q0-q1|, |q0+q1|) = theta/4 for rotation angle theta.
    double angle_to(const Quaternion& o) const {
        double s = dot(o) >= 0.0 ? 1.0 : -1.0;
        Quaternion diff{x - s * o.x, y - s * o.y, z - s * o.z, w - s * o.w};
        Quaternion sum{x + s * o.x, y + s * o.y, z + s * o.z, w + s * o.w};
        return 4.0 * std::atan2(diff.norm(), sum.norm());
    }
};

// Geodesic interpolation between unit quaternions. q1 is flipped onto q0's
// hemisphere; falls back to normalized lerp when the endpoints are nearly
// identical.
inline Quaternion slerp(const Quaternion& q0, Quaternion q1, double u) {
    double d = q0.dot(q1);
    if (d < 0.0) {
        q1 = -q1;
        d = -d;
    }
    if (d > 1.0 - 1e-9) {
        Quaternion out{q0.x + u * (q1.x - q0.x), q0.y + u * (q1.y - q0.y),
                       q0.z + u * (q1.z - q0.z), q0.w + u * (q1.w - q0.w)};
        return out.normalized();
    }
    double theta = std::acos(d);
    double s = std::sin(theta);
    double a = std::sin((1.0 - u) * theta) / s;
    double b = std::sin(u * theta) / s;
    return {a * q0.x + b * q1.x, a * q0.y + b * q1.y, a * q0.z + b * q1.z,
            a * q0.w + b * q1.w};
}

}  // namespace motid
