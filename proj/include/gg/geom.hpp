#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace gg {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm_sq() const { return dot(*this); }
    double norm() const { return std::sqrt(norm_sq()); }
    Vec3 normalized() const {
        const double n = norm();
        if (n < 1e-14) throw std::invalid_argument("cannot normalize near-zero vector");
        return {x / n, y / n, z / n};
    }
};

struct Mat3 {
    // row-major
    std::array<double, 9> m{};

    static Mat3 identity() {
        Mat3 r;
        r.m = {1, 0, 0, 0, 1, 0, 0, 0, 1};
        return r;
    }
    double& at(int r, int c) { return m[r * 3 + c]; }
    double at(int r, int c) const { return m[r * 3 + c]; }
    Vec3 apply(const Vec3& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.at(i, j) = at(j, i);
        return r;
    }
    Mat3 mul(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double acc = 0.0;
                for (int k = 0; k < 3; ++k) acc += at(i, k) * o.at(k, j);
                r.at(i, j) = acc;
            }
        return r;
    }
};

// Unit quaternion, [w, x, y, z], canonical sign w >= 0.
struct Quat {
    double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

    static Quat identity() { return {}; }

    static Quat from_axis_angle(const Vec3& axis, double angle_rad) {
        const Vec3 a = axis.normalized();
        const double h = 0.5 * angle_rad;
        const double s = std::sin(h);
        return Quat{std::cos(h), a.x * s, a.y * s, a.z * s}.canonical();
    }

    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

    Quat normalized() const {
        const double n = norm();
        if (n < 1e-12) throw std::invalid_argument("cannot normalize near-zero quaternion");
        return {w / n, x / n, y / n, z / n};
    }

    // Degenerate input maps to identity — used when decoding free-form
    // network outputs into a rotation.
    Quat normalized_or_identity() const {
        const double n = norm();
        if (n < 1e-12) return identity();
        return Quat{w / n, x / n, y / n, z / n}.canonical();
    }

    Quat canonical() const { return w < 0.0 ? Quat{-w, -x, -y, -z} : *this; }

    Quat conjugate() const { return {w, -x, -y, -z}; }

    Quat mul(const Quat& o) const {
        return {w * o.w - x * o.x - y * o.y - z * o.z,
                w * o.x + x * o.w + y * o.z - z * o.y,
                w * o.y - x * o.z + y * o.w + z * o.x,
                w * o.z + x * o.y - y * o.x + z * o.w};
    }

    Vec3 rotate(const Vec3& v) const {
        // q v q* expanded via the cross-product form
        const Vec3 u{x, y, z};
        const Vec3 t = u.cross(v) * 2.0;
        return v + t * w + u.cross(t);
    }

    Mat3 to_matrix() const {
        Mat3 r;
        r.m = {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
               2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
               2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
        return r;
    }

    // Angle of the relative rotation between two unit quaternions, radians.
    double angle_to(const Quat& o) const {
        double dot = std::abs(w * o.w + x * o.x + y * o.y + z * o.z);
        if (dot > 1.0) dot = 1.0;
        return 2.0 * std::acos(dot);
    }
};

// Eigenvalues of a symmetric 3x3 matrix by cyclic Jacobi rotations,
// returned sorted ascending. Off-diagonal entries are annihilated until
// they drop below a scale-relative floor.
inline std::array<double, 3> symmetric_eigenvalues(Mat3 a) {
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = std::abs(a.at(0, 1)) + std::abs(a.at(0, 2)) + std::abs(a.at(1, 2));
        double scale = std::abs(a.at(0, 0)) + std::abs(a.at(1, 1)) + std::abs(a.at(2, 2));
        if (scale == 0.0 || off <= 1e-15 * scale) break;
        for (int p = 0; p < 3; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                const double apq = a.at(p, q);
                if (apq == 0.0) continue;
                const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                Mat3 r = Mat3::identity();
                r.at(p, p) = c;
                r.at(q, q) = c;
                r.at(p, q) = s;
                r.at(q, p) = -s;
                a = r.transposed().mul(a).mul(r);
            }
        }
    }
    std::array<double, 3> ev{a.at(0, 0), a.at(1, 1), a.at(2, 2)};
    if (ev[0] > ev[1]) std::swap(ev[0], ev[1]);
    if (ev[1] > ev[2]) std::swap(ev[1], ev[2]);
    if (ev[0] > ev[1]) std::swap(ev[0], ev[1]);
    return ev;
}

// Eigenvalues (ascending) plus the matching orthonormal eigenvectors.
struct EigenSystem {
    std::array<double, 3> values;
    std::array<Vec3, 3> axes;
};

inline EigenSystem symmetric_eigensystem(Mat3 a) {
    Mat3 v = Mat3::identity();
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = std::abs(a.at(0, 1)) + std::abs(a.at(0, 2)) + std::abs(a.at(1, 2));
        double scale = std::abs(a.at(0, 0)) + std::abs(a.at(1, 1)) + std::abs(a.at(2, 2));
        if (scale == 0.0 || off <= 1e-15 * scale) break;
        for (int p = 0; p < 3; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                const double apq = a.at(p, q);
                if (apq == 0.0) continue;
                const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                Mat3 r = Mat3::identity();
                r.at(p, p) = c;
                r.at(q, q) = c;
                r.at(p, q) = s;
                r.at(q, p) = -s;
                a = r.transposed().mul(a).mul(r);
                v = v.mul(r);
            }
        }
    }
    EigenSystem es;
    std::array<int, 3> order{0, 1, 2};
    const std::array<double, 3> d{a.at(0, 0), a.at(1, 1), a.at(2, 2)};
    if (d[order[0]] > d[order[1]]) std::swap(order[0], order[1]);
    if (d[order[1]] > d[order[2]]) std::swap(order[1], order[2]);
    if (d[order[0]] > d[order[1]]) std::swap(order[0], order[1]);
    for (int k = 0; k < 3; ++k) {
        es.values[k] = d[order[k]];
        es.axes[k] = Vec3{v.at(0, order[k]), v.at(1, order[k]), v.at(2, order[k])};
    }
    return es;
}

// Rigid pose: translation in meters plus unit quaternion.
struct Pose {
    Vec3 r;
    Quat q;

    // Flat layout [r_x, r_y, r_z, q_w, q_x, q_y, q_z].
    std::array<double, 7> to_vector7() const { return {r.x, r.y, r.z, q.w, q.x, q.y, q.z}; }

    static Pose from_vector7(const std::array<double, 7>& v) {
        Pose p;
        p.r = {v[0], v[1], v[2]};
        p.q = Quat{v[3], v[4], v[5], v[6]}.normalized_or_identity();
        return p;
    }
};

}  // namespace gg
