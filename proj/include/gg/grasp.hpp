#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gg/geom.hpp"
#include "gg/grippers.hpp"
#include "gg/targets.hpp"
#include "gg/voxel.hpp"

namespace gg {

// Quasi-static, analytic grasp evaluation. Deterministic by construction; no
// dynamics, no slip — just contact extraction, a two-finger antipodal
// friction-cone test, and a lift-force inequality.

constexpr double kGravity = 9.81;          // m/s^2
constexpr double kLiftSafetyFactor = 1.2;  // capacity must exceed weight by 20%
constexpr double kGripperMu = 0.8;         // elastomer fingertip assumption
constexpr double kForceCap = 50.0;         // Newtons, force-economy reference
// Touching voxel centers sit one edge apart; anything nearer than the
// diagonal spacing (sqrt(2) edges) still reads as touching. The sub-diagonal
// margin keeps grasps alive under sub-voxel pose error instead of demanding
// lattice-exact alignment, which a continuous pose search could never hit.
constexpr double kContactShell = 1.4;  // voxel edges

struct Contact {
    Vec3 position;  // meters, on an occupied target voxel face
    Vec3 normal;    // unit inward normal (into the target)
    double mu;      // effective friction at this contact
};

struct GraspOutcome {
    bool valid = true;  // false when the pose penetrated the target
    bool lifted = false;
    double stability = 0.0;      // in [0,1]; 0 unless lifted
    double applied_force = 0.0;  // Newtons
    int contact_count = 0;
};

class PenetrationError : public std::runtime_error {
public:
    explicit PenetrationError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

// Occupied voxel with at least one empty 6-neighbor (or a grid-boundary face).
inline bool is_surface_voxel(const VoxelGrid& g, int x, int y, int z) {
    if (g.at(x, y, z) == 0.0) return false;
    static constexpr int d[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    for (const auto& dd : d) {
        const int nx = x + dd[0], ny = y + dd[1], nz = z + dd[2];
        if (!g.in_bounds(nx, ny, nz) || g.at(nx, ny, nz) == 0.0) return true;
    }
    return false;
}

inline bool is_interior_voxel(const VoxelGrid& g, int x, int y, int z) {
    return g.at(x, y, z) != 0.0 && !is_surface_voxel(g, x, y, z);
}

// Pose transform: rotate about the cube center, then translate.
inline Vec3 transform_point(const Pose& pose, const Vec3& p, double cube_extent) {
    const Vec3 c{cube_extent / 2.0, cube_extent / 2.0, cube_extent / 2.0};
    return pose.q.rotate(p - c) + c + pose.r;
}

}  // namespace detail

// Surface-proximity contact extraction: a target surface voxel contributes a
// contact when some transformed gripper surface voxel center lies within
// kContactShell voxel edges of its center. The contact sits on the target
// face pointing toward that gripper voxel; the inward normal is the opposite
// direction.
// A transformed gripper voxel landing inside the target's interior is a
// penetrating pose and throws PenetrationError.
inline std::vector<Contact> extract_contacts(const TargetSample& target,
                                             const GripperSample& gripper, const Pose& pose) {
    const VoxelGrid& tg = target.grid;
    const VoxelGrid& fg = gripper.grid;
    const double edge = tg.voxel_edge();
    const double mu = std::min(target.props.friction_mu, kGripperMu);

    std::vector<Vec3> finger_pts;
    for (int x = 0; x < fg.n; ++x)
        for (int y = 0; y < fg.n; ++y)
            for (int z = 0; z < fg.n; ++z)
                if (detail::is_surface_voxel(fg, x, y, z))
                    finger_pts.push_back(
                        detail::transform_point(pose, fg.voxel_center(x, y, z), fg.cube_extent));

    // penetration check: any finger point inside an interior target voxel
    for (const Vec3& p : finger_pts) {
        const int vx = static_cast<int>(std::floor(p.x / edge));
        const int vy = static_cast<int>(std::floor(p.y / edge));
        const int vz = static_cast<int>(std::floor(p.z / edge));
        if (tg.in_bounds(vx, vy, vz) && detail::is_interior_voxel(tg, vx, vy, vz))
            throw PenetrationError("gripper voxel at target cell (" + std::to_string(vx) + "," +
                                   std::to_string(vy) + "," + std::to_string(vz) +
                                   ") penetrates the target interior");
    }

    static constexpr int faces[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0},
                                        {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    std::vector<Contact> contacts;
    for (int x = 0; x < tg.n; ++x)
        for (int y = 0; y < tg.n; ++y)
            for (int z = 0; z < tg.n; ++z) {
                if (!detail::is_surface_voxel(tg, x, y, z)) continue;
                const Vec3 c = tg.voxel_center(x, y, z);
                // nearest gripper surface point within the contact shell, but
                // not coincident (coincident overlap carries no direction)
                double best_d = edge * kContactShell;
                Vec3 best_dir{0, 0, 0};
                bool found = false;
                for (const Vec3& p : finger_pts) {
                    const Vec3 d = p - c;
                    const double dist = d.norm();
                    if (dist <= best_d && dist > 1e-12) {
                        best_d = dist;
                        best_dir = d * (1.0 / dist);
                        found = true;
                    }
                }
                if (!found) continue;
                // choose the open face most aligned with the gripper direction
                int best_f = -1;
                double best_dot = -2.0;
                for (int f = 0; f < 6; ++f) {
                    const int nx = x + faces[f][0], ny = y + faces[f][1], nz = z + faces[f][2];
                    if (tg.in_bounds(nx, ny, nz) && tg.at(nx, ny, nz) != 0.0) continue;
                    const Vec3 fd{static_cast<double>(faces[f][0]), static_cast<double>(faces[f][1]),
                                  static_cast<double>(faces[f][2])};
                    const double dot = fd.dot(best_dir);
                    if (dot > best_dot) {
                        best_dot = dot;
                        best_f = f;
                    }
                }
                if (best_f < 0) continue;
                const Vec3 fd{static_cast<double>(faces[best_f][0]),
                              static_cast<double>(faces[best_f][1]),
                              static_cast<double>(faces[best_f][2])};
                Contact ct;
                ct.position = c + fd * (0.5 * edge);
                ct.normal = -fd;  // inward
                ct.mu = mu;
                contacts.push_back(ct);
            }
    return contacts;
}

// Antipodal two-finger friction-cone test on one pair: the line between the
// contacts must lie inside both friction cones (angle to each inward normal
// at most atan(mu)).
inline bool pair_in_cones(const Contact& a, const Contact& b) {
    const Vec3 diff = b.position - a.position;
    const double len = diff.norm();
    if (len < 1e-12) return false;
    const Vec3 dir = diff * (1.0 / len);
    const double cos_a = dir.dot(a.normal);
    const double cos_b = (-dir).dot(b.normal);
    return cos_a >= std::cos(std::atan(a.mu)) && cos_b >= std::cos(std::atan(b.mu));
}

inline bool force_closure(const std::vector<Contact>& contacts) {
    for (std::size_t i = 0; i < contacts.size(); ++i)
        for (std::size_t j = i + 1; j < contacts.size(); ++j)
            if (pair_in_cones(contacts[i], contacts[j])) return true;
    return false;
}

// The antipodal pair with the largest worst-side cone margin, if any pair
// achieves closure.
inline std::optional<std::pair<std::size_t, std::size_t>> best_antipodal_pair(
    const std::vector<Contact>& contacts) {
    std::optional<std::pair<std::size_t, std::size_t>> best;
    double best_margin = -1.0;
    for (std::size_t i = 0; i < contacts.size(); ++i)
        for (std::size_t j = i + 1; j < contacts.size(); ++j) {
            const Contact& a = contacts[i];
            const Contact& b = contacts[j];
            const Vec3 diff = b.position - a.position;
            const double len = diff.norm();
            if (len < 1e-12) continue;
            const Vec3 dir = diff * (1.0 / len);
            const double m_a = dir.dot(a.normal) - std::cos(std::atan(a.mu));
            const double m_b = (-dir).dot(b.normal) - std::cos(std::atan(b.mu));
            const double margin = std::min(m_a, m_b);
            if (margin >= 0.0 && margin > best_margin) {
                best_margin = margin;
                best = {i, j};
            }
        }
    return best;
}

// Lift test plus a three-factor stability score:
//   friction margin  f1 = 1 - safety*m*g / (2*mu*F)         (0 at the limit)
//   axis alignment   f2 = max_k |closing_dir . principal_axis_k|
//   grasp centering  f3 = clamp(1 - dist(com, grasp line) / (extent/2), 0, 1)
// stability = f1 * f2 * f3, and 0 whenever the object is not lifted. The
// closing direction is the gripper's local x axis taken through the pose.
// A penetrating pose yields valid = false rather than an exception.
inline GraspOutcome simulate_grasp(const TargetSample& target, const GripperSample& gripper,
                                   const Pose& pose, double squeeze_force) {
    if (!(squeeze_force >= 0.0)) throw std::invalid_argument("squeeze force must be non-negative");
    GraspOutcome out;
    out.applied_force = squeeze_force;

    std::vector<Contact> contacts;
    try {
        contacts = extract_contacts(target, gripper, pose);
    } catch (const PenetrationError&) {
        out.valid = false;
        return out;
    }
    out.contact_count = static_cast<int>(contacts.size());
    if (contacts.size() < 2) return out;

    const auto pair = best_antipodal_pair(contacts);
    if (!pair) return out;
    const Contact& a = contacts[pair->first];
    const Contact& b = contacts[pair->second];

    const double mu = std::min(a.mu, b.mu);
    const double capacity = 2.0 * mu * squeeze_force;
    const double required = kLiftSafetyFactor * target.props.mass * kGravity;
    if (capacity < required) return out;
    out.lifted = true;

    const double f1 = std::clamp(1.0 - required / capacity, 0.0, 1.0);

    const Vec3 closing = pose.q.rotate(Vec3{1, 0, 0});
    const auto es = symmetric_eigensystem(inertia_matrix(target.grid, kPlaDensity));
    double f2 = 0.0;
    for (const Vec3& axis : es.axes) f2 = std::max(f2, std::abs(closing.dot(axis)));

    const Vec3 com = center_of_mass(target.grid);
    const Vec3 line = b.position - a.position;
    const double ll = line.norm();
    double dist = (com - a.position).norm();
    if (ll > 1e-12) {
        const Vec3 d = line * (1.0 / ll);
        const Vec3 rel = com - a.position;
        dist = (rel - d * rel.dot(d)).norm();
    }
    const double f3 = std::clamp(1.0 - dist / (target.grid.cube_extent / 2.0), 0.0, 1.0);

    out.stability = f1 * f2 * f3;
    return out;
}

// Scalar grasp score: 0.6 for the lift, 0.3 for stability, 0.1 for using as
// little force as possible. Invalid (penetrating) outcomes score zero.
inline double grasp_quality(const GraspOutcome& out, double force_cap = kForceCap) {
    if (!out.valid) return 0.0;
    const double economy = 1.0 - std::min(1.0, out.applied_force / force_cap);
    return 0.6 * (out.lifted ? 1.0 : 0.0) + 0.3 * out.stability + 0.1 * economy;
}

}  // namespace gg
