#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "gg/geom.hpp"

namespace gg {

// Binary occupancy grid over a fixed bounding cube. Linear index is
// (x*n + y)*n + z; voxel (x,y,z) has its center at ((x+0.5)e, (y+0.5)e,
// (z+0.5)e) meters from the cube corner, e = cube_extent / n.
struct VoxelGrid {
    int n = 16;
    double cube_extent = 0.10;  // meters
    std::vector<double> occ;    // n^3 values in {0.0, 1.0}

    VoxelGrid() : occ(16 * 16 * 16, 0.0) {}
    explicit VoxelGrid(int res, double extent = 0.10)
        : n(res), cube_extent(extent), occ(static_cast<std::size_t>(res) * res * res, 0.0) {
        if (res <= 0) throw std::invalid_argument("grid resolution must be positive");
    }

    double voxel_edge() const { return cube_extent / n; }
    double voxel_volume() const { return voxel_edge() * voxel_edge() * voxel_edge(); }

    bool in_bounds(int x, int y, int z) const {
        return x >= 0 && x < n && y >= 0 && y < n && z >= 0 && z < n;
    }
    std::size_t index(int x, int y, int z) const {
        return (static_cast<std::size_t>(x) * n + y) * n + z;
    }
    double at(int x, int y, int z) const { return occ[index(x, y, z)]; }
    void set(int x, int y, int z, bool v) { occ[index(x, y, z)] = v ? 1.0 : 0.0; }

    std::size_t count_occupied() const {
        std::size_t c = 0;
        for (double v : occ) c += (v != 0.0);
        return c;
    }

    // Center of voxel (x,y,z) in meters from the cube corner.
    Vec3 voxel_center(int x, int y, int z) const {
        const double e = voxel_edge();
        return {(x + 0.5) * e, (y + 0.5) * e, (z + 0.5) * e};
    }

    bool is_binary() const {
        for (double v : occ)
            if (v != 0.0 && v != 1.0) return false;
        return true;
    }
};

struct PhysicalProperties {
    double mass = 0.0;                      // kg
    double i1 = 0.0, i2 = 0.0, i3 = 0.0;    // principal moments, kg*m^2, i1<=i2<=i3
    double friction_mu = 0.0;               // dimensionless

    std::array<double, 5> to_array() const { return {mass, i1, i2, i3, friction_mu}; }
    static PhysicalProperties from_array(const std::array<double, 5>& a) {
        return {a[0], a[1], a[2], a[3], a[4]};
    }
};

inline void validate_properties(const PhysicalProperties& p) {
    if (!(p.mass > 0.0)) throw std::invalid_argument("mass must be positive");
    if (!(p.i1 <= p.i2 && p.i2 <= p.i3)) throw std::invalid_argument("principal moments must be sorted");
    if (!(p.friction_mu >= 0.05 && p.friction_mu <= 1.5))
        throw std::invalid_argument("friction coefficient " + std::to_string(p.friction_mu) +
                                    " outside [0.05, 1.5]");
}

// Inertia tensor about the center of mass, point-mass-per-voxel model.
inline Mat3 inertia_matrix(const VoxelGrid& g, double density) {
    const std::size_t count = g.count_occupied();
    if (count == 0) throw std::invalid_argument("cannot compute inertia of an empty grid");
    const double voxel_mass = g.voxel_volume() * density;

    Vec3 com{0, 0, 0};
    for (int x = 0; x < g.n; ++x)
        for (int y = 0; y < g.n; ++y)
            for (int z = 0; z < g.n; ++z)
                if (g.at(x, y, z) != 0.0) com = com + g.voxel_center(x, y, z);
    com = com * (1.0 / static_cast<double>(count));

    double ixx = 0, iyy = 0, izz = 0, ixy = 0, ixz = 0, iyz = 0;
    for (int x = 0; x < g.n; ++x)
        for (int y = 0; y < g.n; ++y)
            for (int z = 0; z < g.n; ++z) {
                if (g.at(x, y, z) == 0.0) continue;
                const Vec3 d = g.voxel_center(x, y, z) - com;
                ixx += d.y * d.y + d.z * d.z;
                iyy += d.x * d.x + d.z * d.z;
                izz += d.x * d.x + d.y * d.y;
                ixy -= d.x * d.y;
                ixz -= d.x * d.z;
                iyz -= d.y * d.z;
            }
    Mat3 inertia;
    inertia.m = {ixx, ixy, ixz, ixy, iyy, iyz, ixz, iyz, izz};
    for (double& v : inertia.m) v *= voxel_mass;
    return inertia;
}

// Mass and principal moments from a point-mass-per-voxel model about the
// center of mass.
inline PhysicalProperties compute_physical_properties(const VoxelGrid& g, double density,
                                                      double friction_mu) {
    const std::size_t count = g.count_occupied();
    if (count == 0) throw std::invalid_argument("cannot compute properties of an empty grid");
    const double voxel_mass = g.voxel_volume() * density;
    const Mat3 inertia = inertia_matrix(g, density);
    const auto ev = symmetric_eigenvalues(inertia);
    PhysicalProperties p;
    p.mass = static_cast<double>(count) * voxel_mass;
    p.i1 = ev[0];
    p.i2 = ev[1];
    p.i3 = ev[2];
    p.friction_mu = friction_mu;
    validate_properties(p);
    return p;
}

// Center of mass in meters from the cube corner.
inline Vec3 center_of_mass(const VoxelGrid& g) {
    const std::size_t count = g.count_occupied();
    if (count == 0) throw std::invalid_argument("empty grid has no center of mass");
    Vec3 com{0, 0, 0};
    for (int x = 0; x < g.n; ++x)
        for (int y = 0; y < g.n; ++y)
            for (int z = 0; z < g.n; ++z)
                if (g.at(x, y, z) != 0.0) com = com + g.voxel_center(x, y, z);
    return com * (1.0 / static_cast<double>(count));
}

}  // namespace gg
