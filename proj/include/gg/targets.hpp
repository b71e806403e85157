#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "gg/geom.hpp"
#include "gg/rng.hpp"
#include "gg/voxel.hpp"

namespace gg {

enum class ShapeFamily : std::uint8_t {
    box = 0,
    cylinder = 1,
    sphere = 2,
    l_bracket = 3,
    slotted_block = 4,
    through_hole_block = 5,
};

inline const char* family_name(ShapeFamily f) {
    switch (f) {
        case ShapeFamily::box: return "box";
        case ShapeFamily::cylinder: return "cylinder";
        case ShapeFamily::sphere: return "sphere";
        case ShapeFamily::l_bracket: return "l_bracket";
        case ShapeFamily::slotted_block: return "slotted_block";
        case ShapeFamily::through_hole_block: return "through_hole_block";
    }
    return "?";
}

inline int base_param_count(ShapeFamily f) {
    switch (f) {
        case ShapeFamily::box: return 3;
        case ShapeFamily::cylinder: return 3;
        case ShapeFamily::sphere: return 1;
        case ShapeFamily::l_bracket: return 4;
        case ShapeFamily::slotted_block: return 5;
        case ShapeFamily::through_hole_block: return 5;
    }
    throw std::invalid_argument("unknown shape family");
}

// Everything needed to regenerate a sample bit-identically: family, its
// geometric parameters (voxel units), and the seed that drives the friction
// draw. Perturbed samples append [q_w,q_x,q_y,q_z, scale, t_x,t_y,t_z] to
// the base parameters.
struct TargetSpec {
    ShapeFamily family = ShapeFamily::box;
    std::vector<double> params;
    std::uint64_t seed = 0;

    bool is_perturbed() const {
        return params.size() == static_cast<std::size_t>(base_param_count(family)) + 8;
    }
};

struct TargetSample {
    VoxelGrid grid;
    PhysicalProperties props;
    TargetSpec provenance;
};

struct ClippedByGrid : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr double kPlaDensity = 1250.0;  // kg/m^3, typical printed PLA
constexpr double kFrictionLo = 0.3;
constexpr double kFrictionHi = 0.6;

namespace detail {

inline void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

inline int ilo(double v) { return static_cast<int>(std::llround(v)); }

// Rasterize one family into a centered grid. Box-like spans use integer
// corner placement so counts are exact; round features test voxel centers.
inline VoxelGrid rasterize(ShapeFamily family, const std::vector<double>& p, int n) {
    VoxelGrid g(n);
    const double c = n / 2.0;  // grid center in voxel-center coordinates
    auto span = [n](int extent) { return (n - extent) / 2; };

    switch (family) {
        case ShapeFamily::box: {
            const int ex = ilo(p[0]), ey = ilo(p[1]), ez = ilo(p[2]);
            require(ex >= 1 && ey >= 1 && ez >= 1, "box has a zero extent");
            require(ex <= n && ey <= n && ez <= n, "box exceeds the grid");
            const int x0 = span(ex), y0 = span(ey), z0 = span(ez);
            for (int x = x0; x < x0 + ex; ++x)
                for (int y = y0; y < y0 + ey; ++y)
                    for (int z = z0; z < z0 + ez; ++z) g.set(x, y, z, true);
            break;
        }
        case ShapeFamily::cylinder: {
            const double r = p[0];
            const int h = ilo(p[1]);
            const int axis = ilo(p[2]);
            require(r > 0.5 && h >= 1, "cylinder has a degenerate extent");
            require(axis >= 0 && axis <= 2, "cylinder axis must be 0..2");
            require(2.0 * r <= n && h <= n, "cylinder exceeds the grid");
            const int u0 = span(h);
            for (int x = 0; x < n; ++x)
                for (int y = 0; y < n; ++y)
                    for (int z = 0; z < n; ++z) {
                        const double cc[3] = {x + 0.5 - c, y + 0.5 - c, z + 0.5 - c};
                        const int ui = axis == 0 ? x : (axis == 1 ? y : z);
                        if (ui < u0 || ui >= u0 + h) continue;
                        const double a = cc[(axis + 1) % 3], b = cc[(axis + 2) % 3];
                        if (a * a + b * b <= r * r) g.set(x, y, z, true);
                    }
            break;
        }
        case ShapeFamily::sphere: {
            const double r = p[0];
            require(r > 0.5, "sphere radius degenerate");
            require(2.0 * r <= n, "sphere exceeds the grid");
            for (int x = 0; x < n; ++x)
                for (int y = 0; y < n; ++y)
                    for (int z = 0; z < n; ++z) {
                        const double dx = x + 0.5 - c, dy = y + 0.5 - c, dz = z + 0.5 - c;
                        if (dx * dx + dy * dy + dz * dz <= r * r) g.set(x, y, z, true);
                    }
            break;
        }
        case ShapeFamily::l_bracket: {
            const int arm1 = ilo(p[0]), arm2 = ilo(p[1]), th = ilo(p[2]), depth = ilo(p[3]);
            require(arm1 >= 1 && arm2 >= 1 && th >= 1 && depth >= 1, "l_bracket has a zero extent");
            require(th <= arm1 && th <= arm2, "l_bracket thickness exceeds an arm");
            require(arm1 <= n && arm2 <= n && depth <= n, "l_bracket exceeds the grid");
            const int x0 = span(arm1), y0 = span(arm2), z0 = span(depth);
            for (int x = x0; x < x0 + arm1; ++x)
                for (int y = y0; y < y0 + arm2; ++y) {
                    const bool in_arm_x = (y < y0 + th);
                    const bool in_arm_y = (x < x0 + th);
                    if (!in_arm_x && !in_arm_y) continue;
                    for (int z = z0; z < z0 + depth; ++z) g.set(x, y, z, true);
                }
            break;
        }
        case ShapeFamily::slotted_block: {
            const int ex = ilo(p[0]), ey = ilo(p[1]), ez = ilo(p[2]), sw = ilo(p[3]), sd = ilo(p[4]);
            require(ex >= 1 && ey >= 1 && ez >= 1, "slotted_block has a zero extent");
            require(ex <= n && ey <= n && ez <= n, "slotted_block exceeds the grid");
            require(sw >= 1 && sd >= 1, "slot has a zero extent");
            require(sw <= ex - 2 && sd <= ey - 1, "slot consumes the block");
            const int x0 = span(ex), y0 = span(ey), z0 = span(ez);
            const int sx0 = x0 + (ex - sw) / 2;
            for (int x = x0; x < x0 + ex; ++x)
                for (int y = y0; y < y0 + ey; ++y) {
                    const bool in_slot = (x >= sx0 && x < sx0 + sw && y >= y0 + ey - sd);
                    if (in_slot) continue;
                    for (int z = z0; z < z0 + ez; ++z) g.set(x, y, z, true);
                }
            break;
        }
        case ShapeFamily::through_hole_block: {
            const int ex = ilo(p[0]), ey = ilo(p[1]), ez = ilo(p[2]);
            const double r = p[3];
            const int axis = ilo(p[4]);
            require(ex >= 1 && ey >= 1 && ez >= 1, "through_hole_block has a zero extent");
            require(ex <= n && ey <= n && ez <= n, "through_hole_block exceeds the grid");
            require(axis >= 0 && axis <= 2, "hole axis must be 0..2");
            require(r >= 0.5, "hole radius degenerate");
            const int x0 = span(ex), y0 = span(ey), z0 = span(ez);
            for (int x = x0; x < x0 + ex; ++x)
                for (int y = y0; y < y0 + ey; ++y)
                    for (int z = z0; z < z0 + ez; ++z) {
                        const double cc[3] = {x + 0.5 - c, y + 0.5 - c, z + 0.5 - c};
                        const double a = cc[(axis + 1) % 3], b = cc[(axis + 2) % 3];
                        if (a * a + b * b <= r * r) continue;  // inside the hole
                        g.set(x, y, z, true);
                    }
            break;
        }
    }
    if (g.count_occupied() == 0) throw std::invalid_argument("generated shape is empty");
    return g;
}

}  // namespace detail

// The 24 orientation-preserving symmetries of the cube, in a stable order.
inline const std::vector<Quat>& cube_group_rotations() {
    static const std::vector<Quat> group = [] {
        const Quat gens[3] = {Quat::from_axis_angle({1, 0, 0}, M_PI / 2),
                              Quat::from_axis_angle({0, 1, 0}, M_PI / 2),
                              Quat::from_axis_angle({0, 0, 1}, M_PI / 2)};
        auto key_of = [](const Quat& q) {
            const Mat3 m = q.to_matrix();
            std::array<int, 9> k;
            for (int i = 0; i < 9; ++i) k[i] = static_cast<int>(std::llround(m.m[i]));
            return k;
        };
        std::vector<std::pair<std::array<int, 9>, Quat>> found;
        found.emplace_back(key_of(Quat::identity()), Quat::identity());
        for (std::size_t i = 0; i < found.size(); ++i) {
            for (const Quat& gq : gens) {
                const Quat next = gq.mul(found[i].second).canonical();
                const auto key = key_of(next);
                bool seen = false;
                for (const auto& [k, q] : found) seen = seen || (k == key);
                if (!seen) found.emplace_back(key, next);
            }
        }
        std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<Quat> out;
        for (const auto& [k, q] : found) out.push_back(q);
        return out;
    }();
    return group;
}

// Nearest-neighbor resample of the grid under rotate/scale/translate about
// the grid center, with a forward clip check: any occupied source voxel that
// would land outside the grid rejects the whole perturbation.
inline VoxelGrid resample_grid(const VoxelGrid& base, const Quat& q, double scale, const Vec3& t_voxels) {
    const int n = base.n;
    const double c = n / 2.0;
    const Mat3 rot = q.to_matrix();
    const Mat3 inv = q.conjugate().to_matrix();

    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            for (int z = 0; z < n; ++z) {
                if (base.at(x, y, z) == 0.0) continue;
                const Vec3 p{x + 0.5 - c, y + 0.5 - c, z + 0.5 - c};
                const Vec3 d = rot.apply(p * scale) + t_voxels;
                const int dx = static_cast<int>(std::floor(d.x + c));
                const int dy = static_cast<int>(std::floor(d.y + c));
                const int dz = static_cast<int>(std::floor(d.z + c));
                if (!base.in_bounds(dx, dy, dz))
                    throw ClippedByGrid("perturbed shape clips the grid at voxel (" + std::to_string(dx) +
                                        "," + std::to_string(dy) + "," + std::to_string(dz) + ")");
            }

    VoxelGrid out(n, base.cube_extent);
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            for (int z = 0; z < n; ++z) {
                const Vec3 p{x + 0.5 - c, y + 0.5 - c, z + 0.5 - c};
                const Vec3 s = inv.apply(p - t_voxels) * (1.0 / scale);
                const int sx = static_cast<int>(std::floor(s.x + c));
                const int sy = static_cast<int>(std::floor(s.y + c));
                const int sz = static_cast<int>(std::floor(s.z + c));
                if (base.in_bounds(sx, sy, sz) && base.at(sx, sy, sz) != 0.0) out.set(x, y, z, true);
            }
    if (out.count_occupied() == 0) throw ClippedByGrid("perturbation left no occupied voxels");
    return out;
}

inline TargetSample perturb_sample(const TargetSample& sample, const Quat& rotation, double scale,
                                   const Vec3& translation_voxels) {
    detail::require(scale >= 0.7 && scale <= 1.3, "perturbation scale outside [0.7, 1.3]");
    detail::require(!sample.provenance.is_perturbed(), "cannot perturb an already-perturbed sample");
    // Skip renormalization of unit quaternions so regeneration from stored
    // provenance parameters is bit-identical.
    const Quat q = std::abs(rotation.norm() - 1.0) < 1e-12 ? rotation.canonical()
                                                           : rotation.normalized().canonical();

    TargetSample out;
    out.grid = resample_grid(sample.grid, q, scale, translation_voxels);

    // Mass follows the cube law; the inertia tensor is rotated and rescaled
    // by scale^5, then re-diagonalized.
    const double s3 = scale * scale * scale;
    const double s5 = s3 * scale * scale;
    Mat3 diag{};
    diag.at(0, 0) = sample.props.i1;
    diag.at(1, 1) = sample.props.i2;
    diag.at(2, 2) = sample.props.i3;
    const Mat3 rot = q.to_matrix();
    Mat3 world = rot.mul(diag).mul(rot.transposed());
    for (double& v : world.m) v *= s5;
    const auto ev = symmetric_eigenvalues(world);

    out.props.mass = sample.props.mass * s3;
    out.props.i1 = ev[0];
    out.props.i2 = ev[1];
    out.props.i3 = ev[2];
    out.props.friction_mu = sample.props.friction_mu;
    validate_properties(out.props);

    out.provenance = sample.provenance;
    out.provenance.params.insert(out.provenance.params.end(),
                                 {q.w, q.x, q.y, q.z, scale, translation_voxels.x, translation_voxels.y,
                                  translation_voxels.z});
    return out;
}

// Pure function of the spec: regeneration is bit-identical.
inline TargetSample generate_target(const TargetSpec& spec, int resolution = 16) {
    const std::size_t base_n = static_cast<std::size_t>(base_param_count(spec.family));
    detail::require(spec.params.size() == base_n || spec.params.size() == base_n + 8,
                    std::string("wrong parameter count for ") + family_name(spec.family) + ": got " +
                        std::to_string(spec.params.size()));

    TargetSample s;
    s.grid = detail::rasterize(spec.family, spec.params, resolution);
    Rng rng(spec.seed);
    const double mu = rng.uniform(kFrictionLo, kFrictionHi);
    s.props = compute_physical_properties(s.grid, kPlaDensity, mu);
    s.provenance = TargetSpec{spec.family, std::vector<double>(spec.params.begin(), spec.params.begin() + base_n),
                              spec.seed};

    if (spec.params.size() == base_n + 8) {
        const double* e = &spec.params[base_n];
        const Quat q{e[0], e[1], e[2], e[3]};
        s = perturb_sample(s, q, e[4], Vec3{e[5], e[6], e[7]});
    }
    return s;
}

// Draws a fresh base-shape spec with family-appropriate bounds, leaving
// margin for perturbation translations.
inline TargetSpec random_target_spec(Rng& rng, std::uint64_t mu_seed) {
    TargetSpec spec;
    spec.family = static_cast<ShapeFamily>(rng.uniform_int(0, 5));
    spec.seed = mu_seed;
    switch (spec.family) {
        case ShapeFamily::box:
            spec.params = {double(rng.uniform_int(3, 11)), double(rng.uniform_int(3, 11)),
                           double(rng.uniform_int(3, 11))};
            break;
        case ShapeFamily::cylinder:
            spec.params = {rng.uniform(2.0, 5.5), double(rng.uniform_int(5, 11)), double(rng.uniform_int(0, 2))};
            break;
        case ShapeFamily::sphere:
            spec.params = {rng.uniform(2.5, 5.5)};
            break;
        case ShapeFamily::l_bracket:
            spec.params = {double(rng.uniform_int(7, 11)), double(rng.uniform_int(7, 11)),
                           double(rng.uniform_int(2, 4)), double(rng.uniform_int(3, 8))};
            break;
        case ShapeFamily::slotted_block: {
            const long long ex = rng.uniform_int(6, 11), ey = rng.uniform_int(6, 11);
            spec.params = {double(ex), double(ey), double(rng.uniform_int(4, 10)),
                           double(rng.uniform_int(2, ex - 3)), double(rng.uniform_int(2, ey - 2))};
            break;
        }
        case ShapeFamily::through_hole_block: {
            const long long ex = rng.uniform_int(7, 11), ey = rng.uniform_int(7, 11), ez = rng.uniform_int(7, 11);
            const long long axis = rng.uniform_int(0, 2);
            const long long perp_min = axis == 0 ? std::min(ey, ez) : (axis == 1 ? std::min(ex, ez) : std::min(ex, ey));
            spec.params = {double(ex), double(ey), double(ez), rng.uniform(1.5, perp_min / 2.0 - 1.0), double(axis)};
            break;
        }
    }
    return spec;
}

// Builds `count` samples: each base shape is followed by `perturbs_per_base`
// perturbed variants (half right-angle, half free rotations <= 25 degrees).
// Sample i derives all randomness from (master_seed, i), so the dataset is
// reproducible regardless of generation order.
inline std::vector<TargetSample> generate_target_dataset(std::size_t count, std::uint64_t master_seed,
                                                         int perturbs_per_base = 5) {
    std::vector<TargetSample> out;
    out.reserve(count);
    for (std::size_t b = 0; out.size() < count; ++b) {
        Rng rng(derive_seed(master_seed, "target-base", b));
        TargetSample base;
        for (int attempt = 0;; ++attempt) {
            try {
                base = generate_target(random_target_spec(rng, derive_seed(master_seed, "target-mu", b)));
                break;
            } catch (const std::invalid_argument&) {
                if (attempt > 50) throw;
            }
        }
        out.push_back(base);
        for (int k = 0; k < perturbs_per_base && out.size() < count; ++k) {
            Rng pr(derive_seed(master_seed, "target-perturb", b * 64 + k));
            for (int attempt = 0;; ++attempt) {
                try {
                    Quat q;
                    Vec3 t;
                    if (pr.uniform() < 0.5) {
                        q = cube_group_rotations()[static_cast<std::size_t>(pr.uniform_int(0, 23))];
                        t = {double(pr.uniform_int(-2, 2)), double(pr.uniform_int(-2, 2)),
                             double(pr.uniform_int(-2, 2))};
                    } else {
                        const Vec3 axis{pr.normal(), pr.normal(), pr.normal()};
                        q = Quat::from_axis_angle(axis.norm() < 1e-9 ? Vec3{0, 0, 1} : axis,
                                                  pr.uniform(0.0, 25.0 * M_PI / 180.0));
                        t = {pr.uniform(-2.0, 2.0), pr.uniform(-2.0, 2.0), pr.uniform(-2.0, 2.0)};
                    }
                    const double scale = pr.uniform(0.85, 1.15);
                    out.push_back(perturb_sample(base, q, scale, t));
                    break;
                } catch (const ClippedByGrid&) {
                    if (attempt > 50) {
                        out.push_back(base);  // keep dataset size; duplicate base as a fallback
                        break;
                    }
                }
            }
        }
    }
    return out;
}

}  // namespace gg
