#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "gg/geom.hpp"
#include "gg/rng.hpp"
#include "gg/voxel.hpp"

namespace gg {

enum class FingertipPrimitive : std::uint8_t { flat = 0, curved = 1, v_groove = 2 };

inline const char* primitive_name(FingertipPrimitive p) {
    switch (p) {
        case FingertipPrimitive::flat: return "flat";
        case FingertipPrimitive::curved: return "curved";
        case FingertipPrimitive::v_groove: return "v_groove";
    }
    return "?";
}

struct GripperSpec {
    FingertipPrimitive primitive = FingertipPrimitive::flat;
    double amplitude = 0.0;  // voxels, <= 2
    std::uint64_t seed = 0;
};

// Two opposing fingertips in one grid. The closing axis is x: finger A body
// spans x in [2,4], finger B spans [11,13]; contact faces look at each other
// across the aperture. Cross-section columns cover y in [5,11), z in [4,12).
struct GripperGeometry {
    static constexpr int kAxInner = 4;    // base inner face of finger A
    static constexpr int kBxInner = 11;   // base inner face of finger B
    static constexpr int kYLo = 5, kYHi = 11;
    static constexpr int kZLo = 4, kZHi = 12;
    static constexpr int kColumns = (kYHi - kYLo) * (kZHi - kZLo);  // per finger
};

struct GripperSample {
    VoxelGrid grid;
    Pose pose;
    // Per-column inner-face offsets, finger A's columns then finger B's,
    // column index (y - kYLo) * (kZHi - kZLo) + (z - kZLo).
    std::vector<double> contact_profile;
    GripperSpec provenance;
};

namespace detail {

inline int base_offset(FingertipPrimitive prim, int y, int z) {
    const double yc = (GripperGeometry::kYLo + GripperGeometry::kYHi - 1) / 2.0;
    const double zc = (GripperGeometry::kZLo + GripperGeometry::kZHi - 1) / 2.0;
    switch (prim) {
        case FingertipPrimitive::flat:
            return 0;
        case FingertipPrimitive::curved: {
            // parabolic bulge, depth 2 at the center, 0 at the far corner
            const double rho2 = (y - yc) * (y - yc) + (z - zc) * (z - zc);
            const double rho2_max = (GripperGeometry::kYHi - 1 - yc) * (GripperGeometry::kYHi - 1 - yc) +
                                    (GripperGeometry::kZHi - 1 - zc) * (GripperGeometry::kZHi - 1 - zc);
            return static_cast<int>(std::llround(2.0 * (1.0 - rho2 / rho2_max)));
        }
        case FingertipPrimitive::v_groove: {
            // recessed center along z forms the groove
            const int d = static_cast<int>(std::abs(z - zc));  // 0..3 for the 8-voxel span
            return -2 + std::min(d, 2);
        }
    }
    return 0;
}

inline int clamp_offset(int o) { return o < -2 ? -2 : (o > 2 ? 2 : o); }

}  // namespace detail

// Pure function of the spec; regeneration is bit-identical.
inline GripperSample generate_gripper(const GripperSpec& spec, int resolution = 16) {
    if (!(spec.amplitude >= 0.0 && spec.amplitude <= 2.0))
        throw std::invalid_argument("perturbation amplitude " + std::to_string(spec.amplitude) +
                                    " outside [0, 2] voxels");
    const int amp = static_cast<int>(std::llround(spec.amplitude));
    Rng rng(spec.seed);

    GripperSample s;
    s.grid = VoxelGrid(resolution);
    s.contact_profile.resize(2 * GripperGeometry::kColumns, 0.0);

    // offsets for both fingers, A first, every column drawn even at amp 0 to
    // keep the stream layout stable
    for (int finger = 0; finger < 2; ++finger) {
        for (int y = GripperGeometry::kYLo; y < GripperGeometry::kYHi; ++y) {
            for (int z = GripperGeometry::kZLo; z < GripperGeometry::kZHi; ++z) {
                const int jitter = static_cast<int>(rng.uniform_int(-amp, amp));
                const int off = detail::clamp_offset(
                    detail::base_offset(spec.primitive, y, z) + jitter);
                const int col = (y - GripperGeometry::kYLo) * (GripperGeometry::kZHi - GripperGeometry::kZLo) +
                                (z - GripperGeometry::kZLo);
                s.contact_profile[finger * GripperGeometry::kColumns + col] = off;
                if (finger == 0) {
                    for (int x = 2; x <= GripperGeometry::kAxInner + off; ++x) s.grid.set(x, y, z, true);
                } else {
                    for (int x = GripperGeometry::kBxInner - off; x <= 13; ++x) s.grid.set(x, y, z, true);
                }
            }
        }
    }

    // aperture must stay open for every opposing column pair
    for (int col = 0; col < GripperGeometry::kColumns; ++col) {
        const int oa = static_cast<int>(s.contact_profile[col]);
        const int ob = static_cast<int>(s.contact_profile[GripperGeometry::kColumns + col]);
        const int gap = (GripperGeometry::kBxInner - ob) - (GripperGeometry::kAxInner + oa) - 1;
        if (gap < 1)
            throw std::invalid_argument("fingertip perturbation closed the aperture at column " +
                                        std::to_string(col));
    }

    // seeded jitter around the canonical pose: sigma of one voxel edge on
    // position, up to 10 degrees of rotation
    const double edge = s.grid.voxel_edge();
    s.pose.r = {rng.normal(0.0, edge), rng.normal(0.0, edge), rng.normal(0.0, edge)};
    const Vec3 axis{rng.normal(), rng.normal(), rng.normal()};
    const double angle = rng.uniform(0.0, 10.0 * M_PI / 180.0);
    s.pose.q = Quat::from_axis_angle(axis.norm() < 1e-9 ? Vec3{0, 0, 1} : axis, angle);

    s.provenance = spec;
    return s;
}

inline std::vector<GripperSample> generate_gripper_dataset(std::size_t count, std::uint64_t master_seed) {
    std::vector<GripperSample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng(derive_seed(master_seed, "gripper-spec", i));
        GripperSpec spec;
        spec.primitive = static_cast<FingertipPrimitive>(rng.uniform_int(0, 2));
        spec.amplitude = static_cast<double>(rng.uniform_int(0, 2));
        spec.seed = derive_seed(master_seed, "gripper-sample", i);
        out.push_back(generate_gripper(spec));
    }
    return out;
}

}  // namespace gg
