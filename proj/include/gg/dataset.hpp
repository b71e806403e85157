#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "gg/bytes.hpp"
#include "gg/grippers.hpp"
#include "gg/targets.hpp"
#include "gg/voxel.hpp"

namespace gg {

// "GGDS" container: magic, version u32, kind u8 (0 = target, 1 = gripper,
// 2 = latent vectors), resolution u16 (grid edge for kinds 0/1, vector
// length for kind 2), sample count u32. Per sample: occupancy bitset (n^3
// bits, LSB-first, padded to a byte; absent for kind 2), f64 property
// block, provenance block (spec enum u8, param count u8, params f64 each,
// seed u64). Little-endian throughout.
namespace ggds {

constexpr std::uint32_t kVersion = 1;

inline void write_header(ByteWriter& w, std::uint8_t kind, std::uint16_t resolution, std::uint32_t count) {
    w.bytes("GGDS", 4);
    w.u32(kVersion);
    w.u8(kind);
    w.u16(resolution);
    w.u32(count);
}

struct Header {
    std::uint8_t kind;
    std::uint16_t resolution;
    std::uint32_t count;
};

inline Header read_header(ByteReader& r, std::uint8_t expected_kind) {
    char magic[4];
    r.bytes(magic, 4);
    if (std::string(magic, 4) != "GGDS") r.fail("bad magic, expected GGDS");
    const std::uint32_t version = r.u32();
    if (version != kVersion) r.fail("unsupported version " + std::to_string(version));
    Header h;
    h.kind = r.u8();
    if (h.kind != expected_kind)
        r.fail("dataset kind " + std::to_string(h.kind) + " where kind " + std::to_string(expected_kind) +
               " was expected");
    h.resolution = r.u16();
    if (h.resolution == 0) r.fail("zero resolution");
    h.count = r.u32();
    if (h.count == 0) r.fail("empty dataset");
    return h;
}

inline void write_bits(ByteWriter& w, const VoxelGrid& g) {
    const std::size_t nbits = g.occ.size();
    std::vector<std::uint8_t> bytes((nbits + 7) / 8, 0);
    for (std::size_t i = 0; i < nbits; ++i)
        if (g.occ[i] != 0.0) bytes[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    w.bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

inline VoxelGrid read_bits(ByteReader& r, int resolution) {
    VoxelGrid g(resolution);
    const std::size_t nbits = g.occ.size();
    std::vector<char> bytes((nbits + 7) / 8);
    r.bytes(bytes.data(), bytes.size());
    for (std::size_t i = 0; i < nbits; ++i)
        g.occ[i] = (static_cast<std::uint8_t>(bytes[i / 8]) >> (i % 8)) & 1u ? 1.0 : 0.0;
    return g;
}

inline void write_provenance(ByteWriter& w, std::uint8_t spec_enum, const std::vector<double>& params,
                             std::uint64_t seed) {
    if (params.size() > 255) throw std::invalid_argument("provenance parameter list too long");
    w.u8(spec_enum);
    w.u8(static_cast<std::uint8_t>(params.size()));
    for (double p : params) w.f64(p);
    w.u64(seed);
}

}  // namespace ggds

inline void write_target_dataset(const std::vector<TargetSample>& samples, const std::string& path) {
    if (samples.empty()) throw std::invalid_argument("refusing to write an empty dataset");
    ByteWriter w;
    ggds::write_header(w, 0, static_cast<std::uint16_t>(samples[0].grid.n),
                       static_cast<std::uint32_t>(samples.size()));
    for (const auto& s : samples) {
        ggds::write_bits(w, s.grid);
        for (double v : s.props.to_array()) w.f64(v);
        ggds::write_provenance(w, static_cast<std::uint8_t>(s.provenance.family), s.provenance.params,
                               s.provenance.seed);
    }
    w.save(path);
}

inline std::vector<TargetSample> read_target_dataset(const std::string& path) {
    ByteReader r = ByteReader::from_file(path);
    const auto h = ggds::read_header(r, 0);
    std::vector<TargetSample> out;
    out.reserve(h.count);
    for (std::uint32_t i = 0; i < h.count; ++i) {
        TargetSample s;
        s.grid = ggds::read_bits(r, h.resolution);
        std::array<double, 5> props;
        for (double& v : props) v = r.f64();
        s.props = PhysicalProperties::from_array(props);
        const std::uint8_t fam = r.u8();
        if (fam > 5) r.fail("unknown shape family " + std::to_string(fam));
        s.provenance.family = static_cast<ShapeFamily>(fam);
        const std::uint8_t np = r.u8();
        s.provenance.params.resize(np);
        for (double& p : s.provenance.params) p = r.f64();
        s.provenance.seed = r.u64();
        out.push_back(std::move(s));
    }
    return out;
}

inline void write_gripper_dataset(const std::vector<GripperSample>& samples, const std::string& path) {
    if (samples.empty()) throw std::invalid_argument("refusing to write an empty dataset");
    ByteWriter w;
    ggds::write_header(w, 1, static_cast<std::uint16_t>(samples[0].grid.n),
                       static_cast<std::uint32_t>(samples.size()));
    for (const auto& s : samples) {
        ggds::write_bits(w, s.grid);
        for (double v : s.pose.to_vector7()) w.f64(v);
        w.u32(static_cast<std::uint32_t>(s.contact_profile.size()));
        for (double v : s.contact_profile) w.f64(v);
        ggds::write_provenance(w, static_cast<std::uint8_t>(s.provenance.primitive),
                               {s.provenance.amplitude}, s.provenance.seed);
    }
    w.save(path);
}

inline std::vector<GripperSample> read_gripper_dataset(const std::string& path) {
    ByteReader r = ByteReader::from_file(path);
    const auto h = ggds::read_header(r, 1);
    std::vector<GripperSample> out;
    out.reserve(h.count);
    for (std::uint32_t i = 0; i < h.count; ++i) {
        GripperSample s;
        s.grid = ggds::read_bits(r, h.resolution);
        std::array<double, 7> pv;
        for (double& v : pv) v = r.f64();
        s.pose = Pose{{pv[0], pv[1], pv[2]}, Quat{pv[3], pv[4], pv[5], pv[6]}};
        const std::uint32_t np = r.u32();
        if (np > 4096) r.fail("implausible contact profile length " + std::to_string(np));
        s.contact_profile.resize(np);
        for (double& v : s.contact_profile) v = r.f64();
        const std::uint8_t prim = r.u8();
        if (prim > 2) r.fail("unknown fingertip primitive " + std::to_string(prim));
        s.provenance.primitive = static_cast<FingertipPrimitive>(prim);
        const std::uint8_t pc = r.u8();
        if (pc != 1) r.fail("gripper provenance must carry exactly one parameter, got " + std::to_string(pc));
        s.provenance.amplitude = r.f64();
        s.provenance.seed = r.u64();
        out.push_back(std::move(s));
    }
    return out;
}

// kind = 2: bare vectors (cached joint-model training data). resolution
// holds the vector length.
inline void write_latent_dataset(const std::vector<std::vector<double>>& vecs, const std::string& path) {
    if (vecs.empty()) throw std::invalid_argument("refusing to write an empty dataset");
    const std::size_t dim = vecs[0].size();
    if (dim == 0 || dim > 65535) throw std::invalid_argument("latent dimension out of range");
    ByteWriter w;
    ggds::write_header(w, 2, static_cast<std::uint16_t>(dim), static_cast<std::uint32_t>(vecs.size()));
    for (std::size_t i = 0; i < vecs.size(); ++i) {
        if (vecs[i].size() != dim) throw std::invalid_argument("ragged latent dataset");
        for (double v : vecs[i]) w.f64(v);
        ggds::write_provenance(w, 0, {}, i);
    }
    w.save(path);
}

inline std::vector<std::vector<double>> read_latent_dataset(const std::string& path) {
    ByteReader r = ByteReader::from_file(path);
    const auto h = ggds::read_header(r, 2);
    std::vector<std::vector<double>> out(h.count, std::vector<double>(h.resolution));
    for (auto& v : out) {
        for (double& x : v) x = r.f64();
        r.u8();
        const std::uint8_t pc = r.u8();
        for (int k = 0; k < pc; ++k) r.f64();
        r.u64();
    }
    return out;
}

}  // namespace gg
