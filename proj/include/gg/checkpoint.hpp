#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gg/bytes.hpp"
#include "gg/tensor.hpp"

namespace gg::nn {

// Named-tensor container persisted as a "GGNN" file:
//   magic "GGNN", version u32, tensor count u32, then per tensor:
//   name length u32, UTF-8 name, rank u32, dims u32 each, f64 payload.
// Everything little-endian; round-trip is bit-exact.
class Checkpoint {
public:
    static constexpr std::uint32_t kVersion = 1;

    void add(std::string name, Tensor t) {
        for (const auto& [n, _] : items_)
            if (n == name) throw std::invalid_argument("duplicate tensor name '" + name + "'");
        items_.emplace_back(std::move(name), std::move(t));
    }

    bool has(const std::string& name) const { return find(name) != nullptr; }

    const Tensor* find(const std::string& name) const {
        for (const auto& [n, t] : items_)
            if (n == name) return &t;
        return nullptr;
    }

    const Tensor& get(const std::string& name) const {
        const Tensor* t = find(name);
        if (!t) throw std::runtime_error("checkpoint has no tensor named '" + name + "'");
        return *t;
    }

    double get_scalar(const std::string& name) const {
        const Tensor& t = get(name);
        if (t.numel() != 1) throw std::runtime_error("tensor '" + name + "' is not scalar");
        return t.data[0];
    }

    const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }

    void save(const std::string& path) const {
        ByteWriter w;
        w.bytes("GGNN", 4);
        w.u32(kVersion);
        w.u32(static_cast<std::uint32_t>(items_.size()));
        for (const auto& [name, t] : items_) {
            w.u32(static_cast<std::uint32_t>(name.size()));
            w.bytes(name.data(), name.size());
            w.u32(static_cast<std::uint32_t>(t.rank()));
            for (int d : t.shape) w.u32(static_cast<std::uint32_t>(d));
            for (double v : t.data) w.f64(v);
        }
        w.save(path);
    }

    static Checkpoint load(const std::string& path) {
        ByteReader r = ByteReader::from_file(path);
        char magic[4];
        r.bytes(magic, 4);
        if (std::string(magic, 4) != "GGNN") r.fail("bad magic, expected GGNN");
        const std::uint32_t version = r.u32();
        if (version != kVersion)
            r.fail("unsupported version " + std::to_string(version));
        const std::uint32_t count = r.u32();
        Checkpoint ck;
        for (std::uint32_t i = 0; i < count; ++i) {
            const std::uint32_t name_len = r.u32();
            if (name_len > (1u << 20)) r.fail("implausible name length " + std::to_string(name_len));
            std::string name(name_len, '\0');
            r.bytes(name.data(), name_len);
            const std::uint32_t rank = r.u32();
            if (rank > 8) r.fail("implausible tensor rank " + std::to_string(rank));
            std::vector<int> shape(rank);
            std::size_t numel = 1;
            for (std::uint32_t d = 0; d < rank; ++d) {
                const std::uint32_t dim = r.u32();
                if (dim == 0 || dim > (1u << 24)) r.fail("implausible dim " + std::to_string(dim));
                shape[d] = static_cast<int>(dim);
                numel *= dim;
            }
            if (rank == 0) numel = 1;
            if (numel > (std::size_t{1} << 28)) r.fail("implausible tensor size");
            std::vector<double> data(numel);
            for (std::size_t k = 0; k < numel; ++k) data[k] = r.f64();
            if (rank == 0) shape = {1};
            ck.items_.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
        }
        return ck;
    }

private:
    std::vector<std::pair<std::string, Tensor>> items_;
};

}  // namespace gg::nn
