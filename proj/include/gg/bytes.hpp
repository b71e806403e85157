#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gg {

// Little-endian binary I/O with offset tracking so corruption errors can
// name the byte where parsing stopped.
class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }

    void u16(std::uint16_t v) {
        for (int i = 0; i < 2; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }

    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        buf_.insert(buf_.end(), b, b + n);
    }

    void str(const std::string& s) { bytes(s.data(), s.size()); }

    const std::vector<std::uint8_t>& data() const { return buf_; }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + path);
        out.write(reinterpret_cast<const char*>(buf_.data()),
                  static_cast<std::streamsize>(buf_.size()));
        if (!out) throw std::runtime_error("short write: " + path);
    }

private:
    std::vector<std::uint8_t> buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::vector<std::uint8_t> data, std::string origin = "<memory>")
        : buf_(std::move(data)), origin_(std::move(origin)) {}

    static ByteReader from_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open for reading: " + path);
        std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                      std::istreambuf_iterator<char>());
        return ByteReader(std::move(buf), path);
    }

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return buf_.size() - pos_; }

    std::uint8_t u8() {
        need(1);
        return buf_[pos_++];
    }

    std::uint16_t u16() {
        need(2);
        std::uint16_t v = 0;
        for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(buf_[pos_++]) << (8 * i);
        return v;
    }

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf_[pos_++]) << (8 * i);
        return v;
    }

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf_[pos_++]) << (8 * i);
        return v;
    }

    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }

    std::string str(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
        pos_ += n;
        return s;
    }

    void bytes(void* out, std::size_t n) {
        need(n);
        std::memcpy(out, buf_.data() + pos_, n);
        pos_ += n;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw std::runtime_error(origin_ + ": " + what + " at byte offset " +
                                 std::to_string(pos_));
    }

private:
    void need(std::size_t n) const {
        if (pos_ + n > buf_.size()) {
            throw std::runtime_error(origin_ + ": truncated, needed " + std::to_string(n) +
                                     " bytes at byte offset " + std::to_string(pos_));
        }
    }

    std::vector<std::uint8_t> buf_;
    std::string origin_;
    std::size_t pos_ = 0;
};

}  // namespace gg
