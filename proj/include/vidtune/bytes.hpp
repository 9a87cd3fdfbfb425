#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "vidtune/error.hpp"

namespace vidtune {

// Little-endian append-only buffer for binary file formats.
class ByteWriter {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { append_le(v, 2); }
    void u32(std::uint32_t v) { append_le(v, 4); }
    void u64(std::uint64_t v) { append_le(v, 8); }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
    void bytes(const void* data, std::size_t len) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        out_.insert(out_.end(), p, p + len);
    }
    void bytes(const std::vector<std::uint8_t>& v) { bytes(v.data(), v.size()); }
    void text(const std::string& s) { bytes(s.data(), s.size()); }

    const std::vector<std::uint8_t>& data() const { return out_; }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    void append_le(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> out_;
};

// Bounds-checked little-endian reader; short reads raise the given code.
class ByteReader {
public:
    ByteReader(const std::uint8_t* data, std::size_t len, ErrorCode short_read)
        : data_(data), len_(len), short_read_(short_read) {}
    explicit ByteReader(const std::vector<std::uint8_t>& v,
                        ErrorCode short_read = ErrorCode::CorruptArtifact)
        : ByteReader(v.data(), v.size(), short_read) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(read_le(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(read_le(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(read_le(4)); }
    std::uint64_t u64() { return read_le(8); }
    double f64() {
        std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::vector<std::uint8_t> bytes(std::size_t n) {
        require(n);
        std::vector<std::uint8_t> out(data_ + pos_, data_ + pos_ + n);
        pos_ += n;
        return out;
    }
    std::string text(std::size_t n) {
        require(n);
        std::string out(reinterpret_cast<const char*>(data_) + pos_, n);
        pos_ += n;
        return out;
    }

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return len_ - pos_; }
    bool at_end() const { return pos_ == len_; }

private:
    void require(std::size_t n) {
        if (len_ - pos_ < n)
            throw Error(short_read_, "unexpected end of data at offset " + std::to_string(pos_));
    }
    std::uint64_t read_le(int n) {
        require(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    const std::uint8_t* data_;
    std::size_t len_;
    ErrorCode short_read_;
    std::size_t pos_ = 0;
};

// Whole-file helpers. Writes go to a sibling temp file first and are renamed
// into place so readers never observe a partial file.
std::vector<std::uint8_t> read_file_bytes(const std::string& path);
std::string read_file_text(const std::string& path);
void write_file_atomic(const std::string& path, const void* data, std::size_t len);
void write_file_atomic(const std::string& path, const std::vector<std::uint8_t>& data);
void write_file_atomic(const std::string& path, const std::string& text);

}  // namespace vidtune
