#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace vidtune {

// Incremental SHA-256 (FIPS 180-4).
class Sha256 {
public:
    Sha256();

    void update(const void* data, std::size_t len);
    void update(const std::string& s) { update(s.data(), s.size()); }
    void update(const std::vector<std::uint8_t>& v) { update(v.data(), v.size()); }

    std::array<std::uint8_t, 32> finish();

    static std::array<std::uint8_t, 32> digest(const void* data, std::size_t len);

private:
    void process_block(const std::uint8_t* block);

    std::uint32_t state_[8];
    std::uint64_t total_len_;
    std::uint8_t buffer_[64];
    std::size_t buffer_len_;
};

inline std::array<std::uint8_t, 32> sha256(const std::string& s) {
    return Sha256::digest(s.data(), s.size());
}

inline std::array<std::uint8_t, 32> sha256(const std::vector<std::uint8_t>& v) {
    return Sha256::digest(v.data(), v.size());
}

std::string hex_encode(const std::uint8_t* data, std::size_t len);

}  // namespace vidtune
