#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vidtune/data.hpp"

namespace vidtune {

// Uncompressed video container: 14-byte little-endian header
// ("RVID", version u8, width u16, height u16, channels u8, frame_count u32)
// followed by exactly t*h*w*c payload bytes.
void write_rawvid(const std::string& path, const FrameSequence& frames);
FrameSequence read_rawvid(const std::string& path);
FrameSequence decode_rawvid(const std::vector<std::uint8_t>& data, const std::string& origin);

struct SyntheticSpec {
    std::size_t num_classes = 4;  // motion directions: right, left, down, up
    std::size_t videos_per_class = 25;
    std::int64_t frames = 16;
    std::int64_t height = 32;
    std::int64_t width = 32;
    std::int64_t channels = 3;
    double noise_std = 8.0;  // Gaussian, in u8 units, pre-quantization
    std::uint64_t seed = 0;
};

struct DatasetBundle {
    std::string table_path;
    std::string media_dir;
    std::size_t target_index = 0;
};

// Direction name for class index c (0=right, 1=left, 2=down, 3=up; higher
// indices cycle through the same four motions).
const char* direction_name(std::size_t class_index);

// CSV label for class index c: the direction name for c < 4, suffixed with a
// cycle counter beyond that ("right_2", ...) so every class keeps a distinct
// label even though only four motion directions exist.
std::string class_label(std::size_t class_index);

// Writes videos of a bright square moving one pixel per frame over a dark
// background with a positional brightness ramp, plus an annotation CSV
// ("d3mIndex,video,label"). The ramp makes per-frame channel means track the
// square's position, so opposite directions stay distinguishable to the
// motion features. Deterministic per (spec, out_dir), bitwise.
DatasetBundle generate_synthetic_dataset(const SyntheticSpec& spec, const std::string& out_dir);

struct SplitResult {
    Table train;
    Table valid;
    std::vector<std::string> warnings;  // e.g. single-row classes kept in train
};

// Stratified split: per label class, a seed-derived shuffle sends
// ceil(valid_fraction * n_class) rows to validation. Row order within each
// side matches the input. Classes with one row stay in train with a warning.
SplitResult split_table(const Table& table, double valid_fraction, std::uint64_t seed);

}  // namespace vidtune
