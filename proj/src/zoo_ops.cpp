#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "vidtune/bytes.hpp"
#include "vidtune/dataio.hpp"
#include "vidtune/error.hpp"
#include "vidtune/zoo.hpp"

namespace fs = std::filesystem;

namespace vidtune {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(ch);
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

}  // namespace

Table load_annotations(const std::string& csv_path, std::size_t target_index) {
    const std::string text = read_file_text(csv_path);

    std::vector<std::string> lines;
    std::string line;
    for (char ch : text) {
        if (ch == '\n') {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            lines.push_back(std::move(line));
            line.clear();
        } else {
            line.push_back(ch);
        }
    }
    if (!line.empty()) lines.push_back(std::move(line));  // no trailing newline

    if (lines.empty())
        throw Error(ErrorCode::ParseError, "'" + csv_path + "' has no header row");

    Table table;
    table.columns = split_csv_line(lines[0]);
    if (target_index >= table.columns.size())
        throw Error(ErrorCode::BadTargetIndex,
                    "target_index " + std::to_string(target_index) + " out of range for " +
                        std::to_string(table.columns.size()) + " columns");
    table.target_index = target_index;

    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto fields = split_csv_line(lines[i]);
        if (fields.size() != table.columns.size())
            throw Error(ErrorCode::RaggedRows,
                        "'" + csv_path + "' line " + std::to_string(i + 1) + " has " +
                            std::to_string(fields.size()) + " fields, header has " +
                            std::to_string(table.columns.size()));
        table.rows.push_back(std::move(fields));
    }
    return table;
}

void write_frame_image(const std::string& path, const FrameSequence& frames, std::int64_t t) {
    if (t < 0 || t >= frames.t)
        throw Error(ErrorCode::InvalidArgument, "frame index out of range");
    if (frames.c != 1 && frames.c != 3)
        throw Error(ErrorCode::UnsupportedChannels,
                    "frame images support 1 or 3 channels, got " + std::to_string(frames.c));

    std::string header = (frames.c == 1 ? "P5\n" : "P6\n") + std::to_string(frames.w) + " " +
                         std::to_string(frames.h) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    const std::size_t frame_bytes = static_cast<std::size_t>(frames.h * frames.w * frames.c);
    const auto* begin = frames.data.data() + static_cast<std::size_t>(t) * frame_bytes;
    out.insert(out.end(), begin, begin + frame_bytes);
    write_file_atomic(path, out);
}

FrameSequence read_frame_image(const std::string& path) {
    const auto data = read_file_bytes(path);
    if (data.size() < 2 || data[0] != 'P' || (data[1] != '5' && data[1] != '6'))
        throw Error(ErrorCode::BadMagic, "'" + path + "' is not a binary PGM/PPM image");
    const std::int64_t channels = data[1] == '5' ? 1 : 3;

    // Header: magic, width, height, maxval as whitespace-separated tokens,
    // then a single whitespace byte before the samples.
    std::size_t pos = 2;
    auto next_token = [&](const char* what) -> std::int64_t {
        while (pos < data.size() && std::isspace(data[pos])) ++pos;
        std::size_t start = pos;
        while (pos < data.size() && !std::isspace(data[pos])) ++pos;
        if (start == pos)
            throw Error(ErrorCode::BadHeader, "'" + path + "': missing " + std::string(what));
        std::int64_t value = 0;
        for (std::size_t i = start; i < pos; ++i) {
            if (data[i] < '0' || data[i] > '9')
                throw Error(ErrorCode::BadHeader, "'" + path + "': non-numeric " + std::string(what));
            value = value * 10 + (data[i] - '0');
            if (value > 1 << 20)
                throw Error(ErrorCode::BadHeader, "'" + path + "': oversized " + std::string(what));
        }
        return value;
    };

    FrameSequence f;
    f.t = 1;
    f.c = channels;
    f.w = next_token("width");
    f.h = next_token("height");
    const auto maxval = next_token("maxval");
    if (f.w < 1 || f.h < 1) throw Error(ErrorCode::BadHeader, "'" + path + "': zero dimension");
    if (maxval != 255)
        throw Error(ErrorCode::BadHeader, "'" + path + "': maxval must be 255");
    if (pos >= data.size() || !std::isspace(data[pos]))
        throw Error(ErrorCode::BadHeader, "'" + path + "': missing sample separator");
    ++pos;

    const std::size_t expected = f.sample_count();
    if (data.size() - pos < expected)
        throw Error(ErrorCode::TruncatedPayload, "'" + path + "': sample data is short");
    if (data.size() - pos > expected)
        throw Error(ErrorCode::BadHeader, "'" + path + "': trailing bytes after samples");
    f.data.assign(data.begin() + static_cast<std::ptrdiff_t>(pos), data.end());
    return f;
}

PathList extract_frames(const std::string& media_dir, const std::string& ext) {
    if (ext != "rawvid")
        throw Error(ErrorCode::UnsupportedExtension, "unsupported video extension '" + ext + "'");
    std::error_code ec;
    if (!fs::is_directory(media_dir, ec))
        throw Error(ErrorCode::IoError, "'" + media_dir + "' is not a directory");

    std::vector<fs::path> videos;
    for (const auto& entry : fs::directory_iterator(media_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".rawvid")
            videos.push_back(entry.path());
    }
    std::sort(videos.begin(), videos.end());

    PathList created;
    for (const auto& video : videos) {
        FrameSequence frames;
        try {
            frames = read_rawvid(video.string());
        } catch (const Error& e) {
            if (e.code() == ErrorCode::IoError) throw;
            throw Error(ErrorCode::CorruptVideo, e.what());
        }

        const fs::path dir = fs::path(media_dir) / video.stem();
        fs::create_directories(dir, ec);
        if (ec) throw Error(ErrorCode::IoError, "cannot create '" + dir.string() + "'");

        // Drop frames from any earlier, longer extraction so the tree always
        // mirrors the current video exactly.
        for (const auto& entry : fs::directory_iterator(dir)) {
            const auto name = entry.path().filename().string();
            if (name.rfind("frame_", 0) == 0 &&
                (entry.path().extension() == ".pgm" || entry.path().extension() == ".ppm"))
                fs::remove(entry.path());
        }

        const char* img_ext = frames.c == 1 ? "pgm" : "ppm";
        for (std::int64_t t = 0; t < frames.t; ++t) {
            char name[32];
            std::snprintf(name, sizeof(name), "frame_%06lld.%s",
                          static_cast<long long>(t + 1), img_ext);
            write_frame_image((dir / name).string(), frames, t);
        }
        created.push_back(dir.string());
    }
    return created;
}

FrameSequence read_frame_dir(const std::string& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec))
        throw Error(ErrorCode::IoError, "'" + dir + "' is not a directory");

    FrameSequence out;
    for (std::int64_t t = 1;; ++t) {
        char base[32];
        std::snprintf(base, sizeof(base), "frame_%06lld", static_cast<long long>(t));
        fs::path pgm = fs::path(dir) / (std::string(base) + ".pgm");
        fs::path ppm = fs::path(dir) / (std::string(base) + ".ppm");
        fs::path found;
        if (fs::is_regular_file(pgm, ec)) found = pgm;
        else if (fs::is_regular_file(ppm, ec)) found = ppm;
        else break;

        FrameSequence frame = read_frame_image(found.string());
        if (out.t == 0) {
            out = std::move(frame);
        } else {
            if (frame.h != out.h || frame.w != out.w || frame.c != out.c)
                throw Error(ErrorCode::ShapeMismatch,
                            "'" + found.string() + "' does not match the first frame's shape");
            out.data.insert(out.data.end(), frame.data.begin(), frame.data.end());
            ++out.t;
        }
    }
    if (out.t == 0)
        throw Error(ErrorCode::EmptyData, "'" + dir + "' holds no frame images");
    return out;
}

PathList frame_dirs_for_table(const Table& table, const std::string& media_dir) {
    const std::size_t video_col = table.column_index("video");
    PathList dirs;
    dirs.reserve(table.rows.size());
    for (const auto& row : table.rows)
        dirs.push_back((fs::path(media_dir) / fs::path(row[video_col]).stem()).string());
    return dirs;
}

std::vector<std::int64_t> segment_indices(std::int64_t t, std::int64_t n, SegmentMode mode,
                                          Rng* rng) {
    if (t < 1 || n < 1)
        throw Error(ErrorCode::InvalidArgument, "segment sampling needs t >= 1 and n >= 1");
    std::vector<std::int64_t> indices;
    indices.reserve(static_cast<std::size_t>(n));
    if (t < n) {
        for (std::int64_t k = 0; k < n; ++k)
            indices.push_back(std::min(k * t / n, t - 1));
        return indices;
    }
    for (std::int64_t k = 0; k < n; ++k) {
        const std::int64_t start = k * t / n;
        const std::int64_t end = (k + 1) * t / n;
        if (mode == SegmentMode::EvalCenter) {
            indices.push_back((start + end - 1) / 2);
        } else {
            if (!rng) throw Error(ErrorCode::InvalidArgument, "train_random sampling needs an rng");
            indices.push_back(start + static_cast<std::int64_t>(
                                          rng->uniform_int(static_cast<std::uint64_t>(end - start))));
        }
    }
    return indices;
}

FrameSequence segment_sample(const FrameSequence& frames, std::int64_t n, SegmentMode mode,
                             Rng* rng) {
    const auto indices = segment_indices(frames.t, n, mode, rng);
    FrameSequence out;
    out.t = n;
    out.h = frames.h;
    out.w = frames.w;
    out.c = frames.c;
    out.data.reserve(out.sample_count());
    const std::size_t frame_bytes = static_cast<std::size_t>(frames.h * frames.w * frames.c);
    for (auto idx : indices) {
        const auto* begin = frames.data.data() + static_cast<std::size_t>(idx) * frame_bytes;
        out.data.insert(out.data.end(), begin, begin + frame_bytes);
    }
    return out;
}

FrameSequence scale_frames(const FrameSequence& frames, std::int64_t out_h, std::int64_t out_w) {
    if (out_h < 1 || out_w < 1)
        throw Error(ErrorCode::InvalidArgument, "output size must be >= 1");

    FrameSequence out;
    out.t = frames.t;
    out.h = out_h;
    out.w = out_w;
    out.c = frames.c;
    out.data.resize(out.sample_count());

    const double scale_y = static_cast<double>(frames.h) / static_cast<double>(out_h);
    const double scale_x = static_cast<double>(frames.w) / static_cast<double>(out_w);

    // Precompute the per-axis neighbor indices and weights once.
    struct Tap {
        std::int64_t lo, hi;
        double frac;
    };
    auto make_taps = [](std::int64_t out_n, std::int64_t in_n, double scale) {
        std::vector<Tap> taps(static_cast<std::size_t>(out_n));
        for (std::int64_t i = 0; i < out_n; ++i) {
            double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
            src = std::clamp(src, 0.0, static_cast<double>(in_n - 1));
            const auto lo = static_cast<std::int64_t>(std::floor(src));
            taps[static_cast<std::size_t>(i)] = {lo, std::min(lo + 1, in_n - 1), src - static_cast<double>(lo)};
        }
        return taps;
    };
    const auto ys = make_taps(out_h, frames.h, scale_y);
    const auto xs = make_taps(out_w, frames.w, scale_x);

    for (std::int64_t t = 0; t < frames.t; ++t) {
        for (std::int64_t y = 0; y < out_h; ++y) {
            const auto& ty = ys[static_cast<std::size_t>(y)];
            for (std::int64_t x = 0; x < out_w; ++x) {
                const auto& tx = xs[static_cast<std::size_t>(x)];
                for (std::int64_t ch = 0; ch < frames.c; ++ch) {
                    const double top = (1.0 - tx.frac) * frames.at(t, ty.lo, tx.lo, ch) +
                                       tx.frac * frames.at(t, ty.lo, tx.hi, ch);
                    const double bottom = (1.0 - tx.frac) * frames.at(t, ty.hi, tx.lo, ch) +
                                          tx.frac * frames.at(t, ty.hi, tx.hi, ch);
                    const double value = (1.0 - ty.frac) * top + ty.frac * bottom;
                    const double rounded = std::clamp(std::floor(value + 0.5), 0.0, 255.0);
                    out.at(t, y, x, ch) = static_cast<std::uint8_t>(rounded);
                }
            }
        }
    }
    return out;
}

TensorSequence normalize_frames(const FrameSequence& frames, const std::vector<double>& mean,
                                const std::vector<double>& stddev) {
    auto channel_value = [&](const std::vector<double>& v, std::int64_t ch, const char* what) {
        if (v.size() != 1 && v.size() != static_cast<std::size_t>(frames.c))
            throw Error(ErrorCode::ShapeMismatch,
                        std::string(what) + " needs 1 or " + std::to_string(frames.c) + " values");
        return v.size() == 1 ? v[0] : v[static_cast<std::size_t>(ch)];
    };
    for (std::size_t i = 0; i < stddev.size(); ++i) {
        if (!(stddev[i] > 0.0))
            throw Error(ErrorCode::ZeroStd, "std must be positive, got " + std::to_string(stddev[i]));
    }
    if (stddev.empty()) throw Error(ErrorCode::ShapeMismatch, "std needs at least one value");
    if (mean.empty()) throw Error(ErrorCode::ShapeMismatch, "mean needs at least one value");

    TensorSequence out;
    out.t = frames.t;
    out.h = frames.h;
    out.w = frames.w;
    out.c = frames.c;
    out.data.resize(frames.data.size());
    std::vector<double> m(static_cast<std::size_t>(frames.c)), s(static_cast<std::size_t>(frames.c));
    for (std::int64_t ch = 0; ch < frames.c; ++ch) {
        m[static_cast<std::size_t>(ch)] = channel_value(mean, ch, "mean");
        s[static_cast<std::size_t>(ch)] = channel_value(stddev, ch, "std");
    }
    const auto c = static_cast<std::size_t>(frames.c);
    for (std::size_t i = 0; i < frames.data.size(); ++i) {
        const auto ch = i % c;
        out.data[i] = (static_cast<double>(frames.data[i]) / 255.0 - m[ch]) / s[ch];
    }
    return out;
}

std::vector<double> motion_features(const TensorSequence& frames) {
    if (frames.t < 1) throw Error(ErrorCode::EmptyData, "feature extraction needs t >= 1");
    const double per_frame = static_cast<double>(frames.h * frames.w);
    std::vector<double> features;
    features.reserve(static_cast<std::size_t>((2 * frames.t - 1) * frames.c));

    for (std::int64_t t = 1; t < frames.t; ++t) {
        for (std::int64_t ch = 0; ch < frames.c; ++ch) {
            double acc = 0.0;
            for (std::int64_t y = 0; y < frames.h; ++y)
                for (std::int64_t x = 0; x < frames.w; ++x)
                    acc += std::abs(frames.at(t, y, x, ch) - frames.at(t - 1, y, x, ch));
            features.push_back(acc / per_frame);
        }
    }
    for (std::int64_t t = 0; t < frames.t; ++t) {
        for (std::int64_t ch = 0; ch < frames.c; ++ch) {
            double acc = 0.0;
            for (std::int64_t y = 0; y < frames.h; ++y)
                for (std::int64_t x = 0; x < frames.w; ++x) acc += frames.at(t, y, x, ch);
            features.push_back(acc / per_frame);
        }
    }
    return features;
}

}  // namespace vidtune
