#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace vidtune {

enum class ValueKind {
    Table,
    PathList,
    RawFrames,
    TensorFrames,
    FeatureMatrix,
    LabelVector,
    Probabilities,
};

const char* value_kind_name(ValueKind kind);
std::optional<ValueKind> value_kind_from_name(const std::string& name);

// Rectangular table of strings with an optional label column.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::optional<std::size_t> target_index;

    std::size_t column_index(const std::string& name) const;  // throws InvalidArgument
    const std::string& cell(std::size_t row, std::size_t col) const { return rows[row][col]; }
};

using PathList = std::vector<std::string>;

// One video's frames, unsigned 8-bit, t*h*w*c samples in t,y,x,c order.
struct FrameSequence {
    std::int64_t t = 0;
    std::int64_t h = 0;
    std::int64_t w = 0;
    std::int64_t c = 0;
    std::vector<std::uint8_t> data;

    std::uint8_t& at(std::int64_t ti, std::int64_t y, std::int64_t x, std::int64_t ci) {
        return data[static_cast<std::size_t>(((ti * h + y) * w + x) * c + ci)];
    }
    std::uint8_t at(std::int64_t ti, std::int64_t y, std::int64_t x, std::int64_t ci) const {
        return data[static_cast<std::size_t>(((ti * h + y) * w + x) * c + ci)];
    }
    std::size_t sample_count() const { return static_cast<std::size_t>(t * h * w * c); }
};

// Real-valued frames after normalization, same layout as FrameSequence.
struct TensorSequence {
    std::int64_t t = 0;
    std::int64_t h = 0;
    std::int64_t w = 0;
    std::int64_t c = 0;
    std::vector<double> data;

    double& at(std::int64_t ti, std::int64_t y, std::int64_t x, std::int64_t ci) {
        return data[static_cast<std::size_t>(((ti * h + y) * w + x) * c + ci)];
    }
    double at(std::int64_t ti, std::int64_t y, std::int64_t x, std::int64_t ci) const {
        return data[static_cast<std::size_t>(((ti * h + y) * w + x) * c + ci)];
    }
};

using RawFramesBatch = std::vector<FrameSequence>;

struct TensorFramesBatch {
    std::vector<TensorSequence> sequences;
    std::vector<double> channel_mean;  // statistics used to produce the values
    std::vector<double> channel_std;
};

// Row-major real matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

using FeatureMatrix = Matrix;

struct LabelVector {
    std::vector<std::int64_t> values;
};

struct Probabilities {
    Matrix values;                         // rows sum to 1
    std::vector<std::string> class_names;  // one per column
};

// Typed value passed between pipeline steps.
class ValueEnvelope {
public:
    using Payload = std::variant<Table, PathList, RawFramesBatch, TensorFramesBatch,
                                 FeatureMatrix, LabelVector, Probabilities>;

    explicit ValueEnvelope(Table v) : payload_(std::move(v)) {}
    explicit ValueEnvelope(PathList v) : payload_(std::move(v)) {}
    explicit ValueEnvelope(RawFramesBatch v) : payload_(std::move(v)) {}
    explicit ValueEnvelope(TensorFramesBatch v) : payload_(std::move(v)) {}
    explicit ValueEnvelope(FeatureMatrix v) : payload_(std::move(v)) {}
    explicit ValueEnvelope(LabelVector v) : payload_(std::move(v)) {}
    explicit ValueEnvelope(Probabilities v) : payload_(std::move(v)) {}

    ValueKind kind() const { return static_cast<ValueKind>(payload_.index()); }

    template <typename T>
    const T& get() const {
        return std::get<T>(payload_);
    }
    template <typename T>
    const T* get_if() const {
        return std::get_if<T>(&payload_);
    }

private:
    Payload payload_;
};

// Verifies that the payload satisfies its kind's shape invariants
// (rectangular tables, consistent frame dims, finite tensors, probability
// rows summing to 1 within 1e-6). Throws InvalidArgument on violation.
void check_envelope(const ValueEnvelope& env);

}  // namespace vidtune
