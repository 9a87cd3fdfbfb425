#include "vidtune/data.hpp"

#include <cmath>

#include "vidtune/error.hpp"

namespace vidtune {

const char* value_kind_name(ValueKind kind) {
    switch (kind) {
        case ValueKind::Table: return "Table";
        case ValueKind::PathList: return "PathList";
        case ValueKind::RawFrames: return "RawFrames";
        case ValueKind::TensorFrames: return "TensorFrames";
        case ValueKind::FeatureMatrix: return "FeatureMatrix";
        case ValueKind::LabelVector: return "LabelVector";
        case ValueKind::Probabilities: return "Probabilities";
    }
    return "?";
}

std::optional<ValueKind> value_kind_from_name(const std::string& name) {
    static const std::pair<const char*, ValueKind> kNames[] = {
        {"Table", ValueKind::Table},
        {"PathList", ValueKind::PathList},
        {"RawFrames", ValueKind::RawFrames},
        {"TensorFrames", ValueKind::TensorFrames},
        {"FeatureMatrix", ValueKind::FeatureMatrix},
        {"LabelVector", ValueKind::LabelVector},
        {"Probabilities", ValueKind::Probabilities},
    };
    for (const auto& [n, k] : kNames)
        if (name == n) return k;
    return std::nullopt;
}

std::size_t Table::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    throw Error(ErrorCode::InvalidArgument, "table has no column named '" + name + "'");
}

namespace {

void fail(const std::string& what) {
    throw Error(ErrorCode::InvalidArgument, "envelope invariant violated: " + what);
}

void check_frame_dims(std::int64_t t, std::int64_t h, std::int64_t w, std::int64_t c,
                      std::size_t size) {
    if (t < 1 || h < 1 || w < 1) fail("frame dims must be at least 1");
    if (c != 1 && c != 3) fail("channel count must be 1 or 3");
    if (size != static_cast<std::size_t>(t * h * w * c)) fail("frame payload size mismatch");
}

}  // namespace

void check_envelope(const ValueEnvelope& env) {
    switch (env.kind()) {
        case ValueKind::Table: {
            const auto& t = env.get<Table>();
            for (const auto& row : t.rows)
                if (row.size() != t.columns.size()) fail("ragged table row");
            if (t.target_index && *t.target_index >= t.columns.size())
                fail("target index out of range");
            break;
        }
        case ValueKind::PathList:
            break;
        case ValueKind::RawFrames: {
            for (const auto& seq : env.get<RawFramesBatch>())
                check_frame_dims(seq.t, seq.h, seq.w, seq.c, seq.data.size());
            break;
        }
        case ValueKind::TensorFrames: {
            const auto& batch = env.get<TensorFramesBatch>();
            for (const auto& seq : batch.sequences) {
                if (seq.data.size() != static_cast<std::size_t>(seq.t * seq.h * seq.w * seq.c))
                    fail("tensor payload size mismatch");
                for (double v : seq.data)
                    if (!std::isfinite(v)) fail("tensor frames must be finite");
            }
            break;
        }
        case ValueKind::FeatureMatrix: {
            const auto& m = env.get<FeatureMatrix>();
            if (m.data.size() != m.rows * m.cols) fail("feature matrix size mismatch");
            for (double v : m.data)
                if (!std::isfinite(v)) fail("feature matrix must be finite");
            break;
        }
        case ValueKind::LabelVector: {
            for (auto v : env.get<LabelVector>().values)
                if (v < 0) fail("labels must be non-negative");
            break;
        }
        case ValueKind::Probabilities: {
            const auto& p = env.get<Probabilities>();
            if (p.values.data.size() != p.values.rows * p.values.cols)
                fail("probability matrix size mismatch");
            if (p.class_names.size() != p.values.cols)
                fail("class name count must match columns");
            for (std::size_t r = 0; r < p.values.rows; ++r) {
                double sum = 0.0;
                for (std::size_t c = 0; c < p.values.cols; ++c) {
                    double v = p.values.at(r, c);
                    if (!(v >= 0.0) || !std::isfinite(v)) fail("probabilities must be in [0,1]");
                    sum += v;
                }
                if (std::abs(sum - 1.0) > 1e-6) fail("probability row does not sum to 1");
            }
            break;
        }
    }
}

}  // namespace vidtune
