#include <algorithm>
#include <memory>

#include "vidtune/error.hpp"
#include "vidtune/zoo.hpp"

namespace vidtune {
namespace {

constexpr const char* kZooVersion = "0.1.0";

HyperparamDescriptor hp_choice(std::string name, std::vector<ParamValue> options,
                               ParamValue def, bool tunable = false) {
    return {std::move(name), Choice{std::move(options)}, std::move(def), tunable};
}

HyperparamDescriptor hp_uniform(std::string name, double low, double high, double def,
                                bool tunable = false) {
    return {std::move(name), Uniform{low, high}, def, tunable};
}

HyperparamDescriptor hp_loguniform(std::string name, double low, double high, double def,
                                   bool tunable = false) {
    return {std::move(name), LogUniform{low, high}, def, tunable};
}

struct FrameReader : Primitive {
    ValueEnvelope produce(const std::vector<const ValueEnvelope*>& inputs,
                          StepContext&) const override {
        RawFramesBatch batch;
        for (const auto& dir : inputs[0]->get<PathList>()) batch.push_back(read_frame_dir(dir));
        return ValueEnvelope(std::move(batch));
    }
};

struct SegmentSampler : Primitive {
    ValueEnvelope produce(const std::vector<const ValueEnvelope*>& inputs,
                          StepContext& ctx) const override {
        const auto n = param_int(*ctx.params, "num_segments");
        const auto mode =
            ctx.phase == Phase::Fit ? SegmentMode::TrainRandom : SegmentMode::EvalCenter;
        RawFramesBatch batch;
        for (const auto& seq : inputs[0]->get<RawFramesBatch>())
            batch.push_back(segment_sample(seq, n, mode, ctx.rng));
        return ValueEnvelope(std::move(batch));
    }
};

struct FrameScaler : Primitive {
    ValueEnvelope produce(const std::vector<const ValueEnvelope*>& inputs,
                          StepContext& ctx) const override {
        const auto out_h = param_int(*ctx.params, "out_h");
        const auto out_w = param_int(*ctx.params, "out_w");
        RawFramesBatch batch;
        for (const auto& seq : inputs[0]->get<RawFramesBatch>())
            batch.push_back(scale_frames(seq, out_h, out_w));
        return ValueEnvelope(std::move(batch));
    }
};

struct FrameNormalizer : Primitive {
    ValueEnvelope produce(const std::vector<const ValueEnvelope*>& inputs,
                          StepContext& ctx) const override {
        const std::vector<double> mean{param_double(*ctx.params, "mean")};
        const std::vector<double> stddev{param_double(*ctx.params, "std")};
        TensorFramesBatch batch;
        for (const auto& seq : inputs[0]->get<RawFramesBatch>())
            batch.sequences.push_back(normalize_frames(seq, mean, stddev));
        const auto channels =
            batch.sequences.empty() ? std::size_t{0} : static_cast<std::size_t>(batch.sequences[0].c);
        batch.channel_mean.assign(channels, mean[0]);
        batch.channel_std.assign(channels, stddev[0]);
        return ValueEnvelope(std::move(batch));
    }
};

struct MotionFeatures : Primitive {
    ValueEnvelope produce(const std::vector<const ValueEnvelope*>& inputs,
                          StepContext&) const override {
        const auto& batch = inputs[0]->get<TensorFramesBatch>().sequences;
        FeatureMatrix features;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            auto row = motion_features(batch[i]);
            if (i == 0) {
                features = Matrix(batch.size(), row.size());
            } else if (row.size() != features.cols) {
                throw Error(ErrorCode::ShapeMismatch,
                            "sequence " + std::to_string(i) + " yields " +
                                std::to_string(row.size()) + " features, expected " +
                                std::to_string(features.cols));
            }
            std::copy(row.begin(), row.end(), features.data.begin() + i * features.cols);
        }
        return ValueEnvelope(std::move(features));
    }
};

std::vector<std::string> table_labels(const Table& table) {
    if (!table.target_index)
        throw Error(ErrorCode::BadTargetIndex, "annotation table has no label column");
    std::vector<std::string> labels;
    labels.reserve(table.rows.size());
    for (const auto& row : table.rows) labels.push_back(row[*table.target_index]);
    return labels;
}

struct ToyMlp : Primitive {
    std::vector<std::uint8_t> fit(const std::vector<const ValueEnvelope*>& inputs,
                                  StepContext& ctx) const override {
        const auto& features = inputs[0]->get<FeatureMatrix>();
        const auto& table = inputs[1]->get<Table>();
        const auto& pretrained_paths = inputs[2]->get<PathList>();

        const auto label_strings = table_labels(table);
        if (label_strings.size() != features.rows)
            throw Error(ErrorCode::ShapeMismatch,
                        "table has " + std::to_string(label_strings.size()) + " rows, features " +
                            std::to_string(features.rows));
        if (label_strings.empty()) throw Error(ErrorCode::EmptyData, "no training samples");

        MlpModel pretrained;
        const MlpModel* init = nullptr;
        std::vector<std::string> vocab;
        if (param_int(*ctx.params, "use_pretrained") != 0) {
            if (pretrained_paths.empty())
                throw Error(ErrorCode::MissingPretrainedPath,
                            "use_pretrained is set but no weights path was supplied");
            pretrained = load_mlp(pretrained_paths[0]);
            if (pretrained.class_names.empty())
                throw Error(ErrorCode::CorruptArtifact, "pretrained weights carry no class names");
            vocab = pretrained.class_names;
            init = &pretrained;
        } else {
            vocab = label_strings;
            std::sort(vocab.begin(), vocab.end());
            vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
        }

        std::vector<std::int64_t> labels;
        labels.reserve(label_strings.size());
        for (const auto& s : label_strings) {
            auto it = std::lower_bound(vocab.begin(), vocab.end(), s);
            if (init && (it == vocab.end() || *it != s)) {
                // Pretrained vocabularies are fixed; fresh ones contain every
                // training label by construction.
                throw Error(ErrorCode::LabelOutOfRange,
                            "label '" + s + "' is not in the pretrained vocabulary");
            }
            labels.push_back(it - vocab.begin());
        }

        TrainHyperparams hp;
        hp.epochs = param_int(*ctx.params, "epochs");
        hp.learning_rate = param_double(*ctx.params, "learning_rate");
        hp.weight_decay = param_double(*ctx.params, "weight_decay");
        hp.batch_size = param_int(*ctx.params, "batch_size");
        hp.momentum = param_double(*ctx.params, "momentum");
        hp.dropout = param_double(*ctx.params, "dropout");
        hp.hidden_units = param_int(*ctx.params, "hidden_units");
        std::erase_if(hp.milestones, [&hp](std::int64_t m) { return m >= hp.epochs; });

        auto result = fit_classifier(features, labels, vocab.size(), hp, ctx.rng->next_u64(), init);
        result.model.class_names = vocab;
        return encode_mlp(result.model);
    }

    ValueEnvelope produce(const std::vector<const ValueEnvelope*>& inputs,
                          StepContext& ctx) const override {
        if (!ctx.state || ctx.state->empty())
            throw Error(ErrorCode::StepExecutionFailed, "classifier has no fitted state");
        const auto model = decode_mlp(*ctx.state);
        return ValueEnvelope(predict_proba(model, inputs[0]->get<FeatureMatrix>()));
    }
};

}  // namespace

Registry make_default_registry() {
    Registry registry;

    registry.register_primitive(
        PrimitiveSpec{"zoo.frame_reader", kZooVersion, PrimitiveRole::Loader,
                      {ValueKind::PathList}, ValueKind::RawFrames, {}, false},
        std::make_shared<FrameReader>());

    registry.register_primitive(
        PrimitiveSpec{"zoo.segment_sample", kZooVersion, PrimitiveRole::Transformer,
                      {ValueKind::RawFrames}, ValueKind::RawFrames,
                      {hp_choice("num_segments", {std::int64_t{8}, std::int64_t{16}, std::int64_t{32}},
                                 std::int64_t{16}, true)},
                      false},
        std::make_shared<SegmentSampler>());

    registry.register_primitive(
        PrimitiveSpec{"zoo.scale_frames", kZooVersion, PrimitiveRole::Transformer,
                      {ValueKind::RawFrames}, ValueKind::RawFrames,
                      {hp_choice("out_h", {std::int64_t{8}, std::int64_t{16}, std::int64_t{24},
                                           std::int64_t{32}}, std::int64_t{16}),
                       hp_choice("out_w", {std::int64_t{8}, std::int64_t{16}, std::int64_t{24},
                                           std::int64_t{32}}, std::int64_t{16})},
                      false},
        std::make_shared<FrameScaler>());

    registry.register_primitive(
        PrimitiveSpec{"zoo.normalize_frames", kZooVersion, PrimitiveRole::Transformer,
                      {ValueKind::RawFrames}, ValueKind::TensorFrames,
                      {hp_uniform("mean", 0.0, 1.0, 0.27), hp_uniform("std", 0.01, 2.0, 0.04)},
                      false},
        std::make_shared<FrameNormalizer>());

    registry.register_primitive(
        PrimitiveSpec{"zoo.motion_features", kZooVersion, PrimitiveRole::Transformer,
                      {ValueKind::TensorFrames}, ValueKind::FeatureMatrix, {}, false},
        std::make_shared<MotionFeatures>());

    registry.register_primitive(
        PrimitiveSpec{"zoo.toy_mlp", kZooVersion, PrimitiveRole::Estimator,
                      {ValueKind::FeatureMatrix, ValueKind::Table, ValueKind::PathList},
                      ValueKind::Probabilities,
                      {hp_loguniform("learning_rate", 1e-4, 1e-3, 1e-3, true),
                       hp_uniform("momentum", 0.9, 0.99, 0.9, true),
                       hp_loguniform("weight_decay", 5e-4, 1e-3, 5e-4, true),
                       hp_choice("epochs", {std::int64_t{1}, std::int64_t{2}, std::int64_t{5},
                                            std::int64_t{10}, std::int64_t{20}, std::int64_t{50}},
                                 std::int64_t{50}),
                       hp_choice("batch_size", {std::int64_t{1}, std::int64_t{2}, std::int64_t{4},
                                                std::int64_t{8}, std::int64_t{16}},
                                 std::int64_t{4}),
                       hp_uniform("dropout", 0.0, 0.9, 0.5),
                       hp_choice("hidden_units", {std::int64_t{8}, std::int64_t{16},
                                                  std::int64_t{32}, std::int64_t{64}},
                                 std::int64_t{32}),
                       hp_choice("use_pretrained", {std::int64_t{0}, std::int64_t{1}},
                                 std::int64_t{0})},
                      true},
        std::make_shared<ToyMlp>());

    return registry;
}

PipelineDescription build_standard_pipeline(const StandardPipelineConfig& config,
                                            const Registry& registry) {
    const std::string primitive_id = "zoo." + config.algorithm;
    std::string version;
    for (const auto& [id, ver] : registry.ids())
        if (id == primitive_id) version = ver;  // keep the newest registration
    const auto* estimator = version.empty() ? nullptr : registry.find(primitive_id, version);
    if (!estimator || estimator->spec.role != PrimitiveRole::Estimator)
        throw Error(ErrorCode::UnknownAlgorithm,
                    "no estimator registered for algorithm '" + config.algorithm + "'");
    if (config.load_pretrained && !config.pretrained_path)
        throw Error(ErrorCode::MissingPretrainedPath,
                    "load_pretrained requires a pretrained weights path");

    PipelineDescription desc;
    desc.num_inputs = 3;  // 0: annotation table, 1: frame dirs, 2: pretrained weights

    auto step = [](std::string name, std::map<std::string, ParamValue> bindings,
                   std::vector<InputRef> inputs) {
        return StepDescription{std::move(name), kZooVersion, std::move(bindings),
                               std::move(inputs)};
    };
    const auto input_ref = [](std::size_t i) {
        return InputRef{InputRef::Source::PipelineInput, i};
    };
    const auto step_ref = [](std::size_t i) { return InputRef{InputRef::Source::StepOutput, i}; };

    desc.steps.push_back(step("zoo.frame_reader", {}, {input_ref(1)}));
    desc.steps.push_back(
        step("zoo.segment_sample", {{"num_segments", std::int64_t{16}}}, {step_ref(0)}));
    desc.steps.push_back(step("zoo.scale_frames",
                              {{"out_h", std::int64_t{16}}, {"out_w", std::int64_t{16}}},
                              {step_ref(1)}));
    desc.steps.push_back(
        step("zoo.normalize_frames", {{"mean", 0.27}, {"std", 0.04}}, {step_ref(2)}));
    desc.steps.push_back(step("zoo.motion_features", {}, {step_ref(3)}));

    // Stock training schedule, bound explicitly where the estimator declares
    // the knob (plugin estimators may expose a different set).
    StepDescription classifier{estimator->spec.id, estimator->spec.version, {},
                               {step_ref(4), input_ref(0), input_ref(2)}};
    const std::pair<const char*, ParamValue> stock[] = {
        {"learning_rate", 1e-3},
        {"momentum", 0.9},
        {"weight_decay", 5e-4},
        {"epochs", std::int64_t{50}},
        {"batch_size", std::int64_t{4}},
        {"dropout", 0.5},
        {"hidden_units", std::int64_t{32}},
        {"use_pretrained", std::int64_t{config.load_pretrained ? 1 : 0}},
    };
    for (const auto& [name, value] : stock)
        if (estimator->spec.find_hyperparam(name)) classifier.bindings[name] = value;
    desc.steps.push_back(std::move(classifier));

    desc.output = step_ref(5);
    desc.pipeline_id = compute_pipeline_id(desc);
    if (!config.overrides.empty()) desc = bind_config(desc, config.overrides, registry);
    return desc;
}

}  // namespace vidtune
