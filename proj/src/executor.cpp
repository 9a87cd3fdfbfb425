#include "vidtune/executor.hpp"

#include <cstring>

#include "vidtune/bytes.hpp"
#include "vidtune/error.hpp"
#include "vidtune/sha256.hpp"

namespace vidtune {
namespace {

constexpr char kMagic[4] = {'P', 'F', 'F', '1'};
constexpr std::uint16_t kFormatVersion = 1;

std::map<std::string, ParamValue> resolve_params(const PrimitiveSpec& spec,
                                                 const StepDescription& step) {
    std::map<std::string, ParamValue> params;
    for (const auto& hp : spec.hyperparams) params[hp.name] = hp.default_value;
    for (const auto& [name, value] : step.bindings) params[name] = value;
    return params;
}

void throw_validation(const ValidationReport& report) {
    const auto& first = report.issues.front();
    std::string msg = first.code;
    if (first.step_index) msg += " at step " + std::to_string(*first.step_index);
    msg += ": " + first.message;
    if (report.issues.size() > 1)
        msg += " (+" + std::to_string(report.issues.size() - 1) + " more)";
    throw Error(ErrorCode::ValidationFailed, msg);
}

// Runs the steps of `desc` in order, pulling estimator state from `fit_blob`
// (fit phase: freshly computed; produce phase: loaded from the artifact).
struct Runner {
    const PipelineDescription& desc;
    const Registry& registry;
    const std::vector<ValueEnvelope>& inputs;
    Phase phase;
    std::uint64_t seed;

    std::vector<ValueEnvelope> step_outputs;
    std::vector<std::vector<std::uint8_t>>* states = nullptr;  // fit: filled, produce: read

    const ValueEnvelope& resolve(const InputRef& ref) const {
        if (ref.source == InputRef::Source::PipelineInput) return inputs[ref.index];
        return step_outputs[ref.index];
    }

    void run() {
        for (std::size_t s = 0; s < desc.steps.size(); ++s) {
            const auto& step = desc.steps[s];
            const auto* entry = registry.find(step.primitive_name, step.primitive_version);
            const auto& spec = entry->spec;  // validation guarantees presence

            std::vector<const ValueEnvelope*> args;
            args.reserve(step.inputs.size());
            for (std::size_t a = 0; a < step.inputs.size(); ++a) {
                const auto& env = resolve(step.inputs[a]);
                if (env.kind() != spec.input_kinds[a])
                    throw Error(ErrorCode::StepExecutionFailed,
                                "step " + std::to_string(s) + " (" + spec.id + "): input " +
                                    std::to_string(a) + " is " + value_kind_name(env.kind()) +
                                    ", expected " + value_kind_name(spec.input_kinds[a]));
                args.push_back(&env);
            }

            const auto params = resolve_params(spec, step);
            Rng rng(Rng::derive(seed, s));
            StepContext ctx;
            ctx.phase = phase;
            ctx.step_index = s;
            ctx.rng = &rng;
            ctx.params = &params;

            try {
                if (spec.requires_fit) {
                    if (phase == Phase::Fit) (*states)[s] = entry->impl->fit(args, ctx);
                    ctx.state = &(*states)[s];
                }
                auto out = entry->impl->produce(args, ctx);
                if (out.kind() != spec.output_kind)
                    throw Error(ErrorCode::StepExecutionFailed,
                                spec.id + " produced " + value_kind_name(out.kind()) +
                                    ", declared " + value_kind_name(spec.output_kind));
                check_envelope(out);
                step_outputs.push_back(std::move(out));
            } catch (const Error&) {
                throw;
            } catch (const std::exception& e) {
                throw Error(ErrorCode::StepExecutionFailed,
                            "step " + std::to_string(s) + " (" + spec.id + "): " + e.what());
            }
        }
    }
};

}  // namespace

FittedPipeline fit_pipeline(const PipelineDescription& desc, const Registry& registry,
                            const std::vector<ValueEnvelope>& inputs, std::uint64_t seed) {
    auto report = validate_pipeline(desc, registry);
    if (!report.ok()) throw_validation(report);
    if (inputs.size() != desc.num_inputs)
        throw Error(ErrorCode::ValidationFailed,
                    "pipeline declares " + std::to_string(desc.num_inputs) + " inputs, got " +
                        std::to_string(inputs.size()));

    FittedPipeline fitted;
    fitted.description = desc;
    fitted.description.pipeline_id = compute_pipeline_id(desc);
    fitted.fit_seed = seed;
    fitted.step_states.resize(desc.steps.size());

    Runner runner{desc, registry, inputs, Phase::Fit, seed, {}, nullptr};
    runner.states = &fitted.step_states;
    runner.run();
    return fitted;
}

ValueEnvelope produce_pipeline(const FittedPipeline& fitted, const Registry& registry,
                               const std::vector<ValueEnvelope>& inputs) {
    const auto& desc = fitted.description;
    auto report = validate_pipeline(desc, registry);
    if (!report.ok()) throw_validation(report);
    if (inputs.size() != desc.num_inputs)
        throw Error(ErrorCode::ArityMismatch,
                    "pipeline declares " + std::to_string(desc.num_inputs) + " inputs, got " +
                        std::to_string(inputs.size()));
    if (fitted.step_states.size() != desc.steps.size())
        throw Error(ErrorCode::CorruptArtifact, "state count does not match step count");

    // Produce draws from a fixed stream so outputs depend only on the
    // artifact and the inputs, not on the original fit seed.
    Runner runner{desc, registry, inputs, Phase::Produce, 0, {}, nullptr};
    runner.states = const_cast<std::vector<std::vector<std::uint8_t>>*>(&fitted.step_states);
    runner.run();
    return std::move(runner.step_outputs[desc.output.index]);
}

std::vector<std::uint8_t> encode_fitted(const FittedPipeline& fitted) {
    ByteWriter w;
    w.bytes(kMagic, 4);
    w.u16(kFormatVersion);
    w.u64(fitted.fit_seed);
    const std::string text = serialize_pipeline(fitted.description);
    w.u32(static_cast<std::uint32_t>(text.size()));
    w.text(text);
    w.u32(static_cast<std::uint32_t>(fitted.step_states.size()));
    for (const auto& blob : fitted.step_states) {
        w.u32(static_cast<std::uint32_t>(blob.size()));
        w.bytes(blob);
    }
    auto hash = sha256(w.data());
    w.bytes(hash.data(), hash.size());
    return w.take();
}

FittedPipeline decode_fitted(const std::vector<std::uint8_t>& data) {
    if (data.size() < 4 || std::memcmp(data.data(), kMagic, 4) != 0)
        throw Error(ErrorCode::CorruptArtifact, "not a fitted-pipeline artifact");
    if (data.size() < 38)  // magic + version + seed + two counts + hash
        throw Error(ErrorCode::CorruptArtifact, "artifact is truncated");

    auto expected = Sha256::digest(data.data(), data.size() - 32);
    if (std::memcmp(expected.data(), data.data() + data.size() - 32, 32) != 0)
        throw Error(ErrorCode::CorruptArtifact, "artifact content hash does not match");

    ByteReader r(data.data(), data.size() - 32, ErrorCode::CorruptArtifact);
    r.bytes(4);  // magic, already checked
    const auto version = r.u16();
    if (version != kFormatVersion)
        throw Error(ErrorCode::SchemaVersionUnsupported,
                    "artifact format version " + std::to_string(version) + " is not supported");

    FittedPipeline fitted;
    fitted.fit_seed = r.u64();
    const auto text_len = r.u32();
    fitted.description = deserialize_pipeline(r.text(text_len));

    const auto count = r.u32();
    if (count != fitted.description.steps.size())
        throw Error(ErrorCode::CorruptArtifact, "state count does not match step count");
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto len = r.u32();
        fitted.step_states.push_back(r.bytes(len));
    }
    if (!r.at_end()) throw Error(ErrorCode::CorruptArtifact, "trailing bytes after step states");
    return fitted;
}

void save_fitted(const FittedPipeline& fitted, const std::string& path) {
    write_file_atomic(path, encode_fitted(fitted));
}

FittedPipeline load_fitted(const std::string& path) {
    return decode_fitted(read_file_bytes(path));
}

}  // namespace vidtune
