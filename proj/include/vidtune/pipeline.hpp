#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vidtune/data.hpp"
#include "vidtune/hyperspace.hpp"
#include "vidtune/rng.hpp"

namespace vidtune {

enum class PrimitiveRole { Loader, Transformer, Estimator };

struct HyperparamDescriptor {
    std::string name;
    ParamDomain domain;
    ParamValue default_value;
    bool tunable = false;
};

struct PrimitiveSpec {
    std::string id;       // namespaced, e.g. "zoo.segment_sample"
    std::string version;  // semver
    PrimitiveRole role = PrimitiveRole::Transformer;
    std::vector<ValueKind> input_kinds;
    ValueKind output_kind = ValueKind::Table;
    std::vector<HyperparamDescriptor> hyperparams;
    bool requires_fit = false;

    const HyperparamDescriptor* find_hyperparam(const std::string& name) const;
};

// Reference to a step input: either a pipeline input ("inputs.k") or the
// output of an earlier step ("steps.i").
struct InputRef {
    enum class Source { PipelineInput, StepOutput };
    Source source = Source::PipelineInput;
    std::size_t index = 0;

    static std::optional<InputRef> parse(const std::string& text);
    std::string to_string() const;
    bool operator==(const InputRef&) const = default;
};

struct StepDescription {
    std::string primitive_name;
    std::string primitive_version;
    std::map<std::string, ParamValue> bindings;  // serialized in key order
    std::vector<InputRef> inputs;
};

struct PipelineDescription {
    std::string pipeline_id;  // 32 lowercase hex chars
    std::size_t num_inputs = 0;
    std::vector<StepDescription> steps;
    InputRef output;  // must reference a step
};

// Execution phase handed to primitive implementations. Segment sampling and
// dropout behave differently between the two.
enum class Phase { Fit, Produce };

struct StepContext {
    Phase phase = Phase::Produce;
    std::size_t step_index = 0;
    Rng* rng = nullptr;                                  // step-specific stream
    const std::map<std::string, ParamValue>* params = nullptr;  // defaults + bindings
    const std::vector<std::uint8_t>* state = nullptr;    // fitted state (estimators, produce)
};

// Helpers for pulling typed hyperparameters out of a resolved binding map.
double param_double(const std::map<std::string, ParamValue>& params, const std::string& name);
std::int64_t param_int(const std::map<std::string, ParamValue>& params, const std::string& name);
std::string param_string(const std::map<std::string, ParamValue>& params, const std::string& name);

class Primitive {
public:
    virtual ~Primitive() = default;

    virtual ValueEnvelope produce(const std::vector<const ValueEnvelope*>& inputs,
                                  StepContext& ctx) const = 0;

    // Estimators return their learned state as an opaque blob; the default
    // implementation rejects, matching requires_fit = false.
    virtual std::vector<std::uint8_t> fit(const std::vector<const ValueEnvelope*>& inputs,
                                          StepContext& ctx) const;
};

class Registry {
public:
    struct Entry {
        PrimitiveSpec spec;
        std::shared_ptr<const Primitive> impl;
    };

    // Throws MalformedSpec (default outside domain, duplicate hyperparam
    // names, role/requires_fit mismatch) or DuplicatePrimitive.
    void register_primitive(PrimitiveSpec spec, std::shared_ptr<const Primitive> impl);

    const Entry* find(const std::string& name, const std::string& version) const;
    std::vector<std::pair<std::string, std::string>> ids() const;

private:
    std::map<std::pair<std::string, std::string>, Entry> entries_;
};

struct ValidationIssue {
    std::string code;
    std::optional<std::size_t> step_index;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool ok() const { return issues.empty(); }
};

// Issue codes: UnknownPrimitive, ForwardReference, BadInputIndex,
// BadReferenceSyntax, ArityMismatch, KindMismatch, UnknownBinding,
// OutOfDomainBinding, BadOutput.
ValidationReport validate_pipeline(const PipelineDescription& desc, const Registry& registry);

// Overwrites bindings named by the config. Keys are either
// "<step_index>.<hyperparam>" or a bare hyperparam name, which resolves to
// the unique step declaring it. Throws UnknownKey / OutOfDomainValue.
PipelineDescription bind_config(const PipelineDescription& desc, const ConfigSample& config,
                                const Registry& registry);

// Canonical JSON text: fixed field order, bindings in key order, shortest
// round-trip decimals. serialize(deserialize(t)) == t for canonical t.
std::string serialize_pipeline(const PipelineDescription& desc);
PipelineDescription deserialize_pipeline(const std::string& text);

// Content-derived 32-hex identifier over the canonical text with a zeroed id.
std::string compute_pipeline_id(const PipelineDescription& desc);

}  // namespace vidtune
