#include "vidtune/pipeline.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "vidtune/error.hpp"

namespace vidtune {

const HyperparamDescriptor* PrimitiveSpec::find_hyperparam(const std::string& name) const {
    for (const auto& hp : hyperparams) {
        if (hp.name == name) return &hp;
    }
    return nullptr;
}

std::optional<InputRef> InputRef::parse(const std::string& text) {
    auto parse_index = [](const std::string& digits) -> std::optional<std::size_t> {
        if (digits.empty()) return std::nullopt;
        if (digits.size() > 1 && digits[0] == '0') return std::nullopt;  // no leading zeros
        std::size_t value = 0;
        for (char ch : digits) {
            if (ch < '0' || ch > '9') return std::nullopt;
            if (value > (std::numeric_limits<std::size_t>::max() - 9) / 10) return std::nullopt;
            value = value * 10 + static_cast<std::size_t>(ch - '0');
        }
        return value;
    };
    InputRef ref;
    std::string digits;
    if (text.rfind("inputs.", 0) == 0) {
        ref.source = Source::PipelineInput;
        digits = text.substr(7);
    } else if (text.rfind("steps.", 0) == 0) {
        ref.source = Source::StepOutput;
        digits = text.substr(6);
    } else {
        return std::nullopt;
    }
    auto idx = parse_index(digits);
    if (!idx) return std::nullopt;
    ref.index = *idx;
    return ref;
}

std::string InputRef::to_string() const {
    const char* prefix = source == Source::PipelineInput ? "inputs." : "steps.";
    return prefix + std::to_string(index);
}

double param_double(const std::map<std::string, ParamValue>& params, const std::string& name) {
    auto it = params.find(name);
    if (it == params.end()) throw Error(ErrorCode::UnknownKey, "no hyperparameter '" + name + "'");
    if (!param_value_is_numeric(it->second))
        throw Error(ErrorCode::OutOfDomainValue, "hyperparameter '" + name + "' is not numeric");
    return param_value_as_double(it->second);
}

std::int64_t param_int(const std::map<std::string, ParamValue>& params, const std::string& name) {
    auto it = params.find(name);
    if (it == params.end()) throw Error(ErrorCode::UnknownKey, "no hyperparameter '" + name + "'");
    if (const auto* i = std::get_if<std::int64_t>(&it->second)) return *i;
    if (const auto* d = std::get_if<double>(&it->second)) {
        auto rounded = static_cast<std::int64_t>(*d);
        if (static_cast<double>(rounded) == *d) return rounded;
    }
    throw Error(ErrorCode::OutOfDomainValue, "hyperparameter '" + name + "' is not an integer");
}

std::string param_string(const std::map<std::string, ParamValue>& params, const std::string& name) {
    auto it = params.find(name);
    if (it == params.end()) throw Error(ErrorCode::UnknownKey, "no hyperparameter '" + name + "'");
    if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
    throw Error(ErrorCode::OutOfDomainValue, "hyperparameter '" + name + "' is not a string");
}

std::vector<std::uint8_t> Primitive::fit(const std::vector<const ValueEnvelope*>&,
                                         StepContext&) const {
    throw Error(ErrorCode::StepExecutionFailed, "primitive does not support fit");
}

void Registry::register_primitive(PrimitiveSpec spec, std::shared_ptr<const Primitive> impl) {
    if (spec.id.empty())
        throw Error(ErrorCode::MalformedSpec, "primitive id must be non-empty");
    if (spec.version.empty())
        throw Error(ErrorCode::MalformedSpec, spec.id + ": version must be non-empty");
    if (!impl)
        throw Error(ErrorCode::MalformedSpec, spec.id + ": null implementation");
    if (spec.requires_fit != (spec.role == PrimitiveRole::Estimator))
        throw Error(ErrorCode::MalformedSpec,
                    spec.id + ": requires_fit must match the estimator role");

    std::set<std::string> seen;
    for (const auto& hp : spec.hyperparams) {
        if (!seen.insert(hp.name).second)
            throw Error(ErrorCode::MalformedSpec,
                        spec.id + ": duplicate hyperparameter '" + hp.name + "'");
        if (!domain_contains(hp.domain, hp.default_value))
            throw Error(ErrorCode::MalformedSpec,
                        spec.id + ": default for '" + hp.name + "' is outside its domain");
    }

    auto key = std::make_pair(spec.id, spec.version);
    if (entries_.count(key))
        throw Error(ErrorCode::DuplicatePrimitive,
                    spec.id + "@" + spec.version + " is already registered");
    entries_.emplace(std::move(key), Entry{std::move(spec), std::move(impl)});
}

const Registry::Entry* Registry::find(const std::string& name, const std::string& version) const {
    auto it = entries_.find(std::make_pair(name, version));
    return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::pair<std::string, std::string>> Registry::ids() const {
    std::vector<std::pair<std::string, std::string>> out;
    out.reserve(entries_.size());
    for (const auto& [key, _] : entries_) out.push_back(key);
    return out;
}

ValidationReport validate_pipeline(const PipelineDescription& desc, const Registry& registry) {
    ValidationReport report;
    auto issue = [&report](std::string code, std::optional<std::size_t> step, std::string msg) {
        report.issues.push_back({std::move(code), step, std::move(msg)});
    };

    // output_kind of each step, once its primitive is known
    std::vector<std::optional<ValueKind>> step_kinds(desc.steps.size());

    for (std::size_t s = 0; s < desc.steps.size(); ++s) {
        const auto& step = desc.steps[s];
        const auto* entry = registry.find(step.primitive_name, step.primitive_version);
        if (!entry) {
            issue("UnknownPrimitive", s,
                  step.primitive_name + "@" + step.primitive_version + " is not registered");
            continue;
        }
        const auto& spec = entry->spec;
        step_kinds[s] = spec.output_kind;

        if (step.inputs.size() != spec.input_kinds.size())
            issue("ArityMismatch", s,
                  spec.id + " expects " + std::to_string(spec.input_kinds.size()) +
                      " inputs, got " + std::to_string(step.inputs.size()));

        for (std::size_t a = 0; a < step.inputs.size(); ++a) {
            const auto& ref = step.inputs[a];
            if (ref.source == InputRef::Source::PipelineInput) {
                if (ref.index >= desc.num_inputs) {
                    issue("BadInputIndex", s,
                          ref.to_string() + " exceeds num_inputs=" +
                              std::to_string(desc.num_inputs));
                }
                // Pipeline input kinds are not declared; checked at run time.
                continue;
            }
            if (ref.index >= s) {
                issue("ForwardReference", s,
                      ref.to_string() + " does not precede step " + std::to_string(s));
                continue;
            }
            if (a < spec.input_kinds.size() && step_kinds[ref.index] &&
                *step_kinds[ref.index] != spec.input_kinds[a]) {
                issue("KindMismatch", s,
                      ref.to_string() + " yields " + value_kind_name(*step_kinds[ref.index]) +
                          ", " + spec.id + " input " + std::to_string(a) + " wants " +
                          value_kind_name(spec.input_kinds[a]));
            }
        }

        for (const auto& [name, value] : step.bindings) {
            const auto* hp = spec.find_hyperparam(name);
            if (!hp) {
                issue("UnknownBinding", s, spec.id + " has no hyperparameter '" + name + "'");
                continue;
            }
            if (!domain_contains(hp->domain, value))
                issue("OutOfDomainBinding", s,
                      "value " + param_value_to_string(value) + " for '" + name +
                          "' is outside its domain");
        }
    }

    if (desc.output.source != InputRef::Source::StepOutput || desc.output.index >= desc.steps.size())
        issue("BadOutput", std::nullopt,
              "output " + desc.output.to_string() + " must name an existing step");

    return report;
}

PipelineDescription bind_config(const PipelineDescription& desc, const ConfigSample& config,
                                const Registry& registry) {
    PipelineDescription bound = desc;
    for (const auto& [key, value] : config) {
        std::size_t step_index = 0;
        std::string hp_name;

        auto dot = key.find('.');
        bool qualified = false;
        if (dot != std::string::npos && dot > 0) {
            const std::string head = key.substr(0, dot);
            qualified = std::all_of(head.begin(), head.end(),
                                    [](char c) { return c >= '0' && c <= '9'; });
            if (qualified) {
                step_index = std::stoull(head);
                hp_name = key.substr(dot + 1);
            }
        }

        if (!qualified) {
            // Bare name: resolve to the unique step declaring it.
            hp_name = key;
            std::size_t matches = 0;
            for (std::size_t s = 0; s < bound.steps.size(); ++s) {
                const auto* entry =
                    registry.find(bound.steps[s].primitive_name, bound.steps[s].primitive_version);
                if (entry && entry->spec.find_hyperparam(hp_name)) {
                    step_index = s;
                    ++matches;
                }
            }
            if (matches == 0)
                throw Error(ErrorCode::UnknownKey, "no step declares '" + hp_name + "'");
            if (matches > 1)
                throw Error(ErrorCode::UnknownKey,
                            "'" + hp_name + "' is ambiguous; qualify it as <step>.<name>");
        }

        if (step_index >= bound.steps.size())
            throw Error(ErrorCode::UnknownKey,
                        "config key '" + key + "' names step " + std::to_string(step_index) +
                            " but the pipeline has " + std::to_string(bound.steps.size()) +
                            " steps");
        auto& step = bound.steps[step_index];
        const auto* entry = registry.find(step.primitive_name, step.primitive_version);
        if (!entry)
            throw Error(ErrorCode::UnknownKey,
                        step.primitive_name + "@" + step.primitive_version +
                            " is not registered");
        const auto* hp = entry->spec.find_hyperparam(hp_name);
        if (!hp)
            throw Error(ErrorCode::UnknownKey,
                        entry->spec.id + " has no hyperparameter '" + hp_name + "'");
        if (!domain_contains(hp->domain, value))
            throw Error(ErrorCode::OutOfDomainValue,
                        "value " + param_value_to_string(value) + " for '" + key +
                            "' is outside the declared domain");
        step.bindings[hp_name] = value;
    }

    bound.pipeline_id = compute_pipeline_id(bound);
    return bound;
}

}  // namespace vidtune
