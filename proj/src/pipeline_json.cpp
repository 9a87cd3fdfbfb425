#include <algorithm>

#include <json.hpp>

#include "vidtune/error.hpp"
#include "vidtune/pipeline.hpp"
#include "vidtune/sha256.hpp"

namespace vidtune {
namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json param_value_to_json(const ParamValue& value) {
    ordered_json out;
    std::visit([&out](const auto& v) { out = v; }, value);
    return out;
}

ParamValue param_value_from_json(const ordered_json& node, const std::string& where) {
    if (node.is_number_integer()) return node.get<std::int64_t>();
    if (node.is_number_float()) return node.get<double>();
    if (node.is_string()) return node.get<std::string>();
    throw Error(ErrorCode::ParseError, where + ": binding values must be numbers or strings");
}

bool is_hex_id(const std::string& id) {
    if (id.size() != 32) return false;
    for (char c : id) {
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
    }
    return true;
}

void require_fields(const ordered_json& obj, const std::vector<std::string>& fields,
                    const std::string& where) {
    if (!obj.is_object()) throw Error(ErrorCode::ParseError, where + ": expected an object");
    for (const auto& f : fields) {
        if (!obj.contains(f))
            throw Error(ErrorCode::ParseError, where + ": missing field '" + f + "'");
    }
    if (obj.size() != fields.size()) {
        for (const auto& [key, _] : obj.items()) {
            if (std::find(fields.begin(), fields.end(), key) == fields.end())
                throw Error(ErrorCode::ParseError, where + ": unknown field '" + key + "'");
        }
    }
}

ordered_json pipeline_to_json(const PipelineDescription& desc) {
    ordered_json root;
    root["schema_version"] = "1";
    root["pipeline_id"] = desc.pipeline_id;
    root["num_inputs"] = desc.num_inputs;
    root["steps"] = ordered_json::array();
    for (const auto& step : desc.steps) {
        ordered_json js;
        js["primitive"] = {{"name", step.primitive_name}, {"version", step.primitive_version}};
        ordered_json bindings = ordered_json::object();
        for (const auto& [name, value] : step.bindings)  // std::map keeps keys sorted
            bindings[name] = param_value_to_json(value);
        js["bindings"] = std::move(bindings);
        ordered_json inputs = ordered_json::array();
        for (const auto& ref : step.inputs) inputs.push_back(ref.to_string());
        js["inputs"] = std::move(inputs);
        root["steps"].push_back(std::move(js));
    }
    root["output"] = desc.output.to_string();
    return root;
}

}  // namespace

std::string serialize_pipeline(const PipelineDescription& desc) {
    return pipeline_to_json(desc).dump();
}

PipelineDescription deserialize_pipeline(const std::string& text) {
    ordered_json root;
    try {
        root = ordered_json::parse(text);
    } catch (const ordered_json::parse_error& e) {
        throw Error(ErrorCode::ParseError, std::string("pipeline JSON: ") + e.what());
    }
    require_fields(root, {"schema_version", "pipeline_id", "num_inputs", "steps", "output"},
                   "pipeline");

    if (!root["schema_version"].is_string())
        throw Error(ErrorCode::ParseError, "pipeline: schema_version must be a string");
    const auto schema = root["schema_version"].get<std::string>();
    if (schema != "1")
        throw Error(ErrorCode::SchemaVersionUnsupported,
                    "pipeline schema_version '" + schema + "' is not supported");

    PipelineDescription desc;
    if (!root["pipeline_id"].is_string() || !is_hex_id(root["pipeline_id"].get<std::string>()))
        throw Error(ErrorCode::ParseError,
                    "pipeline: pipeline_id must be 32 lowercase hex characters");
    desc.pipeline_id = root["pipeline_id"].get<std::string>();

    if (!root["num_inputs"].is_number_unsigned())
        throw Error(ErrorCode::ParseError, "pipeline: num_inputs must be a non-negative integer");
    desc.num_inputs = root["num_inputs"].get<std::size_t>();

    if (!root["steps"].is_array())
        throw Error(ErrorCode::ParseError, "pipeline: steps must be an array");
    std::size_t index = 0;
    for (const auto& js : root["steps"]) {
        const std::string where = "steps[" + std::to_string(index) + "]";
        require_fields(js, {"primitive", "bindings", "inputs"}, where);
        require_fields(js["primitive"], {"name", "version"}, where + ".primitive");
        if (!js["primitive"]["name"].is_string() || !js["primitive"]["version"].is_string())
            throw Error(ErrorCode::ParseError, where + ": primitive name/version must be strings");

        StepDescription step;
        step.primitive_name = js["primitive"]["name"].get<std::string>();
        step.primitive_version = js["primitive"]["version"].get<std::string>();

        if (!js["bindings"].is_object())
            throw Error(ErrorCode::ParseError, where + ": bindings must be an object");
        for (const auto& [name, value] : js["bindings"].items())
            step.bindings[name] = param_value_from_json(value, where + ".bindings." + name);

        if (!js["inputs"].is_array())
            throw Error(ErrorCode::ParseError, where + ": inputs must be an array");
        for (const auto& entry : js["inputs"]) {
            if (!entry.is_string())
                throw Error(ErrorCode::ParseError, where + ": inputs must be reference strings");
            auto ref = InputRef::parse(entry.get<std::string>());
            if (!ref)
                throw Error(ErrorCode::ParseError,
                            where + ": bad reference '" + entry.get<std::string>() + "'");
            step.inputs.push_back(*ref);
        }
        desc.steps.push_back(std::move(step));
        ++index;
    }

    if (!root["output"].is_string())
        throw Error(ErrorCode::ParseError, "pipeline: output must be a reference string");
    auto out_ref = InputRef::parse(root["output"].get<std::string>());
    if (!out_ref)
        throw Error(ErrorCode::ParseError,
                    "pipeline: bad output reference '" + root["output"].get<std::string>() + "'");
    if (out_ref->source != InputRef::Source::StepOutput || out_ref->index >= desc.steps.size())
        throw Error(ErrorCode::ParseError,
                    "pipeline: output " + out_ref->to_string() + " must name an existing step");
    desc.output = *out_ref;
    return desc;
}

std::string compute_pipeline_id(const PipelineDescription& desc) {
    PipelineDescription scratch = desc;
    scratch.pipeline_id.assign(32, '0');
    const auto digest = sha256(serialize_pipeline(scratch));
    return hex_encode(digest.data(), 16);
}

}  // namespace vidtune
