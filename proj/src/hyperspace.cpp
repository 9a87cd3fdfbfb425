#include "vidtune/hyperspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "vidtune/error.hpp"

namespace vidtune {

namespace {

using ordered_json = nlohmann::ordered_json;

double numeric_of(const ParamValue& v) {
    if (std::holds_alternative<std::int64_t>(v))
        return static_cast<double>(std::get<std::int64_t>(v));
    return std::get<double>(v);
}

}  // namespace

bool param_value_is_numeric(const ParamValue& v) {
    return !std::holds_alternative<std::string>(v);
}

double param_value_as_double(const ParamValue& v) {
    if (!param_value_is_numeric(v))
        throw Error(ErrorCode::InvalidArgument,
                    "string value used where a number is required: " + std::get<std::string>(v));
    return numeric_of(v);
}

bool param_value_equal(const ParamValue& a, const ParamValue& b) {
    bool sa = std::holds_alternative<std::string>(a);
    bool sb = std::holds_alternative<std::string>(b);
    if (sa != sb) return false;
    if (sa) return std::get<std::string>(a) == std::get<std::string>(b);
    return numeric_of(a) == numeric_of(b);
}

std::string param_value_to_string(const ParamValue& v) {
    if (std::holds_alternative<std::string>(v)) return std::get<std::string>(v);
    ordered_json j;
    if (std::holds_alternative<std::int64_t>(v))
        j = std::get<std::int64_t>(v);
    else
        j = std::get<double>(v);
    return j.dump();
}

void check_domain(const ParamDomain& domain) {
    if (const auto* u = std::get_if<Uniform>(&domain)) {
        if (!std::isfinite(u->low) || !std::isfinite(u->high) || !(u->low < u->high))
            throw Error(ErrorCode::MalformedSpec, "uniform domain requires finite low < high");
    } else if (const auto* lu = std::get_if<LogUniform>(&domain)) {
        if (!std::isfinite(lu->low) || !std::isfinite(lu->high) || !(lu->low < lu->high) ||
            !(lu->low > 0.0))
            throw Error(ErrorCode::MalformedSpec,
                        "loguniform domain requires finite 0 < low < high");
    } else if (const auto* c = std::get_if<Choice>(&domain)) {
        if (c->options.empty())
            throw Error(ErrorCode::MalformedSpec, "choice domain requires at least one option");
        for (std::size_t i = 0; i < c->options.size(); ++i)
            for (std::size_t j = i + 1; j < c->options.size(); ++j)
                if (param_value_equal(c->options[i], c->options[j]))
                    throw Error(ErrorCode::MalformedSpec, "choice options must be distinct");
        for (const auto& opt : c->options)
            if (param_value_is_numeric(opt) && !std::isfinite(numeric_of(opt)))
                throw Error(ErrorCode::MalformedSpec, "choice options must be finite");
    } else if (const auto* k = std::get_if<Constant>(&domain)) {
        if (param_value_is_numeric(k->value) && !std::isfinite(numeric_of(k->value)))
            throw Error(ErrorCode::MalformedSpec, "constant value must be finite");
    }
}

bool domain_contains(const ParamDomain& domain, const ParamValue& value) {
    if (const auto* u = std::get_if<Uniform>(&domain)) {
        if (!param_value_is_numeric(value)) return false;
        double v = numeric_of(value);
        return v >= u->low && v <= u->high;
    }
    if (const auto* lu = std::get_if<LogUniform>(&domain)) {
        if (!param_value_is_numeric(value)) return false;
        double v = numeric_of(value);
        return v >= lu->low && v <= lu->high;
    }
    if (const auto* c = std::get_if<Choice>(&domain)) {
        return std::any_of(c->options.begin(), c->options.end(),
                           [&](const ParamValue& o) { return param_value_equal(o, value); });
    }
    const auto& k = std::get<Constant>(domain);
    return param_value_equal(k.value, value);
}

ParamValue sample_domain(const ParamDomain& domain, Rng& rng) {
    if (const auto* u = std::get_if<Uniform>(&domain)) {
        return rng.uniform(u->low, u->high);
    }
    if (const auto* lu = std::get_if<LogUniform>(&domain)) {
        double v = std::exp(rng.uniform(std::log(lu->low), std::log(lu->high)));
        if (v < lu->low) v = lu->low;
        if (v >= lu->high) v = std::nextafter(lu->high, lu->low);
        return v;
    }
    if (const auto* c = std::get_if<Choice>(&domain)) {
        return c->options[static_cast<std::size_t>(rng.uniform_int(c->options.size()))];
    }
    return std::get<Constant>(domain).value;
}

double to_unit(const ParamDomain& domain, const ParamValue& value) {
    if (!domain_contains(domain, value))
        throw Error(ErrorCode::OutOfDomain,
                    "value " + param_value_to_string(value) + " is outside its domain");
    if (const auto* u = std::get_if<Uniform>(&domain)) {
        return (numeric_of(value) - u->low) / (u->high - u->low);
    }
    if (const auto* lu = std::get_if<LogUniform>(&domain)) {
        return (std::log(numeric_of(value)) - std::log(lu->low)) /
               (std::log(lu->high) - std::log(lu->low));
    }
    if (const auto* c = std::get_if<Choice>(&domain)) {
        std::size_t k = c->options.size();
        for (std::size_t i = 0; i < k; ++i)
            if (param_value_equal(c->options[i], value))
                return k > 1 ? static_cast<double>(i) / static_cast<double>(k - 1) : 0.0;
        throw Error(ErrorCode::OutOfDomain, "choice value not found");
    }
    return 0.0;  // Constant
}

ParamValue from_unit(const ParamDomain& domain, double u) {
    if (!(u >= 0.0 && u <= 1.0))
        throw Error(ErrorCode::OutOfDomain, "unit coordinate outside [0,1]");
    if (const auto* un = std::get_if<Uniform>(&domain)) {
        double v = un->low + u * (un->high - un->low);
        return std::min(std::max(v, un->low), un->high);
    }
    if (const auto* lu = std::get_if<LogUniform>(&domain)) {
        double lo = std::log(lu->low), hi = std::log(lu->high);
        double v = std::exp(lo + u * (hi - lo));
        return std::min(std::max(v, lu->low), lu->high);
    }
    if (const auto* c = std::get_if<Choice>(&domain)) {
        std::size_t k = c->options.size();
        if (k == 1) return c->options[0];
        auto idx = static_cast<std::size_t>(std::llround(u * static_cast<double>(k - 1)));
        if (idx >= k) idx = k - 1;
        return c->options[idx];
    }
    return std::get<Constant>(domain).value;
}

void SearchSpace::add(const std::string& name, ParamDomain domain) {
    if (name.empty())
        throw Error(ErrorCode::InvalidArgument, "parameter name must be non-empty");
    if (find(name) != nullptr)
        throw Error(ErrorCode::InvalidArgument, "duplicate parameter name: " + name);
    check_domain(domain);
    entries_.emplace_back(name, std::move(domain));
}

const ParamDomain* SearchSpace::find(const std::string& name) const {
    for (const auto& [n, d] : entries_)
        if (n == name) return &d;
    return nullptr;
}

ConfigSample sample_space(const SearchSpace& space, Rng& rng) {
    if (space.empty()) throw Error(ErrorCode::EmptySpace, "cannot sample an empty space");
    ConfigSample out;
    for (const auto& [name, domain] : space.entries())
        out.emplace(name, sample_domain(domain, rng));
    return out;
}

bool contains(const SearchSpace& space, const ConfigSample& config) {
    if (config.size() != space.size()) return false;
    for (const auto& [name, domain] : space.entries()) {
        auto it = config.find(name);
        if (it == config.end()) return false;
        if (!domain_contains(domain, it->second)) return false;
    }
    return true;
}

SearchSpace default_training_space() {
    SearchSpace space;
    space.add("learning_rate", LogUniform{1e-4, 1e-3});
    space.add("momentum", Uniform{0.9, 0.99});
    space.add("weight_decay", LogUniform{5e-4, 1e-3});
    space.add("num_segments", Choice{{std::int64_t(8), std::int64_t(16), std::int64_t(32)}});
    return space;
}

namespace {

ParamValue param_value_from_json(const ordered_json& j, const std::string& where) {
    if (j.is_number_integer()) return j.get<std::int64_t>();
    if (j.is_number_unsigned()) {
        auto u = j.get<std::uint64_t>();
        if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
            throw Error(ErrorCode::ParseError, where + ": integer too large");
        return static_cast<std::int64_t>(u);
    }
    if (j.is_number_float()) return j.get<double>();
    if (j.is_string()) return j.get<std::string>();
    throw Error(ErrorCode::ParseError, where + ": expected number or string");
}

ordered_json param_value_to_json(const ParamValue& v) {
    if (std::holds_alternative<std::int64_t>(v)) return std::get<std::int64_t>(v);
    if (std::holds_alternative<double>(v)) return std::get<double>(v);
    return std::get<std::string>(v);
}

double number_field(const ordered_json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end())
        throw Error(ErrorCode::ParseError, where + ": missing field '" + key + "'");
    if (!it->is_number())
        throw Error(ErrorCode::ParseError, where + ": field '" + key + "' must be a number");
    return it->get<double>();
}

}  // namespace

SearchSpace parse_search_space_json(const std::string& text) {
    ordered_json root;
    try {
        root = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
    if (!root.is_object())
        throw Error(ErrorCode::ParseError, "search space must be a JSON object");
    SearchSpace space;
    for (const auto& [name, spec] : root.items()) {
        if (!spec.is_object())
            throw Error(ErrorCode::ParseError, name + ": domain must be an object");
        auto type_it = spec.find("type");
        if (type_it == spec.end() || !type_it->is_string())
            throw Error(ErrorCode::ParseError, name + ": missing string field 'type'");
        std::string type = type_it->get<std::string>();
        ParamDomain domain;
        if (type == "uniform") {
            domain = Uniform{number_field(spec, "low", name), number_field(spec, "high", name)};
            if (spec.size() != 3) throw Error(ErrorCode::ParseError, name + ": unexpected field");
        } else if (type == "loguniform") {
            domain = LogUniform{number_field(spec, "low", name), number_field(spec, "high", name)};
            if (spec.size() != 3) throw Error(ErrorCode::ParseError, name + ": unexpected field");
        } else if (type == "choice") {
            auto it = spec.find("options");
            if (it == spec.end() || !it->is_array())
                throw Error(ErrorCode::ParseError, name + ": missing array field 'options'");
            Choice c;
            for (const auto& opt : *it) c.options.push_back(param_value_from_json(opt, name));
            domain = std::move(c);
            if (spec.size() != 2) throw Error(ErrorCode::ParseError, name + ": unexpected field");
        } else if (type == "constant") {
            auto it = spec.find("value");
            if (it == spec.end())
                throw Error(ErrorCode::ParseError, name + ": missing field 'value'");
            domain = Constant{param_value_from_json(*it, name)};
            if (spec.size() != 2) throw Error(ErrorCode::ParseError, name + ": unexpected field");
        } else {
            throw Error(ErrorCode::ParseError, name + ": unknown domain type '" + type + "'");
        }
        try {
            space.add(name, std::move(domain));
        } catch (const Error& e) {
            throw Error(ErrorCode::ParseError, name + ": " + e.what());
        }
    }
    return space;
}

std::string search_space_to_json(const SearchSpace& space) {
    ordered_json root = ordered_json::object();
    for (const auto& [name, domain] : space.entries()) {
        ordered_json j = ordered_json::object();
        if (const auto* u = std::get_if<Uniform>(&domain)) {
            j["type"] = "uniform";
            j["low"] = u->low;
            j["high"] = u->high;
        } else if (const auto* lu = std::get_if<LogUniform>(&domain)) {
            j["type"] = "loguniform";
            j["low"] = lu->low;
            j["high"] = lu->high;
        } else if (const auto* c = std::get_if<Choice>(&domain)) {
            j["type"] = "choice";
            ordered_json opts = ordered_json::array();
            for (const auto& o : c->options) opts.push_back(param_value_to_json(o));
            j["options"] = std::move(opts);
        } else {
            j["type"] = "constant";
            j["value"] = param_value_to_json(std::get<Constant>(domain).value);
        }
        root[name] = std::move(j);
    }
    return root.dump();
}

}  // namespace vidtune
