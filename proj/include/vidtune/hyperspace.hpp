#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "vidtune/rng.hpp"

namespace vidtune {

// A parameter value: integer, real, or named option. Integers and reals
// compare numerically; strings only compare with strings.
using ParamValue = std::variant<std::int64_t, double, std::string>;

bool param_value_equal(const ParamValue& a, const ParamValue& b);
bool param_value_is_numeric(const ParamValue& v);
double param_value_as_double(const ParamValue& v);  // throws InvalidArgument for strings
std::string param_value_to_string(const ParamValue& v);

struct Uniform {
    double low;
    double high;
};

struct LogUniform {
    double low;
    double high;
};

struct Choice {
    std::vector<ParamValue> options;
};

struct Constant {
    ParamValue value;
};

using ParamDomain = std::variant<Uniform, LogUniform, Choice, Constant>;

// Throws MalformedSpec if bounds are not finite with low < high (LogUniform
// additionally low > 0), or if Choice options are empty or not distinct.
void check_domain(const ParamDomain& domain);

bool domain_contains(const ParamDomain& domain, const ParamValue& value);

ParamValue sample_domain(const ParamDomain& domain, Rng& rng);

// Maps a contained value onto [0,1] (and back). Choice maps option index k of
// K options to k/(K-1); Constant maps to 0. Shared coordinate system for the
// density models in the tuners.
double to_unit(const ParamDomain& domain, const ParamValue& value);
ParamValue from_unit(const ParamDomain& domain, double u);

// Ordered set of named parameter domains. Iteration order is insertion
// order; sampling reproducibility depends on it.
class SearchSpace {
public:
    SearchSpace() = default;

    // Throws InvalidArgument on duplicate names, MalformedSpec on bad domains.
    void add(const std::string& name, ParamDomain domain);

    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    const std::vector<std::pair<std::string, ParamDomain>>& entries() const {
        return entries_;
    }
    const ParamDomain* find(const std::string& name) const;

private:
    std::vector<std::pair<std::string, ParamDomain>> entries_;
};

using ConfigSample = std::map<std::string, ParamValue>;

// One value per space entry, drawn in insertion order. Throws EmptySpace.
ConfigSample sample_space(const SearchSpace& space, Rng& rng);

// True iff config keys equal the space keys exactly and every value is
// contained in its domain.
bool contains(const SearchSpace& space, const ConfigSample& config);

// The built-in search space over the classifier training knobs and the
// temporal segment count.
SearchSpace default_training_space();

// JSON file format: object mapping name -> {"type": "uniform"|"loguniform"|
// "choice"|"constant", "low"/"high" or "options" or "value"}.
SearchSpace parse_search_space_json(const std::string& text);
std::string search_space_to_json(const SearchSpace& space);

}  // namespace vidtune
