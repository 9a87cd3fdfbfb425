#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vidtune/pipeline.hpp"

namespace vidtune {

// A pipeline description together with the learned state of its estimator
// steps. Non-estimator steps keep an empty blob.
struct FittedPipeline {
    PipelineDescription description;
    std::uint64_t fit_seed = 0;
    std::vector<std::vector<std::uint8_t>> step_states;
};

// Validates, then runs every step in order. Estimators are fitted and their
// state captured; the step's output comes from produce() on that fresh state.
// Throws ValidationFailed if validation reports issues or the input count is
// wrong.
FittedPipeline fit_pipeline(const PipelineDescription& desc, const Registry& registry,
                            const std::vector<ValueEnvelope>& inputs, std::uint64_t seed);

// Runs the fitted pipeline on new inputs and returns the output step's value.
// Deterministic given the artifact and inputs. Throws ArityMismatch on a
// wrong input count.
ValueEnvelope produce_pipeline(const FittedPipeline& fitted, const Registry& registry,
                               const std::vector<ValueEnvelope>& inputs);

// Binary artifact container: magic, format version, fit seed, canonical
// description text, per-step state blobs, and a trailing content hash.
std::vector<std::uint8_t> encode_fitted(const FittedPipeline& fitted);
FittedPipeline decode_fitted(const std::vector<std::uint8_t>& data);

void save_fitted(const FittedPipeline& fitted, const std::string& path);
FittedPipeline load_fitted(const std::string& path);

}  // namespace vidtune
