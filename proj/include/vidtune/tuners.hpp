#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "vidtune/hyperspace.hpp"
#include "vidtune/rng.hpp"

namespace vidtune {

enum class TrialStatus { Pending, Complete, Failed };

const char* trial_status_name(TrialStatus status);

struct Trial {
    std::size_t id = 0;
    ConfigSample config;
    // Lower is better. Failed trials carry +inf so density models treat them
    // as firmly bad.
    double objective = std::numeric_limits<double>::infinity();
    TrialStatus status = TrialStatus::Pending;
    double wall_ms = 0.0;
};

// One JSONL log line: {"id":..,"config":{..},"objective":<num or "inf">,
// "status":..,"wall_ms":<int>}.
std::string trial_to_json_line(const Trial& trial);

struct TpeParams {
    double gamma = 0.25;          // good-partition quantile
    std::size_t n_startup = 10;   // random trials before the model kicks in
    std::size_t n_candidates = 24;
    double prior_weight = 1.0;
    double bandwidth_floor = 1e-3;  // unit-cube coordinates
};

// Identical to sample_space; named for symmetry with suggest_tpe.
ConfigSample suggest_random(const SearchSpace& space, Rng& rng);

struct TpePartition {
    std::vector<const Trial*> good;
    std::vector<const Trial*> bad;
};

// Sorts ascending by objective (ties: lower id) and takes the first
// ceil(gamma*n) as good. Throws EmptyHistory.
TpePartition tpe_partition(const std::vector<Trial>& history, double gamma);

// Parzen mixture on [0,1]: a uniform prior component with weight
// prior_weight plus one truncated Gaussian per observation (equal weights).
// Each observation's bandwidth is its distance to the farther sorted
// neighbor, with 0 and 1 as virtual neighbors, clipped below by
// max(bandwidth_floor, 1/min(100, n+1)) and above by 1.
class Kde {
public:
    Kde(std::vector<double> observations, double prior_weight, double bandwidth_floor);

    double log_density(double x) const;  // throws OutOfUnitCube
    double sample(Rng& rng) const;       // component pick + truncated draw

    const std::vector<double>& observations() const { return obs_; }  // sorted
    const std::vector<double>& bandwidths() const { return bw_; }

private:
    std::vector<double> obs_;
    std::vector<double> bw_;
    double prior_weight_;
};

// Convenience wrapper over Kde::log_density.
double kde_log_density(const std::vector<double>& observations, double prior_weight,
                       double bandwidth_floor, double x);

// p_j = (count_j + prior_weight/k) / (n + prior_weight).
std::vector<double> categorical_weights(const std::vector<std::size_t>& counts,
                                        double prior_weight);

// Filled by suggest_tpe when requested, so callers can audit the choice.
struct TpeExplanation {
    std::vector<ConfigSample> candidates;  // in draw order
    std::vector<double> scores;            // sum over dims of log l - log g
    std::size_t chosen_index = 0;          // argmax, earliest draw on ties
};

// Random until n_startup trials completed; afterwards draws n_candidates
// configs from the good-trial density l and returns the one maximizing
// sum(log l - log g) over dimensions.
ConfigSample suggest_tpe(const SearchSpace& space, const std::vector<Trial>& history,
                         const TpeParams& params, Rng& rng,
                         TpeExplanation* explanation = nullptr);

enum class Strategy { Random, Tpe };

const char* strategy_name(Strategy strategy);
std::optional<Strategy> strategy_from_name(const std::string& name);

struct SearchBudget {
    std::size_t max_trials = 0;
    std::uint64_t seed = 0;
};

struct SearchResult {
    ConfigSample best_config;
    double best_value = std::numeric_limits<double>::infinity();
    std::vector<Trial> trials;
};

using Objective = std::function<double(const ConfigSample&)>;
using TrialSink = std::function<void(const Trial&)>;

// Sequential ask/tell loop: exactly max_trials trials, strategy consulted
// before each with the full history. Objective exceptions (or non-finite
// returns) mark the trial failed with objective +inf. Throws ZeroBudget /
// AllTrialsFailed.
SearchResult run_search(const SearchSpace& space, Strategy strategy, const SearchBudget& budget,
                        const Objective& objective, const TpeParams& params = {},
                        const TrialSink& sink = {});

// Minimum objective among complete trials, earliest id on ties. Throws
// NoCompleteTrials.
const Trial& best_trial(const std::vector<Trial>& trials);

}  // namespace vidtune
