#include "vidtune/tuners.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <json.hpp>

#include "vidtune/error.hpp"

namespace vidtune {
namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5 * ln(2*pi)

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

void check_tpe_params(const TpeParams& p) {
    if (!(p.gamma > 0.0 && p.gamma < 1.0))
        throw Error(ErrorCode::InvalidArgument, "gamma must lie in (0, 1)");
    if (p.n_startup < 1) throw Error(ErrorCode::InvalidArgument, "n_startup must be >= 1");
    if (p.n_candidates < 1) throw Error(ErrorCode::InvalidArgument, "n_candidates must be >= 1");
    if (!(p.prior_weight > 0.0))
        throw Error(ErrorCode::InvalidArgument, "prior_weight must be > 0");
    if (!(p.bandwidth_floor > 0.0))
        throw Error(ErrorCode::InvalidArgument, "bandwidth_floor must be > 0");
}

}  // namespace

const char* trial_status_name(TrialStatus status) {
    switch (status) {
        case TrialStatus::Pending: return "pending";
        case TrialStatus::Complete: return "complete";
        case TrialStatus::Failed: return "failed";
    }
    return "?";
}

std::string trial_to_json_line(const Trial& trial) {
    nlohmann::ordered_json line;
    line["id"] = trial.id;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    for (const auto& [name, value] : trial.config)
        std::visit([&config, &name](const auto& v) { config[name] = v; }, value);
    line["config"] = std::move(config);
    if (std::isfinite(trial.objective))
        line["objective"] = trial.objective;
    else
        line["objective"] = "inf";
    line["status"] = trial_status_name(trial.status);
    line["wall_ms"] = static_cast<std::int64_t>(std::llround(trial.wall_ms));
    return line.dump();
}

ConfigSample suggest_random(const SearchSpace& space, Rng& rng) {
    return sample_space(space, rng);
}

TpePartition tpe_partition(const std::vector<Trial>& history, double gamma) {
    if (history.empty()) throw Error(ErrorCode::EmptyHistory, "cannot partition zero trials");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw Error(ErrorCode::InvalidArgument, "gamma must lie in (0, 1)");

    std::vector<const Trial*> sorted;
    sorted.reserve(history.size());
    for (const auto& trial : history) sorted.push_back(&trial);
    std::sort(sorted.begin(), sorted.end(), [](const Trial* a, const Trial* b) {
        if (a->objective != b->objective) return a->objective < b->objective;
        return a->id < b->id;
    });

    const auto n = static_cast<double>(sorted.size());
    const auto n_good = static_cast<std::size_t>(std::ceil(gamma * n - 1e-12));
    TpePartition split;
    split.good.assign(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n_good));
    split.bad.assign(sorted.begin() + static_cast<std::ptrdiff_t>(n_good), sorted.end());
    return split;
}

Kde::Kde(std::vector<double> observations, double prior_weight, double bandwidth_floor)
    : obs_(std::move(observations)), prior_weight_(prior_weight) {
    if (!(prior_weight_ > 0.0))
        throw Error(ErrorCode::InvalidArgument, "prior_weight must be > 0");
    if (!(bandwidth_floor > 0.0))
        throw Error(ErrorCode::InvalidArgument, "bandwidth_floor must be > 0");
    for (double v : obs_) {
        if (!(v >= 0.0 && v <= 1.0))
            throw Error(ErrorCode::OutOfUnitCube,
                        "observation " + std::to_string(v) + " outside [0,1]");
    }
    std::sort(obs_.begin(), obs_.end());
    bw_.resize(obs_.size());
    // Bandwidth per component: distance to the farther sorted neighbor, with
    // the interval endpoints 0 and 1 acting as virtual neighbors at the ends.
    // Clipped from below by an adaptive minimum of 1/min(100, n+1) so that a
    // tight cluster of observations cannot degenerate into near-delta spikes
    // (which would trap the optimizer inside the cluster), and by the
    // configured absolute floor.
    const double n_min =
        1.0 / std::min(100.0, static_cast<double>(obs_.size()) + 1.0);
    const double min_bw = std::max(bandwidth_floor, n_min);
    for (std::size_t i = 0; i < obs_.size(); ++i) {
        const double left = i == 0 ? obs_[i] - 0.0 : obs_[i] - obs_[i - 1];
        const double right = i + 1 == obs_.size() ? 1.0 - obs_[i] : obs_[i + 1] - obs_[i];
        bw_[i] = std::min(std::max(std::max(left, right), min_bw), 1.0);
    }
}

double Kde::log_density(double x) const {
    if (!(x >= 0.0 && x <= 1.0))
        throw Error(ErrorCode::OutOfUnitCube, "query " + std::to_string(x) + " outside [0,1]");
    // Mixture weights: prior_weight on the uniform component, 1 per
    // observation, normalized.
    double density = prior_weight_;  // uniform density on [0,1] is 1
    for (std::size_t i = 0; i < obs_.size(); ++i) {
        const double bw = bw_[i];
        const double z = (x - obs_[i]) / bw;
        const double mass = normal_cdf((1.0 - obs_[i]) / bw) - normal_cdf((0.0 - obs_[i]) / bw);
        const double log_pdf = -0.5 * z * z - std::log(bw) - kHalfLog2Pi - std::log(mass);
        density += std::exp(log_pdf);
    }
    density /= prior_weight_ + static_cast<double>(obs_.size());
    return std::log(density);
}

double Kde::sample(Rng& rng) const {
    const double total = prior_weight_ + static_cast<double>(obs_.size());
    if (rng.uniform() * total < prior_weight_) return rng.uniform();
    const auto pick = static_cast<std::size_t>(rng.uniform_int(obs_.size()));
    // Truncated draw by rejection; acceptance is at worst ~1/3 since the
    // bandwidth never exceeds the unit interval.
    for (;;) {
        const double x = obs_[pick] + bw_[pick] * rng.gaussian();
        if (x >= 0.0 && x <= 1.0) return x;
    }
}

double kde_log_density(const std::vector<double>& observations, double prior_weight,
                       double bandwidth_floor, double x) {
    return Kde(observations, prior_weight, bandwidth_floor).log_density(x);
}

std::vector<double> categorical_weights(const std::vector<std::size_t>& counts,
                                        double prior_weight) {
    if (counts.empty()) throw Error(ErrorCode::InvalidArgument, "need at least one option");
    if (!(prior_weight > 0.0))
        throw Error(ErrorCode::InvalidArgument, "prior_weight must be > 0");
    const auto k = static_cast<double>(counts.size());
    double n = 0.0;
    for (auto c : counts) n += static_cast<double>(c);
    std::vector<double> weights(counts.size());
    for (std::size_t j = 0; j < counts.size(); ++j)
        weights[j] = (static_cast<double>(counts[j]) + prior_weight / k) / (n + prior_weight);
    return weights;
}

namespace {

// Per-dimension density pair (l = good, g = bad) in the shared unit/index
// coordinates.
struct DimModel {
    const std::string* name;
    const ParamDomain* domain;
    std::optional<Kde> l_kde, g_kde;
    std::vector<double> l_weights, g_weights;  // Choice only
};

std::vector<std::size_t> option_counts(const Choice& choice,
                                       const std::vector<const Trial*>& trials,
                                       const std::string& name) {
    std::vector<std::size_t> counts(choice.options.size(), 0);
    for (const auto* trial : trials) {
        auto it = trial->config.find(name);
        if (it == trial->config.end()) continue;
        for (std::size_t j = 0; j < choice.options.size(); ++j) {
            if (param_value_equal(choice.options[j], it->second)) {
                ++counts[j];
                break;
            }
        }
    }
    return counts;
}

std::vector<double> unit_observations(const ParamDomain& domain,
                                      const std::vector<const Trial*>& trials,
                                      const std::string& name) {
    std::vector<double> obs;
    obs.reserve(trials.size());
    for (const auto* trial : trials) {
        auto it = trial->config.find(name);
        if (it != trial->config.end()) obs.push_back(to_unit(domain, it->second));
    }
    return obs;
}

std::size_t sample_weighted(const std::vector<double>& weights, Rng& rng) {
    const double u = rng.uniform();
    double cumulative = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        cumulative += weights[j];
        if (u < cumulative) return j;
    }
    return weights.size() - 1;
}

}  // namespace

ConfigSample suggest_tpe(const SearchSpace& space, const std::vector<Trial>& history,
                         const TpeParams& params, Rng& rng, TpeExplanation* explanation) {
    check_tpe_params(params);
    if (space.empty()) throw Error(ErrorCode::EmptySpace, "cannot suggest from an empty space");

    std::size_t complete = 0;
    for (const auto& trial : history)
        if (trial.status == TrialStatus::Complete) ++complete;
    if (complete < params.n_startup) {
        auto config = sample_space(space, rng);
        if (explanation) {
            explanation->candidates = {config};
            explanation->scores = {0.0};
            explanation->chosen_index = 0;
        }
        return config;
    }

    // Failed trials participate with objective +inf, landing in `bad`.
    std::vector<Trial> scored;
    scored.reserve(history.size());
    for (const auto& trial : history)
        if (trial.status != TrialStatus::Pending) scored.push_back(trial);
    const auto split = tpe_partition(scored, params.gamma);

    std::vector<DimModel> models;
    models.reserve(space.size());
    for (const auto& [name, domain] : space.entries()) {
        DimModel model;
        model.name = &name;
        model.domain = &domain;
        if (const auto* choice = std::get_if<Choice>(&domain)) {
            model.l_weights = categorical_weights(option_counts(*choice, split.good, name),
                                                  params.prior_weight);
            model.g_weights = categorical_weights(option_counts(*choice, split.bad, name),
                                                  params.prior_weight);
        } else if (!std::holds_alternative<Constant>(domain)) {
            model.l_kde.emplace(unit_observations(domain, split.good, name), params.prior_weight,
                                params.bandwidth_floor);
            model.g_kde.emplace(unit_observations(domain, split.bad, name), params.prior_weight,
                                params.bandwidth_floor);
        }
        models.push_back(std::move(model));
    }

    ConfigSample best;
    double best_score = -std::numeric_limits<double>::infinity();
    std::size_t best_index = 0;
    for (std::size_t c = 0; c < params.n_candidates; ++c) {
        ConfigSample candidate;
        double score = 0.0;
        for (const auto& model : models) {
            if (const auto* choice = std::get_if<Choice>(model.domain)) {
                const auto j = sample_weighted(model.l_weights, rng);
                score += std::log(model.l_weights[j]) - std::log(model.g_weights[j]);
                candidate[*model.name] = choice->options[j];
            } else if (const auto* constant = std::get_if<Constant>(model.domain)) {
                candidate[*model.name] = constant->value;
            } else {
                const double u = model.l_kde->sample(rng);
                score += model.l_kde->log_density(u) - model.g_kde->log_density(u);
                candidate[*model.name] = from_unit(*model.domain, u);
            }
        }
        if (explanation) {
            explanation->candidates.push_back(candidate);
            explanation->scores.push_back(score);
        }
        if (score > best_score) {
            best_score = score;
            best = std::move(candidate);
            best_index = c;
        }
    }
    if (explanation) explanation->chosen_index = best_index;
    return best;
}

const char* strategy_name(Strategy strategy) {
    return strategy == Strategy::Random ? "random" : "tpe";
}

std::optional<Strategy> strategy_from_name(const std::string& name) {
    if (name == "random") return Strategy::Random;
    if (name == "tpe") return Strategy::Tpe;
    return std::nullopt;
}

SearchResult run_search(const SearchSpace& space, Strategy strategy, const SearchBudget& budget,
                        const Objective& objective, const TpeParams& params,
                        const TrialSink& sink) {
    if (budget.max_trials < 1)
        throw Error(ErrorCode::ZeroBudget, "max_trials must be >= 1");
    if (!objective) throw Error(ErrorCode::InvalidArgument, "objective callback is required");

    SearchResult result;
    Rng rng(budget.seed);
    for (std::size_t id = 0; id < budget.max_trials; ++id) {
        Trial trial;
        trial.id = id;
        trial.config = strategy == Strategy::Random
                           ? suggest_random(space, rng)
                           : suggest_tpe(space, result.trials, params, rng);

        const auto start = std::chrono::steady_clock::now();
        try {
            const double value = objective(trial.config);
            if (std::isfinite(value)) {
                trial.objective = value;
                trial.status = TrialStatus::Complete;
            } else {
                trial.status = TrialStatus::Failed;
            }
        } catch (const std::exception&) {
            trial.status = TrialStatus::Failed;
        }
        trial.wall_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - start)
                            .count();

        result.trials.push_back(trial);
        if (sink) sink(trial);
    }

    const Trial* best = nullptr;
    for (const auto& trial : result.trials)
        if (trial.status == TrialStatus::Complete &&
            (!best || trial.objective < best->objective))
            best = &trial;
    if (!best) throw Error(ErrorCode::AllTrialsFailed, "every trial failed");
    result.best_config = best->config;
    result.best_value = best->objective;
    return result;
}

const Trial& best_trial(const std::vector<Trial>& trials) {
    const Trial* best = nullptr;
    for (const auto& trial : trials)
        if (trial.status == TrialStatus::Complete &&
            (!best || trial.objective < best->objective))
            best = &trial;
    if (!best) throw Error(ErrorCode::NoCompleteTrials, "no complete trial to pick from");
    return *best;
}

}  // namespace vidtune
