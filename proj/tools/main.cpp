#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vidtune/bytes.hpp"
#include "vidtune/dataio.hpp"
#include "vidtune/error.hpp"
#include "vidtune/executor.hpp"
#include "vidtune/hyperspace.hpp"
#include "vidtune/tuners.hpp"
#include "vidtune/zoo.hpp"

namespace fs = std::filesystem;
using vidtune::Error;
using vidtune::ErrorCode;

namespace {

// Exit codes: 2 configuration, 3 data/input, 4 runtime, 5 fruitless search.
int exit_code_for(const Error& e) {
    switch (e.code()) {
        case ErrorCode::UnknownAlgorithm:
        case ErrorCode::MissingPretrainedPath:
        case ErrorCode::UnknownKey:
        case ErrorCode::OutOfDomainValue:
        case ErrorCode::EmptySpace:
        case ErrorCode::MalformedSpec:
        case ErrorCode::ZeroBudget:
        case ErrorCode::InvalidArgument:
            return 2;
        case ErrorCode::IoError:
        case ErrorCode::ParseError:
        case ErrorCode::RaggedRows:
        case ErrorCode::BadTargetIndex:
        case ErrorCode::BadMagic:
        case ErrorCode::BadHeader:
        case ErrorCode::TruncatedPayload:
        case ErrorCode::UnsupportedChannels:
        case ErrorCode::UnsupportedExtension:
        case ErrorCode::CorruptVideo:
        case ErrorCode::CorruptArtifact:
        case ErrorCode::SchemaVersionUnsupported:
        case ErrorCode::TooFewRows:
        case ErrorCode::EmptyData:
            return 3;
        case ErrorCode::AllTrialsFailed:
            return 5;
        default:
            return 4;
    }
}

std::string format_fraction(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", value);
    return buf;
}

int usage_error(const CLI::App& cmd, const std::string& message) {
    std::cerr << "error: " << message << "\n\n" << cmd.help() << std::flush;
    return 2;
}

// --config file support: a JSON object whose keys mirror the long flag names
// (dashes written as underscores). Command-line flags win over file values.
struct ConfigMerge {
    std::string path;
    std::map<std::string, std::function<void(const nlohmann::json&)>> setters;

    template <typename T>
    void bind(CLI::Option* opt, const std::string& key, T& target) {
        setters[key] = [opt, &target](const nlohmann::json& v) {
            if (opt->count() == 0) target = v.get<T>();
        };
    }

    void apply() const {
        if (path.empty()) return;
        nlohmann::json root;
        try {
            root = nlohmann::json::parse(vidtune::read_file_text(path));
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(ErrorCode::ParseError, "--config: " + std::string(e.what()));
        }
        if (!root.is_object()) throw Error(ErrorCode::ParseError, "--config: expected an object");
        for (const auto& [key, value] : root.items()) {
            auto it = setters.find(key);
            if (it == setters.end())
                throw Error(ErrorCode::UnknownKey, "--config: unknown key '" + key + "'");
            it->second(value);
        }
    }
};

// ------------------------------------------------------------ shared helpers

vidtune::Table load_table(const std::string& path, std::int64_t target_index) {
    if (target_index >= 0)
        return vidtune::load_annotations(path, static_cast<std::size_t>(target_index));
    auto table = vidtune::load_annotations(path, 0);
    table.target_index.reset();  // no label column declared
    return table;
}

std::string video_extension(const vidtune::Table& table) {
    const auto col = table.column_index("video");
    std::string ext = fs::path(table.rows.front()[col]).extension().string();
    if (!ext.empty() && ext.front() == '.') ext.erase(ext.begin());
    return ext;
}

// Decodes videos into per-video frame directories unless every directory
// already exists from an earlier run.
vidtune::PathList prepare_frame_dirs(const vidtune::Table& table, const std::string& media_dir) {
    if (table.rows.empty())
        throw Error(ErrorCode::EmptyData, "annotation table lists no videos");
    auto dirs = vidtune::frame_dirs_for_table(table, media_dir);
    bool all_present = true;
    for (const auto& dir : dirs) {
        std::error_code ec;
        if (!fs::is_directory(dir, ec)) {
            all_present = false;
            break;
        }
    }
    if (!all_present) vidtune::extract_frames(media_dir, video_extension(table));
    return dirs;
}

std::vector<std::string> table_labels(const vidtune::Table& table) {
    std::vector<std::string> labels;
    labels.reserve(table.rows.size());
    for (const auto& row : table.rows) labels.push_back(row[*table.target_index]);
    return labels;
}

std::vector<vidtune::ValueEnvelope> pipeline_inputs(vidtune::Table table, vidtune::PathList dirs,
                                                    vidtune::PathList pretrained) {
    std::vector<vidtune::ValueEnvelope> inputs;
    inputs.emplace_back(std::move(table));
    inputs.emplace_back(std::move(dirs));
    inputs.emplace_back(std::move(pretrained));
    return inputs;
}

std::vector<std::string> predicted_labels(const vidtune::Probabilities& probs) {
    std::vector<std::string> labels;
    labels.reserve(probs.values.rows);
    for (std::size_t r = 0; r < probs.values.rows; ++r) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < probs.values.cols; ++k)
            if (probs.values.at(r, k) > probs.values.at(r, best)) best = k;
        labels.push_back(probs.class_names[best]);
    }
    return labels;
}

// -------------------------------------------------------------------- synth

struct SynthArgs {
    std::string out;
    std::int64_t classes = 4;
    std::int64_t videos_per_class = 25;
    std::int64_t frames = 16;
    std::int64_t height = 32;
    std::int64_t width = 32;
    std::int64_t channels = 3;
    double noise_std = 8.0;
    double valid_fraction = 0.2;
    std::uint64_t seed = 42;
};

int run_synth(const CLI::App& cmd, const SynthArgs& args) {
    if (args.out.empty()) return usage_error(cmd, "synth: --out is required");
    try {
        vidtune::SyntheticSpec spec;
        spec.num_classes = static_cast<std::size_t>(args.classes);
        spec.videos_per_class = static_cast<std::size_t>(args.videos_per_class);
        spec.frames = args.frames;
        spec.height = args.height;
        spec.width = args.width;
        spec.channels = args.channels;
        spec.noise_std = args.noise_std;
        spec.seed = args.seed;

        const auto bundle = vidtune::generate_synthetic_dataset(spec, args.out);
        const auto table = vidtune::load_annotations(bundle.table_path, bundle.target_index);
        auto split = vidtune::split_table(table, args.valid_fraction, args.seed);
        for (const auto& warning : split.warnings) std::cerr << "warning: " << warning << "\n";

        auto write_csv = [&](const vidtune::Table& t, const std::string& path) {
            std::string csv;
            for (std::size_t c = 0; c < t.columns.size(); ++c)
                csv += (c ? "," : "") + t.columns[c];
            csv += "\n";
            for (const auto& row : t.rows) {
                for (std::size_t c = 0; c < row.size(); ++c) csv += (c ? "," : "") + row[c];
                csv += "\n";
            }
            vidtune::write_file_atomic(path, csv);
        };
        write_csv(split.train, (fs::path(args.out) / "train.csv").string());
        write_csv(split.valid, (fs::path(args.out) / "valid.csv").string());

        std::cout << "synth ok videos=" << table.rows.size() << " train=" << split.train.rows.size()
                  << " valid=" << split.valid.rows.size() << "\n";
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        const int code = exit_code_for(e);
        return code == 2 ? 2 : 3;  // everything else here is an I/O-side failure
    }
}

// ---------------------------------------------------------------------- fit

struct FitArgs {
    std::string table;
    std::string media;
    std::int64_t target_index = -1;
    std::string out;
    std::string algorithm = "toy_mlp";
    std::string pretrained;
    std::uint64_t seed = 42;
};

int run_fit(const CLI::App& cmd, const FitArgs& args) {
    if (args.table.empty()) return usage_error(cmd, "fit: --table is required");
    if (args.media.empty()) return usage_error(cmd, "fit: --media is required");
    if (args.target_index < 0) return usage_error(cmd, "fit: --target-index is required");
    if (args.out.empty()) return usage_error(cmd, "fit: --out is required");
    try {
        const auto registry = vidtune::make_default_registry();
        vidtune::StandardPipelineConfig config;
        config.algorithm = args.algorithm;
        config.load_pretrained = !args.pretrained.empty();
        if (!args.pretrained.empty()) config.pretrained_path = args.pretrained;
        const auto pipeline = vidtune::build_standard_pipeline(config, registry);

        const auto table = load_table(args.table, args.target_index);
        const auto dirs = prepare_frame_dirs(table, args.media);
        vidtune::PathList pretrained;
        if (!args.pretrained.empty()) pretrained.push_back(args.pretrained);

        const auto fitted = vidtune::fit_pipeline(pipeline, registry,
                                                  pipeline_inputs(table, dirs, pretrained),
                                                  args.seed);
        vidtune::save_fitted(fitted, args.out);

        const auto probs = vidtune::produce_pipeline(
            fitted, registry, pipeline_inputs(table, dirs, pretrained));
        const double acc = vidtune::evaluate_accuracy(probs.get<vidtune::Probabilities>(),
                                                      table_labels(table));
        std::cout << "fit ok steps=" << pipeline.steps.size()
                  << " train_acc=" << format_fraction(acc) << "\n";
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

// ------------------------------------------------------------------ produce

struct ProduceArgs {
    std::string artifact;
    std::string table;
    std::string media;
    std::int64_t target_index = -1;
    std::string out;
    std::uint64_t seed = 42;  // accepted for interface symmetry; unused
};

int run_produce(const CLI::App& cmd, const ProduceArgs& args) {
    if (args.artifact.empty()) return usage_error(cmd, "produce: --artifact is required");
    if (args.table.empty()) return usage_error(cmd, "produce: --table is required");
    if (args.media.empty()) return usage_error(cmd, "produce: --media is required");
    if (args.out.empty()) return usage_error(cmd, "produce: --out is required");
    try {
        const auto registry = vidtune::make_default_registry();
        const auto fitted = vidtune::load_fitted(args.artifact);
        const auto table = load_table(args.table, args.target_index);
        const auto dirs = prepare_frame_dirs(table, args.media);

        const auto output = vidtune::produce_pipeline(fitted, registry,
                                                      pipeline_inputs(table, dirs, {}));
        const auto& probs = output.get<vidtune::Probabilities>();
        const auto labels = predicted_labels(probs);

        // d3mIndex column when present, otherwise the row number.
        std::optional<std::size_t> index_col;
        for (std::size_t c = 0; c < table.columns.size(); ++c)
            if (table.columns[c] == "d3mIndex") index_col = c;
        std::string csv = "d3mIndex,label\n";
        for (std::size_t r = 0; r < labels.size(); ++r) {
            const std::string id = index_col ? table.rows[r][*index_col] : std::to_string(r);
            csv += id + "," + labels[r] + "\n";
        }
        vidtune::write_file_atomic(args.out, csv);

        std::cout << "produce ok rows=" << labels.size();
        if (table.target_index)
            std::cout << " acc=" << format_fraction(
                vidtune::evaluate_accuracy(probs, table_labels(table)));
        std::cout << "\n";
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

// ------------------------------------------------------------------- search

struct SearchArgs {
    std::string table;
    std::string media;
    std::string valid_table;
    std::string valid_media;
    std::int64_t target_index = -1;
    std::string algorithm = "toy_mlp";
    std::string strategy = "tpe";
    std::int64_t trials = 20;
    std::string space;
    std::string log;
    std::string out;
    std::uint64_t seed = 42;
};

int run_search_cmd(const CLI::App& cmd, const SearchArgs& args) {
    if (args.table.empty()) return usage_error(cmd, "search: --table is required");
    if (args.media.empty()) return usage_error(cmd, "search: --media is required");
    if (args.valid_table.empty()) return usage_error(cmd, "search: --valid-table is required");
    if (args.valid_media.empty()) return usage_error(cmd, "search: --valid-media is required");
    if (args.target_index < 0) return usage_error(cmd, "search: --target-index is required");
    const auto strategy = vidtune::strategy_from_name(args.strategy);
    if (!strategy)
        return usage_error(cmd, "search: --strategy must be 'random' or 'tpe', got '" +
                                    args.strategy + "'");

    vidtune::SearchSpace space;
    try {
        space = args.space.empty()
                    ? vidtune::default_training_space()
                    : vidtune::parse_search_space_json(vidtune::read_file_text(args.space));
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;  // a bad space file is a configuration problem
    }

    try {
        const auto registry = vidtune::make_default_registry();
        vidtune::StandardPipelineConfig pipeline_config;
        pipeline_config.algorithm = args.algorithm;
        const auto base_pipeline = vidtune::build_standard_pipeline(pipeline_config, registry);

        const auto train_table = load_table(args.table, args.target_index);
        const auto train_dirs = prepare_frame_dirs(train_table, args.media);
        const auto valid_table = load_table(args.valid_table, args.target_index);
        const auto valid_dirs = prepare_frame_dirs(valid_table, args.valid_media);
        const auto valid_truth = table_labels(valid_table);

        std::ofstream log_stream;
        if (!args.log.empty()) {
            log_stream.open(args.log, std::ios::trunc);
            if (!log_stream)
                throw Error(ErrorCode::IoError, "cannot open '" + args.log + "' for writing");
        }

        const auto objective = [&](const vidtune::ConfigSample& config) {
            const auto candidate = vidtune::bind_config(base_pipeline, config, registry);
            const auto fitted = vidtune::fit_pipeline(
                candidate, registry, pipeline_inputs(train_table, train_dirs, {}), args.seed);
            const auto output = vidtune::produce_pipeline(
                fitted, registry, pipeline_inputs(valid_table, valid_dirs, {}));
            return 1.0 - vidtune::evaluate_accuracy(output.get<vidtune::Probabilities>(),
                                                    valid_truth);
        };
        const auto sink = [&](const vidtune::Trial& trial) {
            if (log_stream.is_open()) log_stream << vidtune::trial_to_json_line(trial) << "\n"
                                                 << std::flush;
        };

        vidtune::SearchBudget budget;
        budget.max_trials = static_cast<std::size_t>(std::max<std::int64_t>(args.trials, 0));
        budget.seed = args.seed;
        const auto result = vidtune::run_search(space, *strategy, budget, objective, {}, sink);

        if (!args.out.empty()) {
            nlohmann::ordered_json best = nlohmann::ordered_json::object();
            for (const auto& [name, value] : result.best_config)
                std::visit([&best, &name](const auto& v) { best[name] = v; }, value);
            vidtune::write_file_atomic(args.out, best.dump() + "\n");
        }

        std::cout << "search ok trials=" << result.trials.size()
                  << " best=" << format_fraction(result.best_value) << "\n";
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Video action-recognition pipelines with random/TPE hyperparameter search"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    ConfigMerge synth_config;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic moving-square dataset");
    synth_config.bind(synth->add_option("--out", synth_args.out, "Output dataset directory"),
                      "out", synth_args.out);
    synth_config.bind(synth->add_option("--classes", synth_args.classes,
                                        "Motion-direction classes (1-4)"),
                      "classes", synth_args.classes);
    synth_config.bind(synth->add_option("--videos-per-class", synth_args.videos_per_class,
                                        "Videos per class"),
                      "videos_per_class", synth_args.videos_per_class);
    synth_config.bind(synth->add_option("--frames", synth_args.frames, "Frames per video"),
                      "frames", synth_args.frames);
    synth_config.bind(synth->add_option("--height", synth_args.height, "Frame height"), "height",
                      synth_args.height);
    synth_config.bind(synth->add_option("--width", synth_args.width, "Frame width"), "width",
                      synth_args.width);
    synth_config.bind(synth->add_option("--channels", synth_args.channels, "1 or 3"), "channels",
                      synth_args.channels);
    synth_config.bind(synth->add_option("--noise-std", synth_args.noise_std,
                                        "Gaussian pixel noise, u8 units"),
                      "noise_std", synth_args.noise_std);
    synth_config.bind(synth->add_option("--valid-fraction", synth_args.valid_fraction,
                                        "Fraction of each class held out for validation"),
                      "valid_fraction", synth_args.valid_fraction);
    synth_config.bind(synth->add_option("--seed", synth_args.seed, "Generation/split seed"),
                      "seed", synth_args.seed);
    synth->add_option("--config", synth_config.path, "JSON file with defaults for these flags");

    FitArgs fit_args;
    ConfigMerge fit_config;
    auto* fit = app.add_subcommand("fit", "Fit the standard pipeline on a dataset");
    fit_config.bind(fit->add_option("--table", fit_args.table, "Annotation CSV"), "table",
                    fit_args.table);
    fit_config.bind(fit->add_option("--media", fit_args.media, "Video directory"), "media",
                    fit_args.media);
    fit_config.bind(fit->add_option("--target-index", fit_args.target_index,
                                    "Label column index"),
                    "target_index", fit_args.target_index);
    fit_config.bind(fit->add_option("--out", fit_args.out, "Fitted artifact path"), "out",
                    fit_args.out);
    fit_config.bind(fit->add_option("--algorithm", fit_args.algorithm, "Estimator family"),
                    "algorithm", fit_args.algorithm);
    fit_config.bind(fit->add_option("--pretrained", fit_args.pretrained,
                                    "Initial classifier weights file"),
                    "pretrained", fit_args.pretrained);
    fit_config.bind(fit->add_option("--seed", fit_args.seed, "Fit seed"), "seed", fit_args.seed);
    fit->add_option("--config", fit_config.path, "JSON file with defaults for these flags");

    ProduceArgs produce_args;
    ConfigMerge produce_config;
    auto* produce = app.add_subcommand("produce", "Predict with a fitted artifact");
    produce_config.bind(produce->add_option("--artifact", produce_args.artifact,
                                            "Fitted artifact path"),
                        "artifact", produce_args.artifact);
    produce_config.bind(produce->add_option("--table", produce_args.table, "Annotation CSV"),
                        "table", produce_args.table);
    produce_config.bind(produce->add_option("--media", produce_args.media, "Video directory"),
                        "media", produce_args.media);
    produce_config.bind(produce->add_option("--target-index", produce_args.target_index,
                                            "Label column index (enables accuracy)"),
                        "target_index", produce_args.target_index);
    produce_config.bind(produce->add_option("--out", produce_args.out, "Predictions CSV path"),
                        "out", produce_args.out);
    produce_config.bind(produce->add_option("--seed", produce_args.seed, "Unused; accepted"),
                        "seed", produce_args.seed);
    produce->add_option("--config", produce_config.path,
                        "JSON file with defaults for these flags");

    SearchArgs search_args;
    ConfigMerge search_config;
    auto* search = app.add_subcommand("search", "Tune hyperparameters against a validation split");
    search_config.bind(search->add_option("--table", search_args.table, "Training CSV"), "table",
                       search_args.table);
    search_config.bind(search->add_option("--media", search_args.media, "Training videos"),
                       "media", search_args.media);
    search_config.bind(search->add_option("--valid-table", search_args.valid_table,
                                          "Validation CSV"),
                       "valid_table", search_args.valid_table);
    search_config.bind(search->add_option("--valid-media", search_args.valid_media,
                                          "Validation videos"),
                       "valid_media", search_args.valid_media);
    search_config.bind(search->add_option("--target-index", search_args.target_index,
                                          "Label column index"),
                       "target_index", search_args.target_index);
    search_config.bind(search->add_option("--algorithm", search_args.algorithm,
                                          "Estimator family"),
                       "algorithm", search_args.algorithm);
    search_config.bind(search->add_option("--strategy", search_args.strategy, "random or tpe"),
                       "strategy", search_args.strategy);
    search_config.bind(search->add_option("--trials", search_args.trials, "Trial budget"),
                       "trials", search_args.trials);
    search_config.bind(search->add_option("--space", search_args.space,
                                          "Search-space JSON file (default: built-in space)"),
                       "space", search_args.space);
    search_config.bind(search->add_option("--log", search_args.log, "Trial log JSONL path"),
                       "log", search_args.log);
    search_config.bind(search->add_option("--out", search_args.out, "Best-config JSON path"),
                       "out", search_args.out);
    search_config.bind(search->add_option("--seed", search_args.seed, "Search/fit seed"), "seed",
                       search_args.seed);
    search->add_option("--config", search_config.path, "JSON file with defaults for these flags");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help() << std::flush;
        return 2;
    }

    try {
        if (synth->parsed()) {
            synth_config.apply();
            return run_synth(*synth, synth_args);
        }
        if (fit->parsed()) {
            fit_config.apply();
            return run_fit(*fit, fit_args);
        }
        if (produce->parsed()) {
            produce_config.apply();
            return run_produce(*produce, produce_args);
        }
        if (search->parsed()) {
            search_config.apply();
            return run_search_cmd(*search, search_args);
        }
    } catch (const Error& e) {  // --config problems surface here
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
