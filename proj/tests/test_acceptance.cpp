// End-to-end acceptance checks. Each case prints one PASS/FAIL line so the
// suite's verdict can be read off the log at a glance.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "support.hpp"
#include "vidtune/dataio.hpp"
#include "vidtune/error.hpp"
#include "vidtune/executor.hpp"
#include "vidtune/hyperspace.hpp"
#include "vidtune/pipeline.hpp"
#include "vidtune/tuners.hpp"
#include "vidtune/zoo.hpp"

namespace fs = std::filesystem;
using namespace vidtune;
using testsupport::TempDir;

namespace {

void report(int number, const char* name, bool pass) {
    std::printf("ACCEPTANCE %d (%s): %s\n", number, name, pass ? "PASS" : "FAIL");
    std::fflush(stdout);
}

double seconds_since(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

bool throws_code(ErrorCode code, const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code() == code;
    }
    return false;
}

InputRef input_ref(std::size_t i) { return {InputRef::Source::PipelineInput, i}; }
InputRef step_ref(std::size_t i) { return {InputRef::Source::StepOutput, i}; }

// On-disk dataset with frames extracted and train/valid tables prepared.
struct SplitDataset {
    TempDir dir;
    Table train;
    Table valid;
    PathList train_dirs;
    PathList valid_dirs;

    explicit SplitDataset(const SyntheticSpec& spec, double valid_fraction,
                          std::uint64_t split_seed) {
        const auto bundle = generate_synthetic_dataset(spec, dir.str());
        const auto table = load_annotations(bundle.table_path, bundle.target_index);
        extract_frames(bundle.media_dir, "rawvid");
        auto split = split_table(table, valid_fraction, split_seed);
        train = std::move(split.train);
        valid = std::move(split.valid);
        train_dirs = frame_dirs_for_table(train, bundle.media_dir);
        valid_dirs = frame_dirs_for_table(valid, bundle.media_dir);
    }

    std::vector<ValueEnvelope> train_inputs() const {
        std::vector<ValueEnvelope> inputs;
        inputs.emplace_back(train);
        inputs.emplace_back(train_dirs);
        inputs.emplace_back(PathList{});
        return inputs;
    }
    std::vector<ValueEnvelope> valid_inputs() const {
        std::vector<ValueEnvelope> inputs;
        inputs.emplace_back(valid);
        inputs.emplace_back(valid_dirs);
        inputs.emplace_back(PathList{});
        return inputs;
    }
};

std::vector<std::string> labels_of(const Table& table) {
    std::vector<std::string> labels;
    for (const auto& row : table.rows) labels.push_back(row[*table.target_index]);
    return labels;
}

MlpModel random_model(std::size_t in, std::size_t hidden, std::size_t classes,
                      std::uint64_t seed) {
    Rng rng(seed);
    MlpModel m;
    m.in_dim = in;
    m.hidden = hidden;
    m.classes = classes;
    m.w1.resize(hidden * in);
    m.b1.resize(hidden);
    m.w2.resize(classes * hidden);
    m.b2.resize(classes);
    for (auto* arr : {&m.w1, &m.b1, &m.w2, &m.b2})
        for (auto& w : *arr) w = rng.uniform(-0.8, 0.8);
    return m;
}

// Independent per-candidate score: partition the history, rebuild each
// dimension's densities from the published pieces, and sum the log ratios.
double oracle_score(const SearchSpace& space, const TpePartition& split, const TpeParams& params,
                    const ConfigSample& candidate) {
    double score = 0.0;
    for (const auto& [name, domain] : space.entries()) {
        const auto& value = candidate.at(name);
        if (const auto* choice = std::get_if<Choice>(&domain)) {
            const auto index_of = [&](const ParamValue& v) {
                for (std::size_t i = 0; i < choice->options.size(); ++i)
                    if (param_value_equal(choice->options[i], v)) return i;
                return choice->options.size();
            };
            std::vector<std::size_t> good_counts(choice->options.size(), 0);
            std::vector<std::size_t> bad_counts(choice->options.size(), 0);
            for (const auto* t : split.good) ++good_counts[index_of(t->config.at(name))];
            for (const auto* t : split.bad) ++bad_counts[index_of(t->config.at(name))];
            const auto l = categorical_weights(good_counts, params.prior_weight);
            const auto g = categorical_weights(bad_counts, params.prior_weight);
            const auto j = index_of(value);
            score += std::log(l[j]) - std::log(g[j]);
        } else if (std::holds_alternative<Constant>(domain)) {
            continue;
        } else {
            std::vector<double> good_obs, bad_obs;
            for (const auto* t : split.good) good_obs.push_back(to_unit(domain, t->config.at(name)));
            for (const auto* t : split.bad) bad_obs.push_back(to_unit(domain, t->config.at(name)));
            const double u = to_unit(domain, value);
            score += kde_log_density(good_obs, params.prior_weight, params.bandwidth_floor, u) -
                     kde_log_density(bad_obs, params.prior_weight, params.bandwidth_floor, u);
        }
    }
    return score;
}

std::string cli_path() { return VIDTUNE_CLI_PATH; }

}  // namespace

TEST_CASE("criterion 1: searched configurations beat the fixed default") {
    const auto start = std::chrono::steady_clock::now();

    SyntheticSpec spec;  // 4 classes x 25 videos, noise 8: the stock benchmark
    SplitDataset data(spec, 0.2, 0);
    const auto registry = make_default_registry();
    const auto base = build_standard_pipeline({}, registry);
    const auto space = default_training_space();
    const auto truth = labels_of(data.valid);

    auto validation_accuracy = [&](const PipelineDescription& desc, std::uint64_t seed) {
        const auto fitted = fit_pipeline(desc, registry, data.train_inputs(), seed);
        const auto output = produce_pipeline(fitted, registry, data.valid_inputs());
        return evaluate_accuracy(output.get<Probabilities>(), truth);
    };

    std::vector<double> stock, random_best, tpe_best;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        stock.push_back(validation_accuracy(base, seed));

        const auto objective = [&](const ConfigSample& config) {
            return 1.0 - validation_accuracy(bind_config(base, config, registry), seed);
        };
        for (const auto strategy : {Strategy::Random, Strategy::Tpe}) {
            const auto result = run_search(space, strategy, {20, seed}, objective);
            (strategy == Strategy::Random ? random_best : tpe_best)
                .push_back(1.0 - result.best_value);
        }
    }

    const double stock_median = testsupport::median(stock);
    const double random_median = testsupport::median(random_best);
    const double tpe_median = testsupport::median(tpe_best);
    const double elapsed = seconds_since(start);
    CAPTURE(stock_median);
    CAPTURE(random_median);
    CAPTURE(tpe_median);
    CAPTURE(elapsed);

    const bool pass = random_median >= stock_median && tpe_median >= random_median &&
                      elapsed < 600.0;
    report(1, "tuner ordering on the synthetic benchmark", pass);
    CHECK(pass);
}

TEST_CASE("criterion 2: TPE choice equals the enumerated score argmax") {
    bool pass = true;
    Rng meta(4242);
    for (int round = 0; round < 100 && pass; ++round) {
        SearchSpace space;
        const int dims = 1 + static_cast<int>(meta.uniform_int(3));
        for (int d = 0; d < dims; ++d) {
            Choice c;
            const int options = 2 + static_cast<int>(meta.uniform_int(4));
            for (int j = 0; j < options; ++j) c.options.push_back(std::int64_t{j * 3 + 1});
            space.add("p" + std::to_string(d), c);
        }

        std::vector<Trial> history;
        const std::size_t n = 5 + meta.uniform_int(25);
        for (std::size_t i = 0; i < n; ++i) {
            Trial t;
            t.id = i;
            t.config = sample_space(space, meta);
            t.objective = meta.uniform();
            t.status = TrialStatus::Complete;
            history.push_back(std::move(t));
        }

        const TpeParams params{};
        TpeExplanation explanation;
        Rng rng(900 + static_cast<std::uint64_t>(round));
        const auto chosen = suggest_tpe(space, history, params, rng, &explanation);

        const auto split = tpe_partition(history, params.gamma);
        std::size_t best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < explanation.candidates.size(); ++i) {
            const double score = oracle_score(space, split, params, explanation.candidates[i]);
            if (score > best_score) {
                best_score = score;
                best = i;
            }
        }
        pass = pass && explanation.chosen_index == best;
        for (const auto& [name, value] : chosen)
            pass = pass && param_value_equal(value, explanation.candidates[best].at(name));
    }
    report(2, "TPE matches the brute-force candidate argmax", pass);
    CHECK(pass);
}

TEST_CASE("criterion 3: TPE dominates random search on Branin") {
    const auto start = std::chrono::steady_clock::now();
    SearchSpace space;
    space.add("x", Uniform{-5.0, 10.0});
    space.add("y", Uniform{0.0, 15.0});
    const auto objective = [](const ConfigSample& config) {
        return testsupport::branin(param_value_as_double(config.at("x")),
                                   param_value_as_double(config.at("y")));
    };

    std::vector<double> random_best, tpe_best;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        random_best.push_back(run_search(space, Strategy::Random, {50, seed}, objective).best_value);
        tpe_best.push_back(run_search(space, Strategy::Tpe, {50, seed}, objective).best_value);
    }

    const double known_optimum = 0.397887;
    const double random_median = testsupport::median(random_best);
    const double tpe_median = testsupport::median(tpe_best);
    const double elapsed = seconds_since(start);
    CAPTURE(random_median);
    CAPTURE(tpe_median);
    CAPTURE(elapsed);

    const bool pass = tpe_median <= random_median &&
                      std::abs(tpe_median - known_optimum) <= 2.0 &&
                      std::abs(random_median - known_optimum) <= 2.0 && elapsed < 60.0;
    report(3, "Branin medians: TPE <= random, both near the optimum", pass);
    CHECK(pass);
}

TEST_CASE("criterion 4: analytic gradients agree with finite differences") {
    bool pass = true;
    double worst = 0.0;
    Rng meta(31337);
    for (int instance = 0; instance < 100; ++instance) {
        const auto in = 1 + meta.uniform_int(6);
        const auto hidden = 1 + meta.uniform_int(5);
        const auto classes = 2 + meta.uniform_int(4);
        const auto batch = 1 + meta.uniform_int(6);
        auto model = random_model(in, hidden, classes, meta.next_u64());
        Matrix features(batch, in);
        for (auto& v : features.data) v = meta.uniform(-1.5, 1.5);
        std::vector<std::int64_t> labels(batch);
        for (auto& l : labels) l = static_cast<std::int64_t>(meta.uniform_int(classes));

        const auto fwd = forward_loss(model, features, labels, 0.0, NetMode::Eval, nullptr);
        const auto grads = backward(model, fwd.cache);
        const std::pair<std::vector<double> MlpModel::*, const std::vector<double>*> arrays[] = {
            {&MlpModel::w1, &grads.w1},
            {&MlpModel::b1, &grads.b1},
            {&MlpModel::w2, &grads.w2},
            {&MlpModel::b2, &grads.b2},
        };
        const double h = 1e-5;
        for (const auto& [member, analytic] : arrays) {
            for (std::size_t i = 0; i < analytic->size(); ++i) {
                const double original = (model.*member)[i];
                (model.*member)[i] = original + h;
                const double up =
                    forward_loss(model, features, labels, 0.0, NetMode::Eval, nullptr).loss;
                (model.*member)[i] = original - h;
                const double down =
                    forward_loss(model, features, labels, 0.0, NetMode::Eval, nullptr).loss;
                (model.*member)[i] = original;
                const double fd = (up - down) / (2.0 * h);
                const double an = (*analytic)[i];
                const double scale = std::max(std::abs(fd), std::abs(an));
                if (scale < 1e-10) continue;
                const double rel = std::abs(fd - an) / scale;
                worst = std::max(worst, rel);
                pass = pass && rel < 1e-4;
            }
        }
    }
    CAPTURE(worst);
    report(4, "gradient check over 100 random instances", pass);
    CHECK(pass);
}

TEST_CASE("criterion 5: the stock learning-rate schedule is exact") {
    const std::vector<std::int64_t> milestones{20, 40};
    bool pass = true;
    for (std::int64_t epoch = 0; epoch < 50; ++epoch) {
        const double expected = epoch < 20 ? 0.001 : epoch < 40 ? 0.0001 : 0.00001;
        pass = pass && lr_at_epoch(0.001, milestones, 10.0, epoch) == expected;
    }
    report(5, "learning-rate schedule hits exact decimal values", pass);
    CHECK(pass);
}

TEST_CASE("criterion 6: pipeline language round-trips, rejections, determinism") {
    const auto registry = make_default_registry();
    bool pass = true;

    // Random structurally valid pipelines serialize canonically.
    Rng rng(55);
    const auto ids = registry.ids();
    for (int round = 0; round < 100 && pass; ++round) {
        PipelineDescription desc;
        desc.num_inputs = 1 + rng.uniform_int(3);
        const auto steps = 1 + rng.uniform_int(6);
        std::vector<ValueKind> produced;
        for (std::size_t s = 0; s < steps; ++s) {
            const auto& [name, version] = ids[rng.uniform_int(ids.size())];
            const auto& spec = registry.find(name, version)->spec;
            StepDescription step{name, version, {}, {}};
            for (const auto kind : spec.input_kinds) {
                std::vector<std::size_t> matching;
                for (std::size_t p = 0; p < produced.size(); ++p)
                    if (produced[p] == kind) matching.push_back(p);
                if (!matching.empty() && rng.uniform() < 0.7)
                    step.inputs.push_back(step_ref(matching[rng.uniform_int(matching.size())]));
                else
                    step.inputs.push_back(input_ref(rng.uniform_int(desc.num_inputs)));
            }
            for (const auto& hp : spec.hyperparams)
                if (rng.uniform() < 0.5) step.bindings[hp.name] = sample_domain(hp.domain, rng);
            produced.push_back(spec.output_kind);
            desc.steps.push_back(std::move(step));
        }
        desc.output = step_ref(rng.uniform_int(desc.steps.size()));
        desc.pipeline_id = compute_pipeline_id(desc);

        pass = pass && validate_pipeline(desc, registry).ok();
        const auto text = serialize_pipeline(desc);
        pass = pass && serialize_pipeline(deserialize_pipeline(text)) == text;
    }

    // The three rejection classes fire their designated issue codes.
    const auto base = build_standard_pipeline({}, registry);
    const auto has_issue = [&](const PipelineDescription& desc, const std::string& code) {
        for (const auto& issue : validate_pipeline(desc, registry).issues)
            if (issue.code == code) return true;
        return false;
    };
    auto forward = base;
    forward.steps[1].inputs[0] = step_ref(2);
    pass = pass && has_issue(forward, "ForwardReference");

    // Append a frame sampler fed by the feature step: FeatureMatrix into a
    // RawFrames slot, with every reference still pointing backward.
    PipelineDescription mismatch = base;
    mismatch.steps.resize(5);
    StepDescription sampler = base.steps[1];
    sampler.inputs = {step_ref(4)};
    mismatch.steps.push_back(std::move(sampler));
    mismatch.output = step_ref(5);
    mismatch.pipeline_id = compute_pipeline_id(mismatch);
    pass = pass && has_issue(mismatch, "KindMismatch");

    auto out_of_domain = base;
    out_of_domain.steps[1].bindings["num_segments"] = std::int64_t{7};
    pass = pass && has_issue(out_of_domain, "OutOfDomainBinding");

    // Same seed, same artifact bytes, same produce output.
    SyntheticSpec mini;
    mini.num_classes = 3;
    mini.videos_per_class = 4;
    mini.frames = 8;
    mini.height = 16;
    mini.width = 16;
    mini.channels = 1;
    mini.noise_std = 2.0;
    mini.seed = 1;
    SplitDataset data(mini, 0.25, 1);
    const auto fitted_a = fit_pipeline(base, registry, data.train_inputs(), 11);
    const auto fitted_b = fit_pipeline(base, registry, data.train_inputs(), 11);
    pass = pass && encode_fitted(fitted_a) == encode_fitted(fitted_b);
    const auto out_a = produce_pipeline(fitted_a, registry, data.valid_inputs());
    const auto out_b = produce_pipeline(fitted_b, registry, data.valid_inputs());
    pass = pass && out_a.get<Probabilities>().values.data == out_b.get<Probabilities>().values.data;

    report(6, "pipeline round-trips, issue codes, determinism", pass);
    CHECK(pass);
}

TEST_CASE("criterion 7: synth/fit/produce reaches 0.9 validation accuracy") {
    TempDir scratch;
    const auto dataset = scratch.str() + "/dataset";
    const auto artifact = scratch.str() + "/model.vtp";
    const auto predictions = scratch.str() + "/predictions.csv";
    bool pass = true;

    // Default synthetic spec, default (stock) hyperparameters throughout.
    const auto synth = testsupport::run_cli(
        cli_path(), {"synth", "--out", dataset, "--seed", "42"}, scratch.str());
    pass = pass && synth.exit_code == 0;

    const auto fit = testsupport::run_cli(
        cli_path(), {"fit", "--table", dataset + "/train.csv", "--media", dataset + "/media",
                     "--target-index", "2", "--out", artifact, "--seed", "42"},
        scratch.str());
    pass = pass && fit.exit_code == 0;

    const auto produce = testsupport::run_cli(
        cli_path(), {"produce", "--artifact", artifact, "--table", dataset + "/valid.csv",
                     "--media", dataset + "/media", "--target-index", "2", "--out", predictions},
        scratch.str());
    pass = pass && produce.exit_code == 0;

    double cli_accuracy = -1.0;
    const auto acc_pos = produce.out.find("acc=");
    if (acc_pos != std::string::npos)
        cli_accuracy = std::stod(produce.out.substr(acc_pos + 4));
    pass = pass && cli_accuracy >= 0.9;

    // The CLI's predictions must equal the library's, row for row.
    std::string expected_csv = "d3mIndex,label\n";
    double library_accuracy = -1.0;
    if (pass) {
        const auto registry = make_default_registry();
        const auto fitted = load_fitted(artifact);
        const auto valid = load_annotations(dataset + "/valid.csv", 2);
        const auto dirs = frame_dirs_for_table(valid, dataset + "/media");
        std::vector<ValueEnvelope> inputs;
        inputs.emplace_back(valid);
        inputs.emplace_back(dirs);
        inputs.emplace_back(PathList{});
        const auto output = produce_pipeline(fitted, registry, inputs);
        const auto& probs = output.get<Probabilities>();
        for (std::size_t r = 0; r < probs.values.rows; ++r) {
            std::size_t best = 0;
            for (std::size_t k = 1; k < probs.values.cols; ++k)
                if (probs.values.at(r, k) > probs.values.at(r, best)) best = k;
            expected_csv += valid.rows[r][0] + "," + probs.class_names[best] + "\n";
        }
        library_accuracy = evaluate_accuracy(probs, labels_of(valid));
        pass = pass && testsupport::slurp(predictions) == expected_csv;
        pass = pass && std::abs(library_accuracy - cli_accuracy) < 5e-5 + 1e-12;
    }
    CAPTURE(synth.err);
    CAPTURE(fit.err);
    CAPTURE(produce.err);
    CAPTURE(cli_accuracy);
    CAPTURE(library_accuracy);
    report(7, "CLI end-to-end accuracy and library equivalence", pass);
    CHECK(pass);
}

TEST_CASE("criterion 8: formats are lossless and guarded") {
    TempDir dir;
    bool pass = true;

    // rawvid: bitwise round-trip and deterministic re-encoding.
    FrameSequence video;
    video.t = 5;
    video.h = 6;
    video.w = 7;
    video.c = 3;
    video.data.resize(video.sample_count());
    Rng rng(808);
    for (auto& v : video.data) v = static_cast<std::uint8_t>(rng.uniform_int(256));
    const auto video_path = dir.str() + "/clip.rawvid";
    write_rawvid(video_path, video);
    const auto reread = read_rawvid(video_path);
    pass = pass && reread.data == video.data && reread.t == video.t && reread.h == video.h &&
           reread.w == video.w && reread.c == video.c;
    const auto second_path = dir.str() + "/clip2.rawvid";
    write_rawvid(second_path, reread);
    pass = pass && testsupport::slurp(video_path) == testsupport::slurp(second_path);

    // Corrupt rawvid inputs raise the designated errors.
    auto bytes = std::vector<std::uint8_t>();
    {
        const auto text = testsupport::slurp(video_path);
        bytes.assign(text.begin(), text.end());
    }
    auto bad_magic = bytes;
    bad_magic[0] = 'Z';
    pass = pass && throws_code(ErrorCode::BadMagic, [&] { decode_rawvid(bad_magic, "t"); });
    auto truncated = bytes;
    truncated.resize(truncated.size() - 5);
    pass = pass && throws_code(ErrorCode::TruncatedPayload, [&] { decode_rawvid(truncated, "t"); });

    // Fitted-pipeline artifacts: bitwise round-trip plus hash guard.
    SyntheticSpec mini;
    mini.num_classes = 2;
    mini.videos_per_class = 3;
    mini.frames = 6;
    mini.height = 16;
    mini.width = 16;
    mini.channels = 1;
    mini.noise_std = 2.0;
    mini.seed = 3;
    SplitDataset data(mini, 0.34, 3);
    const auto registry = make_default_registry();
    const auto fitted = fit_pipeline(build_standard_pipeline({}, registry), registry,
                                     data.train_inputs(), 2);
    const auto artifact_path = dir.str() + "/model.vtp";
    save_fitted(fitted, artifact_path);
    const auto loaded = load_fitted(artifact_path);
    pass = pass && encode_fitted(loaded) == encode_fitted(fitted);
    auto artifact_bytes = encode_fitted(fitted);
    artifact_bytes[artifact_bytes.size() / 2] ^= 0x01;
    pass = pass && throws_code(ErrorCode::CorruptArtifact, [&] { decode_fitted(artifact_bytes); });

    // Frame extraction obeys the frame_%06d naming for a five-frame video.
    const auto frames_root = dir.str() + "/frames";
    fs::create_directories(frames_root);
    FrameSequence gray = video;
    gray.c = 1;
    gray.data.resize(gray.sample_count());
    for (auto& v : gray.data) v = static_cast<std::uint8_t>(rng.uniform_int(256));
    write_rawvid(frames_root + "/five.rawvid", gray);
    const auto created = extract_frames(frames_root, "rawvid");
    pass = pass && created.size() == 1;
    if (pass) {
        std::vector<std::string> names;
        for (const auto& entry : fs::directory_iterator(created[0]))
            names.push_back(entry.path().filename().string());
        std::sort(names.begin(), names.end());
        const std::vector<std::string> expected{"frame_000001.pgm", "frame_000002.pgm",
                                                "frame_000003.pgm", "frame_000004.pgm",
                                                "frame_000005.pgm"};
        pass = pass && names == expected;
    }

    report(8, "formats: lossless round-trips, guarded decoding, frame naming", pass);
    CHECK(pass);
}
