#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vidtune/data.hpp"
#include "vidtune/hyperspace.hpp"
#include "vidtune/pipeline.hpp"
#include "vidtune/rng.hpp"

namespace vidtune {

// ---------------------------------------------------------------- datasets

// Parses a header CSV (comma-separated, no quoting) and marks the label
// column. Throws IoError / BadTargetIndex / RaggedRows / ParseError.
Table load_annotations(const std::string& csv_path, std::size_t target_index);

// Decodes every <stem>.<ext> video under media_dir into <media_dir>/<stem>/
// as one image per frame (frame_000001... in PGM for 1 channel, PPM for 3).
// Returns the created directories, sorted. Re-running reproduces the same
// tree. Throws IoError / UnsupportedExtension / CorruptVideo.
PathList extract_frames(const std::string& media_dir, const std::string& ext);

// Frame-image round trip used by extract_frames (binary PGM P5 / PPM P6,
// maxval 255).
void write_frame_image(const std::string& path, const FrameSequence& frames, std::int64_t t);
FrameSequence read_frame_image(const std::string& path);  // t == 1

// Reassembles frame_000001.. from a directory produced by extract_frames.
FrameSequence read_frame_dir(const std::string& dir);

// Frame directory for each table row's video, following the extract_frames
// layout. The table must have a "video" column.
PathList frame_dirs_for_table(const Table& table, const std::string& media_dir);

// ---------------------------------------------------------- frame transforms

enum class SegmentMode { TrainRandom, EvalCenter };

// Divides [0, t) into n segments and picks one index per segment: the center
// for EvalCenter, uniformly at random for TrainRandom. When t < n, index k is
// min(floor(k*t/n), t-1) in both modes and the rng is untouched.
std::vector<std::int64_t> segment_indices(std::int64_t t, std::int64_t n, SegmentMode mode,
                                          Rng* rng);
FrameSequence segment_sample(const FrameSequence& frames, std::int64_t n, SegmentMode mode,
                             Rng* rng);

// Bilinear resize; source coordinate (dst+0.5)*in/out - 0.5 clamped to the
// frame, output rounded half-up to u8.
FrameSequence scale_frames(const FrameSequence& frames, std::int64_t out_h, std::int64_t out_w);

// out = (u8/255 - mean_c) / std_c. mean/std hold one value per channel, or a
// single value broadcast to all channels. Throws ZeroStd / ShapeMismatch.
TensorSequence normalize_frames(const FrameSequence& frames, const std::vector<double>& mean,
                                const std::vector<double>& stddev);

// Per-sequence descriptor: (t-1)*c mean absolute temporal differences
// (pair-major, channel-minor) followed by t*c per-frame channel means;
// dimension (2t-1)*c.
std::vector<double> motion_features(const TensorSequence& frames);

// ------------------------------------------------------------------ training

struct TrainHyperparams {
    std::int64_t epochs = 50;
    double learning_rate = 1e-3;
    std::vector<std::int64_t> milestones = {20, 40};
    double decay_factor = 10.0;
    double weight_decay = 5e-4;
    std::int64_t batch_size = 4;
    double momentum = 0.9;
    std::int64_t num_segments = 16;  // consumed upstream by segment_sample
    double dropout = 0.5;
    std::int64_t hidden_units = 32;
};

// One-hidden-layer ReLU network, row-major weights (w1: hidden x in,
// w2: classes x hidden).
struct MlpModel {
    std::size_t in_dim = 0;
    std::size_t hidden = 0;
    std::size_t classes = 0;
    std::vector<double> w1, b1, w2, b2;
    std::vector<std::string> class_names;  // column index -> label
};

// Step-decay schedule: lr0 / decay^m where m counts milestones <= epoch.
double lr_at_epoch(double lr0, const std::vector<std::int64_t>& milestones, double decay_factor,
                   std::int64_t epoch);

// v <- mu*v + g + wd*w, then w <- w - lr*v, elementwise.
void sgd_step(std::vector<double>& w, const std::vector<double>& g, std::vector<double>& v,
              double lr, double mu, double wd);

enum class NetMode { Train, Eval };

struct ForwardCache {
    Matrix inputs;            // batch copy
    Matrix hidden;            // post-relu, post-dropout activations
    std::vector<double> drop; // per-activation dropout factor (0 or 1/(1-p))
    Matrix probabilities;
    std::vector<std::int64_t> labels;
    std::uint64_t weights_tag = 0;  // detects model updates between forward and backward
};

struct ForwardResult {
    double loss = 0.0;
    Matrix probabilities;
    ForwardCache cache;
};

// Mean softmax cross-entropy over the batch. Train mode applies inverted
// dropout (survivors scaled by 1/(1-p)); eval mode never touches the rng.
ForwardResult forward_loss(const MlpModel& model, const Matrix& features,
                           const std::vector<std::int64_t>& labels, double dropout, NetMode mode,
                           Rng* rng);

struct Gradients {
    std::vector<double> w1, b1, w2, b2;
};

// Analytic gradients of the cached forward pass. Throws StaleCache if the
// model changed since the cache was built.
Gradients backward(const MlpModel& model, const ForwardCache& cache);

struct FitResult {
    MlpModel model;
    std::vector<double> epoch_losses;  // sample-weighted mean loss per epoch
};

// Full training loop: fan-in scaled uniform init (or `init` when given),
// per-epoch seed-derived shuffle, mini-batches with the last partial batch
// kept, SGD with the step-decay schedule. Bit-deterministic per seed.
FitResult fit_classifier(const Matrix& features, const std::vector<std::int64_t>& labels,
                         std::size_t num_classes, const TrainHyperparams& hp, std::uint64_t seed,
                         const MlpModel* init = nullptr);

Probabilities predict_proba(const MlpModel& model, const Matrix& features);

// Binary model container, also used for standalone pretrained-weight files.
std::vector<std::uint8_t> encode_mlp(const MlpModel& model);
MlpModel decode_mlp(const std::vector<std::uint8_t>& data);
void save_mlp(const MlpModel& model, const std::string& path);
MlpModel load_mlp(const std::string& path);

// Fraction of rows whose argmax class name equals the true label.
double evaluate_accuracy(const Probabilities& probs, const std::vector<std::string>& truth);

// ---------------------------------------------------------- pipeline assembly

// Registers the built-in primitives (zoo.frame_reader, zoo.segment_sample,
// zoo.scale_frames, zoo.normalize_frames, zoo.motion_features, zoo.toy_mlp).
Registry make_default_registry();

struct StandardPipelineConfig {
    std::string algorithm = "toy_mlp";
    bool load_pretrained = false;
    std::optional<std::string> pretrained_path;
    ConfigSample overrides;
};

// The 6-step pipeline frame_reader -> segment_sample -> scale_frames ->
// normalize_frames -> motion_features -> <algorithm estimator>, with the
// stock training schedule bound explicitly. Pipeline inputs: 0 = annotation
// table, 1 = frame directories, 2 = pretrained-weights path list (may be
// empty). Throws UnknownAlgorithm / MissingPretrainedPath.
PipelineDescription build_standard_pipeline(const StandardPipelineConfig& config,
                                            const Registry& registry);

}  // namespace vidtune
