#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "vidtune/bytes.hpp"
#include "vidtune/error.hpp"
#include "vidtune/sha256.hpp"
#include "vidtune/zoo.hpp"

namespace vidtune {
namespace {

constexpr char kModelMagic[4] = {'M', 'L', 'P', 'W'};
constexpr std::uint16_t kModelVersion = 1;

// FNV-1a over all weight bytes; lets backward() detect a model that moved on
// after the forward pass.
std::uint64_t weights_tag(const MlpModel& m) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const std::vector<double>& v) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(v.data());
        for (std::size_t i = 0; i < v.size() * sizeof(double); ++i)
            h = (h ^ p[i]) * 1099511628211ULL;
    };
    mix(m.w1);
    mix(m.b1);
    mix(m.w2);
    mix(m.b2);
    return h;
}

void check_model_shapes(const MlpModel& m) {
    if (m.w1.size() != m.hidden * m.in_dim || m.b1.size() != m.hidden ||
        m.w2.size() != m.classes * m.hidden || m.b2.size() != m.classes)
        throw Error(ErrorCode::ShapeMismatch, "model arrays do not match the declared layer sizes");
    if (!m.class_names.empty() && m.class_names.size() != m.classes)
        throw Error(ErrorCode::ShapeMismatch, "class name count does not match output size");
}

void validate_hyperparams(const TrainHyperparams& hp) {
    if (hp.epochs < 0) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 0");
    if (!(hp.learning_rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning_rate must be > 0");
    if (!(hp.decay_factor > 0.0)) throw Error(ErrorCode::InvalidArgument, "decay_factor must be > 0");
    if (!(hp.weight_decay >= 0.0)) throw Error(ErrorCode::InvalidArgument, "weight_decay must be >= 0");
    if (hp.batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch_size must be >= 1");
    if (!(hp.momentum >= 0.0 && hp.momentum < 1.0))
        throw Error(ErrorCode::InvalidArgument, "momentum must lie in [0, 1)");
    if (!(hp.dropout >= 0.0 && hp.dropout < 1.0))
        throw Error(ErrorCode::InvalidArgument, "dropout must lie in [0, 1)");
    if (hp.hidden_units < 1) throw Error(ErrorCode::InvalidArgument, "hidden_units must be >= 1");
    for (std::size_t i = 0; i < hp.milestones.size(); ++i) {
        if (i > 0 && hp.milestones[i] <= hp.milestones[i - 1])
            throw Error(ErrorCode::InvalidArgument, "milestones must be strictly increasing");
        if (hp.milestones[i] >= hp.epochs)
            throw Error(ErrorCode::InvalidArgument, "milestones must precede the last epoch");
    }
}

}  // namespace

double lr_at_epoch(double lr0, const std::vector<std::int64_t>& milestones, double decay_factor,
                   std::int64_t epoch) {
    double lr = lr0;
    for (auto m : milestones) {
        // Repeated division keeps the stock schedule's decimal values exact.
        if (m <= epoch) lr /= decay_factor;
    }
    return lr;
}

void sgd_step(std::vector<double>& w, const std::vector<double>& g, std::vector<double>& v,
              double lr, double mu, double wd) {
    if (w.size() != g.size() || w.size() != v.size())
        throw Error(ErrorCode::ShapeMismatch, "weight, gradient and momentum sizes differ");
    for (std::size_t i = 0; i < w.size(); ++i) {
        v[i] = mu * v[i] + g[i] + wd * w[i];
        w[i] -= lr * v[i];
    }
}

ForwardResult forward_loss(const MlpModel& model, const Matrix& features,
                           const std::vector<std::int64_t>& labels, double dropout, NetMode mode,
                           Rng* rng) {
    check_model_shapes(model);
    if (features.cols != model.in_dim)
        throw Error(ErrorCode::ShapeMismatch,
                    "feature dim " + std::to_string(features.cols) + " does not match model input " +
                        std::to_string(model.in_dim));
    if (labels.size() != features.rows)
        throw Error(ErrorCode::ShapeMismatch, "label count does not match batch size");
    for (auto label : labels) {
        if (label < 0 || static_cast<std::size_t>(label) >= model.classes)
            throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(label) +
                                                        " outside [0, " +
                                                        std::to_string(model.classes) + ")");
    }
    const bool use_dropout = mode == NetMode::Train && dropout > 0.0;
    if (use_dropout && !rng)
        throw Error(ErrorCode::InvalidArgument, "training-mode dropout needs an rng");

    const std::size_t batch = features.rows;
    ForwardResult result;
    result.cache.inputs = features;
    result.cache.labels = labels;
    result.cache.hidden = Matrix(batch, model.hidden);
    result.cache.drop.assign(batch * model.hidden, 1.0);
    result.probabilities = Matrix(batch, model.classes);

    const double keep_scale = use_dropout ? 1.0 / (1.0 - dropout) : 1.0;
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
        // hidden = relu(W1 x + b1), then inverted dropout in training mode
        for (std::size_t j = 0; j < model.hidden; ++j) {
            double z = model.b1[j];
            const double* wrow = &model.w1[j * model.in_dim];
            for (std::size_t i = 0; i < model.in_dim; ++i) z += wrow[i] * features.at(b, i);
            double h = z > 0.0 ? z : 0.0;
            if (use_dropout) {
                const double factor = rng->uniform() < dropout ? 0.0 : keep_scale;
                result.cache.drop[b * model.hidden + j] = factor;
                h *= factor;
            }
            result.cache.hidden.at(b, j) = h;
        }

        // logits = W2 h + b2; stable softmax + cross-entropy
        std::vector<double> logits(model.classes);
        double max_logit = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < model.classes; ++k) {
            double z = model.b2[k];
            const double* wrow = &model.w2[k * model.hidden];
            for (std::size_t j = 0; j < model.hidden; ++j)
                z += wrow[j] * result.cache.hidden.at(b, j);
            logits[k] = z;
            max_logit = std::max(max_logit, z);
        }
        double denom = 0.0;
        for (auto z : logits) denom += std::exp(z - max_logit);
        const double log_denom = std::log(denom);
        for (std::size_t k = 0; k < model.classes; ++k)
            result.probabilities.at(b, k) = std::exp(logits[k] - max_logit - log_denom);
        const auto y = static_cast<std::size_t>(labels[b]);
        loss_sum += -(logits[y] - max_logit - log_denom);
    }

    result.loss = batch > 0 ? loss_sum / static_cast<double>(batch) : 0.0;
    result.cache.probabilities = result.probabilities;
    result.cache.weights_tag = weights_tag(model);
    return result;
}

Gradients backward(const MlpModel& model, const ForwardCache& cache) {
    check_model_shapes(model);
    if (cache.weights_tag != weights_tag(model))
        throw Error(ErrorCode::StaleCache, "model weights changed since the forward pass");
    const std::size_t batch = cache.inputs.rows;
    if (batch == 0) throw Error(ErrorCode::StaleCache, "cache holds no batch");

    Gradients g;
    g.w1.assign(model.w1.size(), 0.0);
    g.b1.assign(model.b1.size(), 0.0);
    g.w2.assign(model.w2.size(), 0.0);
    g.b2.assign(model.b2.size(), 0.0);

    const double inv_batch = 1.0 / static_cast<double>(batch);
    std::vector<double> dlogits(model.classes);
    std::vector<double> dhidden(model.hidden);
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t k = 0; k < model.classes; ++k) {
            const double onehot = static_cast<std::size_t>(cache.labels[b]) == k ? 1.0 : 0.0;
            dlogits[k] = (cache.probabilities.at(b, k) - onehot) * inv_batch;
        }
        for (std::size_t k = 0; k < model.classes; ++k) {
            g.b2[k] += dlogits[k];
            double* grow = &g.w2[k * model.hidden];
            for (std::size_t j = 0; j < model.hidden; ++j)
                grow[j] += dlogits[k] * cache.hidden.at(b, j);
        }
        for (std::size_t j = 0; j < model.hidden; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < model.classes; ++k)
                acc += dlogits[k] * model.w2[k * model.hidden + j];
            // Through dropout (`drop` holds the applied factor), then relu.
            // A dropped unit already has acc scaled to 0; a surviving unit
            // has hidden > 0 exactly when its pre-activation was positive.
            acc *= cache.drop[b * model.hidden + j];
            dhidden[j] = cache.hidden.at(b, j) > 0.0 ? acc : 0.0;
        }
        for (std::size_t j = 0; j < model.hidden; ++j) {
            if (dhidden[j] == 0.0) continue;
            g.b1[j] += dhidden[j];
            double* grow = &g.w1[j * model.in_dim];
            for (std::size_t i = 0; i < model.in_dim; ++i)
                grow[i] += dhidden[j] * cache.inputs.at(b, i);
        }
    }
    return g;
}

FitResult fit_classifier(const Matrix& features, const std::vector<std::int64_t>& labels,
                         std::size_t num_classes, const TrainHyperparams& hp, std::uint64_t seed,
                         const MlpModel* init) {
    validate_hyperparams(hp);
    if (features.rows == 0) throw Error(ErrorCode::EmptyData, "no training samples");
    if (num_classes < 1) throw Error(ErrorCode::InvalidArgument, "need at least one class");
    if (labels.size() != features.rows)
        throw Error(ErrorCode::ShapeMismatch, "label count does not match sample count");
    for (auto label : labels) {
        if (label < 0 || static_cast<std::size_t>(label) >= num_classes)
            throw Error(ErrorCode::LabelOutOfRange,
                        "label " + std::to_string(label) + " outside [0, " +
                            std::to_string(num_classes) + ")");
    }

    FitResult result;
    MlpModel& model = result.model;
    if (init) {
        check_model_shapes(*init);
        if (init->in_dim != features.cols)
            throw Error(ErrorCode::ShapeMismatch,
                        "pretrained input dim " + std::to_string(init->in_dim) +
                            " does not match features (" + std::to_string(features.cols) + ")");
        if (init->classes != num_classes)
            throw Error(ErrorCode::ShapeMismatch,
                        "pretrained class count " + std::to_string(init->classes) +
                            " does not match data (" + std::to_string(num_classes) + ")");
        model = *init;
    } else {
        model.in_dim = features.cols;
        model.hidden = static_cast<std::size_t>(hp.hidden_units);
        model.classes = num_classes;
        model.w1.resize(model.hidden * model.in_dim);
        model.b1.assign(model.hidden, 0.0);
        model.w2.resize(model.classes * model.hidden);
        model.b2.assign(model.classes, 0.0);

        // Scaled-uniform fan-in init: +-sqrt(6/fan_in), biases zero.
        Rng init_rng(Rng::derive(seed, 0));
        const double bound1 = std::sqrt(6.0 / static_cast<double>(model.in_dim));
        for (auto& w : model.w1) w = init_rng.uniform(-bound1, bound1);
        const double bound2 = std::sqrt(6.0 / static_cast<double>(model.hidden));
        for (auto& w : model.w2) w = init_rng.uniform(-bound2, bound2);
    }

    Rng shuffle_rng(Rng::derive(seed, 1));
    Rng dropout_rng(Rng::derive(seed, 2));

    std::vector<double> v1(model.w1.size(), 0.0), vb1(model.b1.size(), 0.0);
    std::vector<double> v2(model.w2.size(), 0.0), vb2(model.b2.size(), 0.0);

    const std::size_t n = features.rows;
    const auto batch_size = static_cast<std::size_t>(hp.batch_size);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (std::int64_t epoch = 0; epoch < hp.epochs; ++epoch) {
        const double lr = lr_at_epoch(hp.learning_rate, hp.milestones, hp.decay_factor, epoch);
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        for (std::size_t begin = 0; begin < n; begin += batch_size) {
            const std::size_t count = std::min(batch_size, n - begin);
            Matrix batch(count, features.cols);
            std::vector<std::int64_t> batch_labels(count);
            for (std::size_t b = 0; b < count; ++b) {
                const auto row = order[begin + b];
                std::memcpy(&batch.at(b, 0), features.data.data() + row * features.cols,
                            features.cols * sizeof(double));
                batch_labels[b] = labels[row];
            }

            auto fwd = forward_loss(model, batch, batch_labels, hp.dropout, NetMode::Train,
                                    &dropout_rng);
            auto grads = backward(model, fwd.cache);
            sgd_step(model.w1, grads.w1, v1, lr, hp.momentum, hp.weight_decay);
            sgd_step(model.b1, grads.b1, vb1, lr, hp.momentum, hp.weight_decay);
            sgd_step(model.w2, grads.w2, v2, lr, hp.momentum, hp.weight_decay);
            sgd_step(model.b2, grads.b2, vb2, lr, hp.momentum, hp.weight_decay);
            loss_sum += fwd.loss * static_cast<double>(count);
        }
        result.epoch_losses.push_back(loss_sum / static_cast<double>(n));
    }
    return result;
}

Probabilities predict_proba(const MlpModel& model, const Matrix& features) {
    std::vector<std::int64_t> dummy_labels(features.rows, 0);
    if (model.classes == 0) throw Error(ErrorCode::ShapeMismatch, "model has no classes");
    auto fwd = forward_loss(model, features, dummy_labels, 0.0, NetMode::Eval, nullptr);
    Probabilities probs;
    probs.values = std::move(fwd.probabilities);
    probs.class_names = model.class_names;
    if (probs.class_names.empty()) {
        for (std::size_t k = 0; k < model.classes; ++k)
            probs.class_names.push_back("class_" + std::to_string(k));
    }
    return probs;
}

std::vector<std::uint8_t> encode_mlp(const MlpModel& model) {
    check_model_shapes(model);
    ByteWriter w;
    w.bytes(kModelMagic, 4);
    w.u16(kModelVersion);
    w.u32(static_cast<std::uint32_t>(model.in_dim));
    w.u32(static_cast<std::uint32_t>(model.hidden));
    w.u32(static_cast<std::uint32_t>(model.classes));
    w.u32(static_cast<std::uint32_t>(model.class_names.size()));
    for (const auto& name : model.class_names) {
        w.u32(static_cast<std::uint32_t>(name.size()));
        w.text(name);
    }
    for (const auto* arr : {&model.w1, &model.b1, &model.w2, &model.b2})
        for (double value : *arr) w.f64(value);
    auto hash = sha256(w.data());
    w.bytes(hash.data(), hash.size());
    return w.take();
}

MlpModel decode_mlp(const std::vector<std::uint8_t>& data) {
    if (data.size() < 4 || std::memcmp(data.data(), kModelMagic, 4) != 0)
        throw Error(ErrorCode::BadMagic, "not a model blob");
    if (data.size() < 4 + 2 + 16 + 32)
        throw Error(ErrorCode::CorruptArtifact, "model blob is truncated");
    auto expected = Sha256::digest(data.data(), data.size() - 32);
    if (std::memcmp(expected.data(), data.data() + data.size() - 32, 32) != 0)
        throw Error(ErrorCode::CorruptArtifact, "model blob hash does not match");

    ByteReader r(data.data(), data.size() - 32, ErrorCode::CorruptArtifact);
    r.bytes(4);
    const auto version = r.u16();
    if (version != kModelVersion)
        throw Error(ErrorCode::SchemaVersionUnsupported,
                    "model format version " + std::to_string(version) + " is not supported");

    MlpModel model;
    model.in_dim = r.u32();
    model.hidden = r.u32();
    model.classes = r.u32();
    const auto name_count = r.u32();
    if (name_count != 0 && name_count != model.classes)
        throw Error(ErrorCode::CorruptArtifact, "class name count does not match output size");
    for (std::uint32_t i = 0; i < name_count; ++i) {
        const auto len = r.u32();
        model.class_names.push_back(r.text(len));
    }
    auto read_array = [&r](std::vector<double>& arr, std::size_t count) {
        arr.resize(count);
        for (auto& value : arr) value = r.f64();
    };
    read_array(model.w1, model.hidden * model.in_dim);
    read_array(model.b1, model.hidden);
    read_array(model.w2, model.classes * model.hidden);
    read_array(model.b2, model.classes);
    if (!r.at_end()) throw Error(ErrorCode::CorruptArtifact, "trailing bytes in model blob");
    return model;
}

void save_mlp(const MlpModel& model, const std::string& path) {
    write_file_atomic(path, encode_mlp(model));
}

MlpModel load_mlp(const std::string& path) {
    return decode_mlp(read_file_bytes(path));
}

double evaluate_accuracy(const Probabilities& probs, const std::vector<std::string>& truth) {
    if (truth.size() != probs.values.rows)
        throw Error(ErrorCode::ShapeMismatch, "label count does not match prediction count");
    if (truth.empty()) throw Error(ErrorCode::EmptyData, "no rows to score");
    std::size_t correct = 0;
    for (std::size_t r = 0; r < probs.values.rows; ++r) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < probs.values.cols; ++k)
            if (probs.values.at(r, k) > probs.values.at(r, best)) best = k;
        if (probs.class_names[best] == truth[r]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(truth.size());
}

}  // namespace vidtune
