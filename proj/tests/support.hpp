#pragma once

// Shared test fixtures and independent oracles. The oracles here deliberately
// avoid the library's own code paths: the reference classifier trainer uses
// <random> directly with its own loops, the bilinear sampler is a direct
// transcription of the sampling formula, and quadrature/Branin are textbook.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "vidtune/data.hpp"
#include "vidtune/dataio.hpp"
#include "vidtune/rng.hpp"
#include "vidtune/zoo.hpp"

namespace testsupport {

namespace fs = std::filesystem;

// ------------------------------------------------------------------ tempdir

// Unique scratch directory, removed on scope exit.
class TempDir {
public:
    TempDir() {
        static std::atomic<unsigned> counter{0};
        std::random_device rd;
        auto tag = std::to_string(::getpid()) + "_" + std::to_string(counter++) + "_" +
                   std::to_string(rd());
        path_ = fs::temp_directory_path() / ("vidtune_test_" + tag);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    std::string str() const { return path_.string(); }
    std::string sub(const std::string& name) const { return (path_ / name).string(); }

private:
    fs::path path_;
};

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
}

// --------------------------------------------------------------- quadrature

// Composite trapezoid rule on [a, b] with n intervals.
inline double trapezoid(const std::function<double(double)>& f, double a, double b, int n) {
    const double h = (b - a) / n;
    double sum = 0.5 * (f(a) + f(b));
    for (int i = 1; i < n; ++i) sum += f(a + i * h);
    return sum * h;
}

// ------------------------------------------------------------------- branin

// Branin-Hoo function; global minimum ~0.397887 at three points.
inline double branin(double x1, double x2) {
    const double pi = 3.14159265358979323846;
    const double a = 1.0, b = 5.1 / (4.0 * pi * pi), c = 5.0 / pi;
    const double r = 6.0, s = 10.0, t = 1.0 / (8.0 * pi);
    const double inner = x2 - b * x1 * x1 + c * x1 - r;
    return a * inner * inner + s * (1.0 - t) * std::cos(x1) + s;
}

// ----------------------------------------------------------------- bilinear

// Independent bilinear resampler: source coordinate (dst+0.5)*scale-0.5
// clamped to the valid range, two-tap interpolation per axis, round-half-up
// back to u8. Written from the formula, not from the library code.
inline std::uint8_t bilinear_reference_sample(const vidtune::FrameSequence& in, std::int64_t t,
                                              std::int64_t oy, std::int64_t ox, std::int64_t ch,
                                              std::int64_t out_h, std::int64_t out_w) {
    const auto tap = [](std::int64_t dst, std::int64_t in_n, std::int64_t out_n) {
        double src = (static_cast<double>(dst) + 0.5) *
                         (static_cast<double>(in_n) / static_cast<double>(out_n)) -
                     0.5;
        src = std::clamp(src, 0.0, static_cast<double>(in_n - 1));
        const auto lo = static_cast<std::int64_t>(std::floor(src));
        const auto hi = std::min(lo + 1, in_n - 1);
        return std::array<double, 3>{static_cast<double>(lo), static_cast<double>(hi),
                                     src - static_cast<double>(lo)};
    };
    const auto ty = tap(oy, in.h, out_h);
    const auto tx = tap(ox, in.w, out_w);
    const auto v = [&](double y, double x) {
        return static_cast<double>(in.at(t, static_cast<std::int64_t>(y),
                                         static_cast<std::int64_t>(x), ch));
    };
    const double top = (1.0 - tx[2]) * v(ty[0], tx[0]) + tx[2] * v(ty[0], tx[1]);
    const double bottom = (1.0 - tx[2]) * v(ty[1], tx[0]) + tx[2] * v(ty[1], tx[1]);
    const double value = (1.0 - ty[2]) * top + ty[2] * bottom;
    return static_cast<std::uint8_t>(std::clamp(std::floor(value + 0.5), 0.0, 255.0));
}

// ------------------------------------------------- reference trainer oracle

// Minimal from-scratch MLP trainer used as an independent oracle for the
// "train accuracy reaches 1.0" claims. It shares only the mathematical
// recipe with the library implementation: <random>-based initialization,
// its own shuffling, dropout, forward/backward, and momentum updates.
struct ReferenceTrainConfig {
    int epochs = 50;
    double lr0 = 0.001;
    std::vector<int> milestones{20, 40};
    double decay = 10.0;
    double weight_decay = 5e-4;
    int batch_size = 4;
    double momentum = 0.9;
    double dropout = 0.5;
    int hidden = 32;
};

inline double reference_train_accuracy(const std::vector<std::vector<double>>& features,
                                       const std::vector<int>& labels, int num_classes,
                                       const ReferenceTrainConfig& cfg = {},
                                       unsigned long long seed = 1234) {
    const int n = static_cast<int>(features.size());
    const int d = static_cast<int>(features.front().size());
    const int h = cfg.hidden;
    const int k = num_classes;

    std::mt19937_64 gen(seed);
    auto init_layer = [&gen](int rows, int cols) {
        const double bound = std::sqrt(6.0 / cols);
        std::uniform_real_distribution<double> dist(-bound, bound);
        std::vector<std::vector<double>> w(rows, std::vector<double>(cols));
        for (auto& row : w)
            for (auto& x : row) x = dist(gen);
        return w;
    };
    auto w1 = init_layer(h, d);
    auto w2 = init_layer(k, h);
    std::vector<double> b1(h, 0.0), b2(k, 0.0);
    auto v_w1 = std::vector<std::vector<double>>(h, std::vector<double>(d, 0.0));
    auto v_w2 = std::vector<std::vector<double>>(k, std::vector<double>(h, 0.0));
    std::vector<double> v_b1(h, 0.0), v_b2(k, 0.0);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double lr = cfg.lr0;
        for (int m : cfg.milestones)
            if (epoch >= m) lr /= cfg.decay;
        std::shuffle(order.begin(), order.end(), gen);

        for (int start = 0; start < n; start += cfg.batch_size) {
            const int stop = std::min(n, start + cfg.batch_size);
            const int bs = stop - start;

            // Accumulated gradients for the mean batch loss.
            auto g_w1 = std::vector<std::vector<double>>(h, std::vector<double>(d, 0.0));
            auto g_w2 = std::vector<std::vector<double>>(k, std::vector<double>(h, 0.0));
            std::vector<double> g_b1(h, 0.0), g_b2(k, 0.0);

            for (int bi = start; bi < stop; ++bi) {
                const auto& x = features[static_cast<std::size_t>(order[bi])];
                const int y = labels[static_cast<std::size_t>(order[bi])];

                std::vector<double> hidden(h), mask(h, 1.0);
                for (int j = 0; j < h; ++j) {
                    double z = b1[j];
                    for (int i = 0; i < d; ++i) z += w1[j][i] * x[i];
                    hidden[j] = std::max(0.0, z);
                }
                if (cfg.dropout > 0.0) {
                    for (int j = 0; j < h; ++j) {
                        if (unit(gen) < cfg.dropout)
                            mask[j] = 0.0;
                        else
                            mask[j] = 1.0 / (1.0 - cfg.dropout);
                        hidden[j] *= mask[j];
                    }
                }
                std::vector<double> logits(k);
                for (int c = 0; c < k; ++c) {
                    double z = b2[c];
                    for (int j = 0; j < h; ++j) z += w2[c][j] * hidden[j];
                    logits[c] = z;
                }
                const double zmax = *std::max_element(logits.begin(), logits.end());
                double denom = 0.0;
                for (double z : logits) denom += std::exp(z - zmax);
                std::vector<double> dlogits(k);
                for (int c = 0; c < k; ++c)
                    dlogits[c] = (std::exp(logits[c] - zmax) / denom - (c == y ? 1.0 : 0.0)) / bs;

                for (int c = 0; c < k; ++c) {
                    g_b2[c] += dlogits[c];
                    for (int j = 0; j < h; ++j) g_w2[c][j] += dlogits[c] * hidden[j];
                }
                for (int j = 0; j < h; ++j) {
                    double dh = 0.0;
                    for (int c = 0; c < k; ++c) dh += dlogits[c] * w2[c][j];
                    // Post-dropout hidden is positive iff the mask kept the
                    // unit and its pre-ReLU activation was positive; in every
                    // other case the gradient through ReLU+dropout is zero.
                    dh = hidden[j] > 0.0 ? dh * mask[j] : 0.0;
                    g_b1[j] += dh;
                    for (int i = 0; i < d; ++i) g_w1[j][i] += dh * x[i];
                }
            }

            auto sgd = [&](auto& w, auto& v, const auto& g) {
                for (std::size_t r = 0; r < w.size(); ++r)
                    for (std::size_t c2 = 0; c2 < w[r].size(); ++c2) {
                        v[r][c2] = cfg.momentum * v[r][c2] + g[r][c2] + cfg.weight_decay * w[r][c2];
                        w[r][c2] -= lr * v[r][c2];
                    }
            };
            sgd(w1, v_w1, g_w1);
            sgd(w2, v_w2, g_w2);
            for (int j = 0; j < h; ++j) {
                v_b1[j] = cfg.momentum * v_b1[j] + g_b1[j] + cfg.weight_decay * b1[j];
                b1[j] -= lr * v_b1[j];
            }
            for (int c = 0; c < k; ++c) {
                v_b2[c] = cfg.momentum * v_b2[c] + g_b2[c] + cfg.weight_decay * b2[c];
                b2[c] -= lr * v_b2[c];
            }
        }
    }

    int correct = 0;
    for (int s = 0; s < n; ++s) {
        const auto& x = features[static_cast<std::size_t>(s)];
        std::vector<double> hidden(h);
        for (int j = 0; j < h; ++j) {
            double z = b1[j];
            for (int i = 0; i < d; ++i) z += w1[j][i] * x[i];
            hidden[j] = std::max(0.0, z);
        }
        int best = 0;
        double best_z = -1e300;
        for (int c = 0; c < k; ++c) {
            double z = b2[c];
            for (int j = 0; j < h; ++j) z += w2[c][j] * hidden[j];
            if (z > best_z) {
                best_z = z;
                best = c;
            }
        }
        if (best == labels[static_cast<std::size_t>(s)]) ++correct;
    }
    return static_cast<double>(correct) / n;
}

// ------------------------------------------------ dataset feature extraction

// Runs the preprocessing chain (center segments, 16x16, stock normalization,
// motion features) over a generated dataset and returns plain vectors for the
// reference trainer, plus the label vocabulary.
struct DatasetFeatures {
    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    std::vector<std::string> class_names;
};

inline DatasetFeatures dataset_features(const vidtune::Table& table,
                                        const std::string& media_dir) {
    DatasetFeatures out;
    std::vector<std::string> names;
    for (const auto& row : table.rows) names.push_back(row[*table.target_index]);
    out.class_names = names;
    std::sort(out.class_names.begin(), out.class_names.end());
    out.class_names.erase(std::unique(out.class_names.begin(), out.class_names.end()),
                          out.class_names.end());

    const auto dirs = vidtune::frame_dirs_for_table(table, media_dir);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        auto frames = vidtune::read_frame_dir(dirs[r]);
        frames = vidtune::segment_sample(frames, 16, vidtune::SegmentMode::EvalCenter, nullptr);
        frames = vidtune::scale_frames(frames, 16, 16);
        const auto channels = static_cast<std::size_t>(frames.c);
        const auto tensor = vidtune::normalize_frames(frames, std::vector<double>(channels, 0.27),
                                                      std::vector<double>(channels, 0.04));
        out.features.push_back(vidtune::motion_features(tensor));
        const auto it = std::lower_bound(out.class_names.begin(), out.class_names.end(), names[r]);
        out.labels.push_back(static_cast<int>(it - out.class_names.begin()));
    }
    return out;
}

// --------------------------------------------------------------- CLI runner

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

// Runs the real executable with stdout/stderr captured to files.
inline CliResult run_cli(const std::string& cli_path, const std::vector<std::string>& args,
                         const fs::path& scratch) {
    const auto out_path = scratch / "cli_stdout.txt";
    const auto err_path = scratch / "cli_stderr.txt";
    std::string command = "'" + cli_path + "'";
    for (const auto& a : args) command += " '" + a + "'";
    command += " > '" + out_path.string() + "' 2> '" + err_path.string() + "'";

    const int status = std::system(command.c_str());
    CliResult result;
    result.exit_code = (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
    result.out = slurp(out_path.string());
    result.err = slurp(err_path.string());
    std::error_code ec;
    fs::remove(out_path, ec);
    fs::remove(err_path, ec);
    return result;
}

// wall_ms is the one nondeterministic trial-log field; zero it for diffs.
inline std::string mask_wall_ms(const std::string& text) {
    static const std::regex pattern("\"wall_ms\":[0-9]+");
    return std::regex_replace(text, pattern, "\"wall_ms\":0");
}

// ---------------------------------------------------------------- misc math

inline double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const auto n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace testsupport
