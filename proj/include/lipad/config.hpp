#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lipad/corruption.hpp"
#include "lipad/trainer.hpp"

namespace lipad {

struct MnistPaths {
    std::string train_images;
    std::string train_labels;
    std::string test_images;
    std::string test_labels;

    bool complete() const {
        return !train_images.empty() && !train_labels.empty() && !test_images.empty() && !test_labels.empty();
    }
};

/// One JSON document drives every command; unknown keys are rejected.
/// CLI flags may override top-level scalar keys (--key value).
struct RunConfig {
    std::string experiment; // moons | black-image | contamination | tabular
    std::string output_dir = "out";
    std::uint64_t seed = 1;
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    std::vector<int> digits = {0, 1, 8};
    std::vector<double> gammas = {0.0, 0.02, 0.05, 0.10};
    std::vector<std::string> methods = {"lad", "ae", "dcae", "lof", "knn"};

    MnistPaths mnist;
    std::string digits_cache_dir; // where a rendered IDX corpus is cached/expected
    long digits_train_per_class = 6000;
    long digits_test_per_class = 1000;

    TrainConfig train;
    bool train_iterations_set = false;

    CorruptionProcess corruption;
    bool corruption_set = false;

    long moons_n = 1024;
    double moons_noise = 0.05;
    long grid_size = 200;

    long tabular_n = 4000;
    double tabular_train_fraction = 0.8;

    long knn_k = 5;
    long lof_k = 20;
    double ae_denoising_sigma = 0.1;

    // train/score commands
    std::string data_kind = "moons"; // moons | tabular | csv
    std::string data_csv;
    std::string model_path = "model.lipadnet";
    std::string trace_path = "trace.csv";

    long threads = 0; // 0: LIPAD_THREADS env, else hardware

    void validate() const;
    long effective_threads() const;
};

using FlagOverrides = std::vector<std::pair<std::string, std::string>>;

RunConfig parse_config_file(const std::string& path, const FlagOverrides& overrides = {});
RunConfig parse_config_text(const std::string& text, const FlagOverrides& overrides = {});

} // namespace lipad
