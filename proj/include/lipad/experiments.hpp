#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lipad/baselines.hpp"
#include "lipad/config.hpp"
#include "lipad/datasets.hpp"
#include "lipad/metrics.hpp"
#include "lipad/models.hpp"
#include "lipad/trainer.hpp"

namespace lipad {

/// Reference architectures: the dense Lipschitz critic (hidden 256/128/64)
/// and the dense autoencoders used by the baselines.
DenseNetSpec default_critic_spec(long input_dim);
AutoencoderSpec default_ae_spec(long input_dim);

/// Resolves the digit corpus: user-supplied IDX paths when configured,
/// otherwise a procedurally rendered corpus cached under digits_cache_dir.
MnistPaths ensure_digit_corpus(const RunConfig& cfg);

struct RayCheck {
    int ray = 0;
    double violation_frac = 0.0; // fraction of decreasing steps beyond distance 2
    bool monotone_ok = false;    // violation_frac <= 0.05
    bool exceeds_ok = false;     // score beyond distance 5 always above max train score
};

struct MoonsSeedResult {
    std::uint64_t seed = 0;
    std::vector<RayCheck> lad_rays;
    std::vector<RayCheck> ae_rays;
    bool lad_far_ok = false;        // every ray passes both checks
    bool ae_fails_some_ray = false; // reconstruction misses the far-point property somewhere
    double lad_far_mean = 0.0;      // mean anomaly score, grid cells > 1.0 from data
    double lad_near_mean = 0.0;     // mean anomaly score, grid cells < 0.1 from data
    double ae_far_mean = 0.0;
    double ae_near_mean = 0.0;
    double lipschitz_ok_frac = 0.0; // fraction of random pairs with slope <= 1.25
};

struct MoonsResult {
    ExperimentReport report;
    std::vector<MoonsSeedResult> seeds;
};

/// Trains LAD and an AE on two-moons, scores a grid_size^2 grid over
/// [-2,3]x[-1.5,2], emits PGM + CSV grids, and runs the outward-ray checks.
MoonsResult run_moons_experiment(const RunConfig& cfg);

/// Per digit: train on the clean digit class, rank the black image against
/// the digit's nominal test scores. Rows hold rank fractions.
ExperimentReport run_black_image_experiment(const RunConfig& cfg);

/// Per (digit, gamma, seed): contaminate the digit's training set with other
/// digits, train/fit each method, and compute AUC over the full test set.
ExperimentReport run_contamination_sweep(const RunConfig& cfg);

/// Same protocol on the synthetic 10-d tabular data with Gaussian corruption
/// and an 80/20 split.
ExperimentReport run_tabular_sweep(const RunConfig& cfg);

ExperimentReport run_experiment(const std::string& kind, const RunConfig& cfg);

} // namespace lipad
