#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lipad/rng.hpp"
#include "lipad/tensor.hpp"

namespace lipad {

/// Adds i.i.d. zero-mean Gaussian noise with per-coordinate std sigma.
Tensor gaussian_corrupt(const Tensor& batch, double sigma, Rng& rng);

/// Partitions each side x side image row into non-overlapping patch x patch
/// tiles and applies a fresh uniform permutation of tiles per image.
/// Preserves the pixel multiset of every row.
Tensor patch_shuffle(const Tensor& batch, long patch, long side, Rng& rng);

/// Deterministic core: perms[i] maps output tile slot -> input tile index.
Tensor patch_shuffle_with_perms(const Tensor& batch, long patch, long side,
                                const std::vector<std::vector<int>>& perms);

enum class CorruptionKind { Gaussian, PatchShuffle };

/// Config-level description of the anomaly estimate applied to nominal batches.
struct CorruptionProcess {
    CorruptionKind kind = CorruptionKind::Gaussian;
    double sigma = 1.0;  // gaussian
    long patch_size = 4; // patch-shuffle
    long image_side = 28;

    void validate() const;
    Tensor apply(const Tensor& batch, Rng& rng) const;
    static CorruptionProcess gaussian(double sigma);
    static CorruptionProcess patch(long patch_size, long image_side);
};

} // namespace lipad
