#pragma once

#include <cstdint>
#include <string>

#include "lipad/datasets.hpp"
#include "lipad/rng.hpp"
#include "lipad/tensor.hpp"

namespace lipad {

/// Procedurally rendered 28x28 grayscale digit: stroke skeletons with random
/// affine jitter, thickness and ink variation. A deterministic stand-in for
/// scanned digit data when no IDX corpus is available.
Tensor render_digit(int digit, Rng& rng);

/// per_class images of each digit 0-9, shuffled; class_ids carry the digit.
LabeledData render_digit_corpus(long per_class, std::uint64_t seed);

/// Writes train/test IDX files under the standard MNIST file names into dir
/// (created if missing).
void write_digit_corpus_idx(const std::string& dir, long train_per_class, long test_per_class, std::uint64_t seed);

} // namespace lipad
