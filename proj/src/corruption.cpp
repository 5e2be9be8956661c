#include "lipad/corruption.hpp"

#include "lipad/errors.hpp"

namespace lipad {

Tensor gaussian_corrupt(const Tensor& batch, double sigma, Rng& rng) {
    if (sigma < 0.0) throw ContractError("gaussian_corrupt: sigma must be nonnegative");
    Tensor out = batch;
    if (sigma == 0.0) return out;
    for (long i = 0; i < out.size(); ++i) out[i] += rng.normal(0.0, sigma);
    return out;
}

Tensor patch_shuffle_with_perms(const Tensor& batch, long patch, long side,
                                const std::vector<std::vector<int>>& perms) {
    if (side * side != batch.cols())
        throw ContractError("patch_shuffle: row length " + std::to_string(batch.cols()) + " is not " +
                            std::to_string(side) + "^2");
    if (patch <= 0 || side % patch != 0)
        throw ContractError("patch_shuffle: patch size " + std::to_string(patch) + " does not divide side " +
                            std::to_string(side));
    const long tiles_per_side = side / patch;
    const long n_tiles = tiles_per_side * tiles_per_side;
    if (static_cast<long>(perms.size()) != batch.rows()) throw ContractError("patch_shuffle: permutation count mismatch");

    Tensor out(batch.rows(), batch.cols());
    for (long img = 0; img < batch.rows(); ++img) {
        const auto& perm = perms[img];
        if (static_cast<long>(perm.size()) != n_tiles) throw ContractError("patch_shuffle: permutation length mismatch");
        for (long slot = 0; slot < n_tiles; ++slot) {
            const long src = perm[slot];
            const long dst_r0 = (slot / tiles_per_side) * patch;
            const long dst_c0 = (slot % tiles_per_side) * patch;
            const long src_r0 = (src / tiles_per_side) * patch;
            const long src_c0 = (src % tiles_per_side) * patch;
            for (long r = 0; r < patch; ++r)
                for (long c = 0; c < patch; ++c)
                    out.at(img, (dst_r0 + r) * side + dst_c0 + c) = batch.at(img, (src_r0 + r) * side + src_c0 + c);
        }
    }
    return out;
}

Tensor patch_shuffle(const Tensor& batch, long patch, long side, Rng& rng) {
    const long tiles_per_side = side > 0 && patch > 0 && side % patch == 0 ? side / patch : 0;
    const long n_tiles = tiles_per_side * tiles_per_side;
    std::vector<std::vector<int>> perms;
    perms.reserve(batch.rows());
    for (long i = 0; i < batch.rows(); ++i) perms.push_back(rng.permutation(static_cast<int>(n_tiles)));
    return patch_shuffle_with_perms(batch, patch, side, perms);
}

void CorruptionProcess::validate() const {
    if (kind == CorruptionKind::Gaussian) {
        if (sigma < 0.0) throw ConfigError("corruption: sigma must be nonnegative");
    } else {
        if (patch_size <= 0 || image_side <= 0 || image_side % patch_size != 0)
            throw ConfigError("corruption: patch size must divide image side");
    }
}

Tensor CorruptionProcess::apply(const Tensor& batch, Rng& rng) const {
    if (kind == CorruptionKind::Gaussian) return gaussian_corrupt(batch, sigma, rng);
    return patch_shuffle(batch, patch_size, image_side, rng);
}

CorruptionProcess CorruptionProcess::gaussian(double sigma) {
    CorruptionProcess p;
    p.kind = CorruptionKind::Gaussian;
    p.sigma = sigma;
    return p;
}

CorruptionProcess CorruptionProcess::patch(long patch_size, long image_side) {
    CorruptionProcess p;
    p.kind = CorruptionKind::PatchShuffle;
    p.patch_size = patch_size;
    p.image_side = image_side;
    return p;
}

} // namespace lipad
