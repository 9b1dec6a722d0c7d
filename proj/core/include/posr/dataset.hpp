#pragma once

#include <string>
#include <vector>

#include "posr/image.hpp"
#include "posr/rng.hpp"
#include "posr/tensor.hpp"

namespace posr {

// Aligned HR/LR training pair with provenance.
struct Patch {
    ImagePlane hr;
    ImagePlane lr;
    std::string source_id;
    int x0 = 0; // HR pixel offsets
    int y0 = 0;
    std::string aug_tag = "identity";
};

struct PatchSet {
    int hr_size = 96;
    int scale = 4;
    std::vector<Patch> patches;
};

// One HR image path per line; '#' starts a comment; blank lines skipped.
// Relative paths resolve against the manifest's directory.
std::vector<std::string> read_manifest(const std::string& path);

inline const std::vector<std::string>& augment_tags() {
    static const std::vector<std::string> tags{"identity", "rot90", "rot180", "rot270",
                                               "hflip"};
    return tags;
}

// rot90 is counterclockwise; tags compose as expected (rot90 four times and
// hflip twice are both the identity).
ImagePlane augment(const ImagePlane& img, const std::string& tag);
Patch augment(const Patch& patch, const std::string& tag);

// Degrades the full HR image by 1/scale first, then crops aligned HR/LR
// windows on a stride grid (positions snapped to multiples of scale).
// Images smaller than `size` yield an empty set; the caller warns.
PatchSet crop_patches(const ImagePlane& hr, int size, int stride, int scale, bool antialias,
                      const std::string& source_id);

// In-memory training pool with deterministic batch sampling.
class PatchPool {
public:
    PatchPool() = default;
    explicit PatchPool(PatchSet set) : set_(std::move(set)) {}

    void add(PatchSet more);
    std::size_t size() const { return set_.patches.size(); }
    bool empty() const { return set_.patches.empty(); }
    const PatchSet& patch_set() const { return set_; }
    int hr_size() const { return set_.hr_size; }
    int scale() const { return set_.scale; }

    // Samples `batch` patches (uniform with replacement, optional random
    // augmentation) into [B,3,s,s] unit-range tensors.
    void sample_batch(Rng& rng, int batch, bool augment_draw, Tensor& lr, Tensor& hr) const;

private:
    PatchSet set_;
};

} // namespace posr
