#include "posr/dataset.hpp"

#include <filesystem>
#include <fstream>

#include "posr/bicubic.hpp"
#include "posr/error.hpp"

namespace posr {

std::vector<std::string> read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open manifest '" + path + "'");
    }
    const auto base = std::filesystem::path(path).parent_path();
    std::vector<std::string> entries;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        // trim
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) {
            continue;
        }
        const auto last = line.find_last_not_of(" \t\r");
        std::string entry = line.substr(first, last - first + 1);
        std::filesystem::path p(entry);
        if (p.is_relative()) {
            p = base / p;
        }
        entries.push_back(p.string());
    }
    return entries;
}

ImagePlane augment(const ImagePlane& img, const std::string& tag) {
    if (tag == "identity") {
        return img;
    }
    ImagePlane out = img;
    if (tag == "hflip") {
        for (int c = 0; c < img.channels; ++c) {
            for (int y = 0; y < img.height; ++y) {
                for (int x = 0; x < img.width; ++x) {
                    out.at(c, y, x) = img.at(c, y, img.width - 1 - x);
                }
            }
        }
        return out;
    }
    if (tag == "rot180") {
        for (int c = 0; c < img.channels; ++c) {
            for (int y = 0; y < img.height; ++y) {
                for (int x = 0; x < img.width; ++x) {
                    out.at(c, y, x) = img.at(c, img.height - 1 - y, img.width - 1 - x);
                }
            }
        }
        return out;
    }
    if (tag == "rot90" || tag == "rot270") {
        out.width = img.height;
        out.height = img.width;
        out.data.assign(img.data.size(), 0.0);
        for (int c = 0; c < img.channels; ++c) {
            for (int y = 0; y < out.height; ++y) {
                for (int x = 0; x < out.width; ++x) {
                    if (tag == "rot90") {
                        // counterclockwise quarter turn
                        out.at(c, y, x) = img.at(c, x, img.width - 1 - y);
                    } else {
                        out.at(c, y, x) = img.at(c, img.height - 1 - x, y);
                    }
                }
            }
        }
        return out;
    }
    throw ContractError("unknown augmentation tag '" + tag + "'");
}

Patch augment(const Patch& patch, const std::string& tag) {
    Patch out = patch;
    out.hr = augment(patch.hr, tag);
    out.lr = augment(patch.lr, tag);
    out.aug_tag = tag;
    return out;
}

PatchSet crop_patches(const ImagePlane& hr, int size, int stride, int scale, bool antialias,
                      const std::string& source_id) {
    if (size < 1 || stride < 1 || scale < 1) {
        throw ContractError("crop_patches: size, stride and scale must be positive");
    }
    if (size % scale != 0) {
        throw ContractError("crop_patches: patch size must be divisible by the scale");
    }
    PatchSet set;
    set.hr_size = size;
    set.scale = scale;
    if (hr.width < size || hr.height < size) {
        return set; // too small; caller reports the skip
    }

    // Degrade once, then cut aligned windows from both planes.
    ImagePlane lr_full = bicubic_resize(hr, 1.0 / scale, antialias);
    const int lr_size = size / scale;

    for (int y0 = 0; y0 + size <= hr.height; y0 += stride) {
        const int ys = y0 - y0 % scale;
        for (int x0 = 0; x0 + size <= hr.width; x0 += stride) {
            const int xs = x0 - x0 % scale;
            Patch p;
            p.source_id = source_id;
            p.x0 = xs;
            p.y0 = ys;
            p.hr = hr.channels == 3 ? ImagePlane::rgb(size, size, hr.range)
                                    : ImagePlane::gray(size, size, hr.range);
            p.hr.space = hr.space;
            for (int c = 0; c < hr.channels; ++c) {
                for (int y = 0; y < size; ++y) {
                    for (int x = 0; x < size; ++x) {
                        p.hr.at(c, y, x) = hr.at(c, ys + y, xs + x);
                    }
                }
            }
            p.lr = hr.channels == 3 ? ImagePlane::rgb(lr_size, lr_size, hr.range)
                                    : ImagePlane::gray(lr_size, lr_size, hr.range);
            p.lr.space = hr.space;
            const int lx = xs / scale;
            const int ly = ys / scale;
            for (int c = 0; c < hr.channels; ++c) {
                for (int y = 0; y < lr_size; ++y) {
                    for (int x = 0; x < lr_size; ++x) {
                        p.lr.at(c, y, x) = lr_full.at(c, ly + y, lx + x);
                    }
                }
            }
            set.patches.push_back(std::move(p));
        }
    }
    return set;
}

void PatchPool::add(PatchSet more) {
    if (set_.patches.empty()) {
        set_ = std::move(more);
        return;
    }
    if (more.hr_size != set_.hr_size || more.scale != set_.scale) {
        throw ContractError("PatchPool: mixed patch geometries");
    }
    for (auto& p : more.patches) {
        set_.patches.push_back(std::move(p));
    }
}

void PatchPool::sample_batch(Rng& rng, int batch, bool augment_draw, Tensor& lr,
                             Tensor& hr) const {
    if (empty()) {
        throw ContractError("PatchPool: cannot sample from an empty pool");
    }
    if (batch < 1) {
        throw ContractError("PatchPool: batch must be positive");
    }
    const int hs = set_.hr_size;
    const int ls = hs / set_.scale;
    const int ch = set_.patches.front().hr.channels;
    hr = Tensor({batch, ch, hs, hs});
    lr = Tensor({batch, ch, ls, ls});
    auto hv = hr.mutable_data();
    auto lv = lr.mutable_data();

    for (int b = 0; b < batch; ++b) {
        const auto pick = static_cast<std::size_t>(rng.below(static_cast<std::int64_t>(size())));
        const Patch* p = &set_.patches[pick];
        Patch holder;
        if (augment_draw) {
            const auto& tags = augment_tags();
            const auto t = static_cast<std::size_t>(rng.below(static_cast<std::int64_t>(tags.size())));
            if (tags[t] != "identity") {
                holder = augment(*p, tags[t]);
                p = &holder;
            }
        }
        const double hscale = p->hr.range == ValueRange::byte ? 1.0 / 255.0 : 1.0;
        const double lscale = p->lr.range == ValueRange::byte ? 1.0 / 255.0 : 1.0;
        const std::size_t hoff = static_cast<std::size_t>(b) * ch * hs * hs;
        const std::size_t loff = static_cast<std::size_t>(b) * ch * ls * ls;
        for (std::size_t i = 0; i < p->hr.data.size(); ++i) {
            hv[hoff + i] = static_cast<real_t>(p->hr.data[i] * hscale);
        }
        for (std::size_t i = 0; i < p->lr.data.size(); ++i) {
            lv[loff + i] = static_cast<real_t>(p->lr.data[i] * lscale);
        }
    }
}

} // namespace posr
