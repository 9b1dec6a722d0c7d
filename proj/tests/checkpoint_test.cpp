#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "posr/checkpoint.hpp"
#include "posr/error.hpp"
#include "test_util.hpp"

using namespace posr;

namespace {

Checkpoint sample_checkpoint() {
    Checkpoint ckpt;
    ckpt.stage = 2;
    ckpt.iteration = 1234;
    ckpt.config_hash = "abc123";
    Rng rng(5);
    ckpt.rng_state = rng.serialize();
    ckpt.meta["g.num_blocks"] = "2";

    ParameterStore g;
    Rng wrng(7);
    g.create_normal("head.w", {4, 3, 3, 3}, wrng, 0.2);
    g.create("head.b", {4, 1, 1, 1});
    ckpt.stores.emplace("g", std::move(g));

    ParameterStore phi;
    phi.create_normal("stage0.w", {2, 3, 3, 3}, wrng, 0.1);
    phi.freeze();
    ckpt.stores.emplace("phi", std::move(phi));

    AdamState adam;
    adam.step = 42;
    adam.m["head.w"] = std::vector<real_t>(4 * 27, 0.125);
    adam.v["head.w"] = std::vector<real_t>(4 * 27, 0.5);
    adam.m["head.b"] = std::vector<real_t>(4, -1.0);
    adam.v["head.b"] = std::vector<real_t>(4, 2.0);
    ckpt.adam.emplace("g", std::move(adam));
    return ckpt;
}

} // namespace

TEST_CASE("checkpoint round trip is bit exact") {
    const std::string dir = tutil::temp_dir("ckpt");
    const std::string path = dir + "/state.posr";
    Checkpoint original = sample_checkpoint();
    save_checkpoint(original, path);
    Checkpoint loaded = load_checkpoint(path);

    CHECK(loaded.version == 1);
    CHECK(loaded.stage == original.stage);
    CHECK(loaded.iteration == original.iteration);
    CHECK(loaded.config_hash == original.config_hash);
    CHECK(loaded.rng_state == original.rng_state);
    CHECK(loaded.meta.at("g.num_blocks") == "2");

    REQUIRE(loaded.stores.count("g") == 1);
    REQUIRE(loaded.stores.count("phi") == 1);
    for (const auto& [store_name, store] : original.stores) {
        const auto& got = loaded.stores.at(store_name);
        REQUIRE(got.names() == store.names());
        for (const auto& name : store.names()) {
            CHECK(got.get(name).shape() == store.get(name).shape());
            CHECK(tutil::bitwise_equal(got.get(name).data(), store.get(name).data()));
        }
    }
    CHECK(loaded.stores.at("phi").frozen());
    CHECK_FALSE(loaded.stores.at("phi").get("stage0.w").requires_grad());

    const auto& adam = loaded.adam.at("g");
    CHECK(adam.step == 42);
    CHECK(adam.m.at("head.w") == original.adam.at("g").m.at("head.w"));
    CHECK(adam.v.at("head.b") == original.adam.at("g").v.at("head.b"));

    SUBCASE("rng state resumes the identical stream") {
        Rng a(5), b(0);
        b.deserialize(loaded.rng_state);
        for (int i = 0; i < 100; ++i) {
            CHECK(a.next_u64() == b.next_u64());
        }
    }
}

TEST_CASE("corrupt files are rejected") {
    const std::string dir = tutil::temp_dir("ckpt_bad");
    SUBCASE("wrong magic") {
        const std::string path = dir + "/bad.posr";
        std::ofstream(path) << "NOTACKPTxxxxxxxxxxxxxxxx";
        CHECK_THROWS_AS(load_checkpoint(path), IoError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_checkpoint(dir + "/missing.posr"), IoError);
    }
    SUBCASE("truncated payload") {
        const std::string path = dir + "/trunc.posr";
        save_checkpoint(sample_checkpoint(), path);
        // chop the blob
        std::ifstream in(path, std::ios::binary);
        std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
        in.close();
        bytes.resize(bytes.size() / 2);
        std::ofstream out(path, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.close();
        CHECK_THROWS_AS(load_checkpoint(path), IoError);
    }
}

TEST_CASE("parameter-store files carry a single store") {
    const std::string dir = tutil::temp_dir("store");
    const std::string path = dir + "/phi.posr";
    ParameterStore store;
    Rng rng(9);
    store.create_normal("stage0.w", {4, 3, 3, 3}, rng, 0.3);
    store.create("stage0.b", {4, 1, 1, 1});
    save_parameter_store(store, path);
    ParameterStore back = load_parameter_store(path);
    REQUIRE(back.names() == store.names());
    for (const auto& name : store.names()) {
        CHECK(tutil::bitwise_equal(back.get(name).data(), store.get(name).data()));
    }
    SUBCASE("multi-store checkpoints are not parameter-store files") {
        const std::string multi = dir + "/multi.posr";
        save_checkpoint(sample_checkpoint(), multi);
        CHECK_THROWS_AS(load_parameter_store(multi), IoError);
    }
}
