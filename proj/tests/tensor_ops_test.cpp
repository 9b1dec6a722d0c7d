#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "posr/error.hpp"
#include "posr/ops.hpp"
#include "test_util.hpp"

using namespace posr;

TEST_CASE("conv2d identity kernel passes input through") {
    Rng rng(1);
    Tensor x = tutil::random_tensor({2, 1, 4, 5}, rng);
    Tensor w = Tensor::from({1, 1, 1, 1}, {1.0});
    Tensor b = Tensor::from({1, 1, 1, 1}, {0.0});
    Tape t;
    Tensor y = conv2d(t, x, w, b, 1, 0);
    CHECK(y.shape() == x.shape());
    CHECK(tutil::max_abs_diff(y.data(), x.data()) == 0.0);
}

TEST_CASE("conv2d all-ones 3x3 kernel on a constant image") {
    Tensor x({1, 1, 3, 3}, 2.0);
    Tensor w({1, 1, 3, 3}, 1.0);
    Tape t;
    Tensor y = conv2d(t, x, w, {}, 1, 1);
    // receptive-field sums: 4 taps in corners, 6 on edges, 9 in the center
    CHECK(y.at(0, 0, 1, 1) == doctest::Approx(18.0));
    CHECK(y.at(0, 0, 0, 0) == doctest::Approx(8.0));
    CHECK(y.at(0, 0, 2, 2) == doctest::Approx(8.0));
    CHECK(y.at(0, 0, 0, 1) == doctest::Approx(12.0));
}

TEST_CASE("conv2d size contract: 3x3 stride 1 padding 1 preserves extents") {
    Rng rng(2);
    for (int h : {1, 3, 7}) {
        for (int w : {1, 4, 9}) {
            Tensor x = tutil::random_tensor({1, 2, h, w}, rng);
            Tensor k = tutil::random_tensor({3, 2, 3, 3}, rng);
            Tape t;
            Tensor y = conv2d(t, x, k, {}, 1, 1);
            CHECK(y.shape() == Shape{1, 3, h, w});
        }
    }
}

TEST_CASE("conv2d channel mismatch reports both shapes") {
    Tensor x({1, 3, 4, 4});
    Tensor w({2, 4, 3, 3});
    Tape t;
    try {
        conv2d(t, x, w, {}, 1, 1);
        FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("[1,3,4,4]") != std::string::npos);
        CHECK(msg.find("[2,4,3,3]") != std::string::npos);
    }
}

TEST_CASE("conv2d direct and im2col paths agree to 1e-12") {
    Rng rng(3);
    struct Case {
        Shape in, w;
        int stride, pad;
    };
    const Case cases[] = {
        {{2, 3, 7, 6}, {4, 3, 3, 3}, 1, 1}, {{1, 2, 9, 9}, {5, 2, 3, 3}, 2, 1},
        {{3, 1, 5, 5}, {2, 1, 1, 1}, 1, 0}, {{1, 4, 8, 3}, {3, 4, 5, 3}, 1, 2},
        {{2, 2, 6, 6}, {2, 2, 4, 4}, 2, 0},
    };
    for (const auto& c : cases) {
        Tensor x = tutil::random_tensor(c.in, rng);
        Tensor w = tutil::random_tensor(c.w, rng);
        Tensor b = tutil::random_tensor({c.w.n, 1, 1, 1}, rng);
        Tape t1, t2;
        Tensor direct = conv2d(t1, x, w, b, c.stride, c.pad, ConvAlgo::direct);
        Tensor fast = conv2d(t2, x, w, b, c.stride, c.pad, ConvAlgo::im2col);
        CHECK(direct.shape() == fast.shape());
        CHECK(tutil::max_rel_diff(direct.data(), fast.data()) < 1e-12);
    }
}

TEST_CASE("conv2d backward agrees between direct and im2col") {
    Rng rng(4);
    Tensor x1 = tutil::random_tensor({2, 3, 6, 6}, rng);
    Tensor x2 = x1.clone();
    Tensor w1 = tutil::random_tensor({4, 3, 3, 3}, rng).set_requires_grad(true);
    Tensor w2 = w1.clone().set_requires_grad(true);
    Tensor b1 = tutil::random_tensor({4, 1, 1, 1}, rng).set_requires_grad(true);
    Tensor b2 = b1.clone().set_requires_grad(true);
    x1.set_requires_grad(true);
    x2.set_requires_grad(true);

    Tape t1;
    Tensor l1 = mean_all(t1, square(t1, conv2d(t1, x1, w1, b1, 2, 1, ConvAlgo::direct)));
    t1.backward(l1);
    Tape t2;
    Tensor l2 = mean_all(t2, square(t2, conv2d(t2, x2, w2, b2, 2, 1, ConvAlgo::im2col)));
    t2.backward(l2);

    CHECK(tutil::max_rel_diff(t1.grad(x1), t2.grad(x2)) < 1e-12);
    CHECK(tutil::max_rel_diff(t1.grad(w1), t2.grad(w2)) < 1e-12);
    CHECK(tutil::max_rel_diff(t1.grad(b1), t2.grad(b2)) < 1e-12);
}

TEST_CASE("leaky_relu examples") {
    Tensor x = Tensor::from({1, 1, 1, 3}, {-1.0, 0.0, 2.0});
    Tape t;
    Tensor y = leaky_relu(t, x, 0.2);
    CHECK(y.data()[0] == doctest::Approx(-0.2));
    CHECK(y.data()[1] == 0.0);
    CHECK(y.data()[2] == doctest::Approx(2.0));

    SUBCASE("slope 0 equals relu") {
        Rng rng(5);
        Tensor z = tutil::random_tensor({1, 2, 3, 3}, rng);
        Tape t2;
        Tensor a = leaky_relu(t2, z, 0.0);
        Tensor b = relu(t2, z);
        CHECK(tutil::max_abs_diff(a.data(), b.data()) == 0.0);
    }

    SUBCASE("gradient at -1 with slope 0.2 is 0.2") {
        Tensor z = Tensor::from({1, 1, 1, 1}, {-1.0});
        z.set_requires_grad(true);
        Tape t3;
        Tensor out = leaky_relu(t3, z, 0.2);
        t3.backward(out);
        CHECK(t3.grad(z)[0] == doctest::Approx(0.2));
    }
}

TEST_CASE("relu and sigmoid point values") {
    Tensor x = Tensor::from({1, 1, 1, 4}, {-3.0, 3.0, 0.0, 1.0});
    Tape t;
    Tensor r = relu(t, x);
    Tensor s = sigmoid(t, x);
    CHECK(r.data()[0] == 0.0);
    CHECK(r.data()[1] == 3.0);
    CHECK(s.data()[2] == doctest::Approx(0.5));
    CHECK(s.data()[3] == doctest::Approx(0.7310585786300049).epsilon(1e-12));

    SUBCASE("sigmoid stays strictly inside (0,1) even when saturated") {
        Tensor big = Tensor::from({1, 1, 1, 2}, {-500.0, 500.0});
        Tape t2;
        Tensor sb = sigmoid(t2, big);
        CHECK(sb.data()[0] > 0.0);
        CHECK(sb.data()[1] < 1.0);
    }
}

TEST_CASE("global_avg_pool semantics") {
    SUBCASE("constant plane") {
        Tensor x({2, 3, 4, 5}, 7.25);
        Tape t;
        Tensor y = global_avg_pool(t, x);
        CHECK(y.shape() == Shape{2, 3, 1, 1});
        for (real_t v : y.data()) {
            CHECK(v == doctest::Approx(7.25));
        }
    }
    SUBCASE("2x2 plane mean") {
        Tensor x = Tensor::from({1, 1, 2, 2}, {1, 2, 3, 4});
        Tape t;
        CHECK(global_avg_pool(t, x).item() == doctest::Approx(2.5));
    }
    SUBCASE("gradient spreads 1/(H*W)") {
        Tensor x = Tensor::from({1, 1, 2, 2}, {1, 2, 3, 4});
        x.set_requires_grad(true);
        Tape t;
        Tensor y = global_avg_pool(t, x);
        t.backward(y);
        for (real_t g : t.grad(x)) {
            CHECK(g == doctest::Approx(0.25));
        }
    }
    SUBCASE("zero spatial extent is a dimension error") {
        Tensor x({1, 1, 0, 4});
        Tape t;
        CHECK_THROWS_AS(global_avg_pool(t, x), DimensionError);
    }
}

TEST_CASE("pixel_shuffle layout and inverse") {
    SUBCASE("r=2 definition case") {
        Tensor x = Tensor::from({1, 4, 1, 1}, {1, 2, 3, 4});
        Tape t;
        Tensor y = pixel_shuffle(t, x, 2);
        CHECK(y.shape() == Shape{1, 1, 2, 2});
        CHECK(y.at(0, 0, 0, 0) == 1);
        CHECK(y.at(0, 0, 0, 1) == 2);
        CHECK(y.at(0, 0, 1, 0) == 3);
        CHECK(y.at(0, 0, 1, 1) == 4);
    }
    SUBCASE("unshuffle(shuffle(x)) is the identity and sums are preserved") {
        Rng rng(6);
        for (int r : {2, 3}) {
            Tensor x = tutil::random_tensor({2, 2 * r * r, 3, 4}, rng);
            Tape t;
            Tensor y = pixel_shuffle(t, x, r);
            Tensor back = pixel_unshuffle(t, y, r);
            CHECK(tutil::bitwise_equal(back.data(), x.data()));
            double sx = 0, sy = 0;
            for (real_t v : x.data()) {
                sx += v;
            }
            for (real_t v : y.data()) {
                sy += v;
            }
            CHECK(sx == doctest::Approx(sy).epsilon(1e-12));
        }
    }
    SUBCASE("indivisible channels raise a dimension error") {
        Tensor x({1, 6, 2, 2});
        Tape t;
        CHECK_THROWS_AS(pixel_shuffle(t, x, 2), DimensionError);
    }
}

TEST_CASE("elementwise and reduction semantics") {
    SUBCASE("broadcast_mul scales planes by the channel gate") {
        Tensor gate = Tensor::from({1, 1, 1, 1}, {0.5});
        Tensor x = Tensor::from({1, 1, 1, 2}, {4.0, 6.0});
        Tape t;
        Tensor y = broadcast_mul(t, gate, x);
        CHECK(y.data()[0] == doctest::Approx(2.0));
        CHECK(y.data()[1] == doctest::Approx(3.0));
    }
    SUBCASE("mean_all and its gradient") {
        Tensor x = Tensor::from({1, 1, 1, 4}, {1, 2, 3, 4});
        x.set_requires_grad(true);
        Tape t;
        Tensor m = mean_all(t, x);
        CHECK(m.item() == doctest::Approx(2.5));
        t.backward(m);
        for (real_t g : t.grad(x)) {
            CHECK(g == doctest::Approx(0.25));
        }
    }
    SUBCASE("incompatible shapes raise dimension errors") {
        Tensor a({1, 2, 3, 3});
        Tensor b({1, 2, 3, 4});
        Tensor gate({1, 3, 1, 1});
        Tape t;
        CHECK_THROWS_AS(add(t, a, b), DimensionError);
        CHECK_THROWS_AS(mul(t, a, b), DimensionError);
        CHECK_THROWS_AS(broadcast_mul(t, gate, a), DimensionError);
    }
    SUBCASE("fully_connected matches a hand computation") {
        Tensor x = Tensor::from({1, 1, 2, 2}, {1, 2, 3, 4});
        Tensor w = Tensor::from({2, 4, 1, 1}, {1, 0, 0, 0, 1, 1, 1, 1});
        Tensor b = Tensor::from({2, 1, 1, 1}, {10, -10});
        Tape t;
        Tensor y = fully_connected(t, x, w, b);
        CHECK(y.shape() == Shape{1, 2, 1, 1});
        CHECK(y.data()[0] == doctest::Approx(11.0));
        CHECK(y.data()[1] == doctest::Approx(0.0));
    }
}

TEST_CASE("no silent NaN: green-path results scan clean") {
    Rng rng(7);
    Tensor x = tutil::random_tensor({1, 4, 6, 6}, rng);
    Tensor w = tutil::random_tensor({8, 4, 3, 3}, rng);
    Tape t;
    Tensor y = sigmoid(t, conv2d(t, x, w, {}, 1, 1));
    CHECK(all_finite(y));
    Tensor bad = Tensor::from({1, 1, 1, 2}, {1.0, std::nan("")});
    CHECK_FALSE(all_finite(bad));
    CHECK_THROWS_AS(require_finite(bad, "probe"), NumericError);
}
