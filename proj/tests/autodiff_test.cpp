#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "posr/error.hpp"
#include "posr/gradcheck.hpp"
#include "posr/ops.hpp"
#include "test_util.hpp"

using namespace posr;

TEST_CASE("backward of mean(w * x) gives grad w = mean(x)") {
    Rng rng(11);
    Tensor x = tutil::random_tensor({1, 1, 3, 4}, rng);
    Tensor w = Tensor::from({1, 1, 1, 1}, {0.7});
    w.set_requires_grad(true);
    Tape t;
    Tensor loss = mean_all(t, broadcast_mul(t, w, x));
    t.backward(loss);
    double mx = 0;
    for (real_t v : x.data()) {
        mx += v;
    }
    mx /= static_cast<double>(x.numel());
    CHECK(t.grad(w)[0] == doctest::Approx(mx).epsilon(1e-12));
}

TEST_CASE("shared weight through two cascaded convs passes finite differences") {
    Rng rng(12);
    Tensor x = tutil::random_tensor({1, 2, 5, 5}, rng, 0.5);
    Tensor w = tutil::random_tensor({2, 2, 3, 3}, rng, 0.4);
    w.set_requires_grad(true);
    auto f = [&](Tape& t) {
        Tensor h = conv2d(t, x, w, {}, 1, 1);
        h = conv2d(t, h, w, {}, 1, 1);
        return mean_all(t, square(t, h));
    };
    auto report = finite_diff_check(f, {{"w", &w}}, 1e-4, 1e-4);
    CHECK_MESSAGE(report.pass(1e-4), report.str());
}

TEST_CASE("shared-parameter gradient equals the sum of untied single-use gradients") {
    Rng rng(13);
    Tensor x = tutil::random_tensor({1, 2, 5, 5}, rng, 0.5);
    Tensor w = tutil::random_tensor({2, 2, 3, 3}, rng, 0.4);

    // tied: one tensor used twice
    Tensor tied = w.clone().set_requires_grad(true);
    Tape tt;
    Tensor h = conv2d(tt, x, tied, {}, 1, 1);
    h = conv2d(tt, h, tied, {}, 1, 1);
    tt.backward(mean_all(tt, square(tt, h)));
    auto g_tied = tt.grad(tied);

    // untied twin: independent copies with identical values
    Tensor w1 = w.clone().set_requires_grad(true);
    Tensor w2 = w.clone().set_requires_grad(true);
    Tape tu;
    Tensor hu = conv2d(tu, x, w1, {}, 1, 1);
    hu = conv2d(tu, hu, w2, {}, 1, 1);
    tu.backward(mean_all(tu, square(tu, hu)));
    auto g1 = tu.grad(w1);
    auto g2 = tu.grad(w2);

    for (std::size_t i = 0; i < g_tied.size(); ++i) {
        CHECK(g_tied[i] ==
              doctest::Approx(static_cast<double>(g1[i]) + static_cast<double>(g2[i]))
                  .epsilon(1e-12));
    }
}

TEST_CASE("aliasing copies of one parameter accumulate into a single gradient") {
    Rng rng(14);
    Tensor x = tutil::random_tensor({1, 1, 4, 4}, rng);
    Tensor w = tutil::random_tensor({1, 1, 3, 3}, rng);
    w.set_requires_grad(true);
    Tensor alias = w; // shares storage
    Tape t;
    Tensor h = conv2d(t, x, w, {}, 1, 1);
    h = conv2d(t, h, alias, {}, 1, 1);
    t.backward(mean_all(t, square(t, h)));
    // both uses must land on one leaf: the alias resolves to the same node
    CHECK(t.find(w) == t.find(alias));
}

TEST_CASE("detached tensors receive no gradient") {
    Rng rng(15);
    Tensor x = tutil::random_tensor({1, 1, 2, 2}, rng);
    Tensor w = tutil::random_tensor({1, 1, 2, 2}, rng).set_requires_grad(true);
    Tensor v = tutil::random_tensor({1, 1, 2, 2}, rng).set_requires_grad(true);
    Tape t;
    Tensor tracked = mul(t, w, x);
    Tensor untracked = mul(t, v.detached(), x);
    t.backward(mean_all(t, add(t, tracked, untracked)));
    CHECK(t.find(w) >= 0);
    CHECK(t.find(v) < 0); // never joined the graph
    // gradient of the watched leaf has the tensor's full shape
    CHECK(t.grad(w).size() == static_cast<std::size_t>(w.numel()));
}

TEST_CASE("backward contract errors") {
    Rng rng(16);
    Tensor w = tutil::random_tensor({1, 1, 2, 2}, rng).set_requires_grad(true);
    SUBCASE("non-scalar loss") {
        Tape t;
        Tensor y = square(t, w);
        CHECK_THROWS_AS(t.backward(y), ContractError);
    }
    SUBCASE("loss from another tape") {
        Tape t1;
        Tensor y = mean_all(t1, square(t1, w));
        Tape t2;
        CHECK_THROWS_AS(t2.backward(y), ContractError);
    }
    SUBCASE("tape is single use") {
        Tape t;
        Tensor y = mean_all(t, square(t, w));
        t.backward(y);
        CHECK_THROWS_AS(t.backward(y), ContractError);
    }
    SUBCASE("intermediates from a dead tape must be detached") {
        Tensor stale;
        {
            Tape t1;
            stale = square(t1, w);
        }
        Tape t2;
        CHECK_THROWS_AS(mean_all(t2, stale), ContractError);
        CHECK_NOTHROW(mean_all(t2, stale.detached()));
    }
}

TEST_CASE("tape stays in topological order") {
    Rng rng(17);
    Tensor x = tutil::random_tensor({1, 2, 4, 4}, rng);
    Tensor w = tutil::random_tensor({2, 2, 3, 3}, rng).set_requires_grad(true);
    Tape t;
    Tensor h = conv2d(t, x, w, {}, 1, 1);
    h = relu(t, h);
    h = add(t, h, h);
    Tensor loss = mean_all(t, h);
    (void)loss;
    for (std::size_t id = 0; id < t.node_count(); ++id) {
        for (std::int32_t in : t.node_inputs(static_cast<std::int32_t>(id))) {
            CHECK(in < static_cast<std::int32_t>(id));
        }
    }
}

TEST_CASE("finite_diff_check on a quadratic") {
    Tensor w({1, 1, 2, 2}, 3.0);
    w.set_requires_grad(true);
    auto f = [&](Tape& t) { return mean_all(t, square(t, w)); };
    auto report = finite_diff_check(f, {{"w", &w}}, 1e-6, 1e-4);
    CHECK_MESSAGE(report.pass(1e-6), report.str());
    // analytic gradient of mean(w^2) at w=3 over 4 elements: 2*3/4 = 1.5
    Tape t;
    Tensor loss = f(t);
    t.backward(loss);
    for (real_t g : t.grad(w)) {
        CHECK(g == doctest::Approx(1.5).epsilon(1e-12));
    }
}

TEST_CASE("finite_diff_check on a constant function reports zero gradient") {
    Tensor w({1, 1, 2, 2}, 1.0);
    w.set_requires_grad(true);
    auto f = [&](Tape& t) { return mean_all(t, affine(t, w, 0.0, 2.0)); };
    auto report = finite_diff_check(f, {{"w", &w}}, 1e-6, 1e-4);
    CHECK(report.max_rel_err == 0.0);
    Tape t;
    Tensor loss = f(t);
    t.backward(loss);
    for (real_t g : t.grad(w)) {
        CHECK(g == 0.0);
    }
}

TEST_CASE("gradient fidelity sweep over every op") {
    Rng rng(18);
    const double rtol = 1e-4;

    auto check_fn = [&](const char* name, const ScalarFn& f,
                        std::vector<std::pair<std::string, Tensor*>> params) {
        auto report = finite_diff_check(f, params, rtol, 1e-4);
        INFO(name, ": ", report.str());
        CHECK(report.pass(rtol));
    };

    Tensor a = tutil::random_tensor({1, 2, 3, 3}, rng).set_requires_grad(true);
    Tensor b = tutil::random_tensor({1, 2, 3, 3}, rng).set_requires_grad(true);
    // keep activation inputs away from the relu kink at 0
    for (Tensor* t : {&a, &b}) {
        for (real_t& v : t->mutable_data()) {
            if (std::abs(v) < 0.05) {
                v += v >= 0 ? real_t(0.2) : real_t(-0.2);
            }
        }
    }

    check_fn("add", [&](Tape& t) { return mean_all(t, square(t, add(t, a, b))); },
             {{"a", &a}, {"b", &b}});
    check_fn("sub", [&](Tape& t) { return mean_all(t, square(t, sub(t, a, b))); },
             {{"a", &a}, {"b", &b}});
    check_fn("mul", [&](Tape& t) { return mean_all(t, square(t, mul(t, a, b))); },
             {{"a", &a}, {"b", &b}});
    check_fn("affine", [&](Tape& t) { return mean_all(t, square(t, affine(t, a, 1.7, -0.3))); },
             {{"a", &a}});
    check_fn("square", [&](Tape& t) { return mean_all(t, square(t, square(t, a))); },
             {{"a", &a}});
    check_fn("abs", [&](Tape& t) { return mean_all(t, elem_abs(t, a)); }, {{"a", &a}});
    check_fn("sigmoid", [&](Tape& t) { return mean_all(t, square(t, sigmoid(t, a))); },
             {{"a", &a}});
    check_fn("relu", [&](Tape& t) { return mean_all(t, square(t, relu(t, a))); }, {{"a", &a}});
    check_fn("leaky_relu",
             [&](Tape& t) { return mean_all(t, square(t, leaky_relu(t, a, 0.2))); },
             {{"a", &a}});
    check_fn("sub_scalar",
             [&](Tape& t) { return mean_all(t, square(t, sub_scalar(t, a, mean_all(t, b)))); },
             {{"a", &a}, {"b", &b}});
    check_fn("log_clamped",
             [&](Tape& t) {
                 Tensor pos = affine(t, sigmoid(t, a), 1.0, 0.01);
                 return mean_all(t, log_clamped(t, pos, 1e-12));
             },
             {{"a", &a}});
    check_fn("elem_sqrt",
             [&](Tape& t) {
                 Tensor pos = affine(t, square(t, a), 1.0, 0.1);
                 return mean_all(t, elem_sqrt(t, pos));
             },
             {{"a", &a}});
}
