#include "posr/selfcheck.hpp"

#include <cmath>
#include <functional>
#include <ostream>

#include "posr/bicubic.hpp"
#include "posr/blocks.hpp"
#include "posr/discriminators.hpp"
#include "posr/generator.hpp"
#include "posr/gradcheck.hpp"
#include "posr/losses.hpp"
#include "posr/metrics.hpp"
#include "posr/ops.hpp"

namespace posr {

namespace {

Tensor random_tensor(Shape s, Rng& rng, double scale = 1.0) {
    Tensor t(s);
    for (real_t& v : t.mutable_data()) {
        v = static_cast<real_t>(rng.normal() * scale);
    }
    return t;
}

struct Runner {
    std::ostream& out;
    bool all_ok = true;

    void check(const char* name, bool ok, const std::string& detail = "") {
        out << (ok ? "[ok]   " : "[FAIL] ") << name;
        if (!ok && !detail.empty()) {
            out << " (" << detail << ")";
        }
        out << '\n';
        all_ok = all_ok && ok;
    }
};

bool gradcheck_ok(const ScalarFn& f, std::vector<std::pair<std::string, Tensor*>> params,
                  double rtol = 1e-4) {
    return finite_diff_check(f, params, rtol, 1e-4).pass(rtol);
}

void gradient_suite(Runner& r) {
    Rng rng(2027);

    // conv2d, with and without stride/padding
    {
        Tensor x = random_tensor({2, 3, 5, 5}, rng);
        Tensor w = random_tensor({4, 3, 3, 3}, rng, 0.5).set_requires_grad(true);
        Tensor b = random_tensor({4, 1, 1, 1}, rng, 0.1).set_requires_grad(true);
        auto f = [&](Tape& t) {
            return mean_all(t, square(t, conv2d(t, x, w, b, 2, 1)));
        };
        r.check("grad conv2d", gradcheck_ok(f, {{"w", &w}, {"b", &b}}));
    }
    // conv2d input gradient
    {
        Tensor x = random_tensor({1, 2, 4, 4}, rng).set_requires_grad(true);
        Tensor w = random_tensor({2, 2, 3, 3}, rng, 0.5);
        auto f = [&](Tape& t) { return mean_all(t, square(t, conv2d(t, x, w, {}, 1, 1))); };
        r.check("grad conv2d input", gradcheck_ok(f, {{"x", &x}}));
    }
    // fully connected
    {
        Tensor x = random_tensor({3, 2, 2, 2}, rng);
        Tensor w = random_tensor({5, 8, 1, 1}, rng, 0.4).set_requires_grad(true);
        Tensor b = random_tensor({5, 1, 1, 1}, rng, 0.1).set_requires_grad(true);
        auto f = [&](Tape& t) {
            return mean_all(t, square(t, fully_connected(t, x, w, b)));
        };
        r.check("grad fully_connected", gradcheck_ok(f, {{"w", &w}, {"b", &b}}));
    }
    // activations and elementwise ops (inputs kept away from kinks)
    {
        Tensor x = random_tensor({1, 2, 3, 3}, rng).set_requires_grad(true);
        for (real_t& v : x.mutable_data()) {
            if (std::abs(v) < 0.05) {
                v += v >= 0 ? real_t(0.1) : real_t(-0.1);
            }
        }
        auto lrelu = [&](Tape& t) { return mean_all(t, square(t, leaky_relu(t, x, 0.2))); };
        auto srelu = [&](Tape& t) { return mean_all(t, square(t, relu(t, x))); };
        auto ssig = [&](Tape& t) { return mean_all(t, square(t, sigmoid(t, x))); };
        r.check("grad leaky_relu", gradcheck_ok(lrelu, {{"x", &x}}));
        r.check("grad relu", gradcheck_ok(srelu, {{"x", &x}}));
        r.check("grad sigmoid", gradcheck_ok(ssig, {{"x", &x}}));
    }
    {
        Tensor x = random_tensor({1, 1, 2, 4}, rng).set_requires_grad(true);
        Tensor y = random_tensor({1, 1, 2, 4}, rng).set_requires_grad(true);
        auto f = [&](Tape& t) {
            Tensor m = mul(t, add(t, x, y), sub(t, x, y));
            return mean_all(t, square(t, m));
        };
        r.check("grad add/sub/mul", gradcheck_ok(f, {{"x", &x}, {"y", &y}}));
    }
    {
        Tensor gate = random_tensor({2, 3, 1, 1}, rng).set_requires_grad(true);
        Tensor x = random_tensor({2, 3, 4, 4}, rng).set_requires_grad(true);
        auto f = [&](Tape& t) { return mean_all(t, square(t, broadcast_mul(t, gate, x))); };
        r.check("grad broadcast_mul", gradcheck_ok(f, {{"gate", &gate}, {"x", &x}}));
    }
    {
        Tensor x = random_tensor({2, 4, 3, 3}, rng).set_requires_grad(true);
        auto f = [&](Tape& t) { return mean_all(t, square(t, global_avg_pool(t, x))); };
        r.check("grad global_avg_pool", gradcheck_ok(f, {{"x", &x}}));
    }
    {
        Tensor x = random_tensor({1, 8, 2, 2}, rng).set_requires_grad(true);
        auto f = [&](Tape& t) { return mean_all(t, square(t, pixel_shuffle(t, x, 2))); };
        r.check("grad pixel_shuffle", gradcheck_ok(f, {{"x", &x}}));
    }
    {
        Tensor x = random_tensor({1, 2, 4, 4}, rng).set_requires_grad(true);
        auto f = [&](Tape& t) { return mean_all(t, square(t, pixel_unshuffle(t, x, 2))); };
        r.check("grad pixel_unshuffle", gradcheck_ok(f, {{"x", &x}}));
    }
    // blocks
    {
        ChannelAttentionSpec spec{16, 16};
        ParameterStore store;
        Rng wrng(7);
        init_channel_attention(store, "ca", spec, wrng);
        Tensor x = random_tensor({1, 16, 3, 3}, rng);
        auto f = [&](Tape& t) {
            return mean_all(t, square(t, channel_attention_forward(t, spec, store, "ca", x)));
        };
        r.check("grad channel_attention", gradcheck_ok(f, store.entries()));
    }
    {
        RCABSpec spec{8, 3, 2, true, true};
        ParameterStore store;
        Rng wrng(11);
        init_rcab(store, "b", spec, wrng);
        Tensor x = random_tensor({1, 8, 4, 4}, rng, 0.5);
        auto f = [&](Tape& t) {
            return mean_all(t, square(t, rcab_forward(t, spec, store, "b", x)));
        };
        r.check("grad rcab (shared convs)", gradcheck_ok(f, store.entries()));
    }
    // losses
    {
        Tensor sr = random_tensor({1, 2, 3, 3}, rng, 0.2).set_requires_grad(true);
        Tensor hr = random_tensor({1, 2, 3, 3}, rng, 0.2);
        auto f = [&](Tape& t) { return charbonnier_loss(t, sr, hr); };
        r.check("grad charbonnier", gradcheck_ok(f, {{"sr", &sr}}));
    }
    {
        // the zero-difference point, where plain L1 would be non-smooth
        Tensor hr = random_tensor({1, 2, 3, 3}, rng, 0.2);
        Tensor sr = hr.clone().set_requires_grad(true);
        auto f = [&](Tape& t) { return charbonnier_loss(t, sr, hr); };
        r.check("grad charbonnier at sr == hr", gradcheck_ok(f, {{"sr", &sr}}, 1e-4));
    }
    {
        Tensor real = random_tensor({3, 1, 1, 1}, rng).set_requires_grad(true);
        Tensor fake = random_tensor({3, 1, 1, 1}, rng).set_requires_grad(true);
        auto fg = [&](Tape& t) { return adv_loss_generator(t, real, fake); };
        auto fd = [&](Tape& t) { return adv_loss_discriminator(t, real, fake); };
        r.check("grad adv generator", gradcheck_ok(fg, {{"real", &real}, {"fake", &fake}}));
        r.check("grad adv discriminator", gradcheck_ok(fd, {{"real", &real}, {"fake", &fake}}));
    }
    // shared-parameter accumulation: one weight through two cascaded convs
    {
        Tensor x = random_tensor({1, 2, 4, 4}, rng, 0.5);
        Tensor w = random_tensor({2, 2, 3, 3}, rng, 0.4).set_requires_grad(true);
        auto f = [&](Tape& t) {
            Tensor h = conv2d(t, x, w, {}, 1, 1);
            h = conv2d(t, h, w, {}, 1, 1);
            return mean_all(t, square(t, h));
        };
        r.check("grad shared weight (two uses)", gradcheck_ok(f, {{"w", &w}}));
    }
}

void equilibrium_suite(Runner& r) {
    constexpr double kTwoLn2 = 1.3862943611198906;
    {
        Tensor real = Tensor::from({4, 1, 1, 1}, {0.7, 0.7, 0.7, 0.7});
        Tensor fake = Tensor::from({4, 1, 1, 1}, {0.7, 0.7, 0.7, 0.7});
        Tape t;
        const double lg = adv_loss_generator(t, real, fake).item();
        Tape t2;
        const double ld = adv_loss_discriminator(t2, real, fake).item();
        r.check("adv equilibrium = 2 ln 2",
                std::abs(lg - kTwoLn2) < 1e-9 && std::abs(ld - kTwoLn2) < 1e-9);
    }
    {
        Rng rng(5);
        bool ok = true;
        Tensor a = random_tensor({3, 1, 1, 1}, rng);
        Tensor b = random_tensor({5, 1, 1, 1}, rng);
        Tape t0;
        Tensor base = relativistic_criterion(t0, a, b);
        for (int i = 0; i < 100 && ok; ++i) {
            const real_t c = static_cast<real_t>(rng.normal() * 10);
            Tensor ac = a.clone();
            Tensor bc = b.clone();
            for (real_t& v : ac.mutable_data()) {
                v += c;
            }
            for (real_t& v : bc.mutable_data()) {
                v += c;
            }
            Tape t;
            Tensor shifted = relativistic_criterion(t, ac, bc);
            for (std::int64_t k = 0; k < base.numel(); ++k) {
                ok = ok && std::abs(shifted.data()[k] - base.data()[k]) < 1e-9;
            }
        }
        r.check("criterion shift invariance", ok);
    }
}

void metric_suite(Runner& r) {
    Rng rng(99);
    // psnr / rmse against direct recomputation
    {
        bool ok = true;
        for (int trial = 0; trial < 5 && ok; ++trial) {
            const int w = 24 + static_cast<int>(rng.below(16));
            const int h = 24 + static_cast<int>(rng.below(16));
            ImagePlane a = ImagePlane::rgb(w, h, ValueRange::byte);
            ImagePlane b = ImagePlane::rgb(w, h, ValueRange::byte);
            for (auto& v : a.data) {
                v = static_cast<double>(rng.below(256));
            }
            for (auto& v : b.data) {
                v = static_cast<double>(rng.below(256));
            }
            const int border = 4;
            double se = 0.0;
            std::int64_t count = 0;
            ImagePlane ya = extract_y(a);
            ImagePlane yb = extract_y(b);
            for (int y = border; y < h - border; ++y) {
                for (int x = border; x < w - border; ++x) {
                    const double d = ya.at(0, y, x) - yb.at(0, y, x);
                    se += d * d;
                    ++count;
                }
            }
            const double expect = 10.0 * std::log10(255.0 * 255.0 / (se / count));
            ok = ok && std::abs(psnr(a, b, border, true) - expect) <
                           1e-10 * std::max(1.0, std::abs(expect));
        }
        r.check("psnr recomputation", ok);
    }
    {
        ImagePlane a = ImagePlane::rgb(16, 16, ValueRange::byte);
        r.check("psnr identity cap", psnr(a, a, 4, false) == kPsnrCap);
    }
    {
        ImagePlane a = ImagePlane::rgb(32, 32, ValueRange::byte);
        ImagePlane b = a;
        for (auto& v : a.data) {
            v = static_cast<double>(rng.below(256));
        }
        b = a;
        r.check("ssim identity", std::abs(ssim(a, b, 0, true) - 1.0) < 1e-12);
    }
    r.check("region anchors",
            classify_region(15.02) == PirmRegion::region3 &&
                classify_region(12.50) == PirmRegion::region2 &&
                classify_region(11.48) == PirmRegion::region1 &&
                classify_region(17.0) == PirmRegion::out_of_range);
}

void kernel_suite(Runner& r) {
    const double scales[] = {0.25, 0.5, 2.0, 4.0};
    bool ok = true;
    std::string detail;
    for (double s : scales) {
        const int in = 32;
        const int out = static_cast<int>(std::ceil(in * s));
        for (bool aa : {true, false}) {
            const auto rw = compute_resample_weights(in, out, s, aa);
            for (int i = 0; i < rw.out_length; ++i) {
                double sum = 0.0;
                for (int t = 0; t < rw.taps; ++t) {
                    sum += rw.weights[static_cast<std::size_t>(i) * rw.taps + t];
                }
                if (std::abs(sum - 1.0) > 1e-12) {
                    ok = false;
                    detail = "scale " + std::to_string(s);
                }
            }
        }
    }
    r.check("bicubic partition of unity", ok, detail);

    // constant image stays constant
    {
        ImagePlane img = ImagePlane::rgb(12, 12, ValueRange::byte);
        for (auto& v : img.data) {
            v = 37.0;
        }
        ImagePlane small = bicubic_resize(img, 0.25, true);
        bool flat = true;
        for (double v : small.data) {
            flat = flat && std::abs(v - 37.0) < 1e-12;
        }
        r.check("bicubic constant preservation", flat);
    }
}

} // namespace

bool run_selfcheck(std::ostream& out) {
    Runner r{out};
    gradient_suite(r);
    equilibrium_suite(r);
    metric_suite(r);
    kernel_suite(r);
    out << (r.all_ok ? "selfcheck passed" : "selfcheck FAILED") << '\n';
    return r.all_ok;
}

} // namespace posr
