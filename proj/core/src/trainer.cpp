#include "posr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <ostream>

#include "posr/bicubic.hpp"
#include "posr/error.hpp"
#include "posr/ops.hpp"

namespace posr {

namespace {

constexpr std::uint64_t kSamplerSalt = 0x5a5a5a5a5a5a5a5aULL;
constexpr std::uint64_t kPixelDiscSalt = 0xd15c000000000001ULL;
constexpr std::uint64_t kFeatureDiscSalt = 0xd15c000000000002ULL;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

void log_line(std::ostream& log, const IterStats& s) {
    log << "iter=" << s.iteration << " stage=" << s.stage << " loss_total=" << fmt(s.loss_total)
        << " loss_charb=" << fmt(s.loss_recon) << " loss_perc=" << fmt(s.loss_perc)
        << " loss_advP=" << fmt(s.loss_adv_pixel) << " loss_advF=" << fmt(s.loss_adv_feature)
        << " lr=" << fmt(s.lr) << '\n';
}

ParameterStore deep_copy(const ParameterStore& src) {
    ParameterStore dst;
    for (const auto& [name, t] : src.map()) {
        Tensor& fresh = dst.create(name, t.shape());
        auto s = t.data();
        std::copy(s.begin(), s.end(), fresh.mutable_data().begin());
    }
    if (src.frozen()) {
        dst.freeze();
    }
    return dst;
}

void check_store_compat(const ParameterStore& expected, const ParameterStore& loaded,
                        const std::string& what) {
    if (expected.names() != loaded.names()) {
        throw ConfigError("checkpoint does not match the configured " + what +
                          " (parameter names differ)");
    }
    for (const auto& [name, t] : expected.map()) {
        if (!(loaded.get(name).shape() == t.shape())) {
            throw ConfigError("checkpoint does not match the configured " + what + ": '" +
                              name + "' is " + loaded.get(name).shape().str() + ", expected " +
                              t.shape().str());
        }
    }
}

void fill_meta(Checkpoint& ckpt, const TrainConfig& cfg) {
    const auto& g = cfg.generator;
    ckpt.meta["g.num_blocks"] = std::to_string(g.num_blocks);
    ckpt.meta["g.channels"] = std::to_string(g.channels);
    ckpt.meta["g.scale"] = std::to_string(g.scale);
    ckpt.meta["g.share_parameters"] = g.block.share_parameters ? "1" : "0";
    ckpt.meta["g.use_attention"] = g.block.use_attention ? "1" : "0";
    ckpt.meta["g.convs_per_block"] = std::to_string(g.block.convs_per_block);
}

void write_ckpt_file(const Checkpoint& ckpt, const TrainConfig& cfg, bool final_one,
                     std::ostream& log) {
    std::filesystem::create_directories(cfg.out_dir);
    const std::string name = "ckpt_stage" + std::to_string(ckpt.stage) + "_" +
                             (final_one ? std::string("final")
                                        : "iter" + std::to_string(ckpt.iteration)) +
                             ".posr";
    const std::string path = (std::filesystem::path(cfg.out_dir) / name).string();
    save_checkpoint(ckpt, path);
    log << "checkpoint " << path << '\n';
}

void assert_disjoint(const ParameterStore& store, const Tape& tape, const char* what) {
    for (const auto& [name, t] : store.map()) {
        if (tape.find(t) >= 0) {
            throw ContractError(std::string(what) + ": parameter '" + name +
                                "' appears on the wrong tape");
        }
    }
}

void tensor_min_max(const Tensor& t, double& lo, double& hi) {
    lo = hi = static_cast<double>(t.data()[0]);
    for (real_t v : t.data()) {
        lo = std::min(lo, static_cast<double>(v));
        hi = std::max(hi, static_cast<double>(v));
    }
}

} // namespace

PatchPool load_training_data(const TrainConfig& cfg, std::ostream& log) {
    if (cfg.manifest.empty()) {
        throw ConfigError("no dataset manifest configured");
    }
    const auto paths = read_manifest(cfg.manifest);
    PatchPool pool;
    for (const auto& path : paths) {
        ImagePlane hr = load_image(path);
        if (hr.channels == 1) {
            // Networks are RGB; replicate the gray plane.
            ImagePlane rgb = ImagePlane::rgb(hr.width, hr.height, hr.range);
            for (int c = 0; c < 3; ++c) {
                for (int y = 0; y < hr.height; ++y) {
                    for (int x = 0; x < hr.width; ++x) {
                        rgb.at(c, y, x) = hr.at(0, y, x);
                    }
                }
            }
            hr = std::move(rgb);
        }
        PatchSet set = crop_patches(hr, cfg.patch_size, cfg.patch_stride, cfg.generator.scale,
                                    cfg.antialias, std::filesystem::path(path).filename().string());
        if (set.patches.empty()) {
            log << "warning: '" << path << "' is smaller than the patch size, skipped\n";
            continue;
        }
        pool.add(std::move(set));
    }
    if (pool.empty()) {
        throw ConfigError("dataset manifest yielded no training patches");
    }
    return pool;
}

Checkpoint train_stage1(const TrainConfig& cfg, const PatchPool& data, std::ostream& log,
                        const Checkpoint* resume, const TrainHooks& hooks) {
    cfg.validate();
    if (data.empty()) {
        throw ConfigError("training data is empty");
    }

    ParameterStore g;
    AdamState adam_g;
    Rng sampler(cfg.seed ^ kSamplerSalt);
    std::int64_t start = 0;

    if (resume) {
        auto it = resume->stores.find("g");
        if (it == resume->stores.end()) {
            throw ConfigError("resume checkpoint holds no generator parameters");
        }
        ParameterStore expected = build_generator(cfg.generator, cfg.seed);
        check_store_compat(expected, it->second, "generator");
        g = deep_copy(it->second);
        if (auto a = resume->adam.find("g"); a != resume->adam.end()) {
            adam_g = a->second;
        }
        if (!resume->rng_state.empty()) {
            sampler.deserialize(resume->rng_state);
        }
        start = resume->iteration;
        if (!resume->config_hash.empty() && resume->config_hash != cfg.hash()) {
            log << "warning: resume checkpoint was written under a different config\n";
        }
    } else {
        g = build_generator(cfg.generator, cfg.seed);
    }

    log << "train stage=1 iterations=" << cfg.iterations << " batch=" << cfg.batch_size
        << " patches=" << data.size() << " params=" << g.total_elements() << '\n';

    const auto snapshot = [&](std::int64_t iter) {
        Checkpoint ckpt;
        ckpt.stage = 1;
        ckpt.iteration = iter;
        ckpt.config_hash = cfg.hash();
        ckpt.rng_state = sampler.serialize();
        fill_meta(ckpt, cfg);
        ckpt.stores.emplace("g", deep_copy(g));
        ckpt.adam.emplace("g", adam_g);
        return ckpt;
    };

    for (std::int64_t iter = start + 1; iter <= cfg.iterations; ++iter) {
        Tensor lr_batch, hr_batch;
        data.sample_batch(sampler, cfg.batch_size, cfg.augment, lr_batch, hr_batch);

        Tape tape;
        Tensor sr = gposr_forward(tape, cfg.generator, g, lr_batch);
        Tensor loss = charbonnier_loss(tape, sr, hr_batch);
        require_finite(loss, "stage-1 loss at iteration " + std::to_string(iter));
        tape.backward(loss);
        const double lr = lr_at(iter, cfg);
        adam_step(g, tape, adam_g, lr, cfg.adam);

        IterStats stats;
        stats.iteration = iter;
        stats.stage = 1;
        stats.loss_recon = static_cast<double>(loss.item());
        stats.loss_total = stats.loss_recon;
        stats.lr = lr;
        tensor_min_max(sr, stats.sr_min, stats.sr_max);

        if (hooks.on_iter) {
            hooks.on_iter(stats);
        }
        if (cfg.log_interval > 0 && iter % cfg.log_interval == 0) {
            log_line(log, stats);
        }
        const bool stop = hooks.stop_early && hooks.stop_early(stats);
        if (stop || iter == cfg.iterations) {
            Checkpoint final = snapshot(iter);
            write_ckpt_file(final, cfg, true, log);
            return final;
        }
        if (cfg.checkpoint_interval > 0 && iter % cfg.checkpoint_interval == 0) {
            write_ckpt_file(snapshot(iter), cfg, false, log);
        }
    }
    // start >= iterations: nothing to do, snapshot as-is.
    Checkpoint final = snapshot(start);
    write_ckpt_file(final, cfg, true, log);
    return final;
}

Checkpoint train_stage2(const TrainConfig& cfg, const PatchPool& data, const Checkpoint& init,
                        std::ostream& log, const TrainHooks& hooks) {
    cfg.validate();
    if (data.empty()) {
        throw ConfigError("training data is empty");
    }
    auto g_init = init.stores.find("g");
    if (g_init == init.stores.end()) {
        throw ConfigError("stage 2 needs a checkpoint holding generator parameters");
    }
    {
        ParameterStore expected = build_generator(cfg.generator, cfg.seed);
        check_store_compat(expected, g_init->second, "generator");
    }

    const DiscriminatorSpec dp_spec =
        DiscriminatorSpec::pixel(cfg.disc_base_channels, cfg.pixel_disc_blocks, cfg.patch_size);
    const FeatureExtractorSpec phi_spec = cfg.phi;
    const DiscriminatorSpec df_spec = DiscriminatorSpec::feature(
        phi_spec.out_channels(), cfg.disc_base_channels, cfg.feature_disc_blocks);

    const bool resuming = init.stage == 2 && init.stores.count("dp") != 0;

    ParameterStore g = deep_copy(g_init->second);
    ParameterStore dp = resuming ? deep_copy(init.stores.at("dp"))
                                 : build_discriminator(dp_spec, cfg.seed ^ kPixelDiscSalt);
    ParameterStore df = resuming ? deep_copy(init.stores.at("df"))
                                 : build_discriminator(df_spec, cfg.seed ^ kFeatureDiscSalt);
    ParameterStore phi = build_feature_extractor(phi_spec);
    if (!cfg.phi_weights.empty()) {
        ParameterStore external = load_parameter_store(cfg.phi_weights);
        check_store_compat(phi, external, "feature extractor");
        phi = std::move(external);
        phi.freeze();
        log << "feature extractor weights loaded from " << cfg.phi_weights << '\n';
    } else if (resuming && init.stores.count("phi")) {
        phi = deep_copy(init.stores.at("phi"));
        phi.freeze();
    }

    AdamState adam_g, adam_dp, adam_df;
    Rng sampler(cfg.seed ^ kSamplerSalt);
    std::int64_t start = 0;
    if (resuming) {
        if (auto a = init.adam.find("g"); a != init.adam.end()) {
            adam_g = a->second;
        }
        if (auto a = init.adam.find("dp"); a != init.adam.end()) {
            adam_dp = a->second;
        }
        if (auto a = init.adam.find("df"); a != init.adam.end()) {
            adam_df = a->second;
        }
        if (!init.rng_state.empty()) {
            sampler.deserialize(init.rng_state);
        }
        start = init.iteration;
        if (!init.config_hash.empty() && init.config_hash != cfg.hash()) {
            log << "warning: resume checkpoint was written under a different config\n";
        }
    }

    log << "train stage=2 iterations=" << cfg.iterations << " batch=" << cfg.batch_size
        << " patches=" << data.size() << '\n';
    log << "weights: lambda=" << fmt(cfg.weights.lambda)
        << " eta_pixel=" << fmt(cfg.weights.eta_pixel)
        << " eta_feature=" << fmt(cfg.weights.eta_feature) << '\n';

    const auto snapshot = [&](std::int64_t iter) {
        Checkpoint ckpt;
        ckpt.stage = 2;
        ckpt.iteration = iter;
        ckpt.config_hash = cfg.hash();
        ckpt.rng_state = sampler.serialize();
        fill_meta(ckpt, cfg);
        ckpt.stores.emplace("g", deep_copy(g));
        ckpt.stores.emplace("dp", deep_copy(dp));
        ckpt.stores.emplace("df", deep_copy(df));
        ckpt.stores.emplace("phi", deep_copy(phi));
        ckpt.adam.emplace("g", adam_g);
        ckpt.adam.emplace("dp", adam_dp);
        ckpt.adam.emplace("df", adam_df);
        return ckpt;
    };

    for (std::int64_t iter = start + 1; iter <= cfg.iterations; ++iter) {
        Tensor lr_batch, hr_batch;
        data.sample_batch(sampler, cfg.batch_size, cfg.augment, lr_batch, hr_batch);
        const double lr = lr_at(iter, cfg);

        // Generator forward, recorded once; the critics train on a detached
        // copy so no gradient can reach the generator during their updates.
        Tape tg;
        Tensor sr = gposr_forward(tg, cfg.generator, g, lr_batch);
        Tensor sr_const = sr.detached();

        // (b) pixel discriminator on the half-real half-fake batch
        IterStats stats;
        {
            Tape td;
            Tensor s_real = disc_forward(td, dp_spec, dp, hr_batch);
            Tensor s_fake = disc_forward(td, dp_spec, dp, sr_const);
            Tensor d_loss = adv_loss_discriminator(td, s_real, s_fake);
            require_finite(d_loss, "pixel discriminator loss at iteration " + std::to_string(iter));
            td.backward(d_loss);
            assert_disjoint(g, td, "pixel discriminator update");
            assert_disjoint(df, td, "pixel discriminator update");
            adam_step(dp, td, adam_dp, lr, cfg.adam);
            stats.loss_disc_pixel = static_cast<double>(d_loss.item());
        }

        // (c) feature discriminator on frozen-extractor features
        {
            Tape td;
            Tensor f_real = feature_extract(td, phi_spec, phi, hr_batch);
            Tensor f_fake = feature_extract(td, phi_spec, phi, sr_const);
            Tensor s_real = disc_forward(td, df_spec, df, f_real);
            Tensor s_fake = disc_forward(td, df_spec, df, f_fake);
            Tensor d_loss = adv_loss_discriminator(td, s_real, s_fake);
            require_finite(d_loss,
                           "feature discriminator loss at iteration " + std::to_string(iter));
            td.backward(d_loss);
            assert_disjoint(g, td, "feature discriminator update");
            assert_disjoint(dp, td, "feature discriminator update");
            adam_step(df, td, adam_df, lr, cfg.adam);
            stats.loss_disc_feature = static_cast<double>(d_loss.item());
        }

        // (d) generator update with both critics frozen. Zero-weighted terms
        // are skipped entirely so they add nothing to the graph.
        Tensor perc = perceptual_loss(tg, phi_spec, phi, sr, hr_batch, cfg.perceptual_distance);
        Tensor l1_term, advp_term, advf_term;
        if (cfg.weights.lambda > 0) {
            l1_term = l1_loss(tg, sr, hr_batch);
        }
        if (cfg.weights.eta_pixel > 0) {
            Tensor s_real = disc_forward(tg, dp_spec, dp, hr_batch, /*frozen=*/true);
            Tensor s_fake = disc_forward(tg, dp_spec, dp, sr, /*frozen=*/true);
            advp_term = adv_loss_generator(tg, s_real, s_fake);
        }
        if (cfg.weights.eta_feature > 0) {
            Tensor f_real = feature_extract(tg, phi_spec, phi, hr_batch);
            Tensor f_fake = feature_extract(tg, phi_spec, phi, sr);
            Tensor s_real = disc_forward(tg, df_spec, df, f_real, /*frozen=*/true);
            Tensor s_fake = disc_forward(tg, df_spec, df, f_fake, /*frozen=*/true);
            advf_term = adv_loss_generator(tg, s_real, s_fake);
        }
        Tensor total = total_generator_loss(tg, cfg.weights, perc, l1_term, advp_term, advf_term);
        require_finite(total, "generator loss at iteration " + std::to_string(iter));
        tg.backward(total);
        assert_disjoint(dp, tg, "generator update");
        assert_disjoint(df, tg, "generator update");
        assert_disjoint(phi, tg, "generator update");
        adam_step(g, tg, adam_g, lr, cfg.adam);

        stats.iteration = iter;
        stats.stage = 2;
        stats.loss_total = static_cast<double>(total.item());
        stats.loss_perc = static_cast<double>(perc.item());
        stats.loss_recon = l1_term.defined() ? static_cast<double>(l1_term.item()) : 0.0;
        stats.loss_adv_pixel = advp_term.defined() ? static_cast<double>(advp_term.item()) : 0.0;
        stats.loss_adv_feature =
            advf_term.defined() ? static_cast<double>(advf_term.item()) : 0.0;
        stats.lr = lr;
        tensor_min_max(sr, stats.sr_min, stats.sr_max);

        if (hooks.on_iter) {
            hooks.on_iter(stats);
        }
        if (cfg.log_interval > 0 && iter % cfg.log_interval == 0) {
            log_line(log, stats);
        }
        const bool stop = hooks.stop_early && hooks.stop_early(stats);
        if (stop || iter == cfg.iterations) {
            Checkpoint final = snapshot(iter);
            write_ckpt_file(final, cfg, true, log);
            return final;
        }
        if (cfg.checkpoint_interval > 0 && iter % cfg.checkpoint_interval == 0) {
            write_ckpt_file(snapshot(iter), cfg, false, log);
        }
    }
    Checkpoint final = snapshot(start);
    write_ckpt_file(final, cfg, true, log);
    return final;
}

GeneratorSpec generator_spec_of(const Checkpoint& ckpt) {
    const auto need = [&](const char* key) -> const std::string& {
        auto it = ckpt.meta.find(key);
        if (it == ckpt.meta.end()) {
            throw ContractError(std::string("checkpoint lacks generator metadata '") + key +
                                "'");
        }
        return it->second;
    };
    GeneratorSpec spec = GeneratorSpec::make(
        std::stoi(need("g.num_blocks")), std::stoi(need("g.channels")),
        std::stoi(need("g.scale")), need("g.share_parameters") == "1",
        need("g.use_attention") == "1");
    spec.block.convs_per_block = std::stoi(need("g.convs_per_block"));
    return spec;
}

namespace {

std::vector<int> tile_positions(int extent, int tile, int step) {
    std::vector<int> pos;
    if (extent <= tile) {
        pos.push_back(0);
        return pos;
    }
    for (int p = 0;; p += step) {
        if (p + tile >= extent) {
            pos.push_back(extent - tile);
            break;
        }
        pos.push_back(p);
    }
    return pos;
}

// Linear blend ramp over `ramp` output pixels on interior tile edges.
double edge_weight(int i, int len, int offset, int extent, int ramp) {
    double w = 1.0;
    if (offset > 0 && i < ramp) {
        w = std::min(w, static_cast<double>(i + 1) / (ramp + 1));
    }
    if (offset + len < extent && i >= len - ramp) {
        w = std::min(w, static_cast<double>(len - i) / (ramp + 1));
    }
    return w;
}

} // namespace

ImagePlane infer_image(const GeneratorSpec& spec, const ParameterStore& generator,
                       const ImagePlane& lr, int tile_size, int tile_overlap) {
    if (lr.channels != 3) {
        throw ContractError("inference expects a 3-channel image");
    }
    const int scale = spec.scale;
    const int h = lr.height;
    const int w = lr.width;

    if (h <= tile_size && w <= tile_size) {
        Tape tape;
        Tensor sr = gposr_forward(tape, spec, generator, image_to_tensor(lr), /*frozen=*/true);
        return tensor_to_image(sr, 0, ValueRange::byte, /*clip=*/true);
    }

    if (tile_overlap < 0 || tile_overlap * 2 >= tile_size) {
        throw ContractError("tile overlap must satisfy 0 <= 2*overlap < tile size");
    }
    const int step = tile_size - tile_overlap;
    const auto ys = tile_positions(h, tile_size, step);
    const auto xs = tile_positions(w, tile_size, step);
    const int out_h = h * scale;
    const int out_w = w * scale;
    std::vector<double> num(static_cast<std::size_t>(out_h) * out_w * 3, 0.0);
    std::vector<double> den(static_cast<std::size_t>(out_h) * out_w, 0.0);
    const int ramp = tile_overlap * scale;

    for (int y0 : ys) {
        const int th = std::min(tile_size, h - y0);
        for (int x0 : xs) {
            const int tw = std::min(tile_size, w - x0);
            ImagePlane tile_img = ImagePlane::rgb(tw, th, lr.range);
            tile_img.space = lr.space;
            for (int c = 0; c < 3; ++c) {
                for (int y = 0; y < th; ++y) {
                    for (int x = 0; x < tw; ++x) {
                        tile_img.at(c, y, x) = lr.at(c, y0 + y, x0 + x);
                    }
                }
            }
            Tape tape;
            Tensor sr = gposr_forward(tape, spec, generator, image_to_tensor(tile_img),
                                      /*frozen=*/true);
            const int oh = th * scale;
            const int ow = tw * scale;
            const int oy = y0 * scale;
            const int ox = x0 * scale;
            auto sv = sr.data();
            for (int y = 0; y < oh; ++y) {
                const double wy = edge_weight(y, oh, oy, out_h, ramp);
                for (int x = 0; x < ow; ++x) {
                    const double wgt = wy * edge_weight(x, ow, ox, out_w, ramp);
                    const std::size_t pix =
                        static_cast<std::size_t>(oy + y) * out_w + (ox + x);
                    den[pix] += wgt;
                    for (int c = 0; c < 3; ++c) {
                        num[(static_cast<std::size_t>(c) * out_h + (oy + y)) * out_w + ox + x] +=
                            wgt * static_cast<double>(sv[(static_cast<std::size_t>(c) * oh + y) * ow + x]);
                    }
                }
            }
        }
    }

    ImagePlane out = ImagePlane::rgb(out_w, out_h, ValueRange::byte);
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < out_h; ++y) {
            for (int x = 0; x < out_w; ++x) {
                const std::size_t pix = static_cast<std::size_t>(y) * out_w + x;
                const double v = num[(static_cast<std::size_t>(c) * out_h + y) * out_w + x] /
                                 den[pix];
                out.at(c, y, x) = std::clamp(v, 0.0, 1.0) * 255.0;
            }
        }
    }
    return out;
}

ImagePlane infer_image(const Checkpoint& ckpt, const ImagePlane& lr, int tile_size,
                       int tile_overlap) {
    auto it = ckpt.stores.find("g");
    if (it == ckpt.stores.end()) {
        throw ContractError("checkpoint holds no generator parameters");
    }
    return infer_image(generator_spec_of(ckpt), it->second, lr, tile_size, tile_overlap);
}

namespace {

ImagePlane mod_crop(const ImagePlane& img, int scale) {
    const int w = img.width - img.width % scale;
    const int h = img.height - img.height % scale;
    if (w == img.width && h == img.height) {
        return img;
    }
    ImagePlane out = img;
    out.width = w;
    out.height = h;
    out.data.assign(static_cast<std::size_t>(w) * h * img.channels, 0.0);
    for (int c = 0; c < img.channels; ++c) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                out.at(c, y, x) = img.at(c, y, x);
            }
        }
    }
    return out;
}

ImagePlane gray_to_rgb(const ImagePlane& img) {
    if (img.channels == 3) {
        return img;
    }
    ImagePlane out = ImagePlane::rgb(img.width, img.height, img.range);
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width; ++x) {
                out.at(c, y, x) = img.at(0, y, x);
            }
        }
    }
    return out;
}

} // namespace

std::vector<EvalRow> evaluate_images(const Checkpoint* ckpt,
                                     const std::vector<std::string>& hr_paths,
                                     const EvalOptions& options) {
    GeneratorSpec spec;
    const ParameterStore* g = nullptr;
    if (ckpt) {
        spec = generator_spec_of(*ckpt);
        auto it = ckpt->stores.find("g");
        if (it == ckpt->stores.end()) {
            throw ContractError("checkpoint holds no generator parameters");
        }
        g = &it->second;
    }

    std::vector<EvalRow> rows;
    rows.reserve(hr_paths.size());
    for (const auto& path : hr_paths) {
        ImagePlane hr = gray_to_rgb(load_image(path));
        ImagePlane sr;
        if (g) {
            hr = mod_crop(hr, spec.scale);
            ImagePlane lr = bicubic_resize(hr, 1.0 / spec.scale, options.antialias);
            sr = infer_image(spec, *g, lr, options.tile_size, options.tile_overlap);
        } else {
            sr = hr;
        }
        EvalRow row;
        row.image = std::filesystem::path(path).filename().string();
        row.psnr = psnr(sr, hr, options.border, options.y_only);
        row.ssim = ssim(sr, hr, options.border, options.y_only);
        row.rmse = rmse_pirm(sr, hr);
        row.region = classify_region(row.rmse);
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_eval_csv(const std::vector<EvalRow>& rows, std::ostream& out) {
    out << "image,psnr,ssim,rmse,region\n";
    for (const auto& row : rows) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), ",%.4f,%.6f,%.4f,", row.psnr, row.ssim, row.rmse);
        out << row.image << buf << to_string(row.region) << '\n';
    }
}

} // namespace posr
