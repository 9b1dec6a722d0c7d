#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "posr/bicubic.hpp"
#include "posr/error.hpp"
#include "posr/selfcheck.hpp"
#include "posr/trainer.hpp"

namespace fs = std::filesystem;
using namespace posr;

namespace {

// Exit codes: 0 success, 1 usage/config, 2 I/O, 3 numerical failure.
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitNumeric = 3;

struct DegradeArgs {
    std::string in_dir;
    std::string out_dir;
    int scale = 4;
    bool antialias = true;
};

int cmd_degrade(const DegradeArgs& args) {
    if (!fs::is_directory(args.in_dir)) {
        throw IoError("input '" + args.in_dir + "' is not a directory");
    }
    std::vector<std::string> inputs;
    for (const auto& entry : fs::directory_iterator(args.in_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") {
            inputs.push_back(entry.path().string());
        }
    }
    std::sort(inputs.begin(), inputs.end());
    fs::create_directories(args.out_dir);

    std::vector<std::string> produced;
    std::vector<std::string> failures;
    for (const auto& path : inputs) {
        try {
            ImagePlane hr = load_image(path);
            const int w = hr.width - hr.width % args.scale;
            const int h = hr.height - hr.height % args.scale;
            if (w < args.scale || h < args.scale) {
                failures.push_back(path + ": smaller than the scale factor");
                continue;
            }
            if (w != hr.width || h != hr.height) {
                ImagePlane cropped = hr.channels == 3 ? ImagePlane::rgb(w, h, hr.range)
                                                      : ImagePlane::gray(w, h, hr.range);
                cropped.space = hr.space;
                for (int c = 0; c < hr.channels; ++c) {
                    for (int y = 0; y < h; ++y) {
                        for (int x = 0; x < w; ++x) {
                            cropped.at(c, y, x) = hr.at(c, y, x);
                        }
                    }
                }
                hr = std::move(cropped);
            }
            ImagePlane lr = bicubic_resize(hr, 1.0 / args.scale, args.antialias);
            const std::string out_path =
                (fs::path(args.out_dir) / fs::path(path).filename()).string();
            save_image(lr, out_path);
            produced.push_back(out_path);
        } catch (const Error& e) {
            failures.push_back(path + ": " + e.what());
        }
    }

    std::ofstream manifest(fs::path(args.out_dir) / "manifest.txt");
    manifest << "# degraded with scale " << args.scale
             << (args.antialias ? " (antialias)" : " (no antialias)") << " from "
             << args.in_dir << '\n';
    for (const auto& p : produced) {
        manifest << p << '\n';
    }
    if (inputs.empty()) {
        std::cerr << "warning: no PNG files in '" << args.in_dir << "'\n";
    }
    std::cout << "degraded " << produced.size() << " image(s) into " << args.out_dir << '\n';
    if (!failures.empty()) {
        for (const auto& f : failures) {
            std::cerr << "error: " << f << '\n';
        }
        return kExitIo;
    }
    return 0;
}

struct TrainArgs {
    std::string config_path;
    int stage = 0;
    int region = 0;
    std::string resume;
    std::vector<std::string> overrides;
};

int cmd_train(const TrainArgs& args) {
    if (args.stage == 1 && args.region != 0) {
        throw ConfigError("--region applies to stage 2 only (stage 1 has no loss weights)");
    }
    ConfigMap map = read_config_file(args.config_path);
    map["stage"] = std::to_string(args.stage);
    if (args.region != 0) {
        map["region"] = std::to_string(args.region);
    }
    for (const auto& kv : args.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        }
        map[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    TrainConfig cfg = make_train_config(map);

    PatchPool pool = load_training_data(cfg, std::cout);
    if (cfg.stage == 1) {
        if (!args.resume.empty()) {
            Checkpoint resume = load_checkpoint(args.resume);
            train_stage1(cfg, pool, std::cout, &resume);
        } else {
            train_stage1(cfg, pool, std::cout);
        }
        return 0;
    }

    Checkpoint init;
    if (!args.resume.empty()) {
        init = load_checkpoint(args.resume);
    } else if (!cfg.stage1_checkpoint.empty()) {
        init = load_checkpoint(cfg.stage1_checkpoint);
    } else {
        throw ConfigError("stage 2 requires a stage-1 checkpoint: set 'stage1_checkpoint' in "
                          "the config or pass --resume");
    }
    train_stage2(cfg, pool, init, std::cout);
    return 0;
}

struct InferArgs {
    std::string ckpt;
    std::string input;
    std::string output;
    int tile = 128;
    int overlap = 8;
};

int cmd_infer(const InferArgs& args) {
    Checkpoint ckpt = load_checkpoint(args.ckpt);
    ImagePlane lr = load_image(args.input);
    if (lr.channels == 1) {
        throw ConfigError("inference expects a color PNG, got a grayscale image");
    }
    ImagePlane sr = infer_image(ckpt, lr, args.tile, args.overlap);
    save_image(sr, args.output);
    std::cout << "wrote " << args.output << " (" << sr.width << "x" << sr.height << ")\n";
    return 0;
}

struct EvalArgs {
    std::string ckpt;
    std::string manifest;
    std::string out_csv;
    int border = 4;
    bool y_only = true;
    bool identity = false;
    int tile = 128;
    int overlap = 8;
};

int cmd_eval(const EvalArgs& args) {
    if (!args.identity && args.ckpt.empty()) {
        throw ConfigError("--ckpt is required unless --identity is given");
    }
    const auto paths = read_manifest(args.manifest);
    EvalOptions options;
    options.border = args.border;
    options.y_only = args.y_only;
    options.tile_size = args.tile;
    options.tile_overlap = args.overlap;

    std::vector<EvalRow> rows;
    if (args.identity) {
        rows = evaluate_images(nullptr, paths, options);
    } else {
        Checkpoint ckpt = load_checkpoint(args.ckpt);
        rows = evaluate_images(&ckpt, paths, options);
    }
    if (args.out_csv == "-") {
        write_eval_csv(rows, std::cout);
    } else {
        std::ofstream out(args.out_csv);
        if (!out) {
            throw IoError("cannot create '" + args.out_csv + "'");
        }
        write_eval_csv(rows, out);
        std::cout << "wrote " << rows.size() << " row(s) to " << args.out_csv << '\n';
    }
    return 0;
}

struct ParamsArgs {
    int blocks = 128;
    int channels = 64;
    int scale = 4;
    bool share = true;
    bool attention = true;
};

int cmd_params(const ParamsArgs& args) {
    const GeneratorSpec spec =
        GeneratorSpec::make(args.blocks, args.channels, args.scale, args.share, args.attention);
    const std::int64_t count = count_parameters(spec);
    char millions[32];
    std::snprintf(millions, sizeof(millions), "%.2f", static_cast<double>(count) / 1e6);
    std::cout << "blocks=" << args.blocks << " channels=" << args.channels
              << " attention=" << (args.attention ? "yes" : "no")
              << " shared=" << (args.share ? "yes" : "no") << " parameters=" << count << " ("
              << millions << "M)\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"posr: residual channel-attention super-resolution toolkit"};
    app.require_subcommand(1);

    DegradeArgs degrade_args;
    auto* degrade = app.add_subcommand("degrade", "Bicubic-downscale a directory of PNGs");
    degrade->add_option("--in", degrade_args.in_dir, "Input directory of HR PNGs")->required();
    degrade->add_option("--out", degrade_args.out_dir, "Output directory for LR PNGs")
        ->required();
    degrade->add_option("--scale", degrade_args.scale, "Downscale factor")
        ->check(CLI::PositiveNumber);
    degrade->add_flag("--antialias,!--no-antialias", degrade_args.antialias,
                      "Antialias when downscaling (default on)");

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "Run one training stage");
    train->add_option("--config", train_args.config_path, "Config file (key = value)")
        ->required();
    train->add_option("--stage", train_args.stage, "Training stage")->required()
        ->check(CLI::Range(1, 2));
    train->add_option("--region", train_args.region, "Loss-weight preset (stage 2)")
        ->check(CLI::Range(1, 3));
    train->add_option("--resume", train_args.resume, "Checkpoint to resume from");
    train->add_option("--set", train_args.overrides, "Override a config key (key=value)");

    InferArgs infer_args;
    auto* infer = app.add_subcommand("infer", "Super-resolve one PNG");
    infer->add_option("--ckpt", infer_args.ckpt, "Checkpoint path")->required();
    infer->add_option("--in", infer_args.input, "LR input PNG")->required();
    infer->add_option("--out", infer_args.output, "SR output PNG")->required();
    infer->add_option("--tile", infer_args.tile, "Tile size for large inputs");
    infer->add_option("--overlap", infer_args.overlap, "Tile overlap");

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "Degrade, super-resolve and score a manifest");
    eval->add_option("--ckpt", eval_args.ckpt, "Checkpoint path");
    eval->add_option("--manifest", eval_args.manifest, "HR image manifest")->required();
    eval->add_option("--out", eval_args.out_csv, "Report CSV path ('-' for stdout)")
        ->required();
    eval->add_option("--border", eval_args.border, "Crop border for PSNR/SSIM");
    eval->add_flag("--y-only,!--rgb", eval_args.y_only, "Score on the Y channel (default)");
    eval->add_flag("--identity", eval_args.identity, "Score HR against itself (protocol check)");
    eval->add_option("--tile", eval_args.tile, "Tile size for large inputs");
    eval->add_option("--overlap", eval_args.overlap, "Tile overlap");

    ParamsArgs params_args;
    auto* params = app.add_subcommand("params", "Count generator parameters");
    params->add_option("--blocks", params_args.blocks, "Residual block count")
        ->check(CLI::PositiveNumber);
    params->add_option("--channels", params_args.channels, "Feature channels")
        ->check(CLI::PositiveNumber);
    params->add_option("--scale", params_args.scale, "Upscaling factor");
    params->add_flag("!--no-share", params_args.share, "Disable conv parameter sharing");
    params->add_flag("!--no-attention", params_args.attention, "Disable channel attention");

    auto* selfcheck = app.add_subcommand("selfcheck", "Run the built-in verification sweep");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitUsage;
    }

    try {
        if (degrade->parsed()) {
            return cmd_degrade(degrade_args);
        }
        if (train->parsed()) {
            return cmd_train(train_args);
        }
        if (infer->parsed()) {
            return cmd_infer(infer_args);
        }
        if (eval->parsed()) {
            return cmd_eval(eval_args);
        }
        if (params->parsed()) {
            return cmd_params(params_args);
        }
        if (selfcheck->parsed()) {
            return run_selfcheck(std::cout) ? 0 : kExitNumeric;
        }
    } catch (const NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kExitIo;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
