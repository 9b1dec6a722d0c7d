#include "posr/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "posr/error.hpp"

namespace posr {

void TrainConfig::validate() const {
    if (stage != 1 && stage != 2) {
        throw ConfigError("stage must be 1 or 2");
    }
    if (iterations < 1) {
        throw ConfigError("iterations must be positive");
    }
    if (batch_size < 1) {
        throw ConfigError("batch_size must be positive");
    }
    if (!(lr_initial > 0)) {
        throw ConfigError("lr_initial must be positive");
    }
    std::int64_t prev = 0;
    for (std::int64_t p : lr_halving_points) {
        if (p <= prev) {
            throw ConfigError("lr_halving_points must be strictly increasing");
        }
        if (p < 1 || p > iterations) {
            throw ConfigError("lr halving point " + std::to_string(p) +
                              " lies outside [1, iterations]");
        }
        prev = p;
    }
    if (patch_size < 1 || patch_size % generator.scale != 0) {
        throw ConfigError("patch_size must be a positive multiple of the scale");
    }
    if (weights.lambda < 0 || weights.eta_pixel < 0 || weights.eta_feature < 0) {
        throw ConfigError("loss weights must be nonnegative");
    }
    generator.validate();
    phi.validate();
}

std::string TrainConfig::hash() const {
    std::ostringstream os;
    os.precision(17);
    os << stage << '|' << iterations << '|' << batch_size << '|' << lr_initial << '|';
    for (auto p : lr_halving_points) {
        os << p << ',';
    }
    os << '|' << adam.beta1 << '|' << adam.beta2 << '|' << adam.eps << '|' << weights.lambda
       << '|' << weights.eta_pixel << '|' << weights.eta_feature << '|' << seed << '|'
       << generator.num_blocks << '|' << generator.channels << '|' << generator.scale << '|'
       << generator.block.share_parameters << '|' << generator.block.use_attention << '|'
       << generator.block.convs_per_block << '|' << generator.init_scale << '|'
       << disc_base_channels << '|' << pixel_disc_blocks << '|' << feature_disc_blocks << '|'
       << patch_size << '|' << patch_stride << '|' << augment << '|' << antialias << '|'
       << static_cast<int>(perceptual_distance);
    const std::string text = os.str();
    // FNV-1a
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    std::ostringstream hex;
    hex << std::hex << h;
    return hex.str();
}

ConfigMap read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config file '" + path + "'");
    }
    ConfigMap map;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) +
                              " is not 'key = value': " + line);
        }
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) {
                return std::string();
            }
            const auto b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(lineno) + " has an empty key");
        }
        map[key] = value;
    }
    return map;
}

namespace {

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") {
        return true;
    }
    if (v == "false" || v == "0" || v == "no" || v == "off") {
        return false;
    }
    throw ConfigError("config key '" + key + "' expects a boolean, got '" + v + "'");
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) {
            throw std::invalid_argument(v);
        }
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' expects a number, got '" + v + "'");
    }
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
    const double d = parse_double(key, v);
    const auto i = static_cast<std::int64_t>(d);
    if (static_cast<double>(i) != d) {
        throw ConfigError("config key '" + key + "' expects an integer, got '" + v + "'");
    }
    return i;
}

std::vector<std::int64_t> parse_int_list(const std::string& key, const std::string& v) {
    std::vector<std::int64_t> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto a = item.find_first_not_of(" \t");
        if (a == std::string::npos) {
            continue;
        }
        const auto b = item.find_last_not_of(" \t");
        out.push_back(parse_int(key, item.substr(a, b - a + 1)));
    }
    return out;
}

} // namespace

TrainConfig make_train_config(const ConfigMap& values) {
    TrainConfig cfg;
    std::string schedule_mode = "cumulative";
    std::vector<std::int64_t> halving{14400000, 4800000, 4800000};
    bool halving_given = false;
    bool iterations_given = false;
    int blocks = cfg.generator.num_blocks;
    int channels = cfg.generator.channels;
    int scale = cfg.generator.scale;
    bool share = true;
    bool attention = true;
    int convs = 2;
    double init_scale = 1.0;
    cfg.iterations = 24000000;

    for (const auto& [key, value] : values) {
        if (key == "stage") {
            cfg.stage = static_cast<int>(parse_int(key, value));
        } else if (key == "iterations") {
            cfg.iterations = parse_int(key, value);
            iterations_given = true;
        } else if (key == "batch_size") {
            cfg.batch_size = static_cast<int>(parse_int(key, value));
        } else if (key == "lr_initial") {
            cfg.lr_initial = parse_double(key, value);
        } else if (key == "lr_halving_points") {
            halving = parse_int_list(key, value);
            halving_given = true;
        } else if (key == "lr_schedule_mode") {
            schedule_mode = value;
        } else if (key == "adam_beta1") {
            cfg.adam.beta1 = parse_double(key, value);
        } else if (key == "adam_beta2") {
            cfg.adam.beta2 = parse_double(key, value);
        } else if (key == "adam_eps") {
            cfg.adam.eps = parse_double(key, value);
        } else if (key == "lambda") {
            cfg.weights.lambda = parse_double(key, value);
        } else if (key == "eta_pixel") {
            cfg.weights.eta_pixel = parse_double(key, value);
        } else if (key == "eta_feature") {
            cfg.weights.eta_feature = parse_double(key, value);
        } else if (key == "region") {
            cfg.weights = LossWeights::region(static_cast<int>(parse_int(key, value)));
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
        } else if (key == "num_blocks") {
            blocks = static_cast<int>(parse_int(key, value));
        } else if (key == "channels") {
            channels = static_cast<int>(parse_int(key, value));
        } else if (key == "scale") {
            scale = static_cast<int>(parse_int(key, value));
        } else if (key == "share_parameters") {
            share = parse_bool(key, value);
        } else if (key == "use_attention") {
            attention = parse_bool(key, value);
        } else if (key == "convs_per_block") {
            convs = static_cast<int>(parse_int(key, value));
        } else if (key == "init_scale") {
            init_scale = parse_double(key, value);
        } else if (key == "disc_base_channels") {
            cfg.disc_base_channels = static_cast<int>(parse_int(key, value));
        } else if (key == "pixel_disc_blocks") {
            cfg.pixel_disc_blocks = static_cast<int>(parse_int(key, value));
        } else if (key == "feature_disc_blocks") {
            cfg.feature_disc_blocks = static_cast<int>(parse_int(key, value));
        } else if (key == "phi_channels") {
            cfg.phi.channels.clear();
            for (auto v : parse_int_list(key, value)) {
                cfg.phi.channels.push_back(static_cast<int>(v));
            }
        } else if (key == "phi_strides") {
            cfg.phi.strides.clear();
            for (auto v : parse_int_list(key, value)) {
                cfg.phi.strides.push_back(static_cast<int>(v));
            }
        } else if (key == "manifest") {
            cfg.manifest = value;
        } else if (key == "out_dir") {
            cfg.out_dir = value;
        } else if (key == "stage1_checkpoint") {
            cfg.stage1_checkpoint = value;
        } else if (key == "phi_weights") {
            cfg.phi_weights = value;
        } else if (key == "patch_size") {
            cfg.patch_size = static_cast<int>(parse_int(key, value));
        } else if (key == "patch_stride") {
            cfg.patch_stride = static_cast<int>(parse_int(key, value));
        } else if (key == "augment") {
            cfg.augment = parse_bool(key, value);
        } else if (key == "antialias") {
            cfg.antialias = parse_bool(key, value);
        } else if (key == "log_interval") {
            cfg.log_interval = parse_int(key, value);
        } else if (key == "checkpoint_interval") {
            cfg.checkpoint_interval = parse_int(key, value);
        } else if (key == "perceptual_distance") {
            if (value == "squared") {
                cfg.perceptual_distance = PerceptualDistance::squared;
            } else if (value == "absolute") {
                cfg.perceptual_distance = PerceptualDistance::absolute;
            } else {
                throw ConfigError("perceptual_distance must be 'squared' or 'absolute'");
            }
        } else if (key == "tile_size") {
            cfg.tile_size = static_cast<int>(parse_int(key, value));
        } else if (key == "tile_overlap") {
            cfg.tile_overlap = static_cast<int>(parse_int(key, value));
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }

    cfg.generator = GeneratorSpec::make(blocks, channels, scale, share, attention);
    cfg.generator.block.convs_per_block = convs;
    cfg.generator.init_scale = static_cast<real_t>(init_scale);

    if (schedule_mode == "cumulative") {
        std::int64_t acc = 0;
        for (auto& p : halving) {
            acc += p;
            p = acc;
        }
    } else if (schedule_mode != "absolute") {
        throw ConfigError("lr_schedule_mode must be 'cumulative' or 'absolute'");
    }
    // Drop the default schedule when it does not fit a short run.
    if (!halving_given && iterations_given) {
        std::erase_if(halving, [&](std::int64_t p) { return p > cfg.iterations; });
    }
    cfg.lr_halving_points = std::move(halving);

    cfg.validate();
    return cfg;
}

double lr_at(std::int64_t iteration, const TrainConfig& config) {
    if (iteration < 1) {
        throw ContractError("lr_at: iteration must be >= 1");
    }
    double lr = config.lr_initial;
    for (std::int64_t p : config.lr_halving_points) {
        if (iteration >= p) {
            lr *= 0.5;
        }
    }
    return lr;
}

} // namespace posr
