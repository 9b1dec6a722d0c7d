#include "posr/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "posr/error.hpp"

namespace posr {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'P', 'O', 'S', 'R', 'C', 'K', 'P', '1'};
constexpr const char* kDtype = sizeof(real_t) == 8 ? "f64" : "f32";

using json = nlohmann::json;

struct ArrayRef {
    const real_t* data;
    std::int64_t count;
};

} // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    json header;
    header["version"] = ckpt.version;
    header["stage"] = ckpt.stage;
    header["iteration"] = ckpt.iteration;
    header["config_hash"] = ckpt.config_hash;
    header["rng_state"] = ckpt.rng_state;
    header["dtype"] = kDtype;
    header["meta"] = ckpt.meta;

    std::vector<ArrayRef> arrays;
    std::int64_t offset = 0;
    const auto add_array = [&](json& list, const std::string& name, const real_t* data,
                               std::int64_t count, const Shape* shape) {
        json entry;
        entry["name"] = name;
        entry["offset"] = offset;
        entry["count"] = count;
        if (shape) {
            entry["shape"] = {shape->n, shape->c, shape->h, shape->w};
        }
        list.push_back(entry);
        arrays.push_back({data, count});
        offset += count * static_cast<std::int64_t>(sizeof(real_t));
    };

    header["stores"] = json::object();
    for (const auto& [store_name, store] : ckpt.stores) {
        json list = json::array();
        for (const auto& [name, t] : store.map()) {
            add_array(list, name, t.data().data(), t.numel(), &t.shape());
        }
        header["stores"][store_name] = {{"frozen", store.frozen()}, {"params", list}};
    }

    header["adam"] = json::object();
    for (const auto& [opt_name, state] : ckpt.adam) {
        json m_list = json::array();
        json v_list = json::array();
        for (const auto& [name, buf] : state.m) {
            add_array(m_list, name, buf.data(), static_cast<std::int64_t>(buf.size()), nullptr);
        }
        for (const auto& [name, buf] : state.v) {
            add_array(v_list, name, buf.data(), static_cast<std::int64_t>(buf.size()), nullptr);
        }
        header["adam"][opt_name] = {{"step", state.step}, {"m", m_list}, {"v", v_list}};
    }

    const std::string header_text = header.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot create checkpoint '" + path + "'");
    }
    out.write(kMagic, sizeof(kMagic));
    const std::uint64_t header_len = header_text.size();
    out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    for (const auto& arr : arrays) {
        out.write(reinterpret_cast<const char*>(arr.data),
                  static_cast<std::streamsize>(arr.count * sizeof(real_t)));
    }
    if (!out) {
        throw IoError("failed writing checkpoint '" + path + "'");
    }
}

namespace {

std::vector<real_t> read_array(const std::vector<char>& blob, std::int64_t offset,
                               std::int64_t count, const std::string& path) {
    const auto bytes = static_cast<std::size_t>(count) * sizeof(real_t);
    if (offset < 0 || static_cast<std::size_t>(offset) + bytes > blob.size()) {
        throw IoError("checkpoint '" + path + "' is truncated");
    }
    std::vector<real_t> out(static_cast<std::size_t>(count));
    std::memcpy(out.data(), blob.data() + offset, bytes);
    return out;
}

} // namespace

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open checkpoint '" + path + "'");
    }
    char magic[8] = {};
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw IoError("'" + path + "' is not a checkpoint file");
    }
    std::uint64_t header_len = 0;
    in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (!in) {
        throw IoError("checkpoint '" + path + "' has a truncated header");
    }
    std::vector<char> blob((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());

    json header;
    try {
        header = json::parse(header_text);
    } catch (const json::exception& e) {
        throw IoError("checkpoint '" + path + "' header is corrupt: " + e.what());
    }
    if (header.value("dtype", "") != kDtype) {
        throw IoError("checkpoint '" + path + "' was written with dtype " +
                      header.value("dtype", "?") + ", this build uses " + kDtype);
    }

    Checkpoint ckpt;
    ckpt.version = header.value("version", 0);
    if (ckpt.version != 1) {
        throw IoError("unsupported checkpoint version " + std::to_string(ckpt.version));
    }
    ckpt.stage = header.value("stage", 1);
    ckpt.iteration = header.value("iteration", std::int64_t(0));
    ckpt.config_hash = header.value("config_hash", "");
    ckpt.rng_state = header.value("rng_state", "");
    if (header.contains("meta")) {
        ckpt.meta = header.at("meta").get<std::map<std::string, std::string>>();
    }

    for (const auto& [store_name, store_json] : header.at("stores").items()) {
        ParameterStore store;
        for (const auto& entry : store_json.at("params")) {
            const auto name = entry.at("name").get<std::string>();
            const auto shape_arr = entry.at("shape");
            Shape shape{shape_arr.at(0).get<std::int64_t>(), shape_arr.at(1).get<std::int64_t>(),
                        shape_arr.at(2).get<std::int64_t>(), shape_arr.at(3).get<std::int64_t>()};
            auto values = read_array(blob, entry.at("offset").get<std::int64_t>(),
                                     entry.at("count").get<std::int64_t>(), path);
            Tensor& t = store.create(name, shape);
            if (static_cast<std::int64_t>(values.size()) != t.numel()) {
                throw IoError("checkpoint '" + path + "': array size mismatch for " + name);
            }
            std::copy(values.begin(), values.end(), t.mutable_data().begin());
        }
        if (store_json.value("frozen", false)) {
            store.freeze();
        }
        ckpt.stores.emplace(store_name, std::move(store));
    }

    if (header.contains("adam")) {
        for (const auto& [opt_name, opt_json] : header.at("adam").items()) {
            AdamState state;
            state.step = opt_json.value("step", std::int64_t(0));
            for (const auto& entry : opt_json.at("m")) {
                state.m[entry.at("name").get<std::string>()] =
                    read_array(blob, entry.at("offset").get<std::int64_t>(),
                               entry.at("count").get<std::int64_t>(), path);
            }
            for (const auto& entry : opt_json.at("v")) {
                state.v[entry.at("name").get<std::string>()] =
                    read_array(blob, entry.at("offset").get<std::int64_t>(),
                               entry.at("count").get<std::int64_t>(), path);
            }
            ckpt.adam.emplace(opt_name, std::move(state));
        }
    }
    return ckpt;
}

void save_parameter_store(const ParameterStore& store, const std::string& path) {
    Checkpoint ckpt;
    // Copy tensors into a fresh store; shapes and names carry over.
    ParameterStore copy;
    for (const auto& [name, t] : store.map()) {
        Tensor& dst = copy.create(name, t.shape());
        auto src = t.data();
        std::copy(src.begin(), src.end(), dst.mutable_data().begin());
    }
    if (store.frozen()) {
        copy.freeze();
    }
    ckpt.stores.emplace("params", std::move(copy));
    save_checkpoint(ckpt, path);
}

ParameterStore load_parameter_store(const std::string& path) {
    Checkpoint ckpt = load_checkpoint(path);
    if (ckpt.stores.size() != 1) {
        throw IoError("'" + path + "' holds " + std::to_string(ckpt.stores.size()) +
                      " stores; expected exactly one");
    }
    return std::move(ckpt.stores.begin()->second);
}

} // namespace posr
