#include "tihdp/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace tihdp {

namespace {

constexpr char kMagic[8] = {'T', 'I', 'H', 'D', 'P', 'C', 'K', '1'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t x) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(x >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& os, std::uint64_t x) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(x >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return x;
}

std::uint64_t read_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return x;
}

void write_tensor_f32(std::ostream& os, const Tensor& t) {
    std::vector<unsigned char> buf(static_cast<std::size_t>(t.size()) * 4);
    for (int i = 0; i < t.size(); ++i) {
        float f = static_cast<float>(t.v[i]);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        for (int k = 0; k < 4; ++k) buf[static_cast<std::size_t>(i) * 4 + k] = static_cast<unsigned char>(bits >> (8 * k));
    }
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

void read_tensor_f32(std::istream& is, Tensor& t) {
    std::vector<unsigned char> buf(static_cast<std::size_t>(t.size()) * 4);
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!is) throw std::runtime_error("checkpoint: truncated tensor payload");
    for (int i = 0; i < t.size(); ++i) {
        std::uint32_t bits = 0;
        for (int k = 0; k < 4; ++k) bits |= static_cast<std::uint32_t>(buf[static_cast<std::size_t>(i) * 4 + k]) << (8 * k);
        float f;
        std::memcpy(&f, &bits, 4);
        t.v[i] = static_cast<double>(f);
    }
}

}  // namespace

nlohmann::ordered_json layout_to_json(const NetLayout& layout) {
    nlohmann::ordered_json j;
    j["variant"] = variant_name(layout.variant);
    j["robots"] = layout.robots;
    j["objects"] = layout.objects;
    j["nearby_robots"] = layout.obs.nearby_robots;
    j["nearby_objects"] = layout.obs.nearby_objects;
    j["hidden"] = layout.hidden;
    j["lstm_hidden"] = layout.lstm_hidden;
    return j;
}

NetLayout layout_from_json(const nlohmann::json& j) {
    NetLayout layout;
    layout.variant = parse_variant(j.at("variant").get<std::string>());
    layout.robots = j.at("robots").get<int>();
    layout.objects = j.at("objects").get<int>();
    layout.obs.nearby_robots = j.at("nearby_robots").get<int>();
    layout.obs.nearby_objects = j.at("nearby_objects").get<int>();
    layout.hidden = j.at("hidden").get<std::vector<int>>();
    layout.lstm_hidden = j.at("lstm_hidden").get<int>();
    layout.validate();
    return layout;
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    nlohmann::ordered_json manifest;
    manifest["format"] = "tihdp-checkpoint";
    manifest["version"] = kVersion;
    manifest["layout"] = layout_to_json(ck.params.layout);
    manifest["layout_tag"] = ck.params.layout.tag();
    manifest["init_seed"] = ck.params.init_seed;

    nlohmann::ordered_json tensors = nlohmann::ordered_json::array();
    ck.params.visit([&](const std::string& name, const Tensor& t) {
        tensors.push_back({{"name", name}, {"rows", t.rows}, {"cols", t.cols}});
    });
    manifest["tensors"] = tensors;

    nlohmann::ordered_json tr;
    tr["present"] = ck.trainer.present;
    if (ck.trainer.present) {
        tr["adam_step_hi"] = ck.trainer.adam_step_hi;
        tr["adam_step_lo"] = ck.trainer.adam_step_lo;
        tr["rng"] = ck.trainer.trainer_rng;
        tr["master_seed"] = ck.trainer.master_seed;
        tr["env_steps"] = ck.trainer.env_steps;
        tr["update_index"] = ck.trainer.update_index;
        tr["episodes_done"] = ck.trainer.episodes_done;
    }
    manifest["trainer"] = tr;
    manifest["config"] = ck.config;

    std::string mbytes = manifest.dump();
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("checkpoint: cannot open for write: " + path);
    os.write(kMagic, 8);
    write_u32(os, kVersion);
    write_u64(os, mbytes.size());
    os.write(mbytes.data(), static_cast<std::streamsize>(mbytes.size()));
    ck.params.visit([&](const std::string&, const Tensor& t) { write_tensor_f32(os, t); });
    if (ck.trainer.present) {
        ck.adam_m.visit([&](const std::string&, const Tensor& t) { write_tensor_f32(os, t); });
        ck.adam_v.visit([&](const std::string&, const Tensor& t) { write_tensor_f32(os, t); });
    }
    if (!os) throw std::runtime_error("checkpoint: write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    std::uint32_t version = read_u32(is);
    if (version != kVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    std::uint64_t mlen = read_u64(is);
    std::string mbytes(mlen, '\0');
    is.read(mbytes.data(), static_cast<std::streamsize>(mlen));
    if (!is) throw std::runtime_error("checkpoint: truncated manifest");
    nlohmann::json manifest = nlohmann::json::parse(mbytes);

    Checkpoint ck;
    NetLayout layout = layout_from_json(manifest.at("layout"));
    ck.params = make_params(layout);
    ck.params.init_seed = manifest.at("init_seed").get<std::uint64_t>();

    // shape audit against the manifest before touching the payload
    std::size_t idx = 0;
    const nlohmann::json& tensors = manifest.at("tensors");
    ck.params.visit([&](const std::string& name, const Tensor& t) {
        if (idx >= tensors.size()) throw std::runtime_error("checkpoint: manifest tensor list too short");
        const nlohmann::json& e = tensors[idx++];
        if (e.at("name").get<std::string>() != name || e.at("rows").get<int>() != t.rows ||
            e.at("cols").get<int>() != t.cols)
            throw std::runtime_error("checkpoint: tensor mismatch at " + name);
    });
    if (idx != tensors.size()) throw std::runtime_error("checkpoint: manifest tensor list too long");

    ck.params.visit([&](const std::string&, Tensor& t) { read_tensor_f32(is, t); });

    const nlohmann::json& tr = manifest.at("trainer");
    ck.trainer.present = tr.at("present").get<bool>();
    if (ck.trainer.present) {
        ck.trainer.adam_step_hi = tr.at("adam_step_hi").get<std::int64_t>();
        ck.trainer.adam_step_lo = tr.at("adam_step_lo").get<std::int64_t>();
        auto rng = tr.at("rng").get<std::vector<std::uint64_t>>();
        if (rng.size() != 4) throw std::runtime_error("checkpoint: bad rng state size");
        std::copy(rng.begin(), rng.end(), ck.trainer.trainer_rng.begin());
        ck.trainer.master_seed = tr.at("master_seed").get<std::uint64_t>();
        ck.trainer.env_steps = tr.at("env_steps").get<std::int64_t>();
        ck.trainer.update_index = tr.at("update_index").get<std::int64_t>();
        ck.trainer.episodes_done = tr.at("episodes_done").get<std::vector<std::int64_t>>();
        ck.adam_m = zeros_like(ck.params);
        ck.adam_v = zeros_like(ck.params);
        ck.adam_m.visit([&](const std::string&, Tensor& t) { read_tensor_f32(is, t); });
        ck.adam_v.visit([&](const std::string&, Tensor& t) { read_tensor_f32(is, t); });
    }
    ck.config = manifest.at("config").get<nlohmann::ordered_json>();
    return ck;
}

}  // namespace tihdp
