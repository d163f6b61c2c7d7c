#include "routerl/harness/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

// The format commits to little-endian doubles; converting on a big-endian
// host would be dead code we cannot test.
static_assert(std::endian::native == std::endian::little);

namespace routerl::harness {

namespace {

using json = nlohmann::ordered_json;

constexpr char kMagic[4] = {'R', 'T', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

std::uint64_t fnv1a(const char* data, std::size_t len) {
    std::uint64_t h = 1469598103934665603ULL;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= 1099511628211ULL;
    }
    return h;
}

template <typename T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& in, std::size_t& pos) {
    if (pos + sizeof(T) > in.size()) throw FormatError("checkpoint truncated");
    T v;
    std::memcpy(&v, in.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const model::AttentionModel& m,
                     const ExperimentConfig& cfg, std::int64_t env_steps) {
    json meta = json::object();
    meta["config"] = json::parse(config_to_json(cfg));
    meta["env_steps"] = env_steps;
    json params = json::array();
    std::size_t count = 0;
    for (const auto& [name, tensor] : m.params().items()) {
        json p = json::object();
        p["name"] = name;
        p["shape"] = tensor->shape;
        params.push_back(std::move(p));
        count += tensor->value.size();
    }
    meta["params"] = std::move(params);
    const std::string meta_text = meta.dump();

    std::string blob;
    blob.reserve(64 + meta_text.size() + count * sizeof(double));
    blob.append(kMagic, 4);
    put(blob, kVersion);
    put(blob, static_cast<std::uint64_t>(meta_text.size()));
    blob += meta_text;
    put(blob, static_cast<std::uint64_t>(count));
    for (const auto& [name, tensor] : m.params().items())
        for (double v : tensor->value) put(blob, v);
    put(blob, fnv1a(blob.data(), blob.size()));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write checkpoint: " + path);
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) throw FormatError("short write on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot read checkpoint: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string blob = buf.str();

    // Integrity first: nothing is interpreted until the checksum clears.
    if (blob.size() < 4 + sizeof(std::uint32_t) + 3 * sizeof(std::uint64_t))
        throw FormatError("checkpoint truncated");
    const std::size_t body = blob.size() - sizeof(std::uint64_t);
    std::uint64_t stored;
    std::memcpy(&stored, blob.data() + body, sizeof(stored));
    if (fnv1a(blob.data(), body) != stored) throw FormatError("checkpoint checksum mismatch");

    std::size_t pos = 0;
    if (std::memcmp(blob.data(), kMagic, 4) != 0) throw FormatError("not a checkpoint file");
    pos += 4;
    const auto version = take<std::uint32_t>(blob, pos);
    if (version != kVersion)
        throw FormatError("unsupported checkpoint version: " + std::to_string(version));
    const auto meta_len = take<std::uint64_t>(blob, pos);
    if (pos + meta_len > body) throw FormatError("checkpoint truncated");
    const std::string meta_text = blob.substr(pos, meta_len);
    pos += meta_len;

    json meta = json::parse(meta_text, nullptr, /*allow_exceptions=*/false);
    if (meta.is_discarded() || !meta.is_object() || !meta.contains("config") ||
        !meta.contains("env_steps") || !meta.contains("params"))
        throw FormatError("malformed checkpoint metadata");

    Checkpoint ckpt;
    try {
        ckpt.config = config_from_json(meta["config"].dump());
        ckpt.config.validate();
        ckpt.env_steps = meta["env_steps"].get<std::int64_t>();
        for (const auto& p : meta["params"])
            ckpt.param_shapes.emplace_back(p["name"].get<std::string>(),
                                           p["shape"].get<std::vector<std::int64_t>>());
    } catch (const ConfigError& e) {
        throw FormatError(std::string("checkpoint config invalid: ") + e.what());
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed checkpoint metadata: ") + e.what());
    }

    const auto count = take<std::uint64_t>(blob, pos);
    std::size_t expect = 0;
    for (const auto& [name, shape] : ckpt.param_shapes) {
        std::size_t n = 1;
        for (std::int64_t d : shape) {
            if (d < 1) throw FormatError("bad parameter shape in checkpoint");
            n *= static_cast<std::size_t>(d);
        }
        expect += n;
    }
    if (count != expect) throw FormatError("checkpoint value count does not match shapes");
    if (pos + count * sizeof(double) != body) throw FormatError("checkpoint truncated");
    ckpt.values.resize(count);
    if (count > 0) std::memcpy(ckpt.values.data(), blob.data() + pos, count * sizeof(double));
    return ckpt;
}

void restore_parameters(model::AttentionModel& m, const Checkpoint& ckpt) {
    const auto& items = m.params().items();
    if (items.size() != ckpt.param_shapes.size())
        throw SchemaError("checkpoint has " + std::to_string(ckpt.param_shapes.size()) +
                          " parameters, model has " + std::to_string(items.size()));
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i].first != ckpt.param_shapes[i].first)
            throw SchemaError("parameter name mismatch: " + items[i].first + " vs " +
                              ckpt.param_shapes[i].first);
        if (items[i].second->shape != ckpt.param_shapes[i].second)
            throw SchemaError("parameter shape mismatch on " + items[i].first);
    }
    m.params().assign_values(ckpt.values);
    m.bump_param_version();
}

model::AttentionModel model_from_checkpoint(const Checkpoint& ckpt) {
    model::ModelConfig mc = ckpt.config.model;
    mc.kind = ckpt.config.kind;
    model::AttentionModel m(mc, /*seed=*/0);
    restore_parameters(m, ckpt);
    return m;
}

}  // namespace routerl::harness
