#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "airgan/core/error.hpp"
#include "airgan/nn/layers.hpp"

namespace airgan::nn {

// File layout, version 1:
//   line 1  "airgan-checkpoint 1"
//   line 2  JSON header: {"kind", "layers": [spec...], "entries": [{"name","dtype","shape"}...], "meta": {...}}
//   rest    entry payloads concatenated in header order, little-endian, dtype f32 or f64.

inline nlohmann::json spec_to_json(const LayerSpec& s)
{
    nlohmann::json j;
    j["kind"] = layer_kind_name(s.kind);
    j["kernel"] = {s.kernel_h, s.kernel_w};
    j["stride"] = s.stride;
    j["in_depth"] = s.in_depth;
    j["out_depth"] = s.out_depth;
    j["dropout"] = s.dropout_rate;
    j["target"] = {s.target_h, s.target_w};
    return j;
}

inline LayerSpec spec_from_json(const nlohmann::json& j)
{
    LayerSpec s;
    s.kind = layer_kind_from_name(j.at("kind").get<std::string>());
    s.kernel_h = j.at("kernel").at(0).get<std::size_t>();
    s.kernel_w = j.at("kernel").at(1).get<std::size_t>();
    s.stride = j.at("stride").get<std::size_t>();
    s.in_depth = j.at("in_depth").get<std::size_t>();
    s.out_depth = j.at("out_depth").get<std::size_t>();
    s.dropout_rate = j.at("dropout").get<double>();
    s.target_h = j.at("target").at(0).get<std::size_t>();
    s.target_w = j.at("target").at(1).get<std::size_t>();
    return s;
}

struct CheckpointEntry {
    std::string name;
    Shape shape;
    /// Stored as f64 when `double_precision`, else f32.
    bool double_precision = false;
    std::vector<double> values;
};

struct Checkpoint {
    std::string kind;
    std::vector<LayerSpec> layers;
    std::vector<CheckpointEntry> entries;
    nlohmann::json meta = nlohmann::json::object();

    template <class T>
    void add(const std::string& name, const BasicTensor<T>& t, bool double_precision = false)
    {
        CheckpointEntry e;
        e.name = name;
        e.shape = t.shape();
        e.double_precision = double_precision;
        e.values.assign(t.data().begin(), t.data().end());
        entries.push_back(std::move(e));
    }

    const CheckpointEntry& entry(const std::string& name) const
    {
        for (const auto& e : entries) {
            if (e.name == name) {
                return e;
            }
        }
        throw ConfigError("checkpoint has no entry '" + name + "'");
    }

    template <class T>
    void restore(const std::string& name, BasicTensor<T>& t) const
    {
        const CheckpointEntry& e = entry(name);
        if (e.shape != t.shape()) {
            throw ShapeError("checkpoint entry '" + name + "' has shape " + shape_string(e.shape) + ", expected "
                             + shape_string(t.shape()));
        }
        for (std::size_t i = 0; i < e.values.size(); ++i) {
            t[i] = static_cast<T>(e.values[i]);
        }
    }
};

namespace detail {

template <class U>
void put_le(std::string& out, U v)
{
    static_assert(std::endian::native == std::endian::little, "checkpoint writer assumes a little-endian host");
    char bytes[sizeof(U)];
    std::memcpy(bytes, &v, sizeof(U));
    out.append(bytes, sizeof(U));
}

template <class U>
U get_le(const std::string& in, std::size_t& pos)
{
    if (pos + sizeof(U) > in.size()) {
        throw ConfigError("checkpoint payload truncated");
    }
    U v;
    std::memcpy(&v, in.data() + pos, sizeof(U));
    pos += sizeof(U);
    return v;
}

} // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& ck)
{
    nlohmann::json header;
    header["kind"] = ck.kind;
    header["layers"] = nlohmann::json::array();
    for (const auto& s : ck.layers) {
        header["layers"].push_back(spec_to_json(s));
    }
    header["entries"] = nlohmann::json::array();
    for (const auto& e : ck.entries) {
        if (e.values.size() != shape_size(e.shape)) {
            throw ShapeError("checkpoint entry '" + e.name + "' length does not match its shape");
        }
        header["entries"].push_back({{"name", e.name}, {"dtype", e.double_precision ? "f64" : "f32"}, {"shape", e.shape}});
    }
    header["meta"] = ck.meta;
    std::string out = "airgan-checkpoint 1\n" + header.dump() + "\n";
    for (const auto& e : ck.entries) {
        for (double v : e.values) {
            if (e.double_precision) {
                detail::put_le(out, v);
            } else {
                detail::put_le(out, static_cast<float>(v));
            }
        }
    }
    return out;
}

inline Checkpoint parse_checkpoint(const std::string& bytes)
{
    const std::size_t l1 = bytes.find('\n');
    if (l1 == std::string::npos || bytes.substr(0, l1) != "airgan-checkpoint 1") {
        throw ConfigError("not an airgan-checkpoint v1 file");
    }
    const std::size_t l2 = bytes.find('\n', l1 + 1);
    if (l2 == std::string::npos) {
        throw ConfigError("checkpoint header truncated");
    }
    const nlohmann::json header = nlohmann::json::parse(bytes.substr(l1 + 1, l2 - l1 - 1));
    Checkpoint ck;
    ck.kind = header.at("kind").get<std::string>();
    for (const auto& j : header.at("layers")) {
        ck.layers.push_back(spec_from_json(j));
    }
    ck.meta = header.value("meta", nlohmann::json::object());
    std::size_t pos = l2 + 1;
    for (const auto& j : header.at("entries")) {
        CheckpointEntry e;
        e.name = j.at("name").get<std::string>();
        e.shape = j.at("shape").get<Shape>();
        const std::string dtype = j.at("dtype").get<std::string>();
        if (dtype != "f32" && dtype != "f64") {
            throw ConfigError("checkpoint entry '" + e.name + "' has unsupported dtype " + dtype);
        }
        e.double_precision = dtype == "f64";
        e.values.resize(shape_size(e.shape));
        for (double& v : e.values) {
            v = e.double_precision ? detail::get_le<double>(bytes, pos) : detail::get_le<float>(bytes, pos);
        }
        ck.entries.push_back(std::move(e));
    }
    if (pos != bytes.size()) {
        throw ConfigError("checkpoint has trailing bytes");
    }
    return ck;
}

/// Appends parameter values then buffers, in declaration order.
template <class T>
void add_network_state(Checkpoint& ck, const std::vector<Parameter<T>>& params,
                       const std::vector<std::pair<std::string, BasicTensor<T>*>>& buffers)
{
    for (const auto& p : params) {
        ck.add(p.name, *p.value);
    }
    for (const auto& [name, t] : buffers) {
        ck.add(name, *t);
    }
}

template <class T>
void restore_network_state(const Checkpoint& ck, const std::vector<Parameter<T>>& params,
                           const std::vector<std::pair<std::string, BasicTensor<T>*>>& buffers)
{
    for (const auto& p : params) {
        ck.restore(p.name, *p.value);
    }
    for (const auto& [name, t] : buffers) {
        ck.restore(name, *t);
    }
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ck)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw Error("cannot write checkpoint " + path);
    }
    const std::string bytes = serialize_checkpoint(ck);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline Checkpoint load_checkpoint(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw Error("cannot read checkpoint " + path);
    }
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_checkpoint(ss.str());
}

} // namespace airgan::nn
