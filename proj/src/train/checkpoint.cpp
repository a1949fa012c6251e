// Copyright 2026 The sharecmp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sharecmp/train/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>

#include "sharecmp/config/serialize.hpp"
#include "sharecmp/core/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint codec assumes a little-endian host");

namespace sharecmp {

namespace {

constexpr char kMagic[8] = {'S', 'C', 'M', 'P', '0', '0', '0', '1'};

template <typename T>
void write_pod(std::ofstream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& f) {
    T v{};
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!f) throw CheckpointError("checkpoint truncated");
    return v;
}

std::string read_string(std::ifstream& f) {
    const std::uint64_t len = read_pod<std::uint64_t>(f);
    if (len > (1u << 20)) throw CheckpointError("checkpoint string length implausible");
    std::string s(len, '\0');
    f.read(s.data(), static_cast<std::streamsize>(len));
    if (!f) throw CheckpointError("checkpoint truncated");
    return s;
}

} // namespace

void save_checkpoint(const std::string& path, const Model& model) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw CheckpointError("cannot open checkpoint for writing: " + path);
    f.write(kMagic, sizeof(kMagic));

    const std::string cfg = model_config_to_json(model.cfg).dump();
    write_pod<std::uint64_t>(f, cfg.size());
    f.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));

    const std::vector<Parameter*>& params = model.params.all();
    write_pod<std::uint64_t>(f, params.size());
    for (const Parameter* p : params) {
        if (!p->materialized())
            throw CheckpointError("cannot save unmaterialized parameter: " + p->name);
        write_pod<std::uint64_t>(f, p->name.size());
        f.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
        write_pod<std::uint32_t>(f, static_cast<std::uint32_t>(p->shape.size()));
        for (int d : p->shape) write_pod<std::int32_t>(f, d);
        f.write(reinterpret_cast<const char*>(p->value.data()),
                static_cast<std::streamsize>(p->value.numel() * sizeof(double)));
    }
    if (!f) throw CheckpointError("checkpoint write failed: " + path);
}

std::unique_ptr<Model> load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CheckpointError("cannot open checkpoint: " + path);
    char magic[8];
    f.read(magic, sizeof(magic));
    if (!f || std::string(magic, 8) != std::string(kMagic, 8))
        throw CheckpointError("not a checkpoint file: " + path);

    const std::string cfg_text = read_string(f);
    ModelConfig cfg;
    try {
        cfg = model_config_from_json(nlohmann::json::parse(cfg_text));
        cfg.validate();
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("checkpoint config unreadable: ") + e.what());
    } catch (const ConfigError& e) {
        throw CheckpointError(std::string("checkpoint config invalid: ") + e.what());
    }

    auto model = std::make_unique<Model>(cfg);
    const std::uint64_t n = read_pod<std::uint64_t>(f);
    for (std::uint64_t k = 0; k < n; ++k) {
        const std::string name = read_string(f);
        const std::uint32_t rank = read_pod<std::uint32_t>(f);
        if (rank > 8) throw CheckpointError("checkpoint tensor rank implausible: " + name);
        std::vector<int> shape(rank);
        for (std::uint32_t i = 0; i < rank; ++i) shape[i] = read_pod<std::int32_t>(f);

        Parameter* p = model->params.find(name);
        if (p == nullptr) throw CheckpointError("checkpoint has unknown parameter: " + name);
        if (p->shape != shape) throw CheckpointError("checkpoint shape mismatch for: " + name);
        Tensor t(shape);
        f.read(reinterpret_cast<char*>(t.data()),
               static_cast<std::streamsize>(t.numel() * sizeof(double)));
        if (!f) throw CheckpointError("checkpoint truncated in tensor: " + name);
        p->value = std::move(t);
    }
    for (const Parameter* p : model->params.all())
        if (!p->materialized())
            throw CheckpointError("checkpoint missing parameter: " + p->name);
    return model;
}

} // namespace sharecmp
