#include "poseac/nn/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "poseac/core/check.hpp"
#include "poseac/core/hash.hpp"

namespace poseac::nn {

namespace {

constexpr char kMagic[4] = {'P', 'C', 'K', 'P'};
constexpr uint32_t kVersion = 1;

static_assert(sizeof(float) == 4, "float32 expected");

}  // namespace

const Tensor<float>& Checkpoint::get(const std::string& name) const {
    for (const auto& [n, t] : tensors)
        if (n == name) return t;
    throw Error("checkpoint tensor not found: " + name);
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    nlohmann::json header;
    header["meta"] = ckpt.meta;
    auto& list = header["tensors"] = nlohmann::json::array();
    for (const auto& [name, t] : ckpt.tensors)
        list.push_back({{"name", name}, {"shape", {t.n, t.c, t.h, t.w}}});
    const std::string hs = header.dump();

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    POSEAC_CHECK(f.good(), "cannot open checkpoint for write: ", path);
    f.write(kMagic, 4);
    uint32_t ver = kVersion;
    f.write(reinterpret_cast<const char*>(&ver), sizeof(ver));
    uint64_t hlen = hs.size();
    f.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const auto& [name, t] : ckpt.tensors)
        f.write(reinterpret_cast<const char*>(t.v.data()),
                static_cast<std::streamsize>(t.v.size() * sizeof(float)));
    f.flush();
    POSEAC_CHECK(f.good(), "write failed for checkpoint: ", path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    POSEAC_CHECK(f.good(), "cannot open checkpoint: ", path);
    char magic[4];
    f.read(magic, 4);
    POSEAC_CHECK(f.good() && std::memcmp(magic, kMagic, 4) == 0,
                 "bad checkpoint magic: ", path);
    uint32_t ver = 0;
    f.read(reinterpret_cast<char*>(&ver), sizeof(ver));
    POSEAC_CHECK(ver == kVersion, "unsupported checkpoint version ", ver, ": ", path);
    uint64_t hlen = 0;
    f.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    POSEAC_CHECK(f.good(), "truncated checkpoint header: ", path);
    std::string hs(hlen, '\0');
    f.read(hs.data(), static_cast<std::streamsize>(hlen));
    POSEAC_CHECK(f.good(), "truncated checkpoint header: ", path);

    nlohmann::json header = nlohmann::json::parse(hs);
    Checkpoint ckpt;
    ckpt.meta = header.value("meta", nlohmann::json::object());
    for (const auto& e : header.at("tensors")) {
        const auto shape = e.at("shape");
        Tensor<float> t(shape.at(0).get<int>(), shape.at(1).get<int>(),
                        shape.at(2).get<int>(), shape.at(3).get<int>());
        f.read(reinterpret_cast<char*>(t.v.data()),
               static_cast<std::streamsize>(t.v.size() * sizeof(float)));
        POSEAC_CHECK(f.good(), "truncated checkpoint tensor ",
                     e.at("name").get<std::string>(), ": ", path);
        ckpt.tensors.emplace_back(e.at("name").get<std::string>(), std::move(t));
    }
    return ckpt;
}

std::string params_hash(const std::vector<ParamRef<float>>& params) {
    std::string buf;
    for (const auto& p : params) {
        buf += p.name;
        const int shape[4] = {p.value->n, p.value->c, p.value->h, p.value->w};
        buf.append(reinterpret_cast<const char*>(shape), sizeof(shape));
        buf.append(reinterpret_cast<const char*>(p.value->v.data()),
                   p.value->v.size() * sizeof(float));
    }
    return sha256_hex(buf);
}

}  // namespace poseac::nn
