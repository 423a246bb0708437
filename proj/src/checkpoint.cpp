#include "mip/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "mip/error.hpp"

namespace mip {

namespace {

void put_u32(std::ofstream& out, uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 4);
}

void put_u64(std::ofstream& out, uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 8);
}

void put_f64(std::ofstream& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

uint32_t get_u32(std::ifstream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
}

uint64_t get_u64(std::ifstream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::ifstream& in) {
    const uint64_t bits = get_u64(in);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

} // namespace

void save_checkpoint(const std::string& path, const std::string& config_json,
                     const ParamStore& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("io_error", "cannot write checkpoint: " + path);
    out.write(kCheckpointMagic, 8);
    put_u32(out, kCheckpointVersion);
    put_u64(out, config_json.size());
    out.write(config_json.data(), static_cast<long>(config_json.size()));
    const auto all = params.all();
    put_u64(out, all.size());
    for (const Param* p : all) {
        put_u32(out, static_cast<uint32_t>(p->name.size()));
        out.write(p->name.data(), static_cast<long>(p->name.size()));
        put_u64(out, static_cast<uint64_t>(p->value.rows));
        put_u64(out, static_cast<uint64_t>(p->value.cols));
        for (double v : p->value.data) put_f64(out, v);
    }
    if (!out) fail("io_error", "failed while writing checkpoint: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("missing_file", "cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
        fail("malformed_checkpoint", "bad magic in " + path);
    const uint32_t version = get_u32(in);
    if (version != kCheckpointVersion)
        fail("version_mismatch", "checkpoint version " + std::to_string(version) +
                                     " not supported (expected " +
                                     std::to_string(kCheckpointVersion) + ")");
    LoadedCheckpoint ck;
    const uint64_t cfg_len = get_u64(in);
    ck.config_json.resize(cfg_len);
    in.read(ck.config_json.data(), static_cast<long>(cfg_len));
    const uint64_t count = get_u64(in);
    for (uint64_t i = 0; i < count; ++i) {
        const uint32_t name_len = get_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), static_cast<long>(name_len));
        const auto rows = static_cast<int>(get_u64(in));
        const auto cols = static_cast<int>(get_u64(in));
        Matrix m(rows, cols);
        for (double& v : m.data) v = get_f64(in);
        if (!in) fail("malformed_checkpoint", "truncated checkpoint: " + path);
        ck.names.push_back(std::move(name));
        ck.values.push_back(std::move(m));
    }
    return ck;
}

} // namespace mip
