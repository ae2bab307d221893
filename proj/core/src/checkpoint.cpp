#include "deepindex/checkpoint.hpp"

#include <cstdint>
#include <fstream>

namespace deepindex {

namespace {

constexpr char kMagic[4] = {'D', 'I', 'D', 'X'};
constexpr std::uint8_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    os.write(b, 4);
}

void put_f32(std::ostream& os, float f) {
    std::uint32_t v;
    static_assert(sizeof(v) == sizeof(f));
    __builtin_memcpy(&v, &f, 4);
    put_u32(os, v);
}

std::uint32_t get_u32(std::istream& is, const std::string& path) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw ParseError("truncated checkpoint: " + path);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

float get_f32(std::istream& is, const std::string& path) {
    const std::uint32_t v = get_u32(is, path);
    float f;
    __builtin_memcpy(&f, &v, 4);
    return f;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<Parameter>& tensors) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot write checkpoint: " + path);
    os.write(kMagic, 4);
    os.put(static_cast<char>(kVersion));
    put_u32(os, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& p : tensors) {
        put_u32(os, static_cast<std::uint32_t>(p.name.size()));
        os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        put_u32(os, static_cast<std::uint32_t>(p.value->ndim()));
        for (int i = 0; i < p.value->ndim(); ++i) put_u32(os, static_cast<std::uint32_t>(p.value->dim(i)));
        for (double v : p.value->data()) put_f32(os, static_cast<float>(v));
    }
    if (!os) throw Error("write failure on checkpoint: " + path);
}

std::vector<Parameter> load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open checkpoint: " + path);
    char magic[4];
    if (!is.read(magic, 4) || magic[0] != kMagic[0] || magic[1] != kMagic[1] || magic[2] != kMagic[2] ||
        magic[3] != kMagic[3])
        throw ParseError("bad checkpoint magic in " + path);
    const int version = is.get();
    if (version != kVersion)
        throw ParseError("unsupported checkpoint version " + std::to_string(version) + " in " + path);
    const std::uint32_t count = get_u32(is, path);
    std::vector<Parameter> out;
    out.reserve(count);
    for (std::uint32_t r = 0; r < count; ++r) {
        const std::uint32_t name_len = get_u32(is, path);
        std::string name(name_len, '\0');
        if (!is.read(name.data(), name_len)) throw ParseError("truncated checkpoint: " + path);
        const std::uint32_t ndim = get_u32(is, path);
        Shape shape(ndim);
        for (auto& d : shape) d = static_cast<int>(get_u32(is, path));
        auto t = Tensor::make(shape);
        for (auto& v : t->data()) v = static_cast<double>(get_f32(is, path));
        out.push_back({std::move(name), std::move(t)});
    }
    return out;
}

}  // namespace deepindex
