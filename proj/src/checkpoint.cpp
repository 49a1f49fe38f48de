#include "czsl/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace czsl {

namespace {

void write_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw InputError("checkpoint: truncated u32");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<TensorRef>& tensors) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError("checkpoint: cannot open for write: " + path);
    os.write("CZPM1", 5);
    write_u32(os, static_cast<uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        write_u32(os, static_cast<uint32_t>(t.name.size()));
        os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        write_u32(os, static_cast<uint32_t>(t.dims.size()));
        for (uint32_t d : t.dims) write_u32(os, d);
        std::vector<float> buf(t.size);
        for (size_t i = 0; i < t.size; ++i) buf[i] = static_cast<float>(t.data[i]);
        os.write(reinterpret_cast<const char*>(buf.data()),
                 static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    if (!os) throw InputError("checkpoint: write failed: " + path);
}

std::map<std::string, LoadedTensor> read_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("checkpoint: cannot open: " + path);
    char magic[5];
    is.read(magic, 5);
    if (!is || std::memcmp(magic, "CZPM1", 5) != 0)
        throw InputError("checkpoint: bad magic in " + path);
    const uint32_t count = read_u32(is);
    std::map<std::string, LoadedTensor> out;
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t nlen = read_u32(is);
        std::string name(nlen, '\0');
        is.read(name.data(), nlen);
        const uint32_t rank = read_u32(is);
        LoadedTensor t;
        size_t n = 1;
        for (uint32_t r = 0; r < rank; ++r) {
            t.dims.push_back(read_u32(is));
            n *= t.dims.back();
        }
        t.data.resize(n);
        is.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(n * sizeof(float)));
        if (!is) throw InputError("checkpoint: truncated tensor " + name);
        if (!out.emplace(std::move(name), std::move(t)).second)
            throw InputError("checkpoint: duplicate tensor name in " + path);
    }
    return out;
}

void load_checkpoint(const std::string& path, const std::vector<TensorRef>& tensors) {
    auto loaded = read_checkpoint(path);
    for (const auto& ref : tensors) {
        auto it = loaded.find(ref.name);
        if (it == loaded.end())
            throw InputError("checkpoint: missing tensor " + ref.name + " in " + path);
        if (it->second.data.size() != ref.size)
            throw InputError("checkpoint: size mismatch for tensor " + ref.name);
        for (size_t i = 0; i < ref.size; ++i) ref.data[i] = it->second.data[i];
    }
}

}  // namespace czsl
