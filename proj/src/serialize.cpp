#include "pam/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "tensor file format is little-endian");

namespace pam {

namespace {

template <typename T>
void write_raw(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw ValueError("truncated tensor stream");
    return v;
}

}  // namespace

void save_tensor(std::ostream& os, const Tensor& t) {
    os.write("MGT1", 4);
    write_raw<uint32_t>(os, static_cast<uint32_t>(t.rank()));
    for (size_t d : t.shape()) write_raw<uint64_t>(os, static_cast<uint64_t>(d));
    os.write(reinterpret_cast<const char*>(t.values().data()),
             static_cast<std::streamsize>(t.size() * sizeof(double)));
}

Tensor load_tensor(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "MGT1", 4) != 0) {
        throw ValueError("bad tensor magic (expected MGT1)");
    }
    uint32_t rank = read_raw<uint32_t>(is);
    if (rank > 8) throw ValueError("implausible tensor rank");
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<size_t>(read_raw<uint64_t>(is));
    std::vector<double> data(numel(shape));
    is.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!is) throw ValueError("truncated tensor payload");
    return tensor_from(std::move(shape), std::move(data));
}

void save_tensor_file(const std::string& path, const Tensor& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ValueError("cannot open " + path + " for writing");
    save_tensor(os, t);
}

Tensor load_tensor_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValueError("cannot open " + path);
    return load_tensor(is);
}

void save_checkpoint(const std::string& path, const NamedTensors& entries) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ValueError("cannot open " + path + " for writing");
    os.write("MGC1", 4);
    write_raw<uint32_t>(os, static_cast<uint32_t>(entries.size()));
    for (const auto& [name, t] : entries) {
        write_raw<uint32_t>(os, static_cast<uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        save_tensor(os, t);
    }
}

NamedTensors load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValueError("cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "MGC1", 4) != 0) {
        throw ValueError("bad checkpoint magic (expected MGC1)");
    }
    uint32_t count = read_raw<uint32_t>(is);
    NamedTensors out;
    out.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        uint32_t len = read_raw<uint32_t>(is);
        std::string name(len, '\0');
        is.read(name.data(), len);
        if (!is) throw ValueError("truncated checkpoint entry name");
        out.emplace_back(std::move(name), load_tensor(is));
    }
    return out;
}

}  // namespace pam
