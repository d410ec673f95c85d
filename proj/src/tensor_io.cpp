#include "cdi/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace cdi {

namespace {

constexpr char kMagic[4] = {'C', 'D', 'I', 'T'};
constexpr std::uint8_t kVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
    // Little-endian hosts only; asserted at build time.
    static_assert(std::endian::native == std::endian::little);
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::string& path) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw IoError("truncated tensor file " + path);
    return v;
}

} // namespace

void write_tensor(const std::string& path, const Tensor& t, bool as_f32) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os.write(kMagic, 4);
    put<std::uint8_t>(os, kVersion);
    put<std::uint8_t>(os, static_cast<std::uint8_t>(t.ndim()));
    for (int d : t.shape) put<std::uint32_t>(os, static_cast<std::uint32_t>(d));
    put<std::uint8_t>(os, as_f32 ? 1 : 0);
    if (as_f32) {
        for (double v : t.data) put<float>(os, static_cast<float>(v));
    } else {
        os.write(reinterpret_cast<const char*>(t.data.data()),
                 static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    }
    if (!os) throw IoError("short write to " + path);
}

Tensor read_tensor(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) throw IoError("bad magic in " + path);
    auto version = get<std::uint8_t>(is, path);
    if (version != kVersion) throw IoError("unsupported tensor version in " + path);
    auto ndim = get<std::uint8_t>(is, path);
    std::vector<int> shape(ndim);
    for (auto& d : shape) d = static_cast<int>(get<std::uint32_t>(is, path));
    auto dtype = get<std::uint8_t>(is, path);
    if (dtype > 1) throw IoError("unknown dtype flag in " + path);
    Tensor t(shape);
    if (dtype == 1) {
        for (auto& v : t.data) v = static_cast<double>(get<float>(is, path));
    } else {
        is.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(double)));
        if (!is) throw IoError("truncated tensor file " + path);
    }
    return t;
}

void write_pgm(const std::string& path, const Tensor& t) {
    if (t.ndim() != 2) throw ShapeError("write_pgm expects a 2D tensor");
    auto [lo_it, hi_it] = std::minmax_element(t.data.begin(), t.data.end());
    double lo = *lo_it, hi = *hi_it;
    double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os << "P5\n" << t.shape[1] << " " << t.shape[0] << "\n255\n";
    for (double v : t.data) {
        auto b = static_cast<unsigned char>(std::clamp((v - lo) * scale, 0.0, 255.0));
        os.write(reinterpret_cast<const char*>(&b), 1);
    }
}

} // namespace cdi
