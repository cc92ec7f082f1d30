#include "gsagcn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "gsagcn/errors.hpp"

namespace gsagcn {

namespace {

constexpr char kMagic[8] = {'G', 'S', 'A', 'G', 'C', 'N', 'P', 'B'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
    std::uint64_t bits = 0;
    if constexpr (std::is_same_v<T, double>) {
        bits = std::bit_cast<std::uint64_t>(v);
    } else {
        bits = static_cast<std::uint64_t>(v);
    }
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    unsigned char buf[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw FormatError("checkpoint: truncated file");
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    if constexpr (std::is_same_v<T, double>) {
        return std::bit_cast<double>(bits);
    } else {
        return static_cast<T>(bits);
    }
}

void put_mat(std::ostream& out, const Mat& m) {
    for (double v : m.data()) put(out, v);
}

Mat get_mat(std::istream& in, std::uint64_t r, std::uint64_t c) {
    Mat m(r, c);
    for (double& v : m.data()) v = get<double>(in);
    return m;
}

}  // namespace

void write_checkpoint(std::ostream& out, const std::vector<GsaLayerParams>& params) {
    out.write(kMagic, sizeof kMagic);
    put<std::uint32_t>(out, kVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params) {
        put<std::uint64_t>(out, p.w.rows());
        put<std::uint64_t>(out, p.w.cols());
        put<std::uint64_t>(out, p.attention() ? p.wl.cols() : 0);
    }
    for (const auto& p : params) {
        put_mat(out, p.w);
        put_mat(out, p.wl);
        put_mat(out, p.wr);
        put_mat(out, p.wh);
        put_mat(out, p.wg);
        put(out, p.gamma);
    }
    if (!out) throw Error("checkpoint: write failed");
}

std::vector<GsaLayerParams> read_checkpoint(std::istream& in) {
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
        throw FormatError("checkpoint: bad magic");
    }
    const auto version = get<std::uint32_t>(in);
    if (version != kVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(version));
    const auto layers = get<std::uint32_t>(in);
    struct Dims {
        std::uint64_t din, dout, datt;
    };
    std::vector<Dims> dims(layers);
    for (auto& d : dims) {
        d.din = get<std::uint64_t>(in);
        d.dout = get<std::uint64_t>(in);
        d.datt = get<std::uint64_t>(in);
        if (d.din == 0 || d.dout == 0 || d.din > (1u << 24) || d.dout > (1u << 24) || d.datt > d.din) {
            throw FormatError("checkpoint: implausible layer dimensions");
        }
    }
    std::vector<GsaLayerParams> params(layers);
    for (std::size_t l = 0; l < layers; ++l) {
        const auto& d = dims[l];
        auto& p = params[l];
        p.w = get_mat(in, d.din, d.dout);
        if (d.datt > 0) {
            p.wl = get_mat(in, d.din, d.datt);
            p.wr = get_mat(in, d.din, d.datt);
            p.wh = get_mat(in, d.din, d.datt);
            p.wg = get_mat(in, d.datt, d.din);
        }
        p.gamma = get<double>(in);
    }
    if (in.peek() != std::char_traits<char>::eof()) throw FormatError("checkpoint: trailing bytes");
    return params;
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<GsaLayerParams>& params) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write " + path.string());
    write_checkpoint(f, params);
}

std::vector<GsaLayerParams> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open " + path.string());
    return read_checkpoint(f);
}

}  // namespace gsagcn
