#include <cstring>
#include <filesystem>
#include <sstream>

#include <doctest.h>

#include "gsagcn/checkpoint.hpp"
#include "gsagcn/errors.hpp"
#include "gsagcn/gnn.hpp"

using namespace gsagcn;

namespace {

std::string le_bytes(std::uint64_t v, std::size_t width) {
    std::string s;
    for (std::size_t i = 0; i < width; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
    return s;
}

std::string le_double(double x) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof bits);
    return le_bytes(bits, 8);
}

std::vector<GsaLayerParams> mixed_params() {
    auto p = init_params(make_spec({6, 4, 3}, true), 21);
    p[0].gamma = 0.125;
    p[1].gamma = 3.5;
    // Second layer plain.
    p[1].wl = p[1].wr = p[1].wh = p[1].wg = Mat();
    return p;
}

}  // namespace

TEST_SUITE("checkpoint") {

TEST_CASE("round trip preserves every bit") {
    const auto p = mixed_params();
    std::stringstream s;
    write_checkpoint(s, p);
    const auto back = read_checkpoint(s);
    CHECK(back == p);
    CHECK(back[0].attention());
    CHECK_FALSE(back[1].attention());

    const auto dir = std::filesystem::temp_directory_path() / "gsagcn_ckpt_test";
    std::filesystem::create_directories(dir);
    save_checkpoint(dir / "p.bin", p);
    CHECK(load_checkpoint(dir / "p.bin") == p);
    std::filesystem::remove_all(dir);
}

TEST_CASE("byte layout") {
    GsaLayerParams a;
    a.w = Mat{{1.0, -2.0}};
    a.wl = Mat{{0.5}};
    a.wr = Mat{{0.25}};
    a.wh = Mat{{-1.0}};
    a.wg = Mat{{2.0}};
    a.gamma = 0.75;
    GsaLayerParams b;
    b.w = Mat{{3.0}, {4.0}};
    std::stringstream s;
    write_checkpoint(s, {a, b});

    std::string want = "GSAGCNPB";
    want += le_bytes(1, 4) + le_bytes(2, 4);
    want += le_bytes(1, 8) + le_bytes(2, 8) + le_bytes(1, 8);
    want += le_bytes(2, 8) + le_bytes(1, 8) + le_bytes(0, 8);
    for (double x : {1.0, -2.0, 0.5, 0.25, -1.0, 2.0, 0.75, 3.0, 4.0, 0.0}) want += le_double(x);
    CHECK(s.str() == want);
    CHECK(s.str().size() == 8 + 8 + 48 + 80);
}

TEST_CASE("malformed files are FormatErrors") {
    std::stringstream good;
    write_checkpoint(good, mixed_params());
    const std::string bytes = good.str();

    auto read = [](const std::string& b) {
        std::istringstream in(b);
        return read_checkpoint(in);
    };
    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(read(bad_magic), FormatError);

    std::string bad_version = bytes;
    bad_version[8] = 2;
    CHECK_THROWS_AS(read(bad_version), FormatError);

    CHECK_THROWS_AS(read(bytes.substr(0, bytes.size() - 3)), FormatError);
    CHECK_THROWS_AS(read(bytes.substr(0, 12)), FormatError);
    CHECK_THROWS_AS(read(bytes + "x"), FormatError);
    CHECK_THROWS_AS(read(""), FormatError);

    CHECK_THROWS_AS(load_checkpoint("/nonexistent/gsagcn/p.bin"), Error);
}

}  // TEST_SUITE
