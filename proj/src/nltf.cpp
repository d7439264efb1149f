#include "nlpde/nltf.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace nlpde {

static_assert(std::endian::native == std::endian::little,
              "NLTF writer assumes a little-endian host");

namespace {

void put_u64(std::ofstream& os, uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), 8);
}

uint64_t get_u64(std::ifstream& is) {
    uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

} // namespace

void write_nltf(const std::string& path, const TriangleField& field,
                const std::string& problem_id) {
    const TriangleGrid& g = field.grid();
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorCode::IoError, "grid::write_nltf", "cannot open " + path);
    os.write("NLTF", 4);
    char version = 0x01;
    os.write(&version, 1);
    put_u64(os, static_cast<uint64_t>(g.n_tau));
    put_u64(os, static_cast<uint64_t>(g.d));
    put_u64(os, static_cast<uint64_t>(g.n_y));
    put_u64(os, static_cast<uint64_t>(g.r));
    put_u64(os, static_cast<uint64_t>(g.m));
    auto raw = field.raw();
    os.write(reinterpret_cast<const char*>(raw.data()),
             static_cast<std::streamsize>(raw.size() * sizeof(double)));
    if (!os) fail(ErrorCode::IoError, "grid::write_nltf", "write failed for " + path);

    nlohmann::json meta;
    meta["T"] = g.T;
    meta["L"] = g.L;
    meta["problem"] = problem_id;
    std::ofstream ms(path + ".meta.json");
    if (!ms) fail(ErrorCode::IoError, "grid::write_nltf", "cannot open " + path + ".meta.json");
    ms << meta.dump(2) << "\n";
}

TriangleField read_nltf(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorCode::IoError, "grid::read_nltf", "cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (std::memcmp(magic, "NLTF", 4) != 0)
        fail(ErrorCode::IoError, "grid::read_nltf", "bad magic in " + path);
    char version = 0;
    is.read(&version, 1);
    if (version != 0x01)
        fail(ErrorCode::IoError, "grid::read_nltf", "unsupported NLTF version");
    uint64_t n_tau = get_u64(is), d = get_u64(is), n_y = get_u64(is), r = get_u64(is),
             m = get_u64(is);

    std::ifstream ms(path + ".meta.json");
    if (!ms) fail(ErrorCode::IoError, "grid::read_nltf", "missing sidecar " + path + ".meta.json");
    nlohmann::json meta = nlohmann::json::parse(ms);

    TriangleGrid g = build_grid(meta.at("T").get<double>(), static_cast<int>(n_tau),
                                meta.at("L").get<double>(), static_cast<int>(n_y),
                                static_cast<int>(d), static_cast<int>(r), static_cast<int>(m));
    TriangleField field(g);
    auto raw = field.raw();
    is.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(double)));
    if (!is) fail(ErrorCode::IoError, "grid::read_nltf", "truncated payload in " + path);
    return field;
}

} // namespace nlpde
