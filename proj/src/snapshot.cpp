#include "nemaq/snapshot.hpp"

#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <vector>

namespace nemaq {

namespace {

constexpr char kMagic[4] = {'Q', 'T', 'F', '1'};

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void put_u32_le(unsigned char* out, std::uint32_t v) {
    out[0] = static_cast<unsigned char>(v & 0xff);
    out[1] = static_cast<unsigned char>((v >> 8) & 0xff);
    out[2] = static_cast<unsigned char>((v >> 16) & 0xff);
    out[3] = static_cast<unsigned char>((v >> 24) & 0xff);
}

std::uint32_t get_u32_le(const unsigned char* in) {
    return static_cast<std::uint32_t>(in[0]) | (static_cast<std::uint32_t>(in[1]) << 8) |
           (static_cast<std::uint32_t>(in[2]) << 16) | (static_cast<std::uint32_t>(in[3]) << 24);
}

void put_f64_le(unsigned char* out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int i = 0; i < 8; ++i) out[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
}

double get_f64_le(const unsigned char* in) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(in[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

[[noreturn]] void fail(const std::string& path, const char* what) {
    throw std::runtime_error("snapshot '" + path + "': " + what);
}

SnapshotHeader read_header(std::FILE* f, const std::string& path) {
    unsigned char raw[36];
    if (std::fread(raw, 1, sizeof raw, f) != sizeof raw) fail(path, "truncated header");
    if (std::memcmp(raw, kMagic, 4) != 0) fail(path, "bad magic bytes");
    SnapshotHeader h;
    h.n1 = get_u32_le(raw + 4);
    h.n2 = get_u32_le(raw + 8);
    h.n3 = get_u32_le(raw + 12);
    h.ncomp = get_u32_le(raw + 16);
    h.box_length = get_f64_le(raw + 20);
    h.time = get_f64_le(raw + 28);
    return h;
}

void write_components(std::FILE* f, const std::string& path, std::size_t npoints,
                      const std::vector<const double*>& comps) {
    std::vector<unsigned char> buf(npoints * 8);
    for (const double* c : comps) {
        for (std::size_t i = 0; i < npoints; ++i) put_f64_le(buf.data() + 8 * i, c[i]);
        if (std::fwrite(buf.data(), 1, buf.size(), f) != buf.size()) fail(path, "write failed");
    }
}

void read_components(std::FILE* f, const std::string& path, std::size_t npoints,
                     const std::vector<double*>& comps) {
    std::vector<unsigned char> buf(npoints * 8);
    for (double* c : comps) {
        if (std::fread(buf.data(), 1, buf.size(), f) != buf.size()) fail(path, "truncated data");
        for (std::size_t i = 0; i < npoints; ++i) c[i] = get_f64_le(buf.data() + 8 * i);
    }
    unsigned char extra;
    if (std::fread(&extra, 1, 1, f) == 1) fail(path, "trailing bytes after field data");
}

}  // namespace

SnapshotHeader peek_snapshot(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) fail(path, "cannot open for reading");
    return read_header(f.get(), path);
}

void save_state(const std::string& path, const SpectralGrid& g, const SimState& s) {
    if (s.u.npoints() != g.npoints() || s.q.npoints() != g.npoints())
        throw std::invalid_argument("save_state: state does not match grid size");
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) fail(path, "cannot open for writing");
    unsigned char raw[36];
    std::memcpy(raw, kMagic, 4);
    put_u32_le(raw + 4, static_cast<std::uint32_t>(g.n1()));
    put_u32_le(raw + 8, static_cast<std::uint32_t>(g.n2()));
    put_u32_le(raw + 12, static_cast<std::uint32_t>(g.n3()));
    put_u32_le(raw + 16, 8);
    put_f64_le(raw + 20, g.box_length());
    put_f64_le(raw + 28, s.time);
    if (std::fwrite(raw, 1, sizeof raw, f.get()) != sizeof raw) fail(path, "write failed");
    std::vector<const double*> comps;
    for (int c = 0; c < 3; ++c) comps.push_back(s.u.comp(c));
    for (int c = 0; c < 5; ++c) comps.push_back(s.q.comp(c));
    write_components(f.get(), path, g.npoints(), comps);
    if (std::fflush(f.get()) != 0) fail(path, "flush failed");
}

SimState load_state(const std::string& path, const SpectralGrid& g) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) fail(path, "cannot open for reading");
    const SnapshotHeader h = read_header(f.get(), path);
    if (h.n1 != static_cast<std::uint32_t>(g.n1()) || h.n2 != static_cast<std::uint32_t>(g.n2()) ||
        h.n3 != static_cast<std::uint32_t>(g.n3()))
        fail(path, "grid dimensions do not match the configured grid");
    if (h.ncomp != 8) fail(path, "expected an 8-component flow state");
    if (!(std::abs(h.box_length - g.box_length()) <= 1e-12 * g.box_length()))
        fail(path, "box length does not match the configured grid");
    SimState s;
    s.u = VectorField3(g.npoints());
    s.q = QTensorField(g.npoints());
    s.time = h.time;
    std::vector<double*> comps;
    for (int c = 0; c < 3; ++c) comps.push_back(s.u.comp(c));
    for (int c = 0; c < 5; ++c) comps.push_back(s.q.comp(c));
    read_components(f.get(), path, g.npoints(), comps);
    return s;
}

}  // namespace nemaq
