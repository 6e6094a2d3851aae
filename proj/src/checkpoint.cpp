#include "afd/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "afd/errors.hpp"

namespace afd {

namespace {

void write_u64(std::ostream& os, uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), 8);
}

uint64_t read_u64(std::istream& is) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
    return v;
}

void write_str(std::ostream& os, const std::string& s) {
    write_u64(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_str(std::istream& is) {
    const uint64_t n = read_u64(is);
    std::string s(n, '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    return s;
}

}  // namespace

void Checkpoint::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError("cannot open checkpoint for writing: " + path);
    os.write(kMagic, 8);
    write_str(os, meta_json);
    write_u64(os, stores.size());
    for (const auto& [store_name, store] : stores) {
        write_str(os, store_name);
        write_u64(os, store.count());
        for (const auto& [name, t] : store.arrays()) {
            write_str(os, name);
            write_u64(os, static_cast<uint64_t>(t.rows));
            write_u64(os, static_cast<uint64_t>(t.cols));
            static_assert(sizeof(double) == 8);
            os.write(reinterpret_cast<const char*>(t.data.data()),
                     static_cast<std::streamsize>(t.data.size() * 8));
        }
    }
    if (!os) throw InputError("write failure on checkpoint: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw LoadError("cannot open checkpoint: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0) {
        throw LoadError("bad magic or version in checkpoint: " + path);
    }
    Checkpoint ck;
    ck.meta_json = read_str(is);
    const uint64_t nstores = read_u64(is);
    for (uint64_t s = 0; s < nstores; ++s) {
        const std::string store_name = read_str(is);
        ParamStore store;
        const uint64_t narrays = read_u64(is);
        for (uint64_t a = 0; a < narrays; ++a) {
            const std::string name = read_str(is);
            const int rows = static_cast<int>(read_u64(is));
            const int cols = static_cast<int>(read_u64(is));
            Tensor t(rows, cols);
            is.read(reinterpret_cast<char*>(t.data.data()),
                    static_cast<std::streamsize>(t.data.size() * 8));
            store.create(name, std::move(t));
        }
        ck.stores.emplace(store_name, std::move(store));
    }
    if (!is) throw LoadError("truncated checkpoint: " + path);
    return ck;
}

}  // namespace afd
