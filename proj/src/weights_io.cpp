#include "xgcn/weights_io.hpp"

#include <cstring>
#include <fstream>

#include "xgcn/errors.hpp"
#include "xgcn/hash.hpp"

namespace xgcn {

namespace {

constexpr char kMagic[4] = {'X', 'G', 'W', '1'};
constexpr std::uint32_t kSchemaVersion = 1;

void put_u32(std::string& buf, std::uint32_t x) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double x) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, 8);
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

struct Reader {
    const std::string& buf;
    std::size_t pos;
    const std::string& path;

    void need(std::size_t n) const {
        if (pos + n > buf.size())
            throw DataError(path + ": truncated weight file at byte offset " +
                            std::to_string(pos));
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t x = 0;
        for (int i = 0; i < 4; ++i)
            x |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 4;
        return x;
    }
    double f64() {
        need(8);
        std::uint64_t x = 0;
        for (int i = 0; i < 8; ++i)
            x |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 8;
        double d;
        std::memcpy(&d, &x, 8);
        return d;
    }
    std::string str(std::size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace

void save_weights(GcnModel& model, const std::string& path) {
    std::string buf;
    buf.append(kMagic, 4);
    put_u32(buf, kSchemaVersion);
    for (const NamedTensor& t : named_tensors(model)) {
        put_u32(buf, static_cast<std::uint32_t>(t.name.size()));
        buf.append(t.name);
        put_u32(buf, static_cast<std::uint32_t>(t.dims.size()));
        std::size_t expect = 1;
        for (std::size_t d : t.dims) {
            put_u32(buf, static_cast<std::uint32_t>(d));
            expect *= d;
        }
        if (expect != t.data->size())
            throw DataError("tensor " + t.name + " has inconsistent dims");
        for (double x : *t.data) put_f64(buf, x);
    }
    const std::uint32_t crc = crc32(buf.data() + 4, buf.size() - 4);
    put_u32(buf, crc);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw DataError("write failed: " + path);
}

void load_weights(GcnModel& model, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw DataError(path + ": bad weight file magic");

    const std::uint32_t stored_crc = [&] {
        std::uint32_t x = 0;
        for (int i = 0; i < 4; ++i)
            x |= static_cast<std::uint32_t>(
                     static_cast<unsigned char>(bytes[bytes.size() - 4 + i]))
                 << (8 * i);
        return x;
    }();
    const std::uint32_t actual_crc = crc32(bytes.data() + 4, bytes.size() - 8);
    if (stored_crc != actual_crc)
        throw DataError(path + ": weight file checksum mismatch");

    Reader r{bytes, 4, path};
    const std::uint32_t version = r.u32();
    if (version != kSchemaVersion)
        throw DataError(path + ": unsupported weight schema version " +
                        std::to_string(version));

    const std::size_t end = bytes.size() - 4;
    auto tensors = named_tensors(model);
    std::size_t next = 0;
    while (r.pos < end) {
        const std::uint32_t name_len = r.u32();
        const std::string name = r.str(name_len);
        const std::uint32_t rank = r.u32();
        std::size_t count = 1;
        std::vector<std::size_t> dims;
        for (std::uint32_t i = 0; i < rank; ++i) {
            dims.push_back(r.u32());
            count *= dims.back();
        }
        if (next >= tensors.size())
            throw DataError(path + ": unexpected extra tensor '" + name + "'");
        NamedTensor& t = tensors[next++];
        if (t.name != name)
            throw DataError(path + ": tensor '" + name + "' where '" + t.name +
                            "' was expected");
        if (dims != t.dims)
            throw DataError(path + ": tensor '" + name + "' has mismatched shape");
        t.data->resize(count);
        for (std::size_t i = 0; i < count; ++i) (*t.data)[i] = r.f64();
    }
    if (next != tensors.size())
        throw DataError(path + ": missing tensor '" + tensors[next].name + "'");
}

}  // namespace xgcn
