#include "smaflow/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace smaflow {

namespace {

void to_little(double* p, std::size_t n) {
    if constexpr (std::endian::native == std::endian::big) {
        for (std::size_t i = 0; i < n; ++i) {
            auto v = std::bit_cast<std::uint64_t>(p[i]);
            v = __builtin_bswap64(v);
            p[i] = std::bit_cast<double>(v);
        }
    }
}

}  // namespace

void write_field(const std::string& path, const RealField& f, const nlohmann::json& extra) {
    if (f.empty()) throw FieldIoError("refusing to write an empty field");
    nlohmann::json h;
    h["format"] = "smaflow-field";
    h["version"] = 1;
    h["dims"] = f.grid().n;
    h["periods"] = f.grid().L;
    h["dtype"] = "float64";
    h["byte_order"] = "little";
    h["order"] = "x4-fastest";
    h["count"] = f.size();
    if (!extra.is_null()) h["meta"] = extra;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw FieldIoError("cannot open " + path + " for writing");
    std::string line = h.dump();
    out.write(line.data(), std::streamsize(line.size()));
    out.put('\n');
    RealField::Storage buf(f.storage());
    to_little(buf.data(), buf.size());
    out.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size() * sizeof(double)));
    if (!out) throw FieldIoError("write failed for " + path);
}

RealField read_field(const std::string& path, nlohmann::json* header_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FieldIoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw FieldIoError("missing header in " + path);
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
        throw FieldIoError("corrupt header in " + path + ": " + e.what());
    }
    TorusGrid g;
    std::size_t count = 0;
    try {
        if (h.at("format") != "smaflow-field") throw FieldIoError("unknown format tag");
        if (h.at("dtype") != "float64" || h.at("byte_order") != "little")
            throw FieldIoError("unsupported dtype or byte order");
        auto dims = h.at("dims").get<std::array<std::size_t, 4>>();
        auto per = h.at("periods").get<std::array<double, 4>>();
        count = h.at("count").get<std::size_t>();
        g = make_grid(dims, per);
    } catch (const FieldIoError&) {
        throw;
    } catch (const std::exception& e) {
        throw FieldIoError("corrupt header in " + path + ": " + e.what());
    }
    if (count != g.size())
        throw FieldIoError("header error in " + path + ": count " + std::to_string(count) +
                           " does not match dims (" + std::to_string(g.size()) + ")");

    RealField::Storage data(count);
    in.read(reinterpret_cast<char*>(data.data()), std::streamsize(count * sizeof(double)));
    if (std::size_t(in.gcount()) != count * sizeof(double))
        throw FieldIoError("length mismatch in " + path + ": expected " + std::to_string(count * sizeof(double)) +
                           " payload bytes, got " + std::to_string(in.gcount()));
    if (in.peek() != std::char_traits<char>::eof())
        throw FieldIoError("length mismatch in " + path + ": trailing bytes after payload");
    to_little(data.data(), data.size());
    if (header_out) *header_out = h;
    return RealField(g, std::move(data));
}

RealField read_field(const std::string& path, const TorusGrid& expected) {
    RealField f = read_field(path);
    if (!(f.grid() == expected)) throw FieldIoError("header error in " + path + ": grid does not match configuration");
    return f;
}

}  // namespace smaflow
