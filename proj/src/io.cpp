#include "fscat/io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace fscat {

std::string format_sci(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.16e", x);
    return buf;
}

namespace {

void check_table(const Table& table) {
    if (table.header.size() != table.columns.size())
        throw std::invalid_argument("table: header/column count mismatch");
    for (const auto& col : table.columns)
        if (col.size() != table.columns.front().size())
            throw std::invalid_argument("table: ragged columns");
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

}  // namespace

void write_csv(const std::string& path, const Table& table) {
    check_table(table);
    std::ofstream out = open_out(path);
    for (std::size_t c = 0; c < table.header.size(); ++c)
        out << (c ? "," : "") << table.header[c];
    out << "\n";
    const std::size_t rows = table.columns.empty() ? 0 : table.columns.front().size();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < table.columns.size(); ++c)
            out << (c ? "," : "") << format_sci(table.columns[c][r]);
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

void write_binary(const std::string& path, const Table& table) {
    check_table(table);
    std::ofstream out = open_out(path, std::ios::out | std::ios::binary);
    out.write("FSCB0001", 8);
    auto put_u64 = [&out](std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        out.write(reinterpret_cast<const char*>(b), 8);
    };
    auto put_u32 = [&out](std::uint32_t v) {
        unsigned char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        out.write(reinterpret_cast<const char*>(b), 4);
    };
    const std::uint64_t rows = table.columns.empty() ? 0 : table.columns.front().size();
    put_u64(table.columns.size());
    put_u64(rows);
    for (const auto& name : table.header) {
        put_u32(static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
    }
    for (const auto& col : table.columns) {
        static_assert(sizeof(double) == 8);
        for (double v : col) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, 8);
            unsigned char b[8];
            for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
            out.write(reinterpret_cast<const char*>(b), 8);
        }
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out = open_out(path);
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace fscat
