#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace fscat {

using json = nlohmann::json;

// All emitters are deterministic: fixed formatting, sorted JSON keys, no
// timestamps or host details, so reruns with the same config are
// byte-identical.

// Scientific notation with 17 significant digits: round-trips any double.
std::string format_sci(double x);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;  // equal lengths
};

void write_csv(const std::string& path, const Table& table);

// Raw column dump: magic "FSCB0001", u64 n_cols, u64 n_rows, per-column
// u32 name length + bytes, then per-column f64 little-endian data.
void write_binary(const std::string& path, const Table& table);

void write_json_file(const std::string& path, const json& j);

}  // namespace fscat
