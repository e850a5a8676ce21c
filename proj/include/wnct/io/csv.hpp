#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "wnct/errors.hpp"
#include "wnct/version.hpp"

namespace wnct::io {

/// FNV-1a 64-bit, used to stamp emitted files with the driving config.
inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Shortest round-trip-exact decimal for a double; keeps CSVs byte-stable
/// across runs without dumping 17 digits everywhere.
inline std::string format_double(double v) {
    for (int prec = 1; prec <= 17; ++prec) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(buf, "%lf", &back);
        if (back == v || (v != v && back != back)) return buf;
    }
    return "0";
}

/// CSV with a leading comment line recording tool version and config hash,
/// then a header row, then data rows.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header,
              const std::string& config_hash)
        : f_(path, std::ios::trunc) {
        require(f_.good(), "CsvWriter: cannot open " + path);
        f_ << "# wnct " << kVersion << " config_hash=" << config_hash << "\n";
        write_row(header);
    }

    void write_row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) f_ << ",";
            f_ << cells[i];
        }
        f_ << "\n";
        require(f_.good(), "CsvWriter: write failed");
    }

private:
    std::ofstream f_;
};

} // namespace wnct::io
