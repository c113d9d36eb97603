#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace cardiotwin {

/// Doubles in CSV artifacts carry 9 significant digits.
std::string fmt_g9(double v);

/// A parsed CSV artifact: leading '#' comment lines (verbatim, marker
/// stripped), one header row, numeric data rows.
struct CsvTable {
    std::vector<std::string> comments;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const;  // throws if absent
};

CsvTable read_csv(const std::string& path);

/// Writes comments ('# ' prefixed), then the header, then rows via fmt_g9.
void write_csv(const std::string& path, const std::vector<std::string>& comments,
               const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows);

/// FNV-1a 64-bit over a canonical config dump; embedded in artifact metadata
/// so outputs can be traced back to the exact configuration that made them.
std::uint64_t fnv1a64(const std::string& text);
std::string config_hash_hex(const std::string& canonical_config);

/// "key=value" comment lines shared by every artifact writer.
std::vector<std::string> meta_comments(const std::string& tool, const std::map<std::string, std::string>& kv);

}  // namespace cardiotwin
