#include "cardiotwin/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cardiotwin/errors.hpp"

namespace cardiotwin {

std::string fmt_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw ValidationError("csv: missing column '" + name + "'");
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open csv file: " + path);

    CsvTable table;
    std::string line;
    bool header_seen = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::size_t start = 1;
            if (start < line.size() && line[start] == ' ') ++start;
            table.comments.push_back(line.substr(start));
            continue;
        }

        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();

        if (!header_seen) {
            table.header = std::move(cells);
            header_seen = true;
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw ValidationError("csv: row " + std::to_string(line_no) + " in " + path + " has " +
                                  std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(table.header.size()));
        }
        std::vector<double> row(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            char* end = nullptr;
            row[i] = std::strtod(cells[i].c_str(), &end);
            if (end == cells[i].c_str() || *end != '\0') {
                throw ValidationError("csv: non-numeric cell '" + cells[i] + "' at line " +
                                      std::to_string(line_no) + " in " + path);
            }
        }
        table.rows.push_back(std::move(row));
    }
    if (!header_seen) throw ValidationError("csv: no header row in " + path);
    return table;
}

void write_csv(const std::string& path, const std::vector<std::string>& comments,
               const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw FileError("cannot write csv file: " + path);
    for (const std::string& c : comments) out << "# " << c << '\n';
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << fmt_g9(row[i]);
        out << '\n';
    }
    if (!out) throw FileError("write failed for csv file: " + path);
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash_hex(const std::string& canonical_config) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical_config)));
    return buf;
}

std::vector<std::string> meta_comments(const std::string& tool, const std::map<std::string, std::string>& kv) {
    std::vector<std::string> out;
    out.push_back("generator=cardiotwin " + tool);
    for (const auto& [k, v] : kv) out.push_back(k + "=" + v);
    return out;
}

}  // namespace cardiotwin
