#include "hydronet/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace hydronet {

namespace fs = std::filesystem;

void atomic_write(const fs::path& path, const std::string& content) {
    const fs::path dir = path.parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ----------------------------------------------------------------------------
// CSV
// ----------------------------------------------------------------------------

std::string CsvTable::to_string() const {
    std::string out = join(header, ",") + "\n";
    for (const auto& row : rows) out += join(row, ",") + "\n";
    return out;
}

CsvTable CsvTable::parse(const std::string& text, const std::string& context) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            std::size_t pos = line.find(',', start);
            if (pos == std::string::npos) {
                cells.push_back(line.substr(start));
                break;
            }
            cells.push_back(line.substr(start, pos - start));
            start = pos + 1;
        }
        if (lineno == 1) {
            table.header = std::move(cells);
        } else {
            if (cells.size() != table.header.size()) {
                throw ParseError(context + ": line " + std::to_string(lineno) + " has " +
                                 std::to_string(cells.size()) + " cells, expected " +
                                 std::to_string(table.header.size()));
            }
            table.rows.push_back(std::move(cells));
        }
    }
    if (table.header.empty()) throw ParseError(context + ": empty CSV");
    return table;
}

std::string timeseries_csv(const std::vector<std::string>& ids, const Matrix& values,
                           std::int64_t start_epoch, int timestep_seconds) {
    if (values.cols() != static_cast<Eigen::Index>(ids.size())) {
        throw std::invalid_argument("timeseries_csv: id/column mismatch");
    }
    std::string out = "time";
    for (const auto& id : ids) out += "," + id;
    out += "\n";
    for (Eigen::Index t = 0; t < values.rows(); ++t) {
        out += iso8601_utc(start_epoch + static_cast<std::int64_t>(t) * timestep_seconds);
        for (Eigen::Index c = 0; c < values.cols(); ++c) {
            out += "," + format_double(values(t, c));
        }
        out += "\n";
    }
    return out;
}

TimeseriesData parse_timeseries_csv(const std::string& text, const std::string& context) {
    CsvTable table = CsvTable::parse(text, context);
    if (table.header.empty() || table.header[0] != "time") {
        throw ParseError(context + ": first column must be 'time'");
    }
    TimeseriesData data;
    data.ids.assign(table.header.begin() + 1, table.header.end());
    data.values.resize(static_cast<Eigen::Index>(table.rows.size()),
                       static_cast<Eigen::Index>(data.ids.size()));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        if (r == 0) data.start_epoch = parse_iso8601_utc(table.rows[r][0]);
        for (std::size_t c = 1; c < table.rows[r].size(); ++c) {
            try {
                data.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c - 1)) =
                    std::stod(table.rows[r][c]);
            } catch (const std::exception&) {
                throw ParseError(context + ": non-numeric cell '" + table.rows[r][c] +
                                 "' at row " + std::to_string(r + 2));
            }
        }
    }
    return data;
}

}  // namespace hydronet
