#ifndef CTDVS_TRACE_CSV_HPP
#define CTDVS_TRACE_CSV_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctdvs/scenario.hpp"

namespace ctdvs {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::string format_number(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

/// CSV schema v1: one row per manager window, fixed column order, '.'
/// decimals, header comments carrying the scenario fingerprint.
inline std::string trace_to_csv(const SimTrace& trace)
{
    std::ostringstream out;
    char fp[32];
    std::snprintf(fp, sizeof fp, "%016llx",
                  static_cast<unsigned long long>(trace.fingerprint));
    out << "# ctdvs-trace v1\n";
    out << "# scheme=" << scheme_name(trace.scheme) << " seed=" << trace.seed
        << " fingerprint=" << fp << "\n";
    out << "t_s,alpha,requested_util,measured_util,energy_instant,energy_avg";
    for (int id : trace.loop_ids)
        out << ",cost_loop" << id;
    out << ",misses_cum";
    for (int id : trace.loop_ids)
        out << ",diverged_loop" << id;
    out << "\n";
    for (const auto& row : trace.rows) {
        out << format_number(row.t) << ',' << format_number(row.alpha) << ','
            << format_number(row.requested_util) << ',' << format_number(row.measured_util)
            << ',' << format_number(row.energy_instant) << ','
            << format_number(row.energy_avg);
        for (double c : row.loop_costs)
            out << ',' << format_number(c);
        out << ',' << row.misses;
        for (auto d : row.diverged)
            out << ',' << int(d);
        out << "\n";
    }
    return out.str();
}

/// Atomic write: the file appears complete or not at all.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content)
{
    namespace fs = std::filesystem;
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot write " + tmp.string());
        out << content;
        if (!out)
            throw IoError("short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec)
        throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

/// Parsed-back numeric table, used by the plotters so that plots can only
/// ever show what the CSV says.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    int column_index(const std::string& name) const
    {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name)
                return static_cast<int>(i);
        return -1;
    }
};

inline CsvTable read_csv_table(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    CsvTable table;
    std::string line;
    bool header_done = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::stringstream ss(line);
        std::string cell;
        if (!header_done) {
            while (std::getline(ss, cell, ','))
                table.columns.push_back(cell);
            header_done = true;
            continue;
        }
        std::vector<double> row;
        while (std::getline(ss, cell, ','))
            row.push_back(std::strtod(cell.c_str(), nullptr));
        if (!row.empty())
            table.rows.push_back(std::move(row));
    }
    return table;
}

} // namespace ctdvs

#endif
