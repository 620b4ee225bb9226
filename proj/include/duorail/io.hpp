#pragma once

/// CSV readers/writers for count datasets, 4x4 complex matrices, and dip
/// curves.  All floating-point values are written with %.17g so that
/// doubles round-trip exactly and repeated runs are byte-identical.

#include "linalg.hpp"
#include "tomography.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace duorail {

/// I/O failure (missing file, malformed contents, write error).
class io_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

inline double parse_double(const std::string& text, const std::string& context) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        while (used < text.size() &&
               (text[used] == ' ' || text[used] == '\r' || text[used] == '\t')) {
            ++used;
        }
        if (used != text.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw io_error(context + ": cannot parse number '" + text + "'");
    }
}

inline std::string strip_cr(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.pop_back();
    return s;
}

inline std::ofstream open_for_write(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    return out;
}

inline std::ifstream open_for_read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "' for reading");
    return in;
}

}  // namespace detail

/// Writes the 36-row counts CSV: header basis_q1,basis_q2,outcome,counts;
/// settings in XX..ZZ order, outcomes pp,pm,mp,mm.
inline void write_counts_csv(const std::string& path, const CountsDataset& data) {
    data.validate();
    std::ofstream out = detail::open_for_write(path);
    out << "basis_q1,basis_q2,outcome,counts\n";
    for (int si = 0; si < 9; ++si) {
        const MeasurementSetting s = all_settings()[si];
        for (int oi = 0; oi < 4; ++oi) {
            out << basis_letter(s.q1) << ',' << basis_letter(s.q2) << ','
                << outcome_labels()[oi] << ',' << format_double(data.counts[si][oi])
                << '\n';
        }
    }
    if (!out) throw io_error("write failed for '" + path + "'");
}

/// Reads the counts CSV (any row order, every setting/outcome pair exactly
/// once).  The file carries no acquisition metadata, so shots_per_setting
/// is recovered as total counts / 9 — exact for exact-frequency data and a
/// consistent estimate for sampled data (the reconstruction only uses the
/// counts themselves).
inline CountsDataset read_counts_csv(const std::string& path) {
    std::ifstream in = detail::open_for_read(path);
    std::string line;
    if (!std::getline(in, line) ||
        detail::strip_cr(line) != "basis_q1,basis_q2,outcome,counts") {
        throw io_error(path + ": expected header 'basis_q1,basis_q2,outcome,counts'");
    }
    CountsDataset data;
    std::array<std::array<bool, 4>, 9> seen{};
    int rows = 0;
    while (std::getline(in, line)) {
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        const std::vector<std::string> fields = detail::split_csv_line(line);
        if (fields.size() != 4) {
            throw io_error(path + ": expected 4 fields, got row '" + line + "'");
        }
        if (fields[0].size() != 1 || fields[1].size() != 1) {
            throw io_error(path + ": bad basis labels in row '" + line + "'");
        }
        int si = -1, oi = -1;
        try {
            const PauliBasis b1 = basis_from_letter(fields[0][0]);
            const PauliBasis b2 = basis_from_letter(fields[1][0]);
            for (int i = 0; i < 9; ++i) {
                if (all_settings()[i].q1 == b1 && all_settings()[i].q2 == b2) si = i;
            }
        } catch (const std::exception&) {
            throw io_error(path + ": bad basis labels in row '" + line + "'");
        }
        for (int i = 0; i < 4; ++i) {
            if (fields[2] == outcome_labels()[i]) oi = i;
        }
        if (si < 0 || oi < 0) {
            throw io_error(path + ": unknown setting/outcome in row '" + line + "'");
        }
        if (seen[si][oi]) {
            throw io_error(path + ": duplicate row for " + fields[0] + fields[1] + " " +
                           fields[2]);
        }
        seen[si][oi] = true;
        data.counts[si][oi] = detail::parse_double(fields[3], path);
        ++rows;
    }
    if (rows != 36) {
        throw io_error(path + ": expected 36 data rows, found " + std::to_string(rows));
    }
    data.shots_per_setting = data.total() / 9.0;
    data.validate();
    return data;
}

/// Writes a 4x4 complex matrix as 8 CSV rows: four rows of real parts, then
/// four rows of imaginary parts.
inline void write_matrix_csv(const std::string& path, const Matrix4cd& m) {
    std::ofstream out = detail::open_for_write(path);
    for (int pass = 0; pass < 2; ++pass) {
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 4; ++c) {
                if (c) out << ',';
                out << format_double(pass == 0 ? m(r, c).real() : m(r, c).imag());
            }
            out << '\n';
        }
    }
    if (!out) throw io_error("write failed for '" + path + "'");
}

/// Reads the 8-row real/imaginary block CSV written by write_matrix_csv.
inline Matrix4cd read_matrix_csv(const std::string& path) {
    std::ifstream in = detail::open_for_read(path);
    std::string line;
    std::vector<std::array<double, 4>> rows;
    while (std::getline(in, line)) {
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        const std::vector<std::string> fields = detail::split_csv_line(line);
        if (fields.size() != 4) {
            throw io_error(path + ": expected 4 fields per row, got '" + line + "'");
        }
        std::array<double, 4> row{};
        for (int c = 0; c < 4; ++c) row[c] = detail::parse_double(fields[c], path);
        rows.push_back(row);
    }
    if (rows.size() != 8) {
        throw io_error(path + ": expected 8 rows (4 real + 4 imaginary), found " +
                       std::to_string(rows.size()));
    }
    Matrix4cd m;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            m(r, c) = complexd{rows[r][c], rows[r + 4][c]};
        }
    }
    return m;
}

/// Writes a dip curve as two-column CSV with header delay_ps,rate.
inline void write_curve_csv(const std::string& path, const std::vector<double>& delays_ps,
                            const std::vector<double>& rates) {
    if (delays_ps.size() != rates.size()) {
        throw std::invalid_argument("write_curve_csv: length mismatch");
    }
    std::ofstream out = detail::open_for_write(path);
    out << "delay_ps,rate\n";
    for (std::size_t i = 0; i < delays_ps.size(); ++i) {
        out << format_double(delays_ps[i]) << ',' << format_double(rates[i]) << '\n';
    }
    if (!out) throw io_error("write failed for '" + path + "'");
}

/// Writes arbitrary text, for report files serialized by the caller.
inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out = detail::open_for_write(path);
    out << text;
    if (!out) throw io_error("write failed for '" + path + "'");
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in = detail::open_for_read(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw io_error("read failed for '" + path + "'");
    return buf.str();
}

}  // namespace duorail
