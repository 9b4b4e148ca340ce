#pragma once

// Rectangular table of observations x factors: the input to every
// statistical fit. Cells are typed (categorical, integer, real, boolean);
// the on-disk form is RFC-4180 CSV (quoted fields, CRLF record ends, UTF-8).

#include <algorithm>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "diachron/errors.hpp"
#include "diachron/linalg.hpp"

namespace diachron {

enum class CellType { Categorical, Integer, Real, Boolean };

struct UnknownColumn : DataError {
    explicit UnknownColumn(const std::string& name)
        : DataError("UnknownColumn", "no column named '" + name + "'") {}
};

class FactorTable {
public:
    struct Column {
        std::string name;
        CellType type = CellType::Categorical;
        std::vector<std::string> cells;
    };

    std::vector<Column> columns;
    std::string response;  // name of the response column ("" = none)

    size_t n_rows() const { return columns.empty() ? 0 : columns[0].cells.size(); }

    int column_index(const std::string& name) const {
        for (size_t i = 0; i < columns.size(); ++i)
            if (columns[i].name == name) return static_cast<int>(i);
        return -1;
    }

    const Column& column(const std::string& name) const {
        int i = column_index(name);
        if (i < 0) throw UnknownColumn(name);
        return columns[i];
    }

    double as_real(const std::string& col, size_t row) const {
        const auto& c = column(col);
        const std::string& v = c.cells[row];
        if (c.type == CellType::Boolean) return v == "true" || v == "1" ? 1.0 : 0.0;
        try {
            return std::stod(v);
        } catch (...) {
            throw DataError("NotNumeric", "column '" + col + "' row " + std::to_string(row) +
                                              ": '" + v + "'");
        }
    }

    std::vector<std::string> levels(const std::string& col) const {
        std::set<std::string> s(column(col).cells.begin(), column(col).cells.end());
        return {s.begin(), s.end()};  // sorted: alphabetically first = reference
    }

    void add_column(std::string name, CellType type, std::vector<std::string> cells) {
        columns.push_back({std::move(name), type, std::move(cells)});
    }

    // rows x columns contingency table of two categorical columns
    struct CrossTab {
        std::vector<std::string> row_labels, col_labels;
        Matrix counts;
    };
    CrossTab cross_tab(const std::string& row_col, const std::string& col_col) const {
        CrossTab ct;
        ct.row_labels = levels(row_col);
        ct.col_labels = levels(col_col);
        ct.counts = Matrix(ct.row_labels.size(), ct.col_labels.size());
        const auto& rc = column(row_col);
        const auto& cc = column(col_col);
        for (size_t i = 0; i < n_rows(); ++i) {
            size_t r = std::lower_bound(ct.row_labels.begin(), ct.row_labels.end(), rc.cells[i]) -
                       ct.row_labels.begin();
            size_t c = std::lower_bound(ct.col_labels.begin(), ct.col_labels.end(), cc.cells[i]) -
                       ct.col_labels.begin();
            ct.counts(r, c) += 1;
        }
        return ct;
    }
};

namespace csv_detail {

inline bool needs_quoting(const std::string& s) {
    return s.find_first_of(",\"\r\n") != std::string::npos;
}

inline std::string quote(const std::string& s) {
    if (!needs_quoting(s)) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

} // namespace csv_detail

inline std::string write_csv(const FactorTable& t) {
    std::string out;
    for (size_t j = 0; j < t.columns.size(); ++j) {
        if (j) out += ',';
        out += csv_detail::quote(t.columns[j].name);
    }
    out += "\r\n";
    for (size_t i = 0; i < t.n_rows(); ++i) {
        for (size_t j = 0; j < t.columns.size(); ++j) {
            if (j) out += ',';
            out += csv_detail::quote(t.columns[j].cells[i]);
        }
        out += "\r\n";
    }
    return out;
}

inline std::vector<std::vector<std::string>> parse_csv(const std::string& bytes) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false, field_started = false;
    size_t i = 0;
    auto end_field = [&]() {
        row.push_back(field);
        field.clear();
        field_started = false;
    };
    auto end_row = [&]() {
        end_field();
        rows.push_back(row);
        row.clear();
    };
    while (i < bytes.size()) {
        char c = bytes[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < bytes.size() && bytes[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\r' && i + 1 < bytes.size() && bytes[i + 1] == '\n') {
            end_row();
            ++i;
        } else if (c == '\n') {
            end_row();
        } else {
            field += c;
            field_started = true;
        }
        ++i;
    }
    if (field_started || !field.empty() || !row.empty()) end_row();
    return rows;
}

inline FactorTable read_csv(const std::string& bytes,
                            const std::map<std::string, CellType>& types = {}) {
    auto rows = parse_csv(bytes);
    FactorTable t;
    if (rows.empty()) return t;
    for (const auto& name : rows[0]) {
        CellType ty = CellType::Categorical;
        if (auto it = types.find(name); it != types.end()) ty = it->second;
        t.columns.push_back({name, ty, {}});
    }
    for (size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() == 1 && rows[i][0].empty()) continue;  // trailing blank line
        if (rows[i].size() != t.columns.size())
            throw DataError("RaggedCsv", "row " + std::to_string(i + 1) + " has " +
                                             std::to_string(rows[i].size()) + " fields, expected " +
                                             std::to_string(t.columns.size()));
        for (size_t j = 0; j < t.columns.size(); ++j) t.columns[j].cells.push_back(rows[i][j]);
    }
    // infer numeric types for untyped columns
    for (auto& c : t.columns) {
        if (types.count(c.name) || c.cells.empty()) continue;
        bool all_int = true, all_real = true;
        for (const auto& v : c.cells) {
            char* endp = nullptr;
            std::strtod(v.c_str(), &endp);
            bool is_num = endp && *endp == '\0' && !v.empty();
            if (!is_num) {
                all_real = false;
                all_int = false;
                break;
            }
            if (v.find_first_of(".eE") != std::string::npos) all_int = false;
        }
        if (all_int) c.type = CellType::Integer;
        else if (all_real) c.type = CellType::Real;
    }
    return t;
}

} // namespace diachron
