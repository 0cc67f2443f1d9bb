/**
 * Tabular results and their CSV / JSON renderings.
 *
 * Doubles are written in shortest round-trip form, so a value read back from
 * either format is the same double that was computed.
 */
#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace qkd3 {

inline constexpr const char* kToolVersion = "qkd3 1.0.0";

using Cell = std::variant<std::monostate, double, std::int64_t, std::string>;

inline std::string format_double(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (res.ec != std::errc{}) {
        throw std::runtime_error("format_double: conversion failed");
    }
    return std::string(buf, res.ptr);
}

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    nlohmann::ordered_json metadata = nlohmann::ordered_json::object();
    /// Rows that could not be computed, as "row <i>: <reason>".
    std::vector<std::string> failures;

    void add_row(std::vector<Cell> row) {
        if (row.size() != columns.size()) {
            throw std::logic_error("Table::add_row: width mismatch");
        }
        rows.push_back(std::move(row));
    }
};

namespace detail {

inline std::string csv_cell(const Cell& c) {
    return std::visit(
        [](const auto& v) -> std::string {
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, std::monostate>) {
                return "";
            } else if constexpr (std::is_same_v<V, double>) {
                return format_double(v);
            } else if constexpr (std::is_same_v<V, std::int64_t>) {
                return std::to_string(v);
            } else {
                if (v.find_first_of(",\"\n") == std::string::npos) {
                    return v;
                }
                std::string quoted = "\"";
                for (char ch : v) {
                    if (ch == '"') {
                        quoted += '"';
                    }
                    quoted += ch;
                }
                return quoted + "\"";
            }
        },
        c);
}

inline nlohmann::ordered_json json_cell(const Cell& c) {
    return std::visit(
        [](const auto& v) -> nlohmann::ordered_json {
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, std::monostate>) {
                return nullptr;
            } else if constexpr (std::is_same_v<V, double>) {
                if (!std::isfinite(v)) {
                    return format_double(v);
                }
                return v;
            } else {
                return v;
            }
        },
        c);
}

}  // namespace detail

/// CSV with `#`-prefixed metadata lines, a header row, then data rows.
inline void write_csv(const Table& t, std::ostream& os) {
    for (const auto& [key, value] : t.metadata.items()) {
        os << "# " << key << ": " << value.dump() << '\n';
    }
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
        os << (i ? "," : "") << t.columns[i];
    }
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            os << (i ? "," : "") << detail::csv_cell(row[i]);
        }
        os << '\n';
    }
}

inline nlohmann::ordered_json table_to_json(const Table& t) {
    nlohmann::ordered_json out;
    out["metadata"] = t.metadata;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& row : t.rows) {
        nlohmann::ordered_json obj = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < row.size(); ++i) {
            obj[t.columns[i]] = detail::json_cell(row[i]);
        }
        rows.push_back(std::move(obj));
    }
    out["rows"] = std::move(rows);
    return out;
}

/// {"metadata": {...}, "rows": [{column: value, ...}, ...]}
inline void write_json(const Table& t, std::ostream& os) { os << table_to_json(t).dump(2) << '\n'; }

inline std::string render(const Table& t, const std::string& format) {
    std::ostringstream os;
    if (format == "csv") {
        write_csv(t, os);
    } else if (format == "json") {
        write_json(t, os);
    } else {
        throw std::invalid_argument("unknown output format '" + format + "' (expected csv or json)");
    }
    return os.str();
}

}  // namespace qkd3
