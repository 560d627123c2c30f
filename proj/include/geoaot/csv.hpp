// Small CSV layer for the harness's tabular inputs and outputs. Quoted
// fields with doubled-quote escapes, CRLF tolerated on input; every table
// the harness emits parses back through parse_csv unchanged.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace geoaot {

class CsvError : public std::runtime_error {
public:
    CsvError(std::size_t line, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;  // each row matches header size

    // Column index by header name; throws when absent.
    std::size_t col(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw CsvError(1, "missing required column '" + name + "'");
    }
};

inline CsvTable parse_csv(std::string_view text) {
    CsvTable table;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;

    auto end_field = [&] {
        row.push_back(field);
        field.clear();
        field_started = false;
    };
    auto end_row = [&](std::size_t at_line) {
        end_field();
        // A fully empty line is a row separator artifact, not a record.
        if (row.size() == 1 && row[0].empty()) {
            row.clear();
            return;
        }
        if (table.header.empty()) {
            table.header = row;
        } else {
            if (row.size() != table.header.size())
                throw CsvError(at_line, "expected " + std::to_string(table.header.size()) +
                                            " fields, got " + std::to_string(row.size()));
            table.rows.push_back(row);
        }
        row.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field.empty())
                    throw CsvError(line, "quote inside unquoted field");
                in_quotes = true;
                field_started = true;
                break;
            case ',': end_field(); break;
            case '\r':
                break;  // swallowed; \n ends the row
            case '\n':
                end_row(line);
                ++line;
                break;
            default:
                field.push_back(c);
                field_started = true;
                break;
        }
    }
    if (in_quotes) throw CsvError(line, "unterminated quoted field");
    if (!field.empty() || field_started || !row.empty()) end_row(line);
    if (table.header.empty()) throw CsvError(1, "empty CSV: no header row");
    return table;
}

inline std::string csv_escape(std::string_view field) {
    const bool needs_quotes = field.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!needs_quotes) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

inline std::string format_csv(const CsvTable& table) {
    std::string out;
    auto emit_row = [&](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out.push_back(',');
            out += csv_escape(row[i]);
        }
        out.push_back('\n');
    };
    emit_row(table.header);
    for (const auto& r : table.rows) emit_row(r);
    return out;
}

}  // namespace geoaot
