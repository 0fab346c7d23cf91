#include "csv.hpp"

#include "bladerunner/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <iterator>

namespace bladerunner::csv {

namespace {

bool needs_quotes(std::string_view field) {
    return field.find_first_of(",\"\n\r") != std::string_view::npos;
}

[[noreturn]] void bad_field(std::string_view column, std::string_view text, std::string_view what) {
    throw MalformedCsv("column '" + std::string(column) + "': '" + std::string(text) + "' is not " +
                       std::string(what));
}

}  // namespace

void write_row(std::ostream& out, std::span<const std::string> fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) out << ',';
        const std::string& field = fields[i];
        if (!needs_quotes(field)) {
            out << field;
            continue;
        }
        out << '"';
        for (const char c : field) {
            if (c == '"') out << '"';
            out << c;
        }
        out << '"';
    }
    out << '\n';
}

std::vector<std::vector<std::string>> read_rows(std::istream& in) {
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool row_started = false;

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
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                row_started = true;
                break;
            case ',':
                row.push_back(std::move(field));
                field.clear();
                row_started = true;
                break;
            case '\r':
                if (i + 1 < text.size() && text[i + 1] == '\n') break;
                field.push_back(c);
                row_started = true;
                break;
            case '\n':
                row.push_back(std::move(field));
                field.clear();
                rows.push_back(std::move(row));
                row.clear();
                row_started = false;
                break;
            default:
                field.push_back(c);
                row_started = true;
        }
    }
    if (in_quotes) {
        throw MalformedCsv("unterminated quoted field");
    }
    if (row_started) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

double round2(double value) { return std::floor(value * 100.0 + 0.5) / 100.0; }

std::string fixed2(double value) {
    char buffer[64];
    const double rounded = round2(value);
    std::snprintf(buffer, sizeof(buffer), "%.2f", rounded == 0.0 ? 0.0 : rounded);
    return buffer;
}

std::string fixed2(const std::optional<double>& value) { return value ? fixed2(*value) : std::string(); }

std::string boolean(bool value) { return value ? "true" : "false"; }

bool parse_bool(std::string_view text, std::string_view column) {
    if (text == "true") return true;
    if (text == "false") return false;
    bad_field(column, text, "a boolean");
}

int parse_int(std::string_view text, std::string_view column) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        bad_field(column, text, "an integer");
    }
    return value;
}

double parse_double(std::string_view text, std::string_view column) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
        bad_field(column, text, "a number");
    }
    return value;
}

std::optional<double> parse_optional_double(std::string_view text, std::string_view column) {
    if (text.empty()) return std::nullopt;
    return parse_double(text, column);
}

}  // namespace bladerunner::csv
