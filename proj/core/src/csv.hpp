#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bladerunner::csv {

// Comma-separated, LF-terminated, RFC 4180 quoting.
void write_row(std::ostream& out, std::span<const std::string> fields);

// Splits the whole stream into rows. A trailing CR before LF is dropped.
// Throws MalformedCsv on an unterminated quoted field.
std::vector<std::vector<std::string>> read_rows(std::istream& in);

// Half-up rounding to two decimals, rendered in fixed point.
double round2(double value);
std::string fixed2(double value);
std::string fixed2(const std::optional<double>& value);

std::string boolean(bool value);

// Field parsers; `column` names the field in error messages.
bool parse_bool(std::string_view text, std::string_view column);
int parse_int(std::string_view text, std::string_view column);
double parse_double(std::string_view text, std::string_view column);
std::optional<double> parse_optional_double(std::string_view text, std::string_view column);

}  // namespace bladerunner::csv
