#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace tspmgs {

using CsvRow = std::vector<std::string>;

/// RFC 4180 reader: quoted fields may contain commas, doubled quotes and
/// newlines; CRLF line endings and a UTF-8 BOM are accepted. Blank lines are
/// dropped. Throws InputError on an unterminated quote.
std::vector<CsvRow> read_csv(std::istream& in);

/// Quotes a field only when it needs it.
std::string csv_field(std::string_view text);

void write_csv_row(std::ostream& out, const CsvRow& row);

}  // namespace tspmgs
