#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hatedet::csv {

using Row = std::vector<std::string>;

/// Reads RFC 4180 records: quoted fields may hold commas, doubled quotes and
/// line breaks. A UTF-8 BOM on the first record is dropped.
std::vector<Row> read(std::istream& in);

void write_row(std::ostream& out, const Row& row);

}  // namespace hatedet::csv
