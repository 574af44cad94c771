#include "hatedet/csv.hpp"

#include <istream>
#include <iterator>
#include <ostream>

#include "hatedet/errors.hpp"

namespace hatedet::csv {

std::vector<Row> read(std::istream& in) {
    const std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    std::size_t pos = 0;
    if (data.rfind("\xEF\xBB\xBF", 0) == 0) pos = 3;

    std::vector<Row> rows;
    Row row;
    std::string field;
    bool quoted = false;
    bool field_started = false;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        if (!(row.size() == 1 && row.front().empty())) rows.push_back(std::move(row));
        row.clear();
    };

    while (pos < data.size()) {
        const char c = data[pos];
        if (quoted) {
            if (c == '"') {
                if (pos + 1 < data.size() && data[pos + 1] == '"') {
                    field.push_back('"');
                    ++pos;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            ++pos;
            continue;
        }
        switch (c) {
            case '"':
                if (field_started && !field.empty()) {
                    throw SchemaError("stray quote inside unquoted field at byte " + std::to_string(pos));
                }
                quoted = true;
                field_started = true;
                break;
            case ',':
                end_field();
                break;
            case '\r':
                if (pos + 1 < data.size() && data[pos + 1] == '\n') ++pos;
                end_row();
                break;
            case '\n':
                end_row();
                break;
            default:
                field.push_back(c);
                field_started = true;
        }
        ++pos;
    }
    if (quoted) throw SchemaError("unterminated quoted field");
    if (field_started || !field.empty() || !row.empty()) end_row();
    return rows;
}

void write_row(std::ostream& out, const Row& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out << ',';
        const std::string& f = row[i];
        if (f.find_first_of(",\"\r\n") == std::string::npos) {
            out << f;
            continue;
        }
        out << '"';
        for (char c : f) {
            if (c == '"') out << '"';
            out << c;
        }
        out << '"';
    }
    out << '\n';
}

}  // namespace hatedet::csv
