#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace xaudit {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows; // each row has header.size() cells

    int column_index(const std::string& name) const; // -1 if absent
};

// RFC 4180 subset: comma separator, optional double-quoted fields with "" as
// the embedded quote, CRLF or LF line endings. The first record is the header.
CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(const std::string& text);

void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);
std::string csv_to_string(const std::vector<std::string>& header,
                          const std::vector<std::vector<std::string>>& rows);

// Round-trip ("%.17g") formatting used for all persisted doubles.
std::string format_double(double value);

} // namespace xaudit
