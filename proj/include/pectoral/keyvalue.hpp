#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pectoral {

class KeyValueError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Ordered "key = value" entries. Blank lines and '#' comments are skipped;
 * keys may repeat (phantom blobs use that).
 */
struct KeyValueFile {
    std::vector<std::pair<std::string, std::string>> entries;

    static KeyValueFile parse(const std::string& text);
    static KeyValueFile load(const std::filesystem::path& path);
    std::string serialize() const;

    void add(std::string key, std::string value);
    /// Last value for key, or nullptr.
    const std::string* find(const std::string& key) const;
    std::vector<std::string> all(const std::string& key) const;
};

double parse_double(const std::string& key, const std::string& value);
long long parse_integer(const std::string& key, const std::string& value);
bool parse_bool(const std::string& key, const std::string& value);
/// Shortest text that parses back to exactly the same double.
std::string format_double(double v);

} // namespace pectoral
