#include "pectoral/keyvalue.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace pectoral {

namespace {

std::string trim(const std::string& s)
{
    const auto first = std::find_if_not(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
    const auto last = std::find_if_not(s.rbegin(), s.rend(), [](unsigned char c) { return std::isspace(c); }).base();
    return first < last ? std::string(first, last) : std::string();
}

} // namespace

KeyValueFile KeyValueFile::parse(const std::string& text)
{
    KeyValueFile kv;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw KeyValueError("line " + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        if (key.empty())
            throw KeyValueError("line " + std::to_string(line_no) + ": empty key");
        kv.add(std::move(key), trim(line.substr(eq + 1)));
    }
    return kv;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw KeyValueError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse(ss.str());
    } catch (const KeyValueError& e) {
        throw KeyValueError(path.string() + ": " + e.what());
    }
}

std::string KeyValueFile::serialize() const
{
    std::string out;
    for (const auto& [k, v] : entries)
        out += k + " = " + v + "\n";
    return out;
}

void KeyValueFile::add(std::string key, std::string value)
{
    entries.emplace_back(std::move(key), std::move(value));
}

const std::string* KeyValueFile::find(const std::string& key) const
{
    const std::string* found = nullptr;
    for (const auto& [k, v] : entries)
        if (k == key)
            found = &v;
    return found;
}

std::vector<std::string> KeyValueFile::all(const std::string& key) const
{
    std::vector<std::string> out;
    for (const auto& [k, v] : entries)
        if (k == key)
            out.push_back(v);
    return out;
}

double parse_double(const std::string& key, const std::string& value)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used == value.size())
            return v;
    } catch (const std::exception&) {
    }
    throw KeyValueError(key + ": not a number: '" + value + "'");
}

long long parse_integer(const std::string& key, const std::string& value)
{
    long long v = 0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, v);
    if (ec != std::errc() || ptr != end)
        throw KeyValueError(key + ": not an integer: '" + value + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& value)
{
    if (value == "true" || value == "1" || value == "yes")
        return true;
    if (value == "false" || value == "0" || value == "no")
        return false;
    throw KeyValueError(key + ": not a boolean: '" + value + "'");
}

std::string format_double(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

} // namespace pectoral
