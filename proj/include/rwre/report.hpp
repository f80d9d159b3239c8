#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace rwre::report {

// Deterministic serialization: fixed %.17g doubles, RFC-4180 CSV (CRLF),
// insertion-ordered JSON. Identical inputs give identical bytes, which is
// what makes worker-count-independence checkable at the file level.

std::string fmt(double v);
std::string fmt(std::int64_t v);

// Non-finite doubles have no JSON number representation; encode as strings.
nlohmann::ordered_json json_number(double v);

class Csv {
public:
    Csv(std::ostream& out, const std::vector<std::string>& header);
    void row(const std::vector<std::string>& fields);

private:
    void emit(const std::vector<std::string>& fields);
    std::ostream& out_;
    std::size_t width_;
};

// Report envelope shared by the CLI and the acceptance suite. Execution
// details (worker count, wall time) are deliberately absent: report files
// must not depend on them.
nlohmann::ordered_json envelope(const std::string& command,
                                nlohmann::ordered_json config, std::uint64_t seed);

void write_text_file(const std::string& path, const std::string& text);
void write_json_file(const std::string& path, const nlohmann::ordered_json& j);

}  // namespace rwre::report
