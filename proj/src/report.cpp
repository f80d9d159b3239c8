#include "rwre/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "rwre/errors.hpp"
#include "rwre/version.hpp"

namespace rwre::report {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt(std::int64_t v) { return std::to_string(v); }

nlohmann::ordered_json json_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

Csv::Csv(std::ostream& out, const std::vector<std::string>& header)
    : out_(out), width_(header.size()) {
    emit(header);
}

void Csv::row(const std::vector<std::string>& fields) {
    if (fields.size() != width_)
        throw NumericalFault("csv row width mismatch");
    emit(fields);
}

void Csv::emit(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out_ << ',';
        const std::string& f = fields[i];
        if (f.find_first_of(",\"\r\n") != std::string::npos) {
            out_ << '"';
            for (char c : f) {
                if (c == '"') out_ << '"';
                out_ << c;
            }
            out_ << '"';
        } else {
            out_ << f;
        }
    }
    out_ << "\r\n";  // RFC 4180
}

nlohmann::ordered_json envelope(const std::string& command,
                                nlohmann::ordered_json config, std::uint64_t seed) {
    nlohmann::ordered_json j;
    j["tool"] = "rwre";
    j["version"] = kVersion;
    j["command"] = command;
    j["seed"] = seed;
    j["config"] = std::move(config);
    return j;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write file: " + path);
    out << text;
}

void write_json_file(const std::string& path, const nlohmann::ordered_json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

}  // namespace rwre::report
