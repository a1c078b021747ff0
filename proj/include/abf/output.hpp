#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace abf::io {

/// Doubles formatted with 17 significant digits (round-trip exact).
std::string fmt17(double v);

/// Minimal insertion-ordered JSON value with deterministic dumping; numbers
/// are emitted via fmt17 so re-runs produce byte-identical files.
class Json {
public:
    static Json object();
    static Json array();
    static Json number(double v);
    static Json integer(long long v);
    static Json string(std::string v);
    static Json boolean(bool v);

    Json& set(const std::string& key, Json v);  // object members, insertion order
    Json& push(Json v);                         // array elements

    std::string dump(int indent = 2) const;

private:
    enum class Kind { object, array, number, integer, string, boolean };
    Kind kind_ = Kind::object;
    double num_ = 0.0;
    long long int_ = 0;
    bool bool_ = false;
    std::string str_;
    std::vector<std::pair<std::string, Json>> members_;
    std::vector<Json> elements_;

    void dump_to(std::string& out, int indent, int depth) const;
};

void ensure_directory(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace abf::io
