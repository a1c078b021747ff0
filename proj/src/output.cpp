#include "abf/output.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace abf::io {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Json Json::object() { return Json{}; }

Json Json::array() {
    Json j;
    j.kind_ = Kind::array;
    return j;
}

Json Json::number(double v) {
    Json j;
    j.kind_ = Kind::number;
    j.num_ = v;
    return j;
}

Json Json::integer(long long v) {
    Json j;
    j.kind_ = Kind::integer;
    j.int_ = v;
    return j;
}

Json Json::string(std::string v) {
    Json j;
    j.kind_ = Kind::string;
    j.str_ = std::move(v);
    return j;
}

Json Json::boolean(bool v) {
    Json j;
    j.kind_ = Kind::boolean;
    j.bool_ = v;
    return j;
}

Json& Json::set(const std::string& key, Json v) {
    if (kind_ != Kind::object) throw std::logic_error("Json::set on non-object");
    for (auto& [k, existing] : members_) {
        if (k == key) {
            existing = std::move(v);
            return *this;
        }
    }
    members_.emplace_back(key, std::move(v));
    return *this;
}

Json& Json::push(Json v) {
    if (kind_ != Kind::array) throw std::logic_error("Json::push on non-array");
    elements_.push_back(std::move(v));
    return *this;
}

namespace {
void append_escaped(std::string& out, const std::string& s) {
    out += '"';
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default: out += c;
        }
    }
    out += '"';
}
}  // namespace

void Json::dump_to(std::string& out, int indent, int depth) const {
    const std::string pad(static_cast<std::size_t>(indent) * depth, ' ');
    const std::string pad_in(static_cast<std::size_t>(indent) * (depth + 1), ' ');
    switch (kind_) {
        case Kind::number: out += fmt17(num_); return;
        case Kind::integer: out += std::to_string(int_); return;
        case Kind::boolean: out += bool_ ? "true" : "false"; return;
        case Kind::string: append_escaped(out, str_); return;
        case Kind::object: {
            if (members_.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            for (std::size_t i = 0; i < members_.size(); ++i) {
                out += pad_in;
                append_escaped(out, members_[i].first);
                out += ": ";
                members_[i].second.dump_to(out, indent, depth + 1);
                if (i + 1 < members_.size()) out += ',';
                out += '\n';
            }
            out += pad + "}";
            return;
        }
        case Kind::array: {
            if (elements_.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < elements_.size(); ++i) {
                out += pad_in;
                elements_[i].dump_to(out, indent, depth + 1);
                if (i + 1 < elements_.size()) out += ',';
                out += '\n';
            }
            out += pad + "]";
            return;
        }
    }
}

std::string Json::dump(int indent) const {
    std::string out;
    dump_to(out, indent, 0);
    out += '\n';
    return out;
}

void ensure_directory(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw std::runtime_error("cannot create directory " + path + ": " + ec.message());
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace abf::io
