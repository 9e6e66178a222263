#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "capmetric/util.hpp"

namespace capmetric {

/// Minimal JSON value for report emission. Objects keep insertion order and
/// doubles print with 17 significant digits, so serialized reports are
/// byte-stable for identical inputs.
class Json {
public:
    using Array = std::vector<Json>;
    using Object = std::vector<std::pair<std::string, Json>>;

    Json() : value_(nullptr) {}
    Json(std::nullptr_t) : value_(nullptr) {}
    Json(bool b) : value_(b) {}
    Json(double d) : value_(d) {}
    Json(int i) : value_(int64_t(i)) {}
    Json(long i) : value_(int64_t(i)) {}
    Json(long long i) : value_(int64_t(i)) {}
    Json(uint64_t u) : value_(u) {}
    Json(const char* s) : value_(std::string(s)) {}
    Json(std::string s) : value_(std::move(s)) {}
    Json(Array a) : value_(std::move(a)) {}
    Json(Object o) : value_(std::move(o)) {}

    static Json object() { return Json(Object{}); }
    static Json array() { return Json(Array{}); }

    Json& set(const std::string& key, Json v) {
        auto& obj = std::get<Object>(value_);
        obj.emplace_back(key, std::move(v));
        return *this;
    }

    Json& push(Json v) {
        std::get<Array>(value_).push_back(std::move(v));
        return *this;
    }

    std::string dump() const {
        std::string out;
        write(out);
        return out;
    }

private:
    std::variant<std::nullptr_t, bool, double, int64_t, uint64_t, std::string, Array, Object> value_;

    static void write_escaped(std::string& out, const std::string& s) {
        out += '"';
        for (char c : s) {
            switch (c) {
                case '"': out += "\\\""; break;
                case '\\': out += "\\\\"; break;
                case '\n': out += "\\n"; break;
                case '\t': out += "\\t"; break;
                case '\r': out += "\\r"; break;
                default:
                    if (static_cast<unsigned char>(c) < 0x20) {
                        char buf[8];
                        std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                        out += buf;
                    } else {
                        out += c;
                    }
            }
        }
        out += '"';
    }

    void write(std::string& out) const {
        if (std::holds_alternative<std::nullptr_t>(value_)) {
            out += "null";
        } else if (auto* b = std::get_if<bool>(&value_)) {
            out += *b ? "true" : "false";
        } else if (auto* d = std::get_if<double>(&value_)) {
            std::string s = fmt17(*d);
            if (s == "inf" || s == "-inf" || s == "nan") {
                write_escaped(out, s);  // not representable as a JSON number
            } else {
                out += s;
            }
        } else if (auto* i = std::get_if<int64_t>(&value_)) {
            out += std::to_string(*i);
        } else if (auto* u = std::get_if<uint64_t>(&value_)) {
            out += std::to_string(*u);
        } else if (auto* s = std::get_if<std::string>(&value_)) {
            write_escaped(out, *s);
        } else if (auto* a = std::get_if<Array>(&value_)) {
            out += '[';
            for (size_t i = 0; i < a->size(); ++i) {
                if (i) out += ',';
                (*a)[i].write(out);
            }
            out += ']';
        } else if (auto* o = std::get_if<Object>(&value_)) {
            out += '{';
            for (size_t i = 0; i < o->size(); ++i) {
                if (i) out += ',';
                write_escaped(out, (*o)[i].first);
                out += ':';
                (*o)[i].second.write(out);
            }
            out += '}';
        }
    }
};

}  // namespace capmetric
