#include "cbsim/jsonl.hpp"

#include <charconv>
#include <cmath>

namespace cbsim {

std::string format_double(double v) {
    if (std::isnan(v)) return "null";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

JsonRecord::JsonRecord(const char* kind) {
    buf_ = "{\"kind\":\"";
    buf_ += kind;
    buf_ += '"';
}

JsonRecord& JsonRecord::field(const char* key, const char* value) {
    buf_ += ",\"";
    buf_ += key;
    buf_ += "\":\"";
    buf_ += value;
    buf_ += '"';
    return *this;
}

JsonRecord& JsonRecord::field(const char* key, const std::string& value) {
    return field(key, value.c_str());
}

JsonRecord& JsonRecord::field(const char* key, bool value) {
    buf_ += ",\"";
    buf_ += key;
    buf_ += "\":";
    buf_ += value ? "true" : "false";
    return *this;
}

JsonRecord& JsonRecord::field(const char* key, std::int64_t value) {
    char num[24];
    auto res = std::to_chars(num, num + sizeof(num), value);
    buf_ += ",\"";
    buf_ += key;
    buf_ += "\":";
    buf_.append(num, res.ptr);
    return *this;
}

JsonRecord& JsonRecord::field(const char* key, std::uint64_t value) {
    char num[24];
    auto res = std::to_chars(num, num + sizeof(num), value);
    buf_ += ",\"";
    buf_ += key;
    buf_ += "\":";
    buf_.append(num, res.ptr);
    return *this;
}

JsonRecord& JsonRecord::field(const char* key, int value) {
    return field(key, std::int64_t(value));
}

JsonRecord& JsonRecord::field(const char* key, double value) {
    buf_ += ",\"";
    buf_ += key;
    buf_ += "\":";
    buf_ += format_double(value);
    return *this;
}

JsonRecord& JsonRecord::raw_field(const char* key, const std::string& json) {
    buf_ += ",\"";
    buf_ += key;
    buf_ += "\":";
    buf_ += json;
    return *this;
}

std::string JsonRecord::finish() {
    buf_ += '}';
    return std::move(buf_);
}

void JsonlWriter::write(JsonRecord& rec) {
    os_ << rec.finish() << '\n';
}

}  // namespace cbsim
