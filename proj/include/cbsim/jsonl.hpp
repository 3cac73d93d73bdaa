#pragma once

#include <ostream>
#include <string>

namespace cbsim {

// Minimal hand-rolled JSON line builder. Keys are emitted in call order,
// doubles via shortest round-trip formatting, independent of locale — so a
// rerun with the same seed produces byte-identical output.
class JsonRecord {
public:
    explicit JsonRecord(const char* kind);

    JsonRecord& field(const char* key, const char* value);
    JsonRecord& field(const char* key, const std::string& value);
    JsonRecord& field(const char* key, bool value);
    JsonRecord& field(const char* key, std::int64_t value);
    JsonRecord& field(const char* key, std::uint64_t value);
    JsonRecord& field(const char* key, int value);
    JsonRecord& field(const char* key, double value);
    JsonRecord& raw_field(const char* key, const std::string& json);

    std::string finish();

private:
    std::string buf_;
};

std::string format_double(double v);

class JsonlWriter {
public:
    explicit JsonlWriter(std::ostream& os) : os_(os) {}
    void write(JsonRecord& rec);
    void write(JsonRecord&& rec) { write(rec); }
    std::ostream& stream() { return os_; }

private:
    std::ostream& os_;
};

}  // namespace cbsim
