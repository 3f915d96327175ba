#include "flor/value.hpp"

#include "flor/blob_store.hpp"
#include "flor/error.hpp"

#include <charconv>
#include <cmath>
#include <system_error>

namespace flor {

bool valid_value_type(int code) noexcept { return code >= 1 && code <= 4; }

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

EncodedValue encode_value(const TypedValue& raw, BlobStore& blobs) {
    return std::visit(
        [&](const auto& v) -> EncodedValue {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::int64_t>) {
                return {ValueType::Int, std::to_string(v)};
            } else if constexpr (std::is_same_v<T, double>) {
                return {ValueType::Float, format_double(v)};
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (v.size() <= kInlineTextLimit) return {ValueType::Text, v};
                return {ValueType::BlobRef, blobs.put(v)};
            } else {
                return {ValueType::BlobRef, blobs.put(v.data)};
            }
        },
        raw);
}

namespace {

std::optional<std::int64_t> parse_int(const std::string& text) {
    std::int64_t out = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
    return out;
}

std::optional<double> parse_double(const std::string& text) {
    if (text == "nan") return std::nan("");
    if (text == "inf") return HUGE_VAL;
    if (text == "-inf") return -HUGE_VAL;
    double out = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
    return out;
}

} // namespace

TypedValue decode_value(ValueType type, const std::string& payload, const BlobStore& blobs) {
    switch (type) {
    case ValueType::Int:
        if (auto v = parse_int(payload)) return *v;
        throw DataError("stored int value is not an integer: " + payload);
    case ValueType::Float:
        if (auto v = parse_double(payload)) return *v;
        throw DataError("stored float value is not a number: " + payload);
    case ValueType::Text:
        return payload;
    case ValueType::BlobRef:
        return Bytes{blobs.get(payload)};
    }
    throw DataError("unknown value_type " + std::to_string(static_cast<int>(type)));
}

TypedValue typed_from_text(const std::string& name, const std::string& text,
                           std::optional<int> type_hint) {
    if (!type_hint || *type_hint == static_cast<int>(ValueType::Text)) return text;
    if (*type_hint == static_cast<int>(ValueType::Int)) {
        if (auto v = parse_int(text)) return *v;
        throw TypeError("value of '" + name + "' is not an integer: " + text);
    }
    if (*type_hint == static_cast<int>(ValueType::Float)) {
        if (auto v = parse_double(text)) return *v;
        throw TypeError("value of '" + name + "' is not a float: " + text);
    }
    throw TypeError("unsupported type " + std::to_string(*type_hint) + " for '" + name + "'");
}

} // namespace flor
