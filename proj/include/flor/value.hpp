#pragma once

#include "flor/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

namespace flor {

class BlobStore;

// Byte strings are kept apart from text so they always go to the blob store.
struct Bytes {
    std::string data;
    friend bool operator==(const Bytes&, const Bytes&) = default;
};

using TypedValue = std::variant<std::int64_t, double, std::string, Bytes>;

inline constexpr std::size_t kInlineTextLimit = 4096;

struct EncodedValue {
    ValueType type = ValueType::Text;
    std::string payload;
    friend bool operator==(const EncodedValue&, const EncodedValue&) = default;
};

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

EncodedValue encode_value(const TypedValue& raw, BlobStore& blobs);

// Blob references decode to Bytes; oversized text therefore round-trips as Bytes
// holding the same octets.
TypedValue decode_value(ValueType type, const std::string& payload, const BlobStore& blobs);

// Parses wire text under an optional type hint. Throws TypeError naming `name`
// when the hint is unknown or the text does not parse under it.
TypedValue typed_from_text(const std::string& name, const std::string& text,
                           std::optional<int> type_hint);

} // namespace flor
