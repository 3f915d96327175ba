#include "flor/blob_store.hpp"
#include "flor/error.hpp"
#include "flor/value.hpp"
#include "support/support.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>

using namespace flor;

namespace {

// Text and Bytes with equal octets are the same stored value.
bool same_value(const TypedValue& a, const TypedValue& b) {
    auto octets = [](const TypedValue& v) -> std::optional<std::string> {
        if (auto s = std::get_if<std::string>(&v)) return *s;
        if (auto b = std::get_if<Bytes>(&v)) return b->data;
        return std::nullopt;
    };
    if (octets(a) || octets(b)) return octets(a) == octets(b);
    return a == b;
}

} // namespace

TEST_CASE("format_double is shortest round-trip text") {
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(1e-3) == "0.001");
    CHECK(format_double(0.1 + 0.2) == "0.30000000000000004");
    CHECK(format_double(3.0) == "3");
    std::mt19937_64 rng(42);
    for (int i = 0; i < 2000; ++i) {
        std::uint64_t bits = rng();
        double d;
        std::memcpy(&d, &bits, sizeof d);
        if (!std::isfinite(d)) continue;
        CHECK(std::strtod(format_double(d).c_str(), nullptr) == d);
    }
}

TEST_CASE("encode chooses value types") {
    testsupport::TempDir tmp;
    BlobStore blobs(tmp.path());
    CHECK(encode_value(std::int64_t{42}, blobs) == EncodedValue{ValueType::Int, "42"});
    CHECK(encode_value(0.25, blobs) == EncodedValue{ValueType::Float, "0.25"});
    CHECK(encode_value(std::string("OCR"), blobs) == EncodedValue{ValueType::Text, "OCR"});
    CHECK(encode_value(std::string(kInlineTextLimit, 'x'), blobs).type == ValueType::Text);
    auto big = encode_value(std::string(kInlineTextLimit + 1, 'x'), blobs);
    CHECK(big.type == ValueType::BlobRef);
    CHECK(blobs.get(big.payload).size() == kInlineTextLimit + 1);
    CHECK(encode_value(Bytes{"ab"}, blobs).type == ValueType::BlobRef);
}

TEST_CASE("property: encode/decode round trip") {
    testsupport::TempDir tmp;
    BlobStore blobs(tmp.path());
    std::mt19937_64 rng(3);
    for (int i = 0; i < 500; ++i) {
        TypedValue v;
        switch (rng() % 4) {
        case 0:
            v = static_cast<std::int64_t>(rng());
            break;
        case 1:
            v = static_cast<double>(static_cast<std::int64_t>(rng() % 2000001) - 1000000) / 977.0;
            break;
        case 2:
            v = std::string(rng() % 6000, static_cast<char>('a' + rng() % 26));
            break;
        default:
            v = Bytes{std::string(rng() % 50, static_cast<char>(rng() % 256))};
        }
        auto enc = encode_value(v, blobs);
        CHECK(same_value(decode_value(enc.type, enc.payload, blobs), v));
    }
}

TEST_CASE("typed_from_text honours hints and names the value on failure") {
    CHECK(std::get<std::int64_t>(typed_from_text("epochs", "5", 1)) == 5);
    CHECK(std::get<double>(typed_from_text("lr", "0.001", 2)) == 0.001);
    CHECK(std::get<std::string>(typed_from_text("src", "OCR", std::nullopt)) == "OCR");
    CHECK(std::get<std::string>(typed_from_text("src", "5", 3)) == "5");
    try {
        typed_from_text("epochs", "five", 1);
        FAIL("expected TypeError");
    } catch (const TypeError& e) {
        CHECK(std::string(e.what()).find("epochs") != std::string::npos);
    }
    CHECK_THROWS_AS(typed_from_text("x", "1", 9), TypeError);
    CHECK_THROWS_AS(typed_from_text("x", "1.5", 1), TypeError);
}

TEST_CASE("decode rejects corrupt payloads") {
    testsupport::TempDir tmp;
    BlobStore blobs(tmp.path());
    CHECK_THROWS_AS(decode_value(ValueType::Int, "x", blobs), DataError);
    CHECK_THROWS_AS(decode_value(ValueType::BlobRef, std::string(64, 'a'), blobs), NotFound);
}
