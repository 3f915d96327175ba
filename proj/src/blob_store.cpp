#include "flor/blob_store.hpp"

#include "flor/error.hpp"
#include "flor/sha256.hpp"

#include "fsutil.hpp"

#include <algorithm>

namespace fs = std::filesystem;

namespace flor {

namespace {

bool is_hex_digest(std::string_view hash) {
    return hash.size() == 64 && std::all_of(hash.begin(), hash.end(), [](char c) {
               return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
           });
}

} // namespace

BlobStore::BlobStore(fs::path root) : root_(std::move(root)) {}

fs::path BlobStore::path_of(std::string_view hash) const {
    return root_ / std::string(hash.substr(0, 2)) / std::string(hash);
}

std::string BlobStore::put(std::string_view contents) {
    std::string hash = sha256_hex(contents);
    fs::path target = path_of(hash);
    if (!fs::exists(target)) {
        detail::write_file_atomic(target, contents);
    }
    return hash;
}

bool BlobStore::contains(std::string_view hash) const {
    return is_hex_digest(hash) && fs::exists(path_of(hash));
}

std::string BlobStore::get(std::string_view hash) const {
    if (!contains(hash)) {
        throw NotFound("unknown blob " + std::string(hash));
    }
    return detail::read_file(path_of(hash));
}

std::size_t BlobStore::object_count() const {
    if (!fs::exists(root_)) return 0;
    std::size_t n = 0;
    for (const auto& entry : fs::recursive_directory_iterator(root_)) {
        if (entry.is_regular_file() && is_hex_digest(entry.path().filename().string())) ++n;
    }
    return n;
}

} // namespace flor
