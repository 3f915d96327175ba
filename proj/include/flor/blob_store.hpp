#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace flor {

// Content-addressed object store laid out as objects/<hh>/<hash>.
class BlobStore {
  public:
    explicit BlobStore(std::filesystem::path root);

    // Idempotent: identical contents map to the same hash and one object.
    std::string put(std::string_view contents);
    std::string get(std::string_view hash) const;
    bool contains(std::string_view hash) const;
    std::filesystem::path path_of(std::string_view hash) const;
    std::size_t object_count() const;

    const std::filesystem::path& root() const noexcept { return root_; }

  private:
    std::filesystem::path root_;
};

} // namespace flor
