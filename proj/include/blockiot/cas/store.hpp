#pragma once

#include <filesystem>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "blockiot/cas/address.hpp"

namespace blockiot::cas {

struct NotFoundError : std::runtime_error {
  explicit NotFoundError(const std::string &w) : std::runtime_error(w) {}
};
struct IntegrityError : std::runtime_error {
  explicit IntegrityError(const std::string &w) : std::runtime_error(w) {}
};
struct IoError : std::runtime_error {
  explicit IoError(const std::string &w) : std::runtime_error(w) {}
};
struct ConflictError : std::runtime_error {
  explicit ConflictError(const std::string &w) : std::runtime_error(w) {}
};

// Flat directory of address-named files under <root>/objects. Writes are
// tmp+rename, so a crashed put leaves no partial object. put() is idempotent
// and safe for unlimited concurrency; get() re-hashes the bytes and fails
// closed on mismatch.
class Store {
public:
  explicit Store(std::filesystem::path root);

  ContentAddress put(std::string_view content);
  ContentAddress put(std::span<const std::uint8_t> content);

  std::string get(const ContentAddress &addr) const;
  bool contains(const ContentAddress &addr) const;
  std::uint64_t object_size(const ContentAddress &addr) const;

  std::vector<ContentAddress> list() const;

  // Canonical state fingerprint: digest over the sorted address list.
  Digest32 digest() const;

  std::size_t object_count() const { return list().size(); }
  const std::filesystem::path &root() const { return root_; }
  std::filesystem::path object_path(const ContentAddress &addr) const;

private:
  std::filesystem::path root_;
};

} // namespace blockiot::cas
