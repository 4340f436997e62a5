#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "blockiot/cas/store.hpp"

namespace blockiot::cas {

struct FolderEntry {
  std::string name;
  ContentAddress address;
  std::uint64_t size = 0;

  bool operator==(const FolderEntry &) const = default;
};

// Directory nodes are stored objects whose canonical encoding starts with a
// magic tag and lists entries sorted by name with length-prefixed fields.
// The node's address therefore commits to the full entry set (Merkle
// construction); insertion order can never matter.
struct FolderNode {
  std::vector<FolderEntry> entries; // always sorted by name

  std::string encode() const;
  static FolderNode decode(std::string_view bytes); // throws IntegrityError

  static bool is_folder(std::string_view bytes);

  bool has(std::string_view name) const;
  const FolderEntry *find(std::string_view name) const;
};

// New immutable root with prior entries plus (name -> child). The old root
// stays resolvable. Throws ConflictError when the name is already bound.
ContentAddress add_entry(Store &store, const ContentAddress *root,
                         const std::string &name, const ContentAddress &child);

// Bulk insert storing only the final root object. Entries whose (name,
// address) pair is already present are skipped; a name bound to a different
// address is a conflict.
ContentAddress add_entries(Store &store, const ContentAddress *root,
                           const std::vector<FolderEntry> &additions);

FolderNode load_folder(const Store &store, const ContentAddress &root);

// Recomputes every reachable directory digest from its entries and checks
// it matches the address it is stored under. Returns visited object count.
std::size_t audit_tree(const Store &store, const ContentAddress &root);

} // namespace blockiot::cas
