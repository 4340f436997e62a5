#include "blockiot/cas/folder.hpp"

#include <algorithm>
#include <cstring>

namespace blockiot::cas {

namespace {

constexpr char kMagic[4] = {'D', 'I', 'R', '1'};

void put_u32(std::string &out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string &out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(std::string_view s, std::size_t &pos) {
  if (pos + 4 > s.size()) throw IntegrityError("truncated folder node");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[pos + i])) << (8 * i);
  pos += 4;
  return v;
}

std::uint64_t get_u64(std::string_view s, std::size_t &pos) {
  if (pos + 8 > s.size()) throw IntegrityError("truncated folder node");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[pos + i])) << (8 * i);
  pos += 8;
  return v;
}

} // namespace

std::string FolderNode::encode() const {
  std::string out(kMagic, sizeof(kMagic));
  put_u32(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto &e : entries) {
    put_u32(out, static_cast<std::uint32_t>(e.name.size()));
    out += e.name;
    out.push_back(static_cast<char>(kAlgoSha256));
    out.push_back(static_cast<char>(kDigestLen));
    out.append(reinterpret_cast<const char *>(e.address.digest.data()),
               e.address.digest.size());
    put_u64(out, e.size);
  }
  return out;
}

bool FolderNode::is_folder(std::string_view bytes) {
  return bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) == 0;
}

FolderNode FolderNode::decode(std::string_view bytes) {
  if (!is_folder(bytes)) throw IntegrityError("not a folder node");
  std::size_t pos = 4;
  std::uint32_t n = get_u32(bytes, pos);
  FolderNode node;
  node.entries.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::uint32_t len = get_u32(bytes, pos);
    if (pos + len > bytes.size()) throw IntegrityError("truncated entry name");
    FolderEntry e;
    e.name.assign(bytes.substr(pos, len));
    pos += len;
    if (pos + 2 + 32 > bytes.size()) throw IntegrityError("truncated address");
    if (static_cast<unsigned char>(bytes[pos]) != kAlgoSha256 ||
        static_cast<unsigned char>(bytes[pos + 1]) != kDigestLen)
      throw IntegrityError("unknown address algorithm");
    pos += 2;
    std::memcpy(e.address.digest.data(), bytes.data() + pos, 32);
    pos += 32;
    e.size = get_u64(bytes, pos);
    node.entries.push_back(std::move(e));
  }
  if (pos != bytes.size()) throw IntegrityError("trailing bytes in folder node");
  for (std::size_t i = 1; i < node.entries.size(); ++i)
    if (!(node.entries[i - 1].name < node.entries[i].name))
      throw IntegrityError("folder entries not strictly sorted");
  return node;
}

bool FolderNode::has(std::string_view name) const {
  return find(name) != nullptr;
}

const FolderEntry *FolderNode::find(std::string_view name) const {
  auto it = std::lower_bound(
      entries.begin(), entries.end(), name,
      [](const FolderEntry &e, std::string_view n) { return e.name < n; });
  if (it != entries.end() && it->name == name) return &*it;
  return nullptr;
}

FolderNode load_folder(const Store &store, const ContentAddress &root) {
  return FolderNode::decode(store.get(root));
}

ContentAddress add_entries(Store &store, const ContentAddress *root,
                           const std::vector<FolderEntry> &additions) {
  FolderNode node;
  if (root != nullptr) node = load_folder(store, *root);
  for (const auto &a : additions) {
    const FolderEntry *existing = node.find(a.name);
    if (existing != nullptr) {
      if (existing->address == a.address) continue;
      throw ConflictError("folder entry exists: " + a.name);
    }
    auto it = std::lower_bound(
        node.entries.begin(), node.entries.end(), a.name,
        [](const FolderEntry &e, const std::string &n) { return e.name < n; });
    node.entries.insert(it, a);
  }
  return store.put(node.encode());
}

ContentAddress add_entry(Store &store, const ContentAddress *root,
                         const std::string &name, const ContentAddress &child) {
  FolderNode node;
  if (root != nullptr) node = load_folder(store, *root);
  if (node.has(name)) throw ConflictError("folder entry exists: " + name);
  FolderEntry e{name, child, store.object_size(child)};
  return add_entries(store, root, {e});
}

std::size_t audit_tree(const Store &store, const ContentAddress &root) {
  std::string bytes = store.get(root); // get() already verifies the digest
  std::size_t visited = 1;
  if (!FolderNode::is_folder(bytes)) return visited;
  FolderNode node = FolderNode::decode(bytes);
  if (ContentAddress::of(node.encode()) != root)
    throw IntegrityError("folder re-encoding does not reproduce its address");
  for (const auto &e : node.entries) visited += audit_tree(store, e.address);
  return visited;
}

} // namespace blockiot::cas
