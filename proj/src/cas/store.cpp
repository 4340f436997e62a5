#include "blockiot/cas/store.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <fstream>

namespace blockiot::cas {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return data;
}

void atomic_write(const fs::path &target, std::string_view data) {
  static std::atomic<std::uint64_t> counter{0};
  fs::path tmp = target;
  tmp += ".tmp" + std::to_string(counter.fetch_add(1)) + "-" +
         std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("short write to " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("rename failed for " + target.string());
  }
}

} // namespace

Store::Store(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_ / "objects");
  fs::create_directories(root_ / "names");
}

fs::path Store::object_path(const ContentAddress &addr) const {
  return root_ / "objects" / addr.hex();
}

ContentAddress Store::put(std::string_view content) {
  ContentAddress addr = ContentAddress::of(content);
  fs::path p = object_path(addr);
  if (!fs::exists(p)) atomic_write(p, content);
  return addr;
}

ContentAddress Store::put(std::span<const std::uint8_t> content) {
  return put(std::string_view(reinterpret_cast<const char *>(content.data()),
                              content.size()));
}

std::string Store::get(const ContentAddress &addr) const {
  fs::path p = object_path(addr);
  if (!fs::exists(p)) throw NotFoundError("unknown address " + addr.hex());
  std::string data = read_file(p);
  if (ContentAddress::of(data) != addr)
    throw IntegrityError("digest mismatch for " + addr.hex());
  return data;
}

bool Store::contains(const ContentAddress &addr) const {
  return fs::exists(object_path(addr));
}

std::uint64_t Store::object_size(const ContentAddress &addr) const {
  fs::path p = object_path(addr);
  if (!fs::exists(p)) throw NotFoundError("unknown address " + addr.hex());
  return fs::file_size(p);
}

std::vector<ContentAddress> Store::list() const {
  std::vector<ContentAddress> out;
  for (const auto &e : fs::directory_iterator(root_ / "objects")) {
    if (!e.is_regular_file()) continue;
    auto addr = ContentAddress::from_hex(e.path().filename().string());
    if (addr) out.push_back(*addr);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Digest32 Store::digest() const {
  std::string acc;
  for (const auto &a : list()) {
    acc += a.hex();
    acc += '\n';
  }
  return sha256(acc);
}

} // namespace blockiot::cas
