#include "blockiot/templates/registry.hpp"

#include <algorithm>
#include <fstream>

namespace blockiot::templates {

namespace fs = std::filesystem;

void TemplateRegistry::load_directory(const fs::path &dir) {
  auto next = std::make_shared<Table>();
  std::vector<std::string> errors;

  std::vector<fs::path> files;
  for (const auto &e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json")
      files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  for (const auto &file : files) {
    std::ifstream in(file, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    try {
      DeviceTemplate t = load_template(bytes);
      auto id = t.id();
      if (next->count(id)) {
        errors.push_back(file.filename().string() + ": duplicate template id " + id);
        continue;
      }
      next->emplace(std::move(id), std::move(t));
    } catch (const TemplateError &e) {
      for (const auto &p : e.paths)
        errors.push_back(file.filename().string() + ": " + p);
    }
  }

  if (!errors.empty()) throw TemplateError(std::move(errors));
  swap_in(std::move(next));
}

void TemplateRegistry::put(DeviceTemplate t) {
  auto next = std::make_shared<Table>(*snapshot());
  auto id = t.id();
  (*next)[id] = std::move(t);
  swap_in(std::move(next));
}

std::shared_ptr<const DeviceTemplate>
TemplateRegistry::find(std::string_view id) const {
  auto table = snapshot();
  auto it = table->find(id);
  if (it == table->end()) return nullptr;
  // Aliasing constructor: the snapshot owns the template for as long as
  // the caller keeps the pointer.
  return std::shared_ptr<const DeviceTemplate>(table, &it->second);
}

std::vector<std::string> TemplateRegistry::ids() const {
  auto table = snapshot();
  std::vector<std::string> out;
  out.reserve(table->size());
  for (const auto &[id, _] : *table) out.push_back(id);
  return out;
}

} // namespace blockiot::templates
