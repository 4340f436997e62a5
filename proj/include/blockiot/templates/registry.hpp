#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>

#include "blockiot/templates/template.hpp"

namespace blockiot::templates {

// Lookup from template id (manufacturer/model) to template. Reload swaps
// the whole table atomically, so a reader holding a snapshot never sees a
// half-updated registry.
class TemplateRegistry {
public:
  using Table = std::map<std::string, DeviceTemplate, std::less<>>;

  TemplateRegistry() : table_(std::make_shared<const Table>()) {}

  // Parses every *.json under dir and swaps the table in one step. Throws
  // TemplateError with per-file paths; the previous table stays in place.
  void load_directory(const std::filesystem::path &dir);

  // Registers a single parsed template (used by tests and fixtures).
  void put(DeviceTemplate t);

  std::shared_ptr<const DeviceTemplate> find(std::string_view id) const;
  std::vector<std::string> ids() const;
  std::size_t size() const { return snapshot()->size(); }

private:
  std::shared_ptr<const Table> snapshot() const {
    return std::atomic_load_explicit(&table_, std::memory_order_acquire);
  }
  void swap_in(std::shared_ptr<const Table> next) {
    std::atomic_store_explicit(&table_, std::move(next),
                               std::memory_order_release);
  }

  std::shared_ptr<const Table> table_;
};

} // namespace blockiot::templates
