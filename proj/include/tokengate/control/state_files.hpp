#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include "tokengate/registry/registry.hpp"
#include "tokengate/token/hsm_store.hpp"

namespace tokengate::control {

// Throws Error{Io}.
std::string read_file(const std::filesystem::path& path);
// Writes a sibling temp file, fsyncs it and renames it over path.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Registry snapshot plus HSM store, as kept by the server on disk.
class ServerState {
 public:
  // Loads both files, or creates a fresh server identity when neither
  // exists. Throws Error{Io}, Error{CorruptStore} or Error{CorruptSnapshot}.
  static ServerState open(const std::filesystem::path& state_path, const std::filesystem::path& hsm_path,
                          const token::MasterKey& master_key, RandomSource& rng,
                          const std::string& server_mgmt_address);

  registry::Registry& registry() { return *registry_; }
  token::HsmStore& hsm() { return *hsm_; }
  // HSM first, so a snapshot never references a secret the store lacks.
  void save() const;

 private:
  std::filesystem::path state_path_;
  std::filesystem::path hsm_path_;
  std::unique_ptr<token::HsmStore> hsm_;
  std::unique_ptr<registry::Registry> registry_;
};

// Append-only JSON-lines file, fsynced per line.
class EventLogFile {
 public:
  explicit EventLogFile(const std::filesystem::path& path);
  ~EventLogFile();
  EventLogFile(const EventLogFile&) = delete;
  EventLogFile& operator=(const EventLogFile&) = delete;

  void append(std::string_view line);

 private:
  int fd_ = -1;
};

}  // namespace tokengate::control
