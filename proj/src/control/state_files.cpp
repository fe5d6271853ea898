#include "tokengate/control/state_files.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tokengate/common/error.hpp"

namespace tokengate::control {

namespace {

void write_all(int fd, std::string_view data, const std::string& what) {
  while (!data.empty()) {
    auto n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(Errc::Io, what + ": " + std::strerror(errno));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0600);
  if (fd < 0) throw Error(Errc::Io, "cannot write " + tmp.string() + ": " + std::strerror(errno));
  try {
    write_all(fd, content, tmp.string());
    if (::fsync(fd) != 0) throw Error(Errc::Io, "fsync " + tmp.string());
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(Errc::Io, "rename " + tmp.string() + ": " + ec.message());
}

ServerState ServerState::open(const std::filesystem::path& state_path, const std::filesystem::path& hsm_path,
                              const token::MasterKey& master_key, RandomSource& rng,
                              const std::string& server_mgmt_address) {
  ServerState s;
  s.state_path_ = state_path;
  s.hsm_path_ = hsm_path;
  const bool have_state = std::filesystem::exists(state_path);
  const bool have_hsm = std::filesystem::exists(hsm_path);
  if (have_state != have_hsm) {
    throw Error(Errc::Io, "state and HSM files must both exist or both be absent");
  }
  if (have_state) {
    s.hsm_ = std::make_unique<token::HsmStore>(token::HsmStore::load(hsm_path, master_key));
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(read_file(state_path));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::CorruptSnapshot, e.what());
    }
    s.registry_ = std::make_unique<registry::Registry>(registry::Registry::restore(doc, *s.hsm_, rng));
  } else {
    s.hsm_ = std::make_unique<token::HsmStore>(master_key);
    s.registry_ = std::make_unique<registry::Registry>(
        registry::ServerIdentity{crypto::dh_generate(rng), server_mgmt_address}, *s.hsm_, rng);
  }
  return s;
}

void ServerState::save() const {
  write_file_atomic(hsm_path_, hsm_->serialize());
  write_file_atomic(state_path_, registry_->snapshot().dump(2) + "\n");
}

EventLogFile::EventLogFile(const std::filesystem::path& path) {
  fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0600);
  if (fd_ < 0) throw Error(Errc::Io, "cannot open " + path.string() + ": " + std::strerror(errno));
}

EventLogFile::~EventLogFile() {
  if (fd_ >= 0) ::close(fd_);
}

void EventLogFile::append(std::string_view line) {
  std::string buf(line);
  buf += '\n';
  write_all(fd_, buf, "event log");
  if (::fdatasync(fd_) != 0) throw Error(Errc::Io, "fsync event log");
}

}  // namespace tokengate::control
