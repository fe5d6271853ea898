#include "tokengate/token/hsm_store.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tokengate/common/crypto.hpp"
#include "tokengate/common/error.hpp"

namespace tokengate::token {

namespace {

constexpr std::string_view kFormat = "tokengate-hsm";
constexpr std::string_view kKeyCheckLabel = "hsm-master-key-check";
constexpr int kVersion = 1;

ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

SecretArray<32> derive(const MasterKey& master, std::string_view purpose) {
  return SecretArray<32>(crypto::hmac_sha256(master.view(), as_bytes(purpose)));
}

crypto::AeadNonce nonce_from(std::string_view label) {
  auto digest = crypto::sha256(as_bytes(label));
  crypto::AeadNonce nonce{};
  std::copy_n(digest.begin(), nonce.size(), nonce.begin());
  return nonce;
}

std::string entry_label(HsmHandle h) { return "otp-entry:" + std::to_string(h.value); }

}  // namespace

MasterKey master_key_from_env() {
  const char* value = std::getenv(kMasterKeyEnv);
  if (value == nullptr) throw Error(Errc::Usage, std::string(kMasterKeyEnv) + " is not set");
  try {
    return MasterKey(array_from_hex<32>(value));
  } catch (const Error&) {
    throw Error(Errc::Usage, std::string(kMasterKeyEnv) + " must be 64 hex characters");
  }
}

HsmStore::HsmStore(const MasterKey& master_key)
    : master_key_(master_key),
      seal_key_(derive(master_key, "tokengate-hsm-seal")),
      wrap_key_(derive(master_key, "tokengate-hsm-wrap")) {}

HsmHandle HsmStore::store(const otp::PublicId& public_id, const otp::PrivateId& private_id,
                          const otp::OtpSecret& secret) {
  HsmHandle handle{next_handle_++};
  entries_.emplace(handle, Entry{public_id, private_id, secret});
  return handle;
}

otp::OtpPlain HsmStore::verify(HsmHandle handle, const otp::OtpString& otp) const {
  auto it = entries_.find(handle);
  if (it == entries_.end()) throw Error(Errc::UnknownHandle);
  auto verified = otp::otp_verify(it->second.secret, otp);
  if (verified.public_id != it->second.public_id) throw Error(Errc::PublicIdMismatch);
  if (!crypto::equal(verified.plain.private_id, it->second.private_id)) throw Error(Errc::PrivateIdMismatch);
  return verified.plain;
}

void HsmStore::erase(HsmHandle handle) { entries_.erase(handle); }

Bytes HsmStore::wrap(ByteView key_material, std::string_view label) const {
  return crypto::aead_seal(wrap_key_, nonce_from(label), as_bytes(label), key_material);
}

Bytes HsmStore::unwrap(ByteView blob, std::string_view label) const {
  auto plain = crypto::aead_open(wrap_key_, nonce_from(label), as_bytes(label), blob);
  if (!plain) throw Error(Errc::CorruptStore, "wrapped key does not authenticate");
  return std::move(*plain);
}

std::string HsmStore::serialize() const {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [handle, entry] : entries_) {
    Bytes plain(entry.public_id.begin(), entry.public_id.end());
    plain.insert(plain.end(), entry.private_id.begin(), entry.private_id.end());
    plain.insert(plain.end(), entry.secret.data(), entry.secret.data() + entry.secret.size());
    auto label = entry_label(handle);
    auto sealed = crypto::aead_seal(seal_key_, nonce_from(label), as_bytes(label), plain);
    secure_zero(plain);
    entries.push_back({{"handle", handle.value}, {"sealed", to_hex(sealed)}});
  }
  nlohmann::json doc = {
      {"format", kFormat},
      {"version", kVersion},
      {"next_handle", next_handle_},
      {"key_check", to_hex(wrap(ByteArray<16>{}, kKeyCheckLabel))},
      {"entries", entries},
  };
  return doc.dump(2);
}

HsmStore HsmStore::deserialize(std::string_view document, const MasterKey& master_key) {
  HsmStore store(master_key);
  try {
    auto doc = nlohmann::json::parse(document);
    if (doc.at("format") != kFormat || doc.at("version") != kVersion) {
      throw Error(Errc::CorruptStore, "unsupported HSM store format");
    }
    auto check = crypto::aead_open(store.wrap_key_, nonce_from(kKeyCheckLabel), as_bytes(kKeyCheckLabel),
                                   from_hex(doc.at("key_check").get<std::string>()));
    if (!check) throw Error(Errc::CorruptStore, "wrong master key");
    store.next_handle_ = doc.at("next_handle").get<std::uint32_t>();
    for (const auto& e : doc.at("entries")) {
      HsmHandle handle{e.at("handle").get<std::uint32_t>()};
      auto sealed = from_hex(e.at("sealed").get<std::string>());
      auto label = entry_label(handle);
      auto plain = crypto::aead_open(store.seal_key_, nonce_from(label), as_bytes(label), sealed);
      if (!plain || plain->size() != 28) throw Error(Errc::CorruptStore, "entry does not authenticate");
      Entry entry;
      std::copy_n(plain->begin(), 6, entry.public_id.begin());
      std::copy_n(plain->begin() + 6, 6, entry.private_id.begin());
      std::copy_n(plain->begin() + 12, 16, entry.secret.data());
      secure_zero(*plain);
      if (handle.value >= store.next_handle_) throw Error(Errc::CorruptStore, "handle out of range");
      store.entries_.emplace(handle, std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::CorruptStore, e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::CorruptStore) throw;
    throw Error(Errc::CorruptStore, e.what());
  }
  return store;
}

void HsmStore::save(const std::filesystem::path& path) const {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::Io, "cannot write " + tmp.string());
    out << serialize();
  }
  std::filesystem::rename(tmp, path);
}

HsmStore HsmStore::load(const std::filesystem::path& path, const MasterKey& master_key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str(), master_key);
}

}  // namespace tokengate::token
