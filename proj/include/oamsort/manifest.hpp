#pragma once

// Run manifests: the configuration snapshot plus hashes of what went in and
// came out. The manifest text parses as a config file, so a run can be
// repeated with `--config manifest.cfg`.
//
// Needs OpenSSL (libcrypto) for SHA-256.

#include <openssl/evp.h>

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "oamsort/config.hpp"
#include "oamsort/error.hpp"
#include "oamsort/version.hpp"

namespace oamsort {

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  std::ostringstream o;
  for (unsigned int i = 0; i < len; ++i) o << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return o.str();
}

inline std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path + " for hashing");
  return sha256_hex(std::string(std::istreambuf_iterator<char>(in), {}));
}

struct RunManifest {
  std::string command;
  Config config = Config::defaults();
  std::vector<std::pair<std::string, std::string>> inputs;   // name, sha256
  std::vector<std::pair<std::string, std::string>> outputs;  // name, sha256
  std::vector<std::string> notes;                            // free-form, not hashed

  /// Text that determines the run. Outputs and notes are excluded because
  /// they are derived from it.
  std::string identity() const {
    std::ostringstream o;
    o << "# oamsort run manifest\n"
      << "# version: " << version << "\n"
      << "# command: " << command << "\n";
    for (const auto& [name, hash] : inputs) o << "# input: " << name << " sha256 " << hash << "\n";
    o << config.serialize();
    return o.str();
  }

  std::string hash() const { return sha256_hex(identity()); }

  std::string text() const {
    std::ostringstream o;
    o << identity() << "\n# manifest: " << hash() << "\n";
    for (const auto& n : notes) o << "# " << n << "\n";
    for (const auto& [name, h] : outputs) o << "# output: " << name << " sha256 " << h << "\n";
    return o.str();
  }

  void write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << text();
    if (!out) throw Error("failed writing " + path);
  }
};

}  // namespace oamsort
