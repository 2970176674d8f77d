#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <openssl/evp.h>

#include <httplib.h>

// glibc's resolv.h, dragged in by the HTTP client, leaks a `_res` object-like
// macro that corrupts any later declaration using that identifier (Eigen's
// kernels do). Scrub it so include order cannot break unrelated code.
#ifdef _res
#undef _res
#endif

#include "sesa/binio.hpp"
#include "sesa/dataset.hpp"
#include "sesa/errors.hpp"
#include "sesa/zip.hpp"

namespace sesa {

inline std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  require(ctx != nullptr, errc::io_error, "digest context allocation failed");
  bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
            EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) == 1 &&
            EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  require(ok, errc::io_error, "sha-256 computation failed");
  static const char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

struct FetchOptions {
  int attempts = 3;
  int backoff_ms = 1000;  // doubled after every failed attempt
  bool quiet = false;
};

struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline UrlParts split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  require(scheme_end != std::string::npos, errc::usage_error, "malformed url: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

// GET with retries and exponential backoff; transient transport and HTTP
// errors surface as fetch_error after the final attempt.
inline std::vector<std::uint8_t> http_get(const std::string& url,
                                          const FetchOptions& opt = {}) {
  UrlParts parts = split_url(url);
  std::string last_error;
  int delay = opt.backoff_ms;
  for (int attempt = 1; attempt <= opt.attempts; ++attempt) {
    httplib::Client client(parts.origin);
    client.set_follow_location(true);
    client.set_connection_timeout(30, 0);
    client.set_read_timeout(300, 0);
    auto res = client.Get(parts.path);
    if (res && res->status == 200)
      return {res->body.begin(), res->body.end()};
    last_error = res ? "http status " + std::to_string(res->status)
                     : "transport error: " + httplib::to_string(res.error());
    if (attempt < opt.attempts) {
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
      delay *= 2;
    }
  }
  raise(errc::fetch_error,
        "download failed after " + std::to_string(opt.attempts) + " attempts (" +
            last_error + "): " + url);
}

namespace detail {

// Derive class labels from filename prefixes when the archive has no
// train/test directory structure; returns false when any label is unknown.
inline bool manifest_from_prefixes(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  DatasetManifest m;
  m.root = root;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    auto ext = to_lower(e.path().extension().string());
    if (ext != ".wav") continue;
    std::string rel = fs::relative(e.path(), root).generic_string();
    std::string stem = to_lower(e.path().stem().string());
    Label label = Label::casual;
    bool found = false;
    for (int l = 0; l < kNumClasses; ++l) {
      std::string name = label_name(static_cast<Label>(l));
      if (stem.rfind(name, 0) == 0) {
        label = static_cast<Label>(l);
        found = true;
        break;
      }
    }
    if (!found) return false;
    Split split = Split::train;
    if (to_lower(rel).find("test") != std::string::npos) split = Split::test;
    m.entries.push_back({rel, split, label, rel});
  }
  if (m.entries.empty()) return false;
  write_manifest_csv(m, root / "manifest.csv");
  return true;
}

}  // namespace detail

// Download + verify + extract + manifest. Re-running against a complete
// destination is a no-op; a checksum mismatch removes the partial download.
inline DatasetManifest fetch_dataset(const std::string& url,
                                     const std::filesystem::path& dest,
                                     const std::string& expected_sha256,
                                     const FetchOptions& opt = {}) {
  namespace fs = std::filesystem;

  // Idempotence: if a manifest already loads, the dataset is complete.
  if (fs::exists(dest)) {
    try {
      return load_manifest(dest);
    } catch (const Error&) {
      // fall through and (re-)fetch
    }
  }
  fs::create_directories(dest);

  fs::path archive = dest / "dataset.zip";
  std::vector<std::uint8_t> bytes;
  if (fs::exists(archive)) bytes = read_file_bytes(archive);
  bool have_valid_local =
      !bytes.empty() &&
      (expected_sha256.empty() || sha256_hex(bytes) == to_lower(expected_sha256));
  if (!have_valid_local) {
    bytes = http_get(url, opt);
    if (!expected_sha256.empty()) {
      std::string actual = sha256_hex(bytes);
      if (actual != to_lower(expected_sha256)) {
        std::error_code ec;
        fs::remove(archive, ec);
        raise(errc::integrity_error, "archive checksum mismatch: expected " +
                                         to_lower(expected_sha256) + ", got " + actual);
      }
    }
    write_file_atomic(archive, bytes);
  }

  try {
    extract_zip(bytes, dest);
  } catch (const Error& e) {
    if (e.code() == errc::integrity_error) {
      std::error_code ec;
      fs::remove(archive, ec);
    }
    throw;
  }

  try {
    return load_manifest(dest);
  } catch (const Error&) {
    require(detail::manifest_from_prefixes(dest), errc::layout_error,
            "extracted archive has neither split directories nor recognizable "
            "filename prefixes");
    return load_manifest(dest);
  }
}

}  // namespace sesa
