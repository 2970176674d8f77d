#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <zlib.h>

#include "sesa/binio.hpp"
#include "sesa/errors.hpp"

namespace sesa {

namespace zipdetail {

inline constexpr std::uint32_t kLocalSig = 0x04034b50;
inline constexpr std::uint32_t kCentralSig = 0x02014b50;
inline constexpr std::uint32_t kEocdSig = 0x06054b50;

inline std::vector<std::uint8_t> inflate_raw(const std::uint8_t* data, std::size_t csize,
                                             std::size_t usize) {
  std::vector<std::uint8_t> out(usize);
  z_stream zs{};
  require(inflateInit2(&zs, -15) == Z_OK, errc::io_error, "inflate init failed");
  zs.next_in = const_cast<Bytef*>(data);
  zs.avail_in = static_cast<uInt>(csize);
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(usize);
  int rc = inflate(&zs, Z_FINISH);
  inflateEnd(&zs);
  require(rc == Z_STREAM_END && zs.total_out == usize, errc::integrity_error,
          "corrupt deflate stream in archive");
  return out;
}

inline std::vector<std::uint8_t> deflate_raw(const std::uint8_t* data, std::size_t size) {
  z_stream zs{};
  require(deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, -15, 8,
                       Z_DEFAULT_STRATEGY) == Z_OK,
          errc::io_error, "deflate init failed");
  std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(size)));
  zs.next_in = const_cast<Bytef*>(data);
  zs.avail_in = static_cast<uInt>(size);
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  require(rc == Z_STREAM_END, errc::io_error, "deflate failed");
  out.resize(zs.total_out);
  return out;
}

inline bool safe_entry_name(const std::string& name) {
  if (name.empty() || name.front() == '/') return false;
  if (name.find('\\') != std::string::npos) return false;
  std::size_t pos = 0;
  while (pos <= name.size()) {
    std::size_t next = name.find('/', pos);
    std::string part = name.substr(pos, next == std::string::npos ? std::string::npos
                                                                  : next - pos);
    if (part == "..") return false;
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return true;
}

}  // namespace zipdetail

struct ZipEntry {
  std::string name;
  bool is_dir = false;
  std::vector<std::uint8_t> bytes;
};

// Reads stored and deflated entries via the central directory; every entry's
// CRC-32 is verified against the directory record.
inline std::vector<ZipEntry> read_zip(std::span<const std::uint8_t> zip) {
  using namespace zipdetail;
  require(zip.size() >= 22, errc::parse_error, "archive too small");

  std::size_t eocd = std::string::npos;
  std::size_t scan_start = zip.size() >= 22 + 65535 ? zip.size() - 22 - 65535 : 0;
  for (std::size_t i = zip.size() - 22 + 1; i-- > scan_start;) {
    std::uint32_t sig;
    std::memcpy(&sig, zip.data() + i, 4);
    if (sig == kEocdSig) {
      eocd = i;
      break;
    }
  }
  require(eocd != std::string::npos, errc::parse_error, "no end-of-archive record");

  ByteReader er(zip.data() + eocd, zip.size() - eocd);
  er.skip(4);
  er.skip(2 * 2);  // disk numbers
  er.u16();        // entries on this disk
  std::uint16_t total_entries = er.u16();
  std::uint32_t dir_size = er.u32();
  std::uint32_t dir_offset = er.u32();
  require(static_cast<std::size_t>(dir_offset) + dir_size <= zip.size(), errc::parse_error,
          "central directory out of bounds");

  std::vector<ZipEntry> entries;
  ByteReader dir(zip.data() + dir_offset, dir_size);
  for (std::uint16_t e = 0; e < total_entries; ++e) {
    require(dir.u32() == kCentralSig, errc::parse_error, "bad central directory entry");
    dir.skip(2 + 2 + 2);  // versions, flags
    std::uint16_t method = dir.u16();
    dir.skip(2 + 2);  // mtime, mdate
    std::uint32_t crc = dir.u32();
    std::uint32_t csize = dir.u32();
    std::uint32_t usize = dir.u32();
    std::uint16_t name_len = dir.u16();
    std::uint16_t extra_len = dir.u16();
    std::uint16_t comment_len = dir.u16();
    dir.skip(2 + 2 + 4);  // disk, attrs
    std::uint32_t local_offset = dir.u32();
    std::string name;
    for (std::uint16_t i = 0; i < name_len; ++i) name += static_cast<char>(dir.u8());
    dir.skip(extra_len);
    dir.skip(comment_len);
    require(zipdetail::safe_entry_name(name), errc::parse_error,
            "unsafe entry path: " + name);

    ZipEntry entry;
    entry.name = name;
    entry.is_dir = !name.empty() && name.back() == '/';
    if (!entry.is_dir) {
      require(static_cast<std::size_t>(local_offset) + 30 <= zip.size(), errc::parse_error,
              "local header out of bounds");
      ByteReader lh(zip.data() + local_offset, zip.size() - local_offset);
      require(lh.u32() == kLocalSig, errc::parse_error, "bad local header");
      lh.skip(2 + 2);  // version, flags
      lh.skip(2);      // method (central value is authoritative)
      lh.skip(2 + 2 + 4 + 4 + 4);  // time, date, crc, csize, usize
      std::uint16_t lh_name = lh.u16();
      std::uint16_t lh_extra = lh.u16();
      std::size_t data_at = local_offset + 30 + lh_name + lh_extra;
      require(data_at + csize <= zip.size(), errc::parse_error, "entry data out of bounds");
      if (method == 0) {
        require(csize == usize, errc::parse_error, "stored entry size mismatch");
        entry.bytes.assign(zip.data() + data_at, zip.data() + data_at + csize);
      } else if (method == 8) {
        entry.bytes = inflate_raw(zip.data() + data_at, csize, usize);
      } else {
        raise(errc::unsupported_format, "unsupported compression method " +
                                            std::to_string(method));
      }
      require(crc32(entry.bytes) == crc, errc::integrity_error,
              "archive entry checksum mismatch: " + name);
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

inline void extract_zip(std::span<const std::uint8_t> zip,
                        const std::filesystem::path& dest) {
  namespace fs = std::filesystem;
  fs::create_directories(dest);
  for (auto& entry : read_zip(zip)) {
    fs::path target = dest / entry.name;
    if (entry.is_dir) {
      fs::create_directories(target);
    } else {
      fs::create_directories(target.parent_path());
      write_file_atomic(target, entry.bytes);
    }
  }
}

// Minimal writer used by tests and tooling; emits stored or deflated entries.
class ZipWriter {
 public:
  void add(const std::string& name, std::span<const std::uint8_t> bytes,
           bool compress = false) {
    using namespace zipdetail;
    Record rec;
    rec.name = name;
    rec.crc = crc32(bytes.data(), bytes.size());
    rec.usize = static_cast<std::uint32_t>(bytes.size());
    rec.offset = static_cast<std::uint32_t>(out_.size());
    std::vector<std::uint8_t> payload;
    if (compress) {
      payload = deflate_raw(bytes.data(), bytes.size());
      rec.method = 8;
    } else {
      payload.assign(bytes.begin(), bytes.end());
      rec.method = 0;
    }
    rec.csize = static_cast<std::uint32_t>(payload.size());

    out_.u32(kLocalSig);
    out_.u16(20);
    out_.u16(0);
    out_.u16(rec.method);
    out_.u16(0);
    out_.u16(0);
    out_.u32(rec.crc);
    out_.u32(rec.csize);
    out_.u32(rec.usize);
    out_.u16(static_cast<std::uint16_t>(name.size()));
    out_.u16(0);
    out_.bytes(name.data(), name.size());
    out_.bytes(payload.data(), payload.size());
    records_.push_back(std::move(rec));
  }

  void add(const std::string& name, const std::string& text, bool compress = false) {
    add(name, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()),
        compress);
  }

  std::vector<std::uint8_t> finish() {
    using namespace zipdetail;
    auto dir_offset = static_cast<std::uint32_t>(out_.size());
    for (const auto& rec : records_) {
      out_.u32(kCentralSig);
      out_.u16(20);
      out_.u16(20);
      out_.u16(0);
      out_.u16(rec.method);
      out_.u16(0);
      out_.u16(0);
      out_.u32(rec.crc);
      out_.u32(rec.csize);
      out_.u32(rec.usize);
      out_.u16(static_cast<std::uint16_t>(rec.name.size()));
      out_.u16(0);
      out_.u16(0);
      out_.u16(0);
      out_.u16(0);
      out_.u32(0);
      out_.u32(rec.offset);
      out_.bytes(rec.name.data(), rec.name.size());
    }
    auto dir_size = static_cast<std::uint32_t>(out_.size()) - dir_offset;
    out_.u32(kEocdSig);
    out_.u16(0);
    out_.u16(0);
    out_.u16(static_cast<std::uint16_t>(records_.size()));
    out_.u16(static_cast<std::uint16_t>(records_.size()));
    out_.u32(dir_size);
    out_.u32(dir_offset);
    out_.u16(0);
    return std::move(out_.data());
  }

 private:
  struct Record {
    std::string name;
    std::uint16_t method = 0;
    std::uint32_t crc = 0;
    std::uint32_t csize = 0;
    std::uint32_t usize = 0;
    std::uint32_t offset = 0;
  };
  ByteWriter out_;
  std::vector<Record> records_;
};

}  // namespace sesa
