#include "detail/zip.hpp"

#include <zlib.h>

#include <cstdint>
#include <cstring>

#include "spcgen/error.hpp"

namespace spcgen::detail::zip {
namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;
// 1980-01-01 00:00 in DOS format.
constexpr std::uint16_t kDosTime = 0;
constexpr std::uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint16_t get16(std::string_view s, std::size_t at) {
  if (at + 2 > s.size()) throw Error(Errc::kIo, "truncated zip archive");
  return static_cast<std::uint16_t>(static_cast<unsigned char>(s[at]) |
                                    (static_cast<unsigned char>(s[at + 1]) << 8));
}

std::uint32_t get32(std::string_view s, std::size_t at) {
  if (at + 4 > s.size()) throw Error(Errc::kIo, "truncated zip archive");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s[at + i]);
  return v;
}

std::string deflate_raw(std::string_view data) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, -MAX_WBITS, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw Error(Errc::kIo, "deflateInit2 failed");
  }
  std::string out(deflateBound(&zs, static_cast<uLong>(data.size())), '\0');
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw Error(Errc::kIo, "deflate failed");
  out.resize(zs.total_out);
  return out;
}

std::string inflate_raw(std::string_view data, std::size_t expected) {
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw Error(Errc::kIo, "inflateInit2 failed");
  // One spare byte so an oversized stream is detected rather than truncated.
  std::string out(expected + 1, '\0');
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || zs.total_out != expected) {
    throw Error(Errc::kIo, "corrupt deflate stream in zip entry");
  }
  out.resize(expected);
  return out;
}

std::uint32_t crc_of(std::string_view data) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size())));
}

}  // namespace

std::string write_archive(const std::vector<Entry>& entries) {
  std::string out;
  std::string central;
  for (const auto& e : entries) {
    const std::string packed = deflate_raw(e.data);
    const std::uint32_t crc = crc_of(e.data);
    const auto offset = static_cast<std::uint32_t>(out.size());

    put32(out, kLocalSig);
    put16(out, 20);  // version needed
    put16(out, 0x0800);  // UTF-8 names
    put16(out, 8);  // deflate
    put16(out, kDosTime);
    put16(out, kDosDate);
    put32(out, crc);
    put32(out, static_cast<std::uint32_t>(packed.size()));
    put32(out, static_cast<std::uint32_t>(e.data.size()));
    put16(out, static_cast<std::uint16_t>(e.name.size()));
    put16(out, 0);
    out += e.name;
    out += packed;

    put32(central, kCentralSig);
    put16(central, 20);  // version made by
    put16(central, 20);
    put16(central, 0x0800);
    put16(central, 8);
    put16(central, kDosTime);
    put16(central, kDosDate);
    put32(central, crc);
    put32(central, static_cast<std::uint32_t>(packed.size()));
    put32(central, static_cast<std::uint32_t>(e.data.size()));
    put16(central, static_cast<std::uint16_t>(e.name.size()));
    put16(central, 0);  // extra
    put16(central, 0);  // comment
    put16(central, 0);  // disk
    put16(central, 0);  // internal attrs
    put32(central, 0);  // external attrs
    put32(central, offset);
    central += e.name;
  }
  const auto central_offset = static_cast<std::uint32_t>(out.size());
  out += central;
  put32(out, kEndSig);
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<std::uint16_t>(entries.size()));
  put16(out, static_cast<std::uint16_t>(entries.size()));
  put32(out, static_cast<std::uint32_t>(central.size()));
  put32(out, central_offset);
  put16(out, 0);
  return out;
}

std::map<std::string, std::string> read_archive(std::string_view bytes) {
  if (bytes.size() < 22) throw Error(Errc::kIo, "not a zip archive");
  std::size_t eocd = std::string_view::npos;
  const std::size_t lowest = bytes.size() > 22 + 0xFFFF ? bytes.size() - 22 - 0xFFFF : 0;
  for (std::size_t i = bytes.size() - 22 + 1; i-- > lowest;) {
    if (get32(bytes, i) == kEndSig) {
      eocd = i;
      break;
    }
  }
  if (eocd == std::string_view::npos) throw Error(Errc::kIo, "zip end record not found");

  const std::uint16_t count = get16(bytes, eocd + 10);
  const std::uint32_t dir_offset = get32(bytes, eocd + 16);
  if (dir_offset == 0xFFFFFFFF || count == 0xFFFF) throw Error(Errc::kIo, "zip64 archives are not supported");

  std::map<std::string, std::string> files;
  std::size_t at = dir_offset;
  for (std::uint16_t n = 0; n < count; ++n) {
    if (get32(bytes, at) != kCentralSig) throw Error(Errc::kIo, "corrupt zip central directory");
    const std::uint16_t flags = get16(bytes, at + 8);
    const std::uint16_t method = get16(bytes, at + 10);
    const std::uint32_t crc = get32(bytes, at + 16);
    const std::uint32_t packed_size = get32(bytes, at + 20);
    const std::uint32_t size = get32(bytes, at + 24);
    const std::uint16_t name_len = get16(bytes, at + 28);
    const std::uint16_t extra_len = get16(bytes, at + 30);
    const std::uint16_t comment_len = get16(bytes, at + 32);
    const std::uint32_t local = get32(bytes, at + 42);
    if (at + 46 + name_len > bytes.size()) throw Error(Errc::kIo, "truncated zip archive");
    std::string name(bytes.substr(at + 46, name_len));
    at += 46 + name_len + extra_len + comment_len;

    if (flags & 0x1) throw Error(Errc::kIo, "encrypted zip entry '" + name + "'");
    if (size == 0xFFFFFFFF || packed_size == 0xFFFFFFFF) throw Error(Errc::kIo, "zip64 archives are not supported");
    if (get32(bytes, local) != kLocalSig) throw Error(Errc::kIo, "corrupt zip local header");
    const std::size_t data_at = local + 30 + get16(bytes, local + 26) + get16(bytes, local + 28);
    if (data_at + packed_size > bytes.size()) throw Error(Errc::kIo, "truncated zip entry '" + name + "'");
    const std::string_view packed = bytes.substr(data_at, packed_size);

    std::string data;
    if (method == 0) {
      data = std::string(packed);
    } else if (method == 8) {
      data = inflate_raw(packed, size);
    } else {
      throw Error(Errc::kIo, "unsupported zip compression method " + std::to_string(method));
    }
    if (crc_of(data) != crc) throw Error(Errc::kIo, "CRC mismatch in zip entry '" + name + "'");
    files.emplace(std::move(name), std::move(data));
  }
  return files;
}

}  // namespace spcgen::detail::zip
