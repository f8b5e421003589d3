#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace spcgen::detail::zip {

struct Entry {
  std::string name;
  std::string data;
};

/// Deflate-compressed archive with fixed timestamps, so identical entries
/// produce identical bytes.
std::string write_archive(const std::vector<Entry>& entries);

/// Reads stored and deflated entries. Zip64 and encryption are rejected
/// with Error(kIo).
std::map<std::string, std::string> read_archive(std::string_view bytes);

}  // namespace spcgen::detail::zip
