#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spcgen {

/// Failure kinds surfaced across the library. Each maps to a stable
/// `E_*` token used in reports, JSON payloads, and CLI messages.
enum class Errc {
  kInvalidArgument,
  kUnparseableId,
  kNoTable,
  kBadHeader,
  kIo,
  kBadTemplate,
  kUnboundPlaceholder,
  kSerialize,
  kAuth,
  kTimeout,
  kProvider,
  kExhausted,
  kEmpty,
  kEmbedBackend,
  kEmptyCatalog,
  kJudgeUnparseable,
  kAllRowsFailed,
  kMisaligned,
  kUnknownReference,
  kNotFound,
  kRunNotSucceeded,
};

std::string_view to_string(Errc code);

/// Process exit code for a failure kind: 2 validation, 3 provider or
/// exhaustion, 4 I/O, 1 anything else.
int exit_code_for(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }
  /// Message without the `E_*` prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

/// Non-2xx response from a provider endpoint.
class ProviderError : public Error {
 public:
  ProviderError(int status, std::string body_excerpt);

  int status() const noexcept { return status_; }
  const std::string& body_excerpt() const noexcept { return body_; }

 private:
  int status_;
  std::string body_;
};

}  // namespace spcgen
