#include "spcgen/error.hpp"

namespace spcgen {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument: return "E_INVALID_ARGUMENT";
    case Errc::kUnparseableId: return "E_UNPARSEABLE_ID";
    case Errc::kNoTable: return "E_NO_TABLE";
    case Errc::kBadHeader: return "E_BAD_HEADER";
    case Errc::kIo: return "E_IO";
    case Errc::kBadTemplate: return "E_BAD_TEMPLATE";
    case Errc::kUnboundPlaceholder: return "E_UNBOUND_PLACEHOLDER";
    case Errc::kSerialize: return "E_SERIALIZE";
    case Errc::kAuth: return "E_AUTH";
    case Errc::kTimeout: return "E_TIMEOUT";
    case Errc::kProvider: return "E_PROVIDER";
    case Errc::kExhausted: return "E_EXHAUSTED";
    case Errc::kEmpty: return "E_EMPTY";
    case Errc::kEmbedBackend: return "E_EMBED_BACKEND";
    case Errc::kEmptyCatalog: return "E_EMPTY_CATALOG";
    case Errc::kJudgeUnparseable: return "E_JUDGE_UNPARSEABLE";
    case Errc::kAllRowsFailed: return "E_ALL_ROWS_FAILED";
    case Errc::kMisaligned: return "E_MISALIGNED";
    case Errc::kUnknownReference: return "E_UNKNOWN_REFERENCE";
    case Errc::kNotFound: return "E_NOT_FOUND";
    case Errc::kRunNotSucceeded: return "E_RUN_NOT_SUCCEEDED";
  }
  return "E_UNKNOWN";
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::kUnparseableId:
    case Errc::kNoTable:
    case Errc::kBadHeader:
    case Errc::kBadTemplate:
    case Errc::kUnboundPlaceholder:
    case Errc::kJudgeUnparseable:
    case Errc::kMisaligned:
    case Errc::kEmptyCatalog:
      return 2;
    case Errc::kAuth:
    case Errc::kTimeout:
    case Errc::kProvider:
    case Errc::kExhausted:
    case Errc::kEmbedBackend:
    case Errc::kAllRowsFailed:
      return 3;
    case Errc::kIo:
      return 4;
    default:
      return 1;
  }
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      detail_(message) {}

ProviderError::ProviderError(int status, std::string body_excerpt)
    : Error(Errc::kProvider,
            "status " + std::to_string(status) + ": " + body_excerpt),
      status_(status),
      body_(std::move(body_excerpt)) {}

}  // namespace spcgen
