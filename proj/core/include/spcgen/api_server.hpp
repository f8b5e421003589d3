#pragma once

#include <cstddef>
#include <memory>
#include <string>

#include "spcgen/run_store.hpp"

namespace spcgen {

struct ApiServerOptions {
  std::string host = "127.0.0.1";
  /// 0 picks a free port.
  int port = 8080;
  /// Adds permissive CORS headers for a console served from another origin.
  bool cors = true;
  std::size_t max_upload_bytes = 64 * 1024 * 1024;
};

/// JSON HTTP API over a RunStore:
///
///   GET  /health, /sectors, /templates
///   POST /references (multipart title, source_tag, file; or JSON)
///   GET  /references
///   POST /runs, GET /runs?sector=&status=, GET /runs/{id}
///   GET  /runs/{id}/catalog, /validation, /attempts, /evaluation, /judging
///   POST /runs/{id}/evaluate, POST /runs/{id}/judge
///   GET  /runs/{id}/export.xlsx
///
/// Failures are `{"error": {"code": "E_...", "message": ...}}` with 400,
/// 404, 409, 502, or 500.
class ApiServer {
 public:
  ApiServer(RunStore& store, ApiServerOptions options = {});
  ~ApiServer();

  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Binds the socket and returns the port. Throws Error(kIo).
  int bind();
  /// Serves until stop(); binds first if needed.
  void listen();
  /// Serves on a background thread and returns once ready.
  void start();
  void stop();
  int port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace spcgen
