#include "spcgen/api_server.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <thread>

#include "spcgen/error.hpp"
#include "spcgen/serialization.hpp"
#include "spcgen/table_io.hpp"
#include "spcgen/text.hpp"

namespace spcgen {
namespace {

constexpr const char* kJson = "application/json";
constexpr const char* kXlsxType = "application/vnd.openxmlformats-officedocument.spreadsheetml.sheet";
constexpr const char* kRunPattern = "([A-Za-z0-9_-]+)";

int http_status(Errc code) {
  switch (code) {
    case Errc::kNotFound:
    case Errc::kUnknownReference:
      return 404;
    case Errc::kRunNotSucceeded:
      return 409;
    case Errc::kAuth:
    case Errc::kTimeout:
    case Errc::kProvider:
    case Errc::kExhausted:
    case Errc::kEmbedBackend:
    case Errc::kAllRowsFailed:
      return 502;
    case Errc::kIo:
      return 500;
    default:
      return 400;
  }
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, Errc code, const std::string& message) {
  send_json(res, {{"error", {{"code", to_string(code)}, {"message", message}}}}, http_status(code));
}

bool looks_like_zip(std::string_view bytes) { return bytes.size() >= 4 && bytes.substr(0, 2) == "PK"; }

json parse_body(const httplib::Request& req) {
  if (text::trim(req.body).empty()) return json::object();
  auto j = parse_json(req.body);
  if (!j.is_object()) throw Error(Errc::kInvalidArgument, "request body must be a JSON object");
  return j;
}

std::string form_field(const httplib::Request& req, const std::string& key) {
  if (req.has_file(key)) return req.get_file_value(key).content;
  if (req.has_param(key)) return req.get_param_value(key);
  return {};
}

// Workbook uploads become the LaTeX rendering of the catalog they hold, so
// they can serve both as prompt material and as evaluation gold.
std::string reference_text(std::string content, const std::string& sector_field) {
  if (!looks_like_zip(content)) return content;
  XlsxImportOptions opts;
  if (!sector_field.empty()) {
    opts.sector = parse_sector(sector_field);
    if (!opts.sector) throw Error(Errc::kInvalidArgument, "unknown sector '" + sector_field + "'");
  }
  return render_latex_table(import_xlsx_bytes(content, opts).catalog);
}

SpcCatalog catalog_from_reference(const ReferenceDoc& doc, Sector sector) {
  if (!doc.content) throw Error(Errc::kInvalidArgument, "reference " + doc.id + " has no stored text");
  auto parsed = parse_latex_table(*doc.content, sector, CatalogSource::kExpert);
  return parsed.catalog;
}

}  // namespace

struct ApiServer::Impl {
  Impl(RunStore& s, ApiServerOptions o) : store(s), options(std::move(o)) {}

  RunStore& store;
  ApiServerOptions options;
  httplib::Server server;
  std::thread thread;
  int bound_port = -1;

  template <typename F>
  httplib::Server::Handler wrap(F&& f) {
    return [f = std::forward<F>(f)](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const Error& e) {
        send_error(res, e.code(), e.detail());
      } catch (const std::exception& e) {
        spdlog::error("{} {}: {}", req.method, req.path, e.what());
        send_error(res, Errc::kIo, e.what());
      }
    };
  }

  void routes();
};

void ApiServer::Impl::routes() {
  server.set_payload_max_length(options.max_upload_bytes);
  if (options.cors) {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  }
  server.set_logger([](const httplib::Request& req, const httplib::Response& res) {
    spdlog::debug("{} {} -> {}", req.method, req.path, res.status);
  });

  server.Get("/health", wrap([](const auto&, auto& res) { send_json(res, {{"status", "ok"}}); }));

  server.Get("/sectors", wrap([](const auto&, auto& res) {
    json out = json::array();
    for (auto s : kAllSectors) {
      out.push_back({{"code", code(s)}, {"name", display_name(s)}, {"name_de", display_name(s, "de")}});
    }
    send_json(res, out);
  }));

  server.Get("/templates", wrap([](const auto&, auto& res) {
    json out = json::array();
    for (const auto& name : bundled_template_names()) {
      const auto t = bundled_template(name);
      out.push_back({{"name", t.name}, {"version", t.version}, {"language", t.language}});
    }
    send_json(res, out);
  }));

  server.Get("/references", wrap([this](const auto&, auto& res) {
    json out = json::array();
    for (const auto& doc : store.list_references()) out.push_back(to_json(doc));
    send_json(res, out);
  }));

  server.Post("/references", wrap([this](const httplib::Request& req, auto& res) {
    ReferenceDoc doc;
    if (req.is_multipart_form_data()) {
      doc.title = form_field(req, "title");
      if (!req.has_file("file")) throw Error(Errc::kInvalidArgument, "multipart upload needs a 'file' part");
      const auto file = req.get_file_value("file");
      if (doc.title.empty()) doc.title = file.filename;
      const auto tag = form_field(req, "source_tag");
      if (!tag.empty()) {
        auto parsed = parse_reference_source(tag);
        if (!parsed) throw Error(Errc::kInvalidArgument, "unknown source tag '" + tag + "'");
        doc.source_tag = *parsed;
      }
      doc.content = reference_text(file.content, form_field(req, "sector"));
    } else {
      auto body = parse_body(req);
      try {
        doc = reference_from_json(body);
      } catch (const Error& e) {
        throw Error(Errc::kInvalidArgument, e.detail());
      }
    }
    send_json(res, to_json(store.register_reference(std::move(doc))), 201);
  }));

  server.Post("/runs", wrap([this](const httplib::Request& req, auto& res) {
    const auto request = run_request_from_json(parse_body(req));
    const auto id = store.create_run(request);
    send_json(res, {{"run_id", id}, {"status", "PENDING"}}, 202);
  }));

  server.Get("/runs", wrap([this](const httplib::Request& req, auto& res) {
    std::optional<Sector> sector;
    std::optional<RunStatus> status;
    if (req.has_param("sector")) {
      sector = parse_sector(req.get_param_value("sector"));
      if (!sector) throw Error(Errc::kInvalidArgument, "unknown sector filter");
    }
    if (req.has_param("status")) {
      status = parse_run_status(req.get_param_value("status"));
      if (!status) throw Error(Errc::kInvalidArgument, "unknown status filter");
    }
    json out = json::array();
    for (const auto& m : store.list_runs(sector, status)) out.push_back(to_json(m));
    send_json(res, out);
  }));

  const std::string run = std::string("/runs/") + kRunPattern;

  server.Get(run, wrap([this](const httplib::Request& req, auto& res) {
    send_json(res, to_json(store.get_run(req.matches[1].str())));
  }));

  server.Get(run + "/catalog", wrap([this](const httplib::Request& req, auto& res) {
    send_json(res, to_json(store.load_catalog(req.matches[1].str())));
  }));

  server.Get(run + "/validation", wrap([this](const httplib::Request& req, auto& res) {
    const auto id = req.matches[1].str();
    const auto m = store.get_run(id);
    auto it = m.artifact_paths.find(std::string(artifacts::kValidation));
    if (it == m.artifact_paths.end()) throw Error(Errc::kNotFound, "run " + id + " has no validation report");
    send_json(res, read_json_file(store.run_dir(id) / it->second));
  }));

  server.Get(run + "/attempts", wrap([this](const httplib::Request& req, auto& res) {
    const auto id = req.matches[1].str();
    const auto m = store.get_run(id);
    send_json(res, read_json_file(store.run_dir(id) / m.artifact_paths.at(std::string(artifacts::kAttempts))));
  }));

  server.Get(run + "/evaluation", wrap([this](const httplib::Request& req, auto& res) {
    const auto id = req.matches[1].str();
    auto report = store.load_evaluation(id);
    if (!report) throw Error(Errc::kNotFound, "run " + id + " has no evaluation");
    send_json(res, to_json(*report));
  }));

  server.Get(run + "/judging", wrap([this](const httplib::Request& req, auto& res) {
    const auto id = req.matches[1].str();
    auto summary = store.load_judging(id);
    if (!summary) throw Error(Errc::kNotFound, "run " + id + " has no judging");
    send_json(res, to_json(*summary));
  }));

  server.Post(run + "/evaluate", wrap([this](const httplib::Request& req, auto& res) {
    const auto id = req.matches[1].str();
    const auto manifest = store.get_run(id);
    std::string scorer_token = "lexical";
    std::optional<SpcCatalog> gold;
    if (req.is_multipart_form_data()) {
      if (auto s = form_field(req, "scorer"); !s.empty()) scorer_token = s;
      if (!req.has_file("gold")) throw Error(Errc::kInvalidArgument, "multipart upload needs a 'gold' part");
      const auto bytes = req.get_file_value("gold").content;
      XlsxImportOptions opts;
      opts.sector = manifest.sector;
      gold = looks_like_zip(bytes) ? import_xlsx_bytes(bytes, opts).catalog
                                   : parse_latex_table(bytes, manifest.sector, CatalogSource::kExpert).catalog;
    } else {
      const auto body = parse_body(req);
      scorer_token = body.value("scorer", scorer_token);
      if (body.contains("gold_reference_id")) {
        gold = catalog_from_reference(store.get_reference(body.at("gold_reference_id").get<std::string>()),
                                      manifest.sector);
      } else if (body.contains("gold_run_id")) {
        gold = store.load_catalog(body.at("gold_run_id").get<std::string>());
      } else {
        throw Error(Errc::kInvalidArgument, "give gold_reference_id, gold_run_id, or a 'gold' upload");
      }
    }
    const auto kind = parse_scorer_kind(scorer_token);
    if (!kind) throw Error(Errc::kInvalidArgument, "unknown scorer '" + scorer_token + "'");
    send_json(res, to_json(store.attach_evaluation(id, *gold, *kind)));
  }));

  server.Post(run + "/judge", wrap([this](const httplib::Request& req, auto& res) {
    const auto body = parse_body(req);
    send_json(res, to_json(store.attach_judging(req.matches[1].str(), body.value("model_id", std::string()))));
  }));

  server.Get(run + "/export.xlsx", wrap([this](const httplib::Request& req, auto& res) {
    const auto id = req.matches[1].str();
    const auto bytes = store.load_catalog_xlsx(id);
    res.set_header("Content-Disposition", "attachment; filename=\"" + id + ".xlsx\"");
    res.set_content(bytes, kXlsxType);
  }));
}

ApiServer::ApiServer(RunStore& store, ApiServerOptions options)
    : impl_(std::make_unique<Impl>(store, std::move(options))) {
  impl_->routes();
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind() {
  if (impl_->bound_port >= 0) return impl_->bound_port;
  if (impl_->options.port == 0) {
    impl_->bound_port = impl_->server.bind_to_any_port(impl_->options.host);
  } else if (impl_->server.bind_to_port(impl_->options.host, impl_->options.port)) {
    impl_->bound_port = impl_->options.port;
  }
  if (impl_->bound_port < 0) {
    throw Error(Errc::kIo, "cannot bind " + impl_->options.host + ":" + std::to_string(impl_->options.port));
  }
  spdlog::info("listening on {}:{}", impl_->options.host, impl_->bound_port);
  return impl_->bound_port;
}

void ApiServer::listen() {
  bind();
  impl_->server.listen_after_bind();
}

void ApiServer::start() {
  bind();
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void ApiServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

int ApiServer::port() const { return impl_->bound_port; }

}  // namespace spcgen
