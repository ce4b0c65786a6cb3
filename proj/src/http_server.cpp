#include <httplib.h>

#include <json.hpp>

#include "pubbie/service.hpp"

namespace pubbie {
namespace {

using json = nlohmann::json;

constexpr const char* kSessionRoute = R"(/api/sessions/([A-Za-z0-9_-]+))";

void send_error(httplib::Response& res, ErrorCode code, std::string_view detail = {}) {
  auto e = api_error(code);
  if (!detail.empty()) e.message += " " + std::string(detail);
  res.status = e.http_status;
  res.set_content(api_error_json(e), "application/json");
}

std::string header_safe(std::string s) {
  for (char& c : s) {
    if (c == '\r' || c == '\n') c = ' ';
  }
  return s;
}

bool is_csv_content_type(const std::string& type) {
  if (type.empty()) return true;
  const std::string base = type.substr(0, type.find(';'));
  return base == "text/csv" || base == "application/csv" || base == "text/plain" ||
         base == "application/octet-stream" || base == "application/vnd.ms-excel" ||
         base == "multipart/form-data";
}

}  // namespace

struct HttpServer::Impl {
  Service& service;
  httplib::Server server;
  std::thread thread;

  explicit Impl(Service& s) : service(s) {}

  template <typename F>
  void guarded(httplib::Response& res, F&& body) {
    try {
      body();
    } catch (const Error& e) {
      send_error(res, e.code());
    } catch (const std::exception&) {
      send_error(res, ErrorCode::Internal);
    }
  }

  void install() {
    const std::size_t upload_limit = service.options().max_upload_bytes;
    // Multipart framing on top of the file itself.
    server.set_payload_max_length(upload_limit + (64u << 10));

    server.set_pre_routing_handler([upload_limit](const httplib::Request& req, httplib::Response& res) {
      if (req.method == "POST" && req.path.size() > 7 && req.path.ends_with("/upload") &&
          req.has_header("Content-Length")) {
        std::size_t length = 0;
        try {
          length = std::stoull(req.get_header_value("Content-Length"));
        } catch (const std::exception&) {
          send_error(res, ErrorCode::InvalidArgument);
          return httplib::Server::HandlerResponse::Handled;
        }
        if (length > upload_limit + (req.is_multipart_form_data() ? (64u << 10) : 0)) {
          send_error(res, ErrorCode::PayloadTooLarge, "Limit: " + std::to_string(upload_limit) + " bytes.");
          res.set_header("Connection", "close");
          return httplib::Server::HandlerResponse::Handled;
        }
      }
      return httplib::Server::HandlerResponse::Unhandled;
    });

    server.set_error_handler([upload_limit](const httplib::Request&, httplib::Response& res) {
      if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
      switch (res.status) {
        case 404: send_error(res, ErrorCode::NotFound); break;
        case 413:
          send_error(res, ErrorCode::PayloadTooLarge, "Limit: " + std::to_string(upload_limit) + " bytes.");
          break;
        case 400: send_error(res, ErrorCode::InvalidArgument); break;
        default: send_error(res, ErrorCode::Internal); break;
      }
      return httplib::Server::HandlerResponse::Handled;
    });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
      send_error(res, ErrorCode::Internal);
    });

    server.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Origin", "*");
      res.set_header("Access-Control-Expose-Headers", "Content-Disposition, X-Pubbie-Summary");
    });
    server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });

    server.Get("/health", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok", "text/plain"); });
    server.Get("/api/health", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"status":"ok"})", "application/json");
    });

    server.Post("/api/sessions", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] {
        const auto id = service.create_session();
        res.status = 201;
        res.set_content(json{{"session_id", id}}.dump(), "application/json");
      });
    });

    server.Post(std::string(kSessionRoute) + "/chat", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        std::string text;
        try {
          const auto body = json::parse(req.body);
          text = body.at("text").get<std::string>();
        } catch (const json::exception&) {
          throw Error(ErrorCode::InvalidArgument, "expected {\"text\": string}");
        }
        const auto turn = service.post_chat(req.matches[1], text);
        res.set_content(service.turn_body(turn), "application/json");
      });
    });

    server.Post(std::string(kSessionRoute) + "/upload",
                [this, upload_limit](const httplib::Request& req, httplib::Response& res,
                                     const httplib::ContentReader& reader) {
                  guarded(res, [&] {
                    if (!is_csv_content_type(req.get_header_value("Content-Type"))) {
                      throw Error(ErrorCode::InvalidArgument, "upload must be CSV");
                    }
                    std::string body;
                    bool too_large = false;
                    auto append = [&](const char* data, std::size_t n) {
                      if (body.size() + n > upload_limit) {
                        too_large = true;
                        return false;
                      }
                      body.append(data, n);
                      return true;
                    };
                    if (req.is_multipart_form_data()) {
                      // The first part carries the file.
                      std::size_t part = 0;
                      reader(
                          [&](const httplib::MultipartFormData&) {
                            ++part;
                            return true;
                          },
                          [&](const char* data, std::size_t n) { return part != 1 || append(data, n); });
                    } else {
                      reader(append);
                    }
                    if (too_large) {
                      send_error(res, ErrorCode::PayloadTooLarge,
                                 "Limit: " + std::to_string(upload_limit) + " bytes.");
                      return;
                    }
                    const auto turn = service.post_upload(req.matches[1], body);
                    res.set_content(service.turn_body(turn), "application/json");
                  });
                });

    server.Get(std::string(kSessionRoute) + "/export", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto exported = service.get_export(req.matches[1]);
        res.set_header("Content-Disposition", "attachment; filename=\"" + exported.filename + "\"");
        res.set_header("X-Pubbie-Summary", header_safe(exported.summary));
        res.set_content(std::move(exported.bytes), "text/csv; charset=utf-8");
      });
    });
  }
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) { impl_->install(); }

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  int bound = -1;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (impl_->server.bind_to_port(host, port)) {
    bound = port;
  }
  if (bound < 0) throw Error(ErrorCode::ConfigError, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

int HttpServer::start(const std::string& host, int port) {
  const int bound = bind(host, port);
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace pubbie
