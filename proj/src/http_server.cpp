#include "scalefb/errors.hpp"
#include "scalefb/service.hpp"

#include <httplib.h>

#include <thread>

namespace scalefb {

using nlohmann::json;

namespace {

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_input: return 400;
    case ErrorCode::not_found: return 404;
    case ErrorCode::conflict: return 409;
    case ErrorCode::degenerate_environment:
    case ErrorCode::degenerate_measure:
    case ErrorCode::degenerate_posterior: return 422;
    case ErrorCode::io: return 500;
  }
  return 500;
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    reply(res, 200, fn());
  } catch (const Error& e) {
    reply(res, status_for(e.code()), {{"code", to_string(e.code())}, {"message", e.what()}});
  } catch (const json::exception& e) {
    reply(res, 400, {{"code", "invalid_input"}, {"message", std::string("malformed JSON: ") + e.what()}});
  } catch (const std::exception& e) {
    reply(res, 500, {{"code", "internal"}, {"message", e.what()}});
  }
}

json body_json(const httplib::Request& req) {
  if (req.body.empty()) fail(ErrorCode::invalid_input, "request body must be a JSON object");
  return json::parse(req.body);
}

}  // namespace

struct HttpFrontend::Impl {
  explicit Impl(FeedbackService& s) : service(s) {}
  FeedbackService& service;
  httplib::Server server;
  std::thread thread;
};

HttpFrontend::HttpFrontend(FeedbackService& service, std::string static_dir)
    : impl_(std::make_unique<Impl>(service)) {
  auto& svc = impl_->service;
  auto& srv = impl_->server;
  srv.Get("/sets", [&svc](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { return svc.list_sets(); });
  });
  srv.Post("/sessions", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return svc.create_session(body_json(req)); });
  });
  srv.Get(R"(/sessions/([^/]+)/query)", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return svc.next_query(req.matches[1]); });
  });
  srv.Post(R"(/sessions/([^/]+)/feedback)", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return svc.submit_feedback(req.matches[1], body_json(req)); });
  });
  srv.Get(R"(/sessions/([^/]+)/estimate)", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return svc.get_estimate(req.matches[1]); });
  });
  if (!static_dir.empty()) srv.set_mount_point("/", static_dir);
}

HttpFrontend::~HttpFrontend() { stop(); }

int HttpFrontend::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) fail(ErrorCode::io, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpFrontend::listen(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) {
    fail(ErrorCode::io, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

void HttpFrontend::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace scalefb
