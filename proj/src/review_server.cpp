#include "forgescore/review_server.hpp"

#include <httplib.h>

#include "forgescore/error.hpp"

namespace forgescore {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message)
{
    send_json(res, status, {{"error", message}});
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn)
{
    return [fn](const httplib::Request& req, httplib::Response& res) {
        try {
            fn(req, res);
        } catch (const ApiError& e) {
            send_error(res, e.status, e.what());
        } catch (const Error& e) {
            send_error(res, e.kind() == ErrorKind::usage ? 400 : 500, e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, e.what());
        }
    };
}

std::optional<long long> parse_int(const std::string& s)
{
    if (s.empty()) return std::nullopt;
    std::size_t pos = 0;
    try {
        long long v = std::stoll(s, &pos);
        if (pos != s.size()) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

bool truthy(const std::string& s) { return s == "1" || s == "true" || s == "yes"; }

}  // namespace

ReviewServer::ReviewServer(ReviewSession& session, ServerOptions opts)
    : session_(session), opts_(std::move(opts)), server_(std::make_unique<httplib::Server>())
{
    routes();
}

ReviewServer::~ReviewServer() { stop(); }

void ReviewServer::routes()
{
    auto& s = *server_;

    s.Get("/api/queue", guarded([this](const httplib::Request& req, httplib::Response& res) {
              if (!req.has_param("class")) throw ApiError(400, "missing 'class' parameter");
              auto cls = parse_int(req.get_param_value("class"));
              if (!cls || *cls < 0 || *cls > 2) throw ApiError(400, "class must be 0, 1 or 2");
              std::size_t limit = std::numeric_limits<std::size_t>::max();
              if (req.has_param("limit")) {
                  auto l = parse_int(req.get_param_value("limit"));
                  if (!l || *l < 0) throw ApiError(400, "limit must be a non-negative integer");
                  limit = static_cast<std::size_t>(*l);
              }
              send_json(res, 200, session_.queue(static_cast<int>(*cls), limit));
          }));

    s.Post("/api/review", guarded([this](const httplib::Request& req, httplib::Response& res) {
               json body;
               try {
                   body = json::parse(req.body);
               } catch (const json::parse_error& e) {
                   throw ApiError(400, std::string("malformed JSON: ") + e.what());
               }
               send_json(res, 200, session_.review(body));
           }));

    s.Post("/api/finalize", guarded([this](const httplib::Request& req, httplib::Response& res) {
               bool force = req.has_param("force") && truthy(req.get_param_value("force"));
               if (!req.body.empty()) {
                   auto body = json::parse(req.body, nullptr, false);
                   if (body.is_discarded()) throw ApiError(400, "malformed JSON body");
                   if (body.is_object() && body.contains("force")) force = force || body["force"] == true;
               }
               send_json(res, 200, to_json(session_.finalize(force)));
           }));

    s.Get("/api/progress", guarded([this](const httplib::Request&, httplib::Response& res) {
              send_json(res, 200, session_.progress());
          }));

    s.Get(R"(/api/thumb/([^/]+)/(\d+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
              auto frame = parse_int(req.matches[2]);
              if (!frame) throw ApiError(400, "bad frame index");
              send_json(res, 200, session_.thumbnail(req.matches[1], static_cast<std::size_t>(*frame)));
          }));

    if (opts_.ui_dir) {
        if (!s.set_mount_point("/", opts_.ui_dir->string())) {
            throw usage_error("UI directory does not exist: " + opts_.ui_dir->string());
        }
    }
}

int ReviewServer::bind()
{
    int port = opts_.port;
    if (port == 0) {
        port = server_->bind_to_any_port(opts_.bind);
    } else if (!server_->bind_to_port(opts_.bind, port)) {
        port = -1;
    }
    if (port < 0) throw usage_error("cannot bind " + opts_.bind + ":" + std::to_string(opts_.port));
    return port;
}

void ReviewServer::serve() { server_->listen_after_bind(); }

void ReviewServer::stop()
{
    if (server_ && server_->is_running()) server_->stop();
}

}  // namespace forgescore
