#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "forgescore/review.hpp"

namespace httplib {
class Server;
}

namespace forgescore {

struct ServerOptions {
    std::string bind = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    std::optional<std::filesystem::path> ui_dir;
};

// HTTP front end over a ReviewSession. JSON errors are {"error": message}.
class ReviewServer {
public:
    ReviewServer(ReviewSession& session, ServerOptions opts);
    ~ReviewServer();
    ReviewServer(const ReviewServer&) = delete;
    ReviewServer& operator=(const ReviewServer&) = delete;

    // Binds the socket; returns the bound port.
    int bind();
    // Blocks serving requests until stop().
    void serve();
    void stop();

private:
    void routes();

    ReviewSession& session_;
    ServerOptions opts_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace forgescore
