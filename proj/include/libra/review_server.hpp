#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "libra/triplets.hpp"

namespace httplib {
class Server;
}

namespace libra::review {

inline constexpr std::size_t kDefaultPageSize = 50;
inline constexpr std::size_t kMaxPageSize = 500;

/// JSON API for expert review plus an optional static mount for the UI.
///   GET  /api/triplets?status=&group=&limit=&offset=
///   GET  /api/triplets/{id}
///   POST /api/triplets/{id}/verdict   409 when not pending, 422 with a field list when malformed
///   GET  /api/stats
class ReviewServer {
public:
    ReviewServer(triplets::TripletStore& store, std::optional<std::filesystem::path> static_dir = std::nullopt);
    ~ReviewServer();
    ReviewServer(const ReviewServer&) = delete;
    ReviewServer& operator=(const ReviewServer&) = delete;

    int bind(const std::string& host = "127.0.0.1");
    bool bind(const std::string& host, int port);
    void serve();
    void stop();

private:
    triplets::TripletStore& store_;
    std::unique_ptr<httplib::Server> server_;
};

/// Query handling shared by the server and tests.
Json list_triplets(const triplets::Dataset& dataset, const std::map<std::string, std::string>& query);
Json stats_json(const triplets::Dataset& dataset);

}  // namespace libra::review
