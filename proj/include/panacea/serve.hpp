#pragma once

// HTTP front end for one frozen checkpoint. Handlers are plain member
// functions returning a status and an ordered JSON body so they can be tested
// without a socket; `mount` wires them into a cpp-httplib server.

#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "json.hpp"

#include "panacea/training.hpp"

namespace httplib {
class Server;
}

namespace panacea {

struct Response {
    int status = 200;
    nlohmann::ordered_json body;
};

inline constexpr int default_port = 8642;
inline constexpr int histogram_bins = 20;
inline constexpr std::size_t max_generate_samples = 100000;

class Service {
public:
    Service(Checkpoint checkpoint, std::string checkpoint_hash);

    Response info() const;
    Response evaluate(const std::string& body) const;
    Response generate(const std::string& body) const;
    /// `grid` is the raw query value; the front has `grid` points per edge.
    Response front(const std::optional<std::string>& grid) const;
    /// `lambda` is the raw query value "a,b[,c]".
    Response distributions(const std::optional<std::string>& lambda) const;

    const Checkpoint& checkpoint() const { return checkpoint_; }

private:
    nlohmann::ordered_json compute_front(int points) const;

    Checkpoint checkpoint_;
    std::string hash_;
    Problem problem_;

    mutable std::mutex cache_mutex_;
    mutable std::map<int, std::shared_future<nlohmann::ordered_json>> front_cache_;
};

/// Registers the /api routes and CORS handling for `origin`.
void mount(httplib::Server& server, const Service& service, const std::string& origin = "*");

}  // namespace panacea
