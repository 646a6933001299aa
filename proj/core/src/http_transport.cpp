#include <httplib.h>

#include "kddsp/llm_gateway.hpp"

namespace kddsp {

namespace {

class HttplibTransport final : public HttpTransport {
public:
    HttpResponse post(const HttpRequest &request) override {
        // Split "scheme://host[:port]" from the path.
        const auto scheme_end = request.url.find("://");
        if (scheme_end == std::string::npos) throw TransportError("URL lacks a scheme: " + request.url);
        const auto path_start = request.url.find('/', scheme_end + 3);
        const std::string origin = request.url.substr(0, path_start);
        const std::string path = path_start == std::string::npos ? "/" : request.url.substr(path_start);

        httplib::Client client(origin);
        const auto secs = static_cast<time_t>(request.timeout_seconds);
        client.set_connection_timeout(30, 0);
        client.set_read_timeout(secs, 0);
        client.set_write_timeout(secs, 0);

        httplib::Headers headers;
        std::string content_type = "application/json";
        for (const auto &[k, v] : request.headers) {
            if (k == "content-type")
                content_type = v;
            else
                headers.emplace(k, v);
        }
        auto res = client.Post(path, headers, request.body, content_type);
        if (!res) throw TransportError("request to " + origin + " failed: " + httplib::to_string(res.error()));
        return {res->status, res->body};
    }
};

}  // namespace

std::shared_ptr<HttpTransport> make_default_transport() { return std::make_shared<HttplibTransport>(); }

}  // namespace kddsp
