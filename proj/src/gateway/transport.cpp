#include "cfgen/gateway/transport.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <chrono>

#include "cfgen/core/errors.hpp"
#include "cfgen/gateway/mock_world.hpp"

namespace cfgen {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // /...
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw TransportError("not an absolute URL: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

class HttpTransport final : public Transport {
 public:
  HttpResponse send(const HttpRequest& request) override {
    const SplitUrl parts = split_url(request.url);
    httplib::Client client(parts.origin);
    const auto timeout = std::chrono::duration<double>(request.timeout_seconds);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

    httplib::Headers headers;
    for (const auto& [k, v] : request.headers) headers.emplace(k, v);

    httplib::Result result = request.method == "GET"
                                 ? client.Get(parts.path, headers)
                                 : client.Post(parts.path, headers, request.body, "application/json");
    if (!result) {
      throw TransportError(request.method + " " + request.url + ": " +
                           httplib::to_string(result.error()));
    }
    return HttpResponse{result->status, result->body};
  }
};

class RoutingTransport final : public Transport {
 public:
  HttpResponse send(const HttpRequest& request) override {
    if (is_mock_url(request.url)) return mock_->send(request);
    return http_->send(request);
  }

 private:
  std::unique_ptr<Transport> mock_ = make_mock_transport();
  std::unique_ptr<Transport> http_ = make_http_transport();
};

}  // namespace

std::unique_ptr<Transport> make_http_transport() { return std::make_unique<HttpTransport>(); }

std::unique_ptr<Transport> make_default_transport() { return std::make_unique<RoutingTransport>(); }

}  // namespace cfgen
