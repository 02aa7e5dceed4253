#pragma once

#include <map>
#include <memory>
#include <string>

namespace cfgen {

struct HttpRequest {
  std::string method = "POST";  // POST or GET
  std::string url;              // absolute, e.g. http://host:8000/predict
  std::string body;             // JSON for POST
  std::map<std::string, std::string> headers;
  double timeout_seconds = 60.0;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

// One request/response exchange. Throws TransportError when no response was
// received at all (connection refused, timeout).
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse send(const HttpRequest& request) = 0;
};

// Plain HTTP(S) via cpp-httplib.
std::unique_ptr<Transport> make_http_transport();

// Routes mock:// URLs to the built-in toy models and everything else to
// the HTTP transport.
std::unique_ptr<Transport> make_default_transport();

}  // namespace cfgen
