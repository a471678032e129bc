#pragma once

// Thin wrapper over cpp-httplib for the two places that speak HTTP:
// document fetching and the live LLM backend.

#include <httplib.h>

#include <chrono>
#include <string>

#include "skg/error.hpp"

namespace skg {

struct HttpResponse {
  int status = 0;
  std::string body;
  std::string content_type;
};

// Splits "https://host:port/path" into client origin and path.
inline std::pair<std::string, std::string> split_url(const std::string& url) {
  size_t scheme = url.find("://");
  if (scheme == std::string::npos) fail(Errc::TransportError, "not an absolute URL: " + url);
  size_t path = url.find('/', scheme + 3);
  if (path == std::string::npos) return {url, "/"};
  return {url.substr(0, path), url.substr(path)};
}

inline HttpResponse http_get(const std::string& url, std::chrono::milliseconds timeout) {
  auto [origin, path] = split_url(url);
  httplib::Client cli(origin);
  cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout));
  cli.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout));
  cli.set_follow_location(true);
  auto res = cli.Get(path);
  if (!res) {
    auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
      fail(Errc::Timeout, "timeout fetching " + url);
    fail(Errc::TransportError, "transport failure fetching " + url + " (" + httplib::to_string(err) + ")");
  }
  if (res->status < 200 || res->status >= 300)
    fail(Errc::TransportError, "HTTP " + std::to_string(res->status) + " fetching " + url);
  HttpResponse out;
  out.status = res->status;
  out.body = res->body;
  out.content_type = res->get_header_value("Content-Type");
  return out;
}

inline std::string fetch_http_body(const std::string& url, std::chrono::milliseconds timeout,
                                   std::string* content_type) {
  HttpResponse r = http_get(url, timeout);
  if (content_type) *content_type = r.content_type;
  return r.body;
}

}  // namespace skg
