// Copyright 2026 The Narrapol Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Minimal HTTP plumbing shared by the harvest and annotate clients: a
// swappable transport, a request-rate limiter and atomic file writes.

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "narrapol/error.hpp"

namespace narrapol {

using QueryParams = std::vector<std::pair<std::string, std::string>>;

struct HttpRequest {
  std::string method = "GET";
  std::string path;
  QueryParams query;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
  std::string content_type = "application/json";
};

struct HttpResponse {
  int status = 0;
  std::string body;
  std::map<std::string, std::string> headers;  // lowercase names

  std::optional<std::string> header(const std::string& lower_name) const {
    auto it = headers.find(lower_name);
    if (it == headers.end()) return std::nullopt;
    return it->second;
  }
};

// Sends one request and returns whatever status came back. Connection-level
// failures throw UpstreamError.
using HttpTransport = std::function<HttpResponse(const HttpRequest&)>;

// Transport backed by cpp-httplib; `base_url` is scheme://host[:port].
inline HttpTransport httplib_transport(std::string base_url, int timeout_seconds = 120) {
  return [base_url = std::move(base_url), timeout_seconds](const HttpRequest& req) {
    httplib::Client client(base_url);
    client.set_connection_timeout(timeout_seconds);
    client.set_read_timeout(timeout_seconds);
    client.set_write_timeout(timeout_seconds);
    httplib::Headers headers;
    for (const auto& [k, v] : req.headers) headers.emplace(k, v);

    httplib::Result result{nullptr, httplib::Error::Unknown};
    if (req.method == "GET") {
      httplib::Params params;
      for (const auto& [k, v] : req.query) params.emplace(k, v);
      result = client.Get(req.path, params, headers);
    } else if (req.method == "POST") {
      result = client.Post(req.path, headers, req.body, req.content_type);
    } else {
      throw ConfigError("http: unsupported method " + req.method);
    }
    if (!result) {
      throw UpstreamError("http: " + req.method + " " + base_url + req.path + " failed: " +
                          httplib::to_string(result.error()));
    }
    HttpResponse out;
    out.status = result->status;
    out.body = result->body;
    for (const auto& [k, v] : result->headers) {
      std::string name = k;
      for (auto& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      out.headers.emplace(std::move(name), v);
    }
    return out;
  };
}

// Spaces requests at least 1/rate seconds apart across threads.
class RateLimiter {
 public:
  explicit RateLimiter(double per_second = 0.0) : per_second_(per_second) {}

  void acquire() {
    if (per_second_ <= 0.0) return;
    const auto gap = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / per_second_));
    std::chrono::steady_clock::time_point slot;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      const auto now = std::chrono::steady_clock::now();
      slot = std::max(now, next_);
      next_ = slot + gap;
    }
    std::this_thread::sleep_until(slot);
  }

 private:
  double per_second_;
  std::mutex mutex_;
  std::chrono::steady_clock::time_point next_{};
};

inline std::optional<std::string> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Write to a sibling temp file and rename over the target, so readers never
// see a partial file and concurrent writers of the same key cannot interleave.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  static std::atomic<std::uint64_t> counter{0};
  std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) + "." +
         std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw ConfigError("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace narrapol
