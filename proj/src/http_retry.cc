// Copyright 2026 The Augment Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "augment/http_retry.h"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <thread>

#include "augment/error.h"

namespace augment {

std::chrono::milliseconds BackoffDelay(const RetryPolicy& policy, int attempt) {
  const double scaled = static_cast<double>(policy.initial_backoff.count()) *
                        std::pow(policy.backoff_multiplier, std::max(0, attempt - 1));
  const double capped = std::min(scaled, static_cast<double>(policy.max_backoff.count()));
  return std::chrono::milliseconds(static_cast<long long>(capped));
}

Endpoint ParseEndpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error("endpoint must look like http://host:port/path, got '" + url + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

HttpOutcome PostWithRetry(const std::string& url, const std::string& body,
                          const std::string& content_type,
                          std::chrono::milliseconds timeout,
                          const RetryPolicy& policy) {
  const Endpoint ep = ParseEndpoint(url);
  httplib::Client client(ep.base);
  const auto secs = timeout.count() / 1000;
  const auto usecs = (timeout.count() % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  HttpOutcome outcome;
  const int attempts = std::max(1, policy.max_attempts);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    outcome.attempts = attempt;
    auto res = client.Post(ep.path, body, content_type);
    if (res) {
      outcome.status = res->status;
      outcome.body = res->body;
      outcome.content_type = res->get_header_value("Content-Type");
      const bool retryable = res->status >= 500 || res->status == 429;
      if (!retryable) {
        outcome.error.reset();
        if (res->status >= 400) {
          outcome.error = "HTTP " + std::to_string(res->status) + " from " + url;
        }
        return outcome;
      }
      outcome.error = "HTTP " + std::to_string(res->status) + " from " + url;
    } else {
      outcome.status = 0;
      outcome.error = "request to " + url + " failed: " + httplib::to_string(res.error());
    }
    if (attempt < attempts) std::this_thread::sleep_for(BackoffDelay(policy, attempt));
  }
  return outcome;
}

}  // namespace augment
