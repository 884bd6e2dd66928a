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

#ifndef AUGMENT_HTTP_RETRY_H_
#define AUGMENT_HTTP_RETRY_H_

#include <chrono>
#include <optional>
#include <string>

namespace augment {

struct RetryPolicy {
  int max_attempts = 4;
  std::chrono::milliseconds initial_backoff{100};
  double backoff_multiplier = 2.0;
  std::chrono::milliseconds max_backoff{2000};
};

// Backoff before attempt `attempt` (1-based retry count), capped.
std::chrono::milliseconds BackoffDelay(const RetryPolicy& policy, int attempt);

// "http://host:port/path" split into the client base and the request path.
struct Endpoint {
  std::string base;  // scheme://host:port
  std::string path;  // begins with '/'
};
Endpoint ParseEndpoint(const std::string& url);

struct HttpOutcome {
  int status = 0;  // 0 when no response was received
  std::string body;
  std::string content_type;
  int attempts = 0;
  std::optional<std::string> error;  // set when every attempt failed

  bool ok() const { return !error && status >= 200 && status < 300; }
};

// POSTs `body` and retries transport failures and 5xx/429 responses with
// exponential backoff. 4xx responses are returned without retrying.
HttpOutcome PostWithRetry(const std::string& url, const std::string& body,
                          const std::string& content_type,
                          std::chrono::milliseconds timeout,
                          const RetryPolicy& policy);

}  // namespace augment

#endif  // AUGMENT_HTTP_RETRY_H_
