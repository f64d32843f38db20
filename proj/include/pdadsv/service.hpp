// Copyright 2026 The PD-ADSV Authors
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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "json.hpp"
#include "pdadsv/dsp.hpp"
#include "pdadsv/harness.hpp"

namespace httplib {
class Server;
}

namespace pdadsv {

inline constexpr std::string_view kPositiveText = "PD signs detected";
inline constexpr std::string_view kNegativeText = "No PD signs detected";

// Status plus JSON body; transport independent so it can be tested directly.
struct ServiceResult {
  int status = 200;
  nlohmann::json body;
};

nlohmann::json error_body(std::string_view code, std::string_view message);

// PredictResponse body (latency_ms included).
nlohmann::json prediction_to_json(const Prediction& p, const EnsembleModel& model, double latency_ms);

class InferenceService {
 public:
  explicit InferenceService(DspConfig dsp = {});

  // Atomic swap; requests already holding the old bundle finish on it.
  void set_model(std::shared_ptr<const EnsembleModel> model);
  // Loads `path` and remembers it for reload(). Throws on failure and keeps
  // the current bundle.
  void load(const std::filesystem::path& path);
  // Re-reads the remembered path. Returns the error message on failure.
  std::optional<std::string> reload();

  std::shared_ptr<const EnsembleModel> model() const;

  ServiceResult healthz() const;
  ServiceResult model_info() const;
  // Body: {"features": [32 numbers]}.
  ServiceResult predict_features(std::string_view json_body) const;
  ServiceResult predict_audio(std::span<const std::uint8_t> wav) const;

 private:
  DspConfig dsp_;
  mutable std::mutex mu_;
  std::shared_ptr<const EnsembleModel> model_;
  std::optional<std::filesystem::path> path_;
};

struct ServerOptions {
  std::size_t max_upload_bytes = 50u * 1024u * 1024u;
  bool enable_admin = true;  // POST /api/v1/admin/reload
  std::optional<std::filesystem::path> static_dir;
};

// httplib front end. Routes: GET /healthz, GET /api/v1/model,
// POST /api/v1/predict, POST /api/v1/predict-audio (multipart field "audio").
class HttpServer {
 public:
  HttpServer(InferenceService& service, ServerOptions options = {});
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  bool bind(const std::string& host, int port);
  // Returns the chosen port or -1.
  int bind_to_any_port(const std::string& host);
  // Blocks until stop().
  bool listen_after_bind();
  void stop();
  void wait_until_ready() const;

 private:
  InferenceService& service_;
  ServerOptions options_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace pdadsv
