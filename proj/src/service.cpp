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


#include "pdadsv/service.hpp"

#include <chrono>
#include <cmath>
#include <exception>

#include "httplib.h"
#include "pdadsv/audio.hpp"
#include "pdadsv/error.hpp"
#include "pdadsv/features.hpp"
#include "pdadsv/model_io.hpp"

namespace pdadsv {
namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

ServiceResult fail(int status, std::string_view code, std::string_view message) {
  return {status, error_body(code, message)};
}

ServiceResult not_loaded() {
  return fail(503, "model_not_loaded", "no model bundle is loaded");
}

// Errors a client can cause with a syntactically valid upload.
int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kClipTooShort:
    case ErrorCode::kSilentSignal:
    case ErrorCode::kMalformedContainer:
    case ErrorCode::kUnsupportedEncoding:
    case ErrorCode::kEmptyAudio:
    case ErrorCode::kClipTooShortForFrame:
    case ErrorCode::kInvalidFrequencyRange:
    case ErrorCode::kInvalidConfig:
      return 422;
    default:
      return 500;
  }
}

void send(httplib::Response& res, const ServiceResult& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

}  // namespace

nlohmann::json error_body(std::string_view code, std::string_view message) {
  return {{"error", {{"code", code}, {"message", message}}}};
}

nlohmann::json prediction_to_json(const Prediction& p, const EnsembleModel& model, double latency_ms) {
  json votes = json::array();
  for (std::size_t c = 0; c < kNumClassifiers; ++c) {
    votes.push_back({{"classifier", classifier_names()[c]},
                     {"display_name", classifier_display_names()[c]},
                     {"vote", p.votes[c]},
                     {"weight", model.weights.w[c]},
                     {"probability", p.probability[c]}});
  }
  return {{"final_label", p.final_label},
          {"final_text", p.final_label == 1 ? kPositiveText : kNegativeText},
          {"votes", std::move(votes)},
          {"weights", model.weights.w},
          {"weighted_tally", {{"positive", p.tally_positive}, {"negative", p.tally_negative}}},
          {"probabilities", p.probability},
          {"latency_ms", latency_ms},
          {"model_version", model.model_version()}};
}

InferenceService::InferenceService(DspConfig dsp) : dsp_(std::move(dsp)) {}

void InferenceService::set_model(std::shared_ptr<const EnsembleModel> model) {
  std::lock_guard lock(mu_);
  model_ = std::move(model);
}

void InferenceService::load(const std::filesystem::path& path) {
  auto fresh = std::make_shared<const EnsembleModel>(load_model_file(path));
  std::lock_guard lock(mu_);
  model_ = std::move(fresh);
  path_ = path;
}

std::optional<std::string> InferenceService::reload() {
  std::optional<std::filesystem::path> path;
  {
    std::lock_guard lock(mu_);
    path = path_;
  }
  if (!path) return "no model path configured";
  try {
    load(*path);
  } catch (const std::exception& e) {
    return std::string(e.what());
  }
  return std::nullopt;
}

std::shared_ptr<const EnsembleModel> InferenceService::model() const {
  std::lock_guard lock(mu_);
  return model_;
}

ServiceResult InferenceService::healthz() const {
  return {200, {{"status", "ok"}, {"ready", model() != nullptr}}};
}

ServiceResult InferenceService::model_info() const {
  const auto m = model();
  if (!m) return not_loaded();
  json classifiers = json::array();
  for (std::size_t c = 0; c < kNumClassifiers; ++c) {
    classifiers.push_back({{"name", classifier_names()[c]},
                           {"display_name", classifier_display_names()[c]},
                           {"weight", m->weights.w[c]}});
  }
  return {200,
          {{"model_version", m->model_version()},
           {"format_version", m->format_version},
           {"feature_names", m->feature_names},
           {"classifier_names", classifier_names()},
           {"classifiers", std::move(classifiers)},
           {"weights", m->weights.w},
           {"metadata", m->metadata}}};
}

ServiceResult InferenceService::predict_features(std::string_view json_body) const {
  const auto start = Clock::now();
  const auto m = model();
  if (!m) return not_loaded();
  const json body = json::parse(json_body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    return fail(400, "malformed_body", "request body must be a JSON object");
  }
  const auto it = body.find("features");
  if (it == body.end() || !it->is_array()) {
    return fail(400, "malformed_body", "field 'features' must be an array");
  }
  if (it->size() != kNumFeatures) {
    return fail(422, "wrong_feature_count",
                "expected 32 features, got " + std::to_string(it->size()));
  }
  FeatureVector32 v;
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    const json& x = (*it)[i];
    if (!x.is_number() || !std::isfinite(x.get<double>())) {
      return fail(422, "non_finite_feature",
                  "feature " + std::to_string(i) + " (" + m->feature_names[i] +
                      ") is not a finite number");
    }
    v.values[i] = x.get<double>();
  }
  const Prediction p = m->predict(v);
  return {200, prediction_to_json(p, *m, elapsed_ms(start))};
}

ServiceResult InferenceService::predict_audio(std::span<const std::uint8_t> wav) const {
  const auto start = Clock::now();
  const auto m = model();
  if (!m) return not_loaded();
  try {
    const AudioClip clip = decode_wav(wav);
    const FeatureVector32 v = extract_features(clip, dsp_);
    const Prediction p = m->predict(v);
    return {200, prediction_to_json(p, *m, elapsed_ms(start))};
  } catch (const Error& e) {
    return fail(status_for(e.code()), error_code_name(e.code()), e.what());
  }
}

HttpServer::HttpServer(InferenceService& service, ServerOptions options)
    : service_(service), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  auto& srv = *server_;
  srv.set_payload_max_length(options_.max_upload_bytes);

  srv.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
    send(res, service_.healthz());
  });
  srv.Get("/api/v1/model", [this](const httplib::Request&, httplib::Response& res) {
    send(res, service_.model_info());
  });
  srv.Post("/api/v1/predict", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, service_.predict_features(req.body));
  });
  srv.Post("/api/v1/predict-audio", [this](const httplib::Request& req, httplib::Response& res) {
    if (req.is_multipart_form_data()) {
      if (!req.has_file("audio")) {
        send(res, fail(400, "malformed_body", "multipart field 'audio' is required"));
        return;
      }
      const std::string data = req.get_file_value("audio").content;
      send(res, service_.predict_audio(
                    {reinterpret_cast<const std::uint8_t*>(data.data()), data.size()}));
      return;
    }
    // Raw WAV body is accepted as well.
    if (req.body.empty()) {
      send(res, fail(400, "malformed_body", "expected multipart/form-data with field 'audio'"));
      return;
    }
    send(res, service_.predict_audio(
                  {reinterpret_cast<const std::uint8_t*>(req.body.data()), req.body.size()}));
  });
  if (options_.enable_admin) {
    srv.Post("/api/v1/admin/reload", [this](const httplib::Request&, httplib::Response& res) {
      if (auto err = service_.reload()) {
        send(res, fail(500, "reload_failed", *err));
        return;
      }
      send(res, {200, {{"status", "reloaded"}, {"model_version", service_.model()->model_version()}}});
    });
  }
  if (options_.static_dir) srv.set_mount_point("/", options_.static_dir->string());

  srv.set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string message = "internal error";
        try {
          std::rethrow_exception(ep);
        } catch (const std::exception& e) {
          message = e.what();
        } catch (...) {
        }
        send(res, fail(500, "internal", message));
      });
  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
    switch (res.status) {
      case 413:
        send(res, fail(413, "payload_too_large", "upload exceeds the configured size limit"));
        break;
      case 404:
        send(res, fail(404, "not_found", "no such endpoint"));
        break;
      case 400:
        send(res, fail(400, "malformed_body", "malformed request"));
        break;
      default:
        send(res, fail(res.status, "http_error", httplib::status_message(res.status)));
    }
    return httplib::Server::HandlerResponse::Handled;
  });
}

HttpServer::~HttpServer() { stop(); }

bool HttpServer::bind(const std::string& host, int port) { return server_->bind_to_port(host, port); }

int HttpServer::bind_to_any_port(const std::string& host) { return server_->bind_to_any_port(host); }

bool HttpServer::listen_after_bind() { return server_->listen_after_bind(); }

void HttpServer::stop() {
  if (server_->is_running()) server_->stop();
}

void HttpServer::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace pdadsv
