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


// pdadsv: operator entry point (extract, train, evaluate, predict, serve).

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "pdadsv/audio.hpp"
#include "pdadsv/config.hpp"
#include "pdadsv/error.hpp"
#include "pdadsv/features.hpp"
#include "pdadsv/harness.hpp"
#include "pdadsv/model_io.hpp"
#include "pdadsv/service.hpp"

namespace fs = std::filesystem;
using namespace pdadsv;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitData = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInternal = 3;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kInvalidFractions:
    case ErrorCode::kInvalidFrequencyRange:
      return kExitConfig;
    case ErrorCode::kNonPowerOfTwoLength:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kInvalidVote:
      return kExitInternal;
    default:
      return kExitData;
  }
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return in;
}

Dataset load_dataset(const std::string& path, const AppConfig& cfg) {
  std::ifstream in = open_input(path);
  std::vector<std::string> warnings;
  Dataset ds = parse_dataset_csv(in, cfg.columns, ParseOptions{!cfg.lenient}, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  std::cerr << "loaded " << ds.size() << " records, " << ds.subjects().size() << " subjects\n";
  return ds;
}

bool is_wav(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".wav";
}

int run_extract(const std::string& in_path, const std::string& out_path, const AppConfig& cfg) {
  std::vector<fs::path> files;
  if (fs::is_directory(in_path)) {
    for (const auto& entry : fs::directory_iterator(in_path)) {
      if (entry.is_regular_file() && is_wav(entry.path())) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else if (fs::exists(in_path)) {
    files.emplace_back(in_path);
  } else {
    throw Error(ErrorCode::kIo, "no such file or directory: " + in_path);
  }

  std::ofstream file_out;
  std::ostream* out = &std::cout;
  if (out_path != "-") {
    file_out.open(out_path, std::ios::binary);
    if (!file_out) throw Error(ErrorCode::kIo, "cannot open " + out_path + " for writing");
    out = &file_out;
  }
  write_feature_csv_header(*out);
  std::size_t failures = 0;
  for (const auto& f : files) {
    try {
      write_feature_csv_row(*out, extract_features(read_wav_file(f), cfg.dsp));
    } catch (const Error& e) {
      ++failures;
      std::cerr << "error: " << f.string() << ": " << error_code_name(e.code()) << ": " << e.what()
                << '\n';
    }
  }
  out->flush();
  std::cerr << "extracted " << files.size() - failures << " of " << files.size() << " files\n";
  return failures ? kExitData : kExitOk;
}

int run_train(const std::string& data, const std::string& out_path, const AppConfig& cfg) {
  const Dataset ds = load_dataset(data, cfg);
  const EnsembleModel model = train_final(ds, cfg.harness);
  save_model_file(model, out_path);
  std::cerr << "wrote " << out_path << " (model_version " << model.model_version() << ")\n";
  return kExitOk;
}

int run_evaluate(const std::string& data, bool loso, bool as_json, const AppConfig& cfg) {
  const Dataset ds = load_dataset(data, cfg);
  const std::size_t k = loso ? ds.subjects().size() : cfg.k;
  const CvReport report = cross_validate(ds, k, cfg.harness);
  if (as_json) {
    std::cout << report.to_json().dump(2) << '\n';
  } else {
    std::cout << report.to_text();
  }
  return kExitOk;
}

int run_predict(const std::string& model_path, const std::string& features_path) {
  const EnsembleModel model = load_model_file(model_path);
  std::ifstream in = open_input(features_path);
  const auto rows = read_feature_csv(in);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    nlohmann::json line = prediction_to_json(model.predict(rows[i]), model, 0.0);
    line.erase("latency_ms");
    line["row"] = i;
    std::cout << line.dump() << '\n';
  }
  return kExitOk;
}

volatile std::sig_atomic_t g_reload = 0;
volatile std::sig_atomic_t g_stop = 0;

extern "C" void on_sighup(int) { g_reload = 1; }
extern "C" void on_terminate(int) { g_stop = 1; }

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

int run_serve(std::string model_path, std::string bind, double max_upload_mb,
              const std::string& static_dir, const AppConfig& cfg) {
  if (model_path.empty()) model_path = env_or("PDADSV_MODEL", "");
  if (bind.empty()) bind = env_or("PDADSV_BIND", "127.0.0.1:8080");
  const auto colon = bind.rfind(':');
  int port = -1;
  if (colon != std::string::npos) {
    try {
      port = std::stoi(bind.substr(colon + 1));
    } catch (const std::exception&) {
      port = -1;
    }
  }
  if (port < 0 || port > 65535 || !(max_upload_mb > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "invalid --bind or --max-upload-mb");
  }
  const std::string host = bind.substr(0, colon);

  InferenceService service(cfg.dsp);
  if (!model_path.empty()) {
    service.load(model_path);
    std::cerr << "loaded model " << model_path << " (" << service.model()->model_version() << ")\n";
  } else {
    std::cerr << "no model configured; serving with ready=false\n";
  }

  ServerOptions options;
  options.max_upload_bytes = static_cast<std::size_t>(max_upload_mb * 1024.0 * 1024.0);
  if (!static_dir.empty()) options.static_dir = static_dir;
  HttpServer server(service, options);
  if (!server.bind(host, port)) throw Error(ErrorCode::kIo, "cannot bind " + bind);

  std::signal(SIGHUP, on_sighup);
  std::signal(SIGINT, on_terminate);
  std::signal(SIGTERM, on_terminate);
  std::atomic<bool> done{false};
  std::thread watcher([&] {
    while (!done) {
      if (g_reload) {
        g_reload = 0;
        if (auto err = service.reload()) {
          std::cerr << "reload failed: " << *err << '\n';
        } else {
          std::cerr << "reloaded model (" << service.model()->model_version() << ")\n";
        }
      }
      if (g_stop) server.stop();
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
  });
  std::cerr << "listening on " << host << ':' << port << '\n';
  server.listen_after_bind();
  done = true;
  watcher.join();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parkinson's voice screening toolkit"};
  app.require_subcommand(1);
  std::uint64_t seed = 42;
  std::string config_path;
  auto* seed_opt = app.add_option("--seed", seed, "Random seed for every stochastic step")
                       ->capture_default_str();
  app.add_option("--config", config_path, "Flat key=value file overriding defaults");

  std::string in_path, out_path, data_path, model_path, features_path, bind, static_dir;
  std::size_t k = 10;
  bool loso = false, as_json = false, lenient = false;
  double max_upload_mb = 50.0;

  auto* extract = app.add_subcommand("extract", "Extract 32 features from WAV files");
  extract->add_option("--in", in_path, "WAV file or directory")->required();
  extract->add_option("--out", out_path, "Output CSV ('-' for stdout)")->required();

  auto* train = app.add_subcommand("train", "Train the four-classifier ensemble");
  train->add_option("--data", data_path, "Labeled feature CSV")->required();
  train->add_option("--out", out_path, "Output model bundle (.pdadsv.json)")->required();
  train->add_flag("--lenient", lenient, "Drop subjects with replication/label problems");

  auto* evaluate = app.add_subcommand("evaluate", "Subject-grouped cross-validation");
  evaluate->add_option("--data", data_path, "Labeled feature CSV")->required();
  auto* k_opt = evaluate->add_option("--k", k, "Number of folds")->capture_default_str();
  evaluate->add_flag("--loso", loso, "Leave one subject out (k = number of subjects)");
  evaluate->add_flag("--json", as_json, "Emit the report as JSON");
  evaluate->add_flag("--lenient", lenient, "Drop subjects with replication/label problems");

  auto* predict = app.add_subcommand("predict", "Predict rows of a feature CSV");
  predict->add_option("--model", model_path, "Model bundle")->required();
  predict->add_option("--features", features_path, "Feature CSV")->required();

  auto* serve = app.add_subcommand("serve", "Run the HTTP inference service");
  serve->add_option("--model", model_path, "Model bundle (env PDADSV_MODEL)");
  serve->add_option("--bind", bind, "host:port (env PDADSV_BIND, default 127.0.0.1:8080)");
  serve->add_option("--max-upload-mb", max_upload_mb, "Upload size limit in MB")
      ->capture_default_str();
  serve->add_option("--static-dir", static_dir, "Directory of static UI assets to mount at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    AppConfig cfg;
    if (!config_path.empty()) apply_config_file(config_path, cfg);
    if (seed_opt->count() || config_path.empty()) cfg.harness.seed = seed;
    if (k_opt->count()) cfg.k = k;
    if (lenient) cfg.lenient = true;
    cfg.harness.tree.validate();
    std::cerr << "seed: " << cfg.harness.seed << '\n';

    if (*extract) return run_extract(in_path, out_path, cfg);
    if (*train) return run_train(data_path, out_path, cfg);
    if (*evaluate) return run_evaluate(data_path, loso, as_json, cfg);
    if (*predict) return run_predict(model_path, features_path);
    if (*serve) return run_serve(model_path, bind, max_upload_mb, static_dir, cfg);
  } catch (const Error& e) {
    std::cerr << "error: " << error_code_name(e.code()) << ": " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}
