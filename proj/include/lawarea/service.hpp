#pragma once

#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lawarea/bundle.hpp"

namespace httplib {
class Server;
}

namespace lawarea {

struct HttpResponse {
  int status = 200;
  std::string body;  // JSON
};

/// JSON API under /v1. Predictions read an immutable bundle that can be
/// replaced at any time; feedback lines are appended to a JSONL log, one
/// complete line per accepted call.
///
/// POST /v1/predict   {"text": str, "k"?: int}  -> {request_id, model_id, degraded, latency_ms, predictions}
/// POST /v1/feedback  {"request_id": str, "selected_label": code} -> {"status": "recorded"}
/// GET  /v1/labels    -> {"labels": [{"code", "name"}]} in schema order
/// GET  /v1/health    -> {"status": "ok", "model_id"}
///
/// 400 malformed request or unknown label, 404 unknown request id or route,
/// 409 repeated feedback for a request id, 413 text longer than the limit,
/// 503 no bundle loaded.
class PredictionService {
 public:
  static constexpr std::size_t kMaxTextCodePoints = 100000;
  static constexpr std::size_t kRememberedRequests = 100000;

  explicit PredictionService(std::filesystem::path feedback_log);
  ~PredictionService();
  PredictionService(const PredictionService&) = delete;
  PredictionService& operator=(const PredictionService&) = delete;

  void set_bundle(std::shared_ptr<const ModelBundle> bundle);
  std::shared_ptr<const ModelBundle> bundle() const;

  HttpResponse handle(std::string_view method, std::string_view path, std::string_view body);

  /// Binds to host:port (0 picks a free port) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves on the bound socket until stop() is called.
  bool listen();
  void stop();

 private:
  struct Issued {
    std::string text;
    std::vector<std::string> predicted;
  };

  HttpResponse predict(std::string_view body);
  HttpResponse feedback(std::string_view body);
  HttpResponse labels() const;
  HttpResponse health() const;
  std::string next_request_id();

  std::filesystem::path feedback_log_;
  std::shared_ptr<const ModelBundle> bundle_;  // accessed with atomic_load / atomic_store

  std::mutex requests_mutex_;
  std::unordered_map<std::string, Issued> issued_;
  std::deque<std::string> issued_order_;
  std::unordered_set<std::string> answered_;
  unsigned long long request_counter_ = 0;
  unsigned long long request_salt_ = 0;

  std::mutex log_mutex_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace lawarea
