#include "lawarea/service.hpp"

#include <httplib.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <json.hpp>
#include <random>

#include "lawarea/error.hpp"
#include "lawarea/utf8.hpp"

namespace lawarea {

using nlohmann::json;

namespace {

HttpResponse reply(int status, const json& body) { return {status, body.dump()}; }

HttpResponse error_reply(int status, std::string_view code, std::string_view message) {
  return reply(status, {{"error", code}, {"message", message}});
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

}  // namespace

PredictionService::PredictionService(std::filesystem::path feedback_log) : feedback_log_(std::move(feedback_log)) {
  std::random_device rd;
  request_salt_ = (static_cast<unsigned long long>(rd()) << 32) ^ rd();
}

PredictionService::~PredictionService() { stop(); }

void PredictionService::set_bundle(std::shared_ptr<const ModelBundle> bundle) { std::atomic_store(&bundle_, std::move(bundle)); }

std::shared_ptr<const ModelBundle> PredictionService::bundle() const { return std::atomic_load(&bundle_); }

std::string PredictionService::next_request_id() {
  char buf[40];
  std::snprintf(buf, sizeof buf, "req-%016llx-%llu", request_salt_, ++request_counter_);
  return buf;
}

HttpResponse PredictionService::handle(std::string_view method, std::string_view path, std::string_view body) {
  try {
    if (path == "/v1/predict") return method == "POST" ? predict(body) : error_reply(405, "method_not_allowed", "use POST");
    if (path == "/v1/feedback") return method == "POST" ? feedback(body) : error_reply(405, "method_not_allowed", "use POST");
    if (path == "/v1/labels") return method == "GET" ? labels() : error_reply(405, "method_not_allowed", "use GET");
    if (path == "/v1/health") return method == "GET" ? health() : error_reply(405, "method_not_allowed", "use GET");
    return error_reply(404, "not_found", "unknown route");
  } catch (const Error& e) {
    return error_reply(500, to_string(e.code()), e.what());
  } catch (const std::exception& e) {
    return error_reply(500, "internal", e.what());
  }
}

HttpResponse PredictionService::predict(std::string_view body) {
  const auto model = bundle();
  if (!model) return error_reply(503, "unavailable", "no model bundle loaded");
  const json request = json::parse(body, nullptr, false);
  if (request.is_discarded() || !request.is_object()) return error_reply(400, "bad_request", "body must be a JSON object");
  if (!request.contains("text") || !request["text"].is_string()) return error_reply(400, "missing_text", "text is required");
  const std::string text = request["text"].get<std::string>();
  if (utf8::length(text) > kMaxTextCodePoints) return error_reply(413, "text_too_long", "text exceeds 100000 characters");
  std::size_t k = 5;
  if (request.contains("k")) {
    const auto& kv = request["k"];
    if (!kv.is_number_integer() || kv.get<long>() < 1 || kv.get<long>() > static_cast<long>(model->schema.size())) {
      return error_reply(400, "bad_k", "k must be an integer between 1 and the number of labels");
    }
    k = kv.get<std::size_t>();
  }

  const Prediction p = lawarea::predict(*model, text, k);
  json predictions = json::array();
  std::vector<std::string> codes;
  for (const auto& l : p.labels) {
    predictions.push_back({{"code", l.code}, {"name", l.display_name}, {"confidence", l.confidence}});
    codes.push_back(l.code);
  }
  std::string id;
  {
    std::lock_guard lock(requests_mutex_);
    id = next_request_id();
    issued_.emplace(id, Issued{text, std::move(codes)});
    issued_order_.push_back(id);
    while (issued_order_.size() > kRememberedRequests) {
      answered_.erase(issued_order_.front());
      issued_.erase(issued_order_.front());
      issued_order_.pop_front();
    }
  }
  return reply(200, {{"request_id", id},
                     {"model_id", p.model_id},
                     {"degraded", p.degraded},
                     {"latency_ms", p.latency_ms},
                     {"predictions", predictions}});
}

HttpResponse PredictionService::feedback(std::string_view body) {
  const auto model = bundle();
  if (!model) return error_reply(503, "unavailable", "no model bundle loaded");
  const json request = json::parse(body, nullptr, false);
  if (request.is_discarded() || !request.is_object()) return error_reply(400, "bad_request", "body must be a JSON object");
  if (!request.contains("request_id") || !request["request_id"].is_string()) {
    return error_reply(400, "missing_request_id", "request_id is required");
  }
  if (!request.contains("selected_label") || !request["selected_label"].is_string()) {
    return error_reply(400, "missing_label", "selected_label is required");
  }
  const std::string id = request["request_id"].get<std::string>();
  const std::string label = request["selected_label"].get<std::string>();
  if (!model->schema.find(label)) return error_reply(400, "unknown_label", "selected_label is not a schema code");

  std::lock_guard lock(requests_mutex_);
  const auto it = issued_.find(id);
  if (it == issued_.end()) return error_reply(404, "unknown_request", "request_id was not issued by this service");
  if (answered_.contains(id)) return error_reply(409, "duplicate_feedback", "feedback for this request_id was already recorded");

  const json record = {{"request_id", id},
                       {"text", it->second.text},
                       {"predicted", it->second.predicted},
                       {"selected_label", label},
                       {"timestamp", utc_timestamp()}};
  {
    std::lock_guard log_lock(log_mutex_);
    std::ofstream out(feedback_log_, std::ios::binary | std::ios::app);
    const std::string line = record.dump() + "\n";
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
    out.flush();
    if (!out) return error_reply(500, "io_error", "cannot append to the feedback log");
  }
  answered_.insert(id);
  return reply(200, {{"status", "recorded"}});
}

HttpResponse PredictionService::labels() const {
  const auto model = bundle();
  if (!model) return error_reply(503, "unavailable", "no model bundle loaded");
  json list = json::array();
  for (const auto& a : model->schema.areas()) list.push_back({{"code", a.code}, {"name", a.display_name}});
  return reply(200, {{"labels", list}});
}

HttpResponse PredictionService::health() const {
  const auto model = bundle();
  if (!model) return error_reply(503, "unavailable", "no model bundle loaded");
  return reply(200, {{"status", "ok"}, {"model_id", model->model_id}});
}

int PredictionService::bind(const std::string& host, int port) {
  server_ = std::make_unique<httplib::Server>();
  server_->set_payload_max_length(16 << 20);
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    const HttpResponse r = handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  for (const char* path : {"/v1/predict", "/v1/feedback"}) server_->Post(path, route);
  for (const char* path : {"/v1/labels", "/v1/health"}) server_->Get(path, route);
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

bool PredictionService::listen() {
  if (!server_) throw Error(ErrorCode::InvalidArgument, "bind() must precede listen()");
  return server_->listen_after_bind();
}

void PredictionService::stop() {
  if (server_) server_->stop();
}

}  // namespace lawarea
