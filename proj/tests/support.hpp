#pragma once

// Test-only helpers: a table-driven stub backend, seeded random tensors
// (std::mt19937, independent of the engine's generator) and an in-process
// fake bridge speaking the HTTP protocol.

#include <atomic>
#include <chrono>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "cds/codec.hpp"
#include "cds/predictor.hpp"
#include "cds/remote.hpp"

namespace cds::testing {

inline LatentTensor random_tensor(std::uint32_t seed, Shape shape, float lo = -1.0f,
                                  float hi = 1.0f) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<float> dist(lo, hi);
  std::vector<float> v(shape.size());
  for (float& x : v) x = dist(gen);
  return LatentTensor(shape, std::move(v));
}

/// Returns a fixed tensor per condition, plus a fixed offset per active
/// adapter; ignores the latent and timestep.
class StubBackend final : public PredictorBackend {
 public:
  explicit StubBackend(Shape shape) : shape_(shape) {}

  void set_condition(const std::string& id, LatentTensor eps) { conditions_[id] = std::move(eps); }
  void set_adapter(const std::string& id, LatentTensor offset) { adapters_[id] = std::move(offset); }

  Shape latent_shape() const override { return shape_; }
  bool has_condition(std::string_view id) const override {
    return conditions_.count(std::string(id)) > 0;
  }
  bool has_adapter(std::string_view id) const override {
    return adapters_.count(std::string(id)) > 0;
  }
  LatentTensor predict(const LatentTensor&, int, const ConditionRef& cond,
                       std::span<const AdapterSpec> adapters) const override {
    LatentTensor out = conditions_.at(cond.id);
    for (const auto& a : adapters) {
      const LatentTensor& off = adapters_.at(a.id);
      for (std::size_t i = 0; i < out.size(); ++i) {
        out.mutable_values()[i] += static_cast<float>(a.scale) * off.values()[i];
      }
    }
    return out;
  }

 private:
  Shape shape_;
  std::map<std::string, LatentTensor> conditions_;
  std::map<std::string, LatentTensor> adapters_;
};

/// Minimal bridge double. /predict answers eps = 0.5 * latent (shape
/// overridable to force mismatches); unknown conditions get 404.
class FakeBridge {
 public:
  struct Options {
    int protocol_version = 1;
    Shape shape{4, 8, 8};
    std::optional<Shape> reply_shape;  // force a wrong /predict shape
    bool fail_predict = false;         // 500 with a message
    int slow_first_predicts = 0;       // sleep past the client timeout
    std::chrono::milliseconds delay{0};
  };

  FakeBridge() : FakeBridge(Options{}) {}
  explicit FakeBridge(Options options) : options_(options) {
    using nlohmann::json;
    server_.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
      json shape = {options_.shape.channels, options_.shape.height, options_.shape.width};
      res.set_content(json{{"protocol_version", options_.protocol_version},
                           {"latent_shape", shape},
                           {"model_spec", "fake"}}
                          .dump(),
                      "application/json");
    });
    server_.Post("/register_condition", [this](const httplib::Request& req, httplib::Response& res) {
      json body = json::parse(req.body);
      std::lock_guard lock(mu_);
      if (body.value("text", "").empty()) {
        res.status = 400;
        res.set_content(R"({"error":"empty text"})", "application/json");
      } else if (!conditions_.insert(body["name"].get<std::string>()).second) {
        res.status = 409;
        res.set_content(R"({"error":"duplicate condition"})", "application/json");
      } else {
        res.set_content(R"({"ok":true})", "application/json");
      }
    });
    server_.Post("/predict", [this](const httplib::Request& req, httplib::Response& res) {
      ++predict_calls_;
      if (predict_calls_ <= options_.slow_first_predicts) std::this_thread::sleep_for(options_.delay);
      json body = json::parse(req.body);
      {
        std::lock_guard lock(mu_);
        last_predict_ = body;
        if (!conditions_.count(body["condition"].get<std::string>())) {
          res.status = 404;
          res.set_content(R"({"error":"unknown condition","kind":"unknown_condition"})",
                          "application/json");
          return;
        }
      }
      for (const auto& a : body["adapters"]) {
        if (a["id"] == "unknown") {
          res.status = 404;
          res.set_content(R"({"error":"unknown adapter","kind":"unknown_adapter"})",
                          "application/json");
          return;
        }
      }
      if (options_.fail_predict) {
        res.status = 500;
        res.set_content(R"({"error":"CUDA out of memory"})", "application/json");
        return;
      }
      LatentTensor latent = remote::decode_tensor(body["latent"].get<std::string>());
      Shape out_shape = options_.reply_shape.value_or(latent.shape());
      LatentTensor eps(out_shape);
      for (std::size_t i = 0; i < std::min(eps.size(), latent.size()); ++i) {
        eps.mutable_values()[i] = 0.5f * latent.values()[i];
      }
      res.set_content(json{{"eps", remote::encode_tensor(eps)}}.dump(), "application/json");
    });
    // /encode ignores the image and returns a constant latent; /decode
    // returns a fake PNG signature followed by the latent byte count.
    server_.Post("/encode", [this](const httplib::Request&, httplib::Response& res) {
      LatentTensor latent(options_.shape, 0.25f);
      res.set_content(json{{"latent", remote::encode_tensor(latent)}}.dump(), "application/json");
    });
    server_.Post("/decode", [](const httplib::Request& req, httplib::Response& res) {
      LatentTensor latent = remote::decode_tensor(json::parse(req.body)["latent"].get<std::string>());
      std::vector<std::uint8_t> png{0x89, 'P', 'N', 'G', static_cast<std::uint8_t>(latent.size() & 0xff)};
      res.set_content(json{{"image", remote::base64_encode(png)}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~FakeBridge() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int predict_calls() const { return predict_calls_; }
  nlohmann::json last_predict() {
    std::lock_guard lock(mu_);
    return last_predict_;
  }
  void add_condition(const std::string& name) {
    std::lock_guard lock(mu_);
    conditions_.insert(name);
  }

 private:
  Options options_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> predict_calls_{0};
  std::mutex mu_;
  std::set<std::string> conditions_;
  nlohmann::json last_predict_;
};

}  // namespace cds::testing
