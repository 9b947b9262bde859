#pragma once

// Client side of the bridge wire protocol (HTTP/JSON, tensors as base64
// CDST). Endpoints:
//   GET  /health              -> {protocol_version, latent_shape, model_spec}
//   POST /register_condition  {name, text, negative} -> {ok}
//   POST /predict             {condition, timestep, adapters, latent} -> {eps}
//   POST /encode              {image} -> {latent}
//   POST /decode              {latent} -> {image}
// Error replies carry {"error": message} and optionally "kind".

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cds/predictor.hpp"

namespace cds::remote {

inline constexpr int kProtocolVersion = 1;

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string encode_tensor(const LatentTensor& tensor);
LatentTensor decode_tensor(std::string_view base64);

struct PredictRequest {
  ConditionRef condition;
  int timestep = 1;
  std::vector<AdapterSpec> adapters;
  LatentTensor latent;
};

nlohmann::json to_json(const PredictRequest& request);

// Decodes {"eps": ...}; a tensor whose shape differs from expected raises
// ShapeMismatch.
LatentTensor parse_predict_response(std::string_view body, const Shape& expected);

struct HealthInfo {
  int protocol_version = 0;
  Shape latent_shape;
  std::string model_spec;
};

// Rejects any protocol_version other than kProtocolVersion.
HealthInfo parse_health(std::string_view body);

struct ClientOptions {
  double connect_timeout_s = 5.0;
  double read_timeout_s = 120.0;
};

/// Thin synchronous client. Each call opens its own connection, so one
/// Client may be shared across threads. Timeouts are retried once.
class Client {
 public:
  explicit Client(std::string url, ClientOptions options = {});

  const std::string& url() const { return url_; }

  HealthInfo health() const;
  // An already registered name (409) counts as success.
  void register_condition(const std::string& name, const std::string& text,
                          bool negative) const;
  LatentTensor predict(const PredictRequest& request, const Shape& expected) const;
  LatentTensor encode_image(std::span<const std::uint8_t> png) const;
  std::vector<std::uint8_t> decode_latent(const LatentTensor& latent) const;

 private:
  struct Reply {
    int status = 0;
    std::string body;
  };
  Reply send(const std::string& method, const std::string& path,
             const std::string& body) const;

  std::string url_;
  ClientOptions options_;
};

LatentTensor remote_predict(const Client& client, const PredictRequest& request,
                            const Shape& expected);

/// PredictorBackend over a running bridge. The constructor performs the
/// /health handshake; conditions and adapters are validated server side.
class RemoteBackend final : public PredictorBackend {
 public:
  explicit RemoteBackend(std::string url, ClientOptions options = {});

  const Client& client() const { return client_; }
  const HealthInfo& info() const { return info_; }

  Shape latent_shape() const override { return info_.latent_shape; }
  bool has_condition(std::string_view) const override { return true; }
  bool has_adapter(std::string_view) const override { return true; }

  LatentTensor predict(const LatentTensor& z_t, int t, const ConditionRef& cond,
                       std::span<const AdapterSpec> adapters) const override;

 private:
  Client client_;
  HealthInfo info_;
};

}  // namespace cds::remote
