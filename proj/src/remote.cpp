#include "cds/remote.hpp"

#include <openssl/evp.h>

#include "httplib.h"

#include "cds/codec.hpp"
#include "cds/error.hpp"

namespace cds::remote {

using nlohmann::json;

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                          static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) fail(ErrorCode::Protocol, "base64 length not a multiple of 4");
  std::vector<std::uint8_t> out(3 * (text.size() / 4));
  int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                          static_cast<int>(text.size()));
  if (n < 0) fail(ErrorCode::Protocol, "invalid base64 payload");
  // EVP_DecodeBlock keeps the bytes produced by '=' padding.
  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=') ++pad;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

std::string encode_tensor(const LatentTensor& tensor) {
  return base64_encode(tensor_write(tensor));
}

LatentTensor decode_tensor(std::string_view base64) {
  return tensor_read(base64_decode(base64));
}

json to_json(const PredictRequest& request) {
  json adapters = json::array();
  for (const auto& a : request.adapters) adapters.push_back({{"id", a.id}, {"scale", a.scale}});
  return json{{"condition", request.condition.id},
              {"timestep", request.timestep},
              {"adapters", std::move(adapters)},
              {"latent", encode_tensor(request.latent)}};
}

namespace {

json parse_body(std::string_view body, const char* what) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    fail(ErrorCode::Protocol, std::string(what) + ": response is not a JSON object");
  }
  return j;
}

std::string field_string(const json& j, const char* key, const char* what) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    fail(ErrorCode::Protocol, std::string(what) + ": missing string field '" + key + "'");
  }
  return it->get<std::string>();
}

}  // namespace

LatentTensor parse_predict_response(std::string_view body, const Shape& expected) {
  json j = parse_body(body, "/predict");
  LatentTensor eps = decode_tensor(field_string(j, "eps", "/predict"));
  if (eps.shape() != expected) {
    fail(ErrorCode::ShapeMismatch, "/predict returned shape " + to_string(eps.shape()) +
                                       ", expected " + to_string(expected));
  }
  return eps;
}

HealthInfo parse_health(std::string_view body) {
  json j = parse_body(body, "/health");
  auto version = j.find("protocol_version");
  if (version == j.end() || !version->is_number_integer()) {
    fail(ErrorCode::Protocol, "/health: missing protocol_version");
  }
  HealthInfo info;
  info.protocol_version = version->get<int>();
  if (info.protocol_version != kProtocolVersion) {
    fail(ErrorCode::Protocol, "protocol version mismatch: bridge speaks " +
                                  std::to_string(info.protocol_version) + ", engine " +
                                  std::to_string(kProtocolVersion));
  }
  auto shape = j.find("latent_shape");
  if (shape == j.end() || !shape->is_array() || shape->size() != 3) {
    fail(ErrorCode::Protocol, "/health: latent_shape must be [C, H, W]");
  }
  for (const auto& d : *shape) {
    if (!d.is_number_unsigned() || d.get<std::uint32_t>() == 0) {
      fail(ErrorCode::Protocol, "/health: latent_shape entries must be positive integers");
    }
  }
  info.latent_shape = Shape{(*shape)[0].get<std::uint32_t>(), (*shape)[1].get<std::uint32_t>(),
                            (*shape)[2].get<std::uint32_t>()};
  if (auto m = j.find("model_spec"); m != j.end() && m->is_string()) {
    info.model_spec = m->get<std::string>();
  }
  return info;
}

Client::Client(std::string url, ClientOptions options)
    : url_(std::move(url)), options_(options) {
  if (url_.empty()) fail(ErrorCode::InvalidArgument, "empty backend url");
  while (!url_.empty() && url_.back() == '/') url_.pop_back();
}

Client::Reply Client::send(const std::string& method, const std::string& path,
                           const std::string& body) const {
  for (int attempt = 0;; ++attempt) {
    httplib::Client http(url_);
    if (!http.is_valid()) fail(ErrorCode::InvalidArgument, "invalid backend url '" + url_ + "'");
    auto seconds = [](double s) {
      return std::chrono::microseconds(static_cast<long long>(s * 1e6));
    };
    http.set_connection_timeout(seconds(options_.connect_timeout_s));
    http.set_read_timeout(seconds(options_.read_timeout_s));
    http.set_write_timeout(seconds(options_.read_timeout_s));
    httplib::Result res = method == "GET" ? http.Get(path)
                                          : http.Post(path, body, "application/json");
    if (res) return Reply{res->status, res->body};
    const httplib::Error err = res.error();
    const bool timeout = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
    if (timeout && attempt == 0) continue;
    fail(ErrorCode::Transport, method + " " + url_ + path + ": " + httplib::to_string(err));
  }
}

namespace {

[[noreturn]] void raise_status(const std::string& path, int status, const std::string& body) {
  std::string message = body;
  std::string kind;
  json j = json::parse(body, nullptr, false);
  if (j.is_object()) {
    if (auto e = j.find("error"); e != j.end() && e->is_string()) message = e->get<std::string>();
    if (auto k = j.find("kind"); k != j.end() && k->is_string()) kind = k->get<std::string>();
  }
  const std::string where = path + " -> HTTP " + std::to_string(status) + ": " + message;
  switch (status) {
    case 404:
      if (kind == "unknown_adapter" ||
          (kind.empty() && message.find("adapter") != std::string::npos)) {
        fail(ErrorCode::UnknownAdapter, where);
      }
      fail(ErrorCode::UnknownCondition, where);
    case 422:
      fail(ErrorCode::ShapeMismatch, where);
    case 503:
      fail(ErrorCode::Transport, where);
    default:
      if (status >= 500) fail(ErrorCode::ServerError, where);
      fail(ErrorCode::Protocol, where);
  }
}

}  // namespace

HealthInfo Client::health() const {
  Reply r = send("GET", "/health", "");
  if (r.status != 200) raise_status("/health", r.status, r.body);
  return parse_health(r.body);
}

void Client::register_condition(const std::string& name, const std::string& text,
                                bool negative) const {
  json body{{"name", name}, {"text", text}, {"negative", negative}};
  Reply r = send("POST", "/register_condition", body.dump());
  if (r.status == 200 || r.status == 409) return;
  raise_status("/register_condition", r.status, r.body);
}

LatentTensor Client::predict(const PredictRequest& request, const Shape& expected) const {
  Reply r = send("POST", "/predict", to_json(request).dump());
  if (r.status != 200) raise_status("/predict", r.status, r.body);
  return parse_predict_response(r.body, expected);
}

LatentTensor Client::encode_image(std::span<const std::uint8_t> png) const {
  json body{{"image", base64_encode(png)}};
  Reply r = send("POST", "/encode", body.dump());
  if (r.status != 200) raise_status("/encode", r.status, r.body);
  return decode_tensor(field_string(parse_body(r.body, "/encode"), "latent", "/encode"));
}

std::vector<std::uint8_t> Client::decode_latent(const LatentTensor& latent) const {
  json body{{"latent", encode_tensor(latent)}};
  Reply r = send("POST", "/decode", body.dump());
  if (r.status != 200) raise_status("/decode", r.status, r.body);
  return base64_decode(field_string(parse_body(r.body, "/decode"), "image", "/decode"));
}

LatentTensor remote_predict(const Client& client, const PredictRequest& request,
                            const Shape& expected) {
  return client.predict(request, expected);
}

RemoteBackend::RemoteBackend(std::string url, ClientOptions options)
    : client_(std::move(url), options), info_(client_.health()) {}

LatentTensor RemoteBackend::predict(const LatentTensor& z_t, int t, const ConditionRef& cond,
                                    std::span<const AdapterSpec> adapters) const {
  PredictRequest request{cond, t, {adapters.begin(), adapters.end()}, z_t};
  return client_.predict(request, info_.latent_shape);
}

}  // namespace cds::remote
