#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"

#include "cds/analytic.hpp"
#include "cds/editor.hpp"
#include "cds/schedule.hpp"

namespace cds {

struct ScheduleConfig {
  ScheduleKind kind = ScheduleKind::ScaledLinear;
  int steps = 1000;
  double beta_start = 0.00085;
  double beta_end = 0.012;

  NoiseSchedule build() const;
};

struct RemoteCondition {
  std::string text;
  bool negative = false;
};

struct BackendConfig {
  std::string kind = "analytic";  // analytic | remote
  std::string url;
  std::string model_spec;
  double read_timeout_s = 120.0;
  std::map<std::string, RemoteCondition> conditions;  // registered at startup
  nlohmann::json analytic = nlohmann::json::object();
};

struct OutputConfig {
  std::string dir = "out";
  bool dump_gradients = false;
};

/// Parsed run-config file. Omitted keys take their defaults; unknown keys
/// are rejected with ErrorCode::Config.
struct RunConfig {
  EditConfig engine;
  ScheduleConfig schedule;
  BackendConfig backend;
  OutputConfig output;
};

RunConfig parse_run_config(const nlohmann::json& doc,
                           const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
// Effective configuration; parse_run_config(to_json(c)) reproduces c.
nlohmann::json to_json(const RunConfig& config);

// Builds the analytic backend described by backend.analytic.
//
//   {"shape": [C, H, W], "variance": v, "base_mean": FIELD,
//    "conditions": {name: FIELD | null},
//    "adapters": {name: {"value": ..., "region": [r0, c0, r1, c1]}},
//    "source_texture": amplitude}
//
// FIELD is {"value": x | [per-channel], "region": [r0, c0, r1, c1]},
// {"file": "tensor.cdst"}, or a list of FIELDs that are summed. Regions are
// half-open and default to the whole plane.
GaussianConceptModel build_analytic_model(const nlohmann::json& spec,
                                          const NoiseSchedule& schedule);

// Source latent for an analytic run: the source-condition mean plus
// source_texture * N(0, 1) noise seeded from the engine seed.
LatentTensor analytic_source(const RunConfig& config, const GaussianConceptModel& model);
// Mean of the target condition with all target adapters active.
LatentTensor analytic_target(const RunConfig& config, const GaussianConceptModel& model);

}  // namespace cds
