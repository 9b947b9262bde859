#include "cds/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>

#include "cds/codec.hpp"
#include "cds/elementwise.hpp"
#include "cds/error.hpp"
#include "cds/rng.hpp"

namespace cds {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& msg) { fail(ErrorCode::Config, msg); }

void check_keys(const json& obj, const std::string& section,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) config_error(section + " must be an object");
  std::set<std::string> names(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!names.count(key)) config_error("unknown key '" + section + "." + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& section) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    config_error(section + "." + key + " has the wrong type");
  }
}

double read_number(const json& obj, const char* key, double fallback,
                   const std::string& section) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number()) config_error(section + "." + key + " must be a number");
  return it->get<double>();
}

std::vector<AdapterSpec> read_adapters(const json& obj, const char* key,
                                       const std::string& section) {
  std::vector<AdapterSpec> out;
  auto it = obj.find(key);
  if (it == obj.end()) return out;
  const std::string where = section + "." + key;
  if (!it->is_array()) config_error(where + " must be a list");
  for (const auto& entry : *it) {
    check_keys(entry, where + "[]", {"id", "scale"});
    if (!entry.contains("id") || !entry["id"].is_string()) {
      config_error(where + "[] needs a string id");
    }
    double scale = read_number(entry, "scale", 0.8, where + "[]");
    if (!(scale >= 0.0 && scale <= 2.0)) config_error(where + "[] scale must lie in [0, 2]");
    out.emplace_back(entry["id"].get<std::string>(), scale);
  }
  return out;
}

json adapters_json(const std::vector<AdapterSpec>& adapters) {
  json out = json::array();
  for (const auto& a : adapters) out.push_back({{"id", a.id}, {"scale", a.scale}});
  return out;
}

std::string read_condition(const json& obj, const char* key, const std::string& fallback) {
  std::string id = fallback;
  read(obj, key, id, "engine");
  if (id.empty()) config_error(std::string("engine.") + key + " must be non-empty");
  return id;
}

void absolutize_files(json& field, const std::filesystem::path& base_dir) {
  if (field.is_array()) {
    for (auto& f : field) absolutize_files(f, base_dir);
  } else if (field.is_object()) {
    for (auto& [key, value] : field.items()) {
      if (key == "file" && value.is_string()) {
        std::filesystem::path p = value.get<std::string>();
        if (p.is_relative() && !base_dir.empty()) value = (base_dir / p).lexically_normal().string();
      } else if (value.is_object() || value.is_array()) {
        absolutize_files(value, base_dir);
      }
    }
  }
}

}  // namespace

NoiseSchedule ScheduleConfig::build() const {
  return build_noise_schedule(kind, steps, beta_start, beta_end);
}

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir) {
  check_keys(doc, "config", {"engine", "schedule", "backend", "output"});
  RunConfig cfg;
  EditConfig& e = cfg.engine;

  const json engine = doc.value("engine", json::object());
  check_keys(engine, "engine",
             {"steps", "eta", "lambda", "tau", "patch_h", "patch_w", "learning_rate",
              "shared_noise", "regularizer_mode", "w_t", "seed", "source_cond",
              "target_cond", "negative_cond", "target_adapters", "source_adapters",
              "negative_adapters", "parallel_predict", "objective"});
  read(engine, "steps", e.steps, "engine");
  e.eta = read_number(engine, "eta", e.eta, "engine");
  e.lambda = read_number(engine, "lambda", e.lambda, "engine");
  e.tau = read_number(engine, "tau", e.tau, "engine");
  read(engine, "patch_h", e.patch.height, "engine");
  read(engine, "patch_w", e.patch.width, "engine");
  e.learning_rate = read_number(engine, "learning_rate", e.learning_rate, "engine");
  read(engine, "shared_noise", e.shared_noise, "engine");
  read(engine, "seed", e.seed, "engine");
  read(engine, "parallel_predict", e.parallel_predict, "engine");
  try {
    if (engine.contains("regularizer_mode")) {
      e.regularizer_mode = parse_regularizer_mode(engine["regularizer_mode"].get<std::string>());
    }
    if (engine.contains("w_t")) e.w_t = TimeWeight::parse(engine["w_t"].get<std::string>());
    if (engine.contains("objective")) e.objective = parse_objective(engine["objective"].get<std::string>());
  } catch (const json::exception&) {
    config_error("engine mode keys must be strings");
  } catch (const Error& err) {
    config_error(err.what());
  }
  e.source_cond = ConditionRef(read_condition(engine, "source_cond", e.source_cond.id));
  e.target_cond = ConditionRef(read_condition(engine, "target_cond", e.target_cond.id));
  e.negative_cond = ConditionRef(read_condition(engine, "negative_cond", e.negative_cond.id));
  e.target_adapters = read_adapters(engine, "target_adapters", "engine");
  e.source_adapters = read_adapters(engine, "source_adapters", "engine");
  e.negative_adapters = read_adapters(engine, "negative_adapters", "engine");

  const json schedule = doc.value("schedule", json::object());
  check_keys(schedule, "schedule", {"kind", "T", "beta_start", "beta_end", "t_max", "t_min"});
  if (schedule.contains("kind")) {
    try {
      cfg.schedule.kind = parse_schedule_kind(schedule["kind"].get<std::string>());
    } catch (const std::exception& err) {
      config_error(std::string("schedule.kind: ") + err.what());
    }
  }
  read(schedule, "T", cfg.schedule.steps, "schedule");
  cfg.schedule.beta_start = read_number(schedule, "beta_start", cfg.schedule.beta_start, "schedule");
  cfg.schedule.beta_end = read_number(schedule, "beta_end", cfg.schedule.beta_end, "schedule");
  read(schedule, "t_max", e.t_max, "schedule");
  read(schedule, "t_min", e.t_min, "schedule");

  const json backend = doc.value("backend", json::object());
  check_keys(backend, "backend",
             {"kind", "url", "model_spec", "conditions", "read_timeout_s", "analytic"});
  read(backend, "kind", cfg.backend.kind, "backend");
  if (cfg.backend.kind != "analytic" && cfg.backend.kind != "remote") {
    config_error("backend.kind must be 'analytic' or 'remote'");
  }
  read(backend, "url", cfg.backend.url, "backend");
  read(backend, "model_spec", cfg.backend.model_spec, "backend");
  cfg.backend.read_timeout_s = read_number(backend, "read_timeout_s", cfg.backend.read_timeout_s, "backend");
  if (auto it = backend.find("conditions"); it != backend.end()) {
    if (!it->is_object()) config_error("backend.conditions must be an object");
    for (const auto& [name, entry] : it->items()) {
      const std::string where = "backend.conditions." + name;
      check_keys(entry, where, {"text", "negative"});
      RemoteCondition c;
      read(entry, "text", c.text, where);
      read(entry, "negative", c.negative, where);
      if (name.empty()) config_error("backend.conditions needs non-empty names");
      cfg.backend.conditions.emplace(name, std::move(c));
    }
  }
  if (auto it = backend.find("analytic"); it != backend.end()) {
    if (!it->is_object()) config_error("backend.analytic must be an object");
    cfg.backend.analytic = *it;
    absolutize_files(cfg.backend.analytic, base_dir);
  }

  const json output = doc.value("output", json::object());
  check_keys(output, "output", {"dir", "dump_gradients"});
  read(output, "dir", cfg.output.dir, "output");
  read(output, "dump_gradients", cfg.output.dump_gradients, "output");

  try {
    NoiseSchedule sched = cfg.schedule.build();
    e.validate(sched);
    plan_timesteps(e.steps, e.t_max, e.t_min);
  } catch (const Error& err) {
    config_error(err.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config " + path.string());
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) config_error("config " + path.string() + " is not valid JSON");
  return parse_run_config(doc, path.parent_path());
}

json to_json(const RunConfig& config) {
  const EditConfig& e = config.engine;
  json conditions = json::object();
  for (const auto& [name, c] : config.backend.conditions) {
    conditions[name] = {{"text", c.text}, {"negative", c.negative}};
  }
  json backend{{"kind", config.backend.kind},
               {"url", config.backend.url},
               {"model_spec", config.backend.model_spec},
               {"read_timeout_s", config.backend.read_timeout_s},
               {"conditions", conditions}};
  if (!config.backend.analytic.empty()) backend["analytic"] = config.backend.analytic;
  return json{
      {"engine",
       {{"steps", e.steps},
        {"eta", e.eta},
        {"lambda", e.lambda},
        {"tau", e.tau},
        {"patch_h", e.patch.height},
        {"patch_w", e.patch.width},
        {"learning_rate", e.learning_rate},
        {"shared_noise", e.shared_noise},
        {"regularizer_mode", std::string(to_string(e.regularizer_mode))},
        {"w_t", e.w_t.preset},
        {"seed", e.seed},
        {"source_cond", e.source_cond.id},
        {"target_cond", e.target_cond.id},
        {"negative_cond", e.negative_cond.id},
        {"target_adapters", adapters_json(e.target_adapters)},
        {"source_adapters", adapters_json(e.source_adapters)},
        {"negative_adapters", adapters_json(e.negative_adapters)},
        {"parallel_predict", e.parallel_predict},
        {"objective", std::string(to_string(e.objective))}}},
      {"schedule",
       {{"kind", std::string(to_string(config.schedule.kind))},
        {"T", config.schedule.steps},
        {"beta_start", config.schedule.beta_start},
        {"beta_end", config.schedule.beta_end},
        {"t_max", e.t_max},
        {"t_min", e.t_min}}},
      {"backend", backend},
      {"output", {{"dir", config.output.dir}, {"dump_gradients", config.output.dump_gradients}}}};
}

namespace {

std::uint32_t as_dim(const json& v, const std::string& where) {
  if (!v.is_number_unsigned()) config_error(where + " must be a non-negative integer");
  return v.get<std::uint32_t>();
}

std::vector<std::uint8_t> region_mask(const json& obj, const Shape& shape,
                                      const std::string& where) {
  auto it = obj.find("region");
  if (it == obj.end()) return std::vector<std::uint8_t>(shape.plane(), 1);
  if (!it->is_array() || it->size() != 4) config_error(where + ".region must be [r0, c0, r1, c1]");
  try {
    return rect_mask(shape, as_dim((*it)[0], where), as_dim((*it)[1], where),
                     as_dim((*it)[2], where), as_dim((*it)[3], where));
  } catch (const Error& err) {
    config_error(where + ".region: " + err.what());
  }
}

std::vector<float> channel_values(const json& obj, const std::string& where) {
  auto it = obj.find("value");
  if (it == obj.end()) config_error(where + " needs a value");
  std::vector<float> out;
  if (it->is_number()) {
    out.push_back(it->get<float>());
  } else if (it->is_array()) {
    for (const auto& v : *it) {
      if (!v.is_number()) config_error(where + ".value entries must be numbers");
      out.push_back(v.get<float>());
    }
  } else {
    config_error(where + ".value must be a number or a list");
  }
  return out;
}

LatentTensor build_field(const json& field, const Shape& shape, const std::string& where) {
  if (field.is_null()) return LatentTensor::zeros(shape);
  if (field.is_array()) {
    LatentTensor total = LatentTensor::zeros(shape);
    for (const auto& f : field) total = add(total, build_field(f, shape, where));
    return total;
  }
  if (!field.is_object()) config_error(where + " must be an object, list or null");
  if (field.contains("file")) {
    check_keys(field, where, {"file"});
    LatentTensor t = load_tensor(field["file"].get<std::string>());
    if (t.shape() != shape) config_error(where + ": file tensor shape " + to_string(t.shape()));
    return t;
  }
  check_keys(field, where, {"value", "region"});
  try {
    return masked_field(shape, channel_values(field, where), region_mask(field, shape, where));
  } catch (const Error& err) {
    if (err.code() == ErrorCode::Config) throw;
    config_error(where + ": " + err.what());
  }
}

}  // namespace

GaussianConceptModel build_analytic_model(const json& spec, const NoiseSchedule& schedule) {
  check_keys(spec, "backend.analytic",
             {"shape", "variance", "base_mean", "conditions", "adapters", "source_texture"});
  auto shape_it = spec.find("shape");
  if (shape_it == spec.end() || !shape_it->is_array() || shape_it->size() != 3) {
    config_error("backend.analytic.shape must be [C, H, W]");
  }
  Shape shape{as_dim((*shape_it)[0], "shape"), as_dim((*shape_it)[1], "shape"),
              as_dim((*shape_it)[2], "shape")};
  if (shape.size() == 0) config_error("backend.analytic.shape must be positive");
  double variance = read_number(spec, "variance", 1.0, "backend.analytic");
  if (!(variance > 0.0)) config_error("backend.analytic.variance must be > 0");

  GaussianConceptModel model(
      schedule, build_field(spec.value("base_mean", json()), shape, "backend.analytic.base_mean"),
      variance);
  if (auto it = spec.find("conditions"); it != spec.end()) {
    if (!it->is_object()) config_error("backend.analytic.conditions must be an object");
    for (const auto& [name, field] : it->items()) {
      if (name.empty()) config_error("backend.analytic.conditions needs non-empty names");
      model.add_condition(name, build_field(field, shape, "backend.analytic.conditions." + name));
    }
  }
  if (auto it = spec.find("adapters"); it != spec.end()) {
    if (!it->is_object()) config_error("backend.analytic.adapters must be an object");
    for (const auto& [name, field] : it->items()) {
      const std::string where = "backend.analytic.adapters." + name;
      check_keys(field, where, {"value", "region"});
      if (name.empty()) config_error("backend.analytic.adapters needs non-empty names");
      auto mask = region_mask(field, shape, where);
      LatentTensor offset = masked_field(shape, channel_values(field, where), mask);
      model.add_adapter(name, std::move(offset), std::move(mask));
    }
  }
  return model;
}

LatentTensor analytic_source(const RunConfig& config, const GaussianConceptModel& model) {
  const EditConfig& e = config.engine;
  LatentTensor mu = model.mean(e.source_cond, e.source_adapters);
  double texture = read_number(config.backend.analytic, "source_texture", 0.0, "backend.analytic");
  if (texture == 0.0) return mu;
  // Xoring 0x5eed into the seed keeps the texture independent of the per-step noise.
  LatentTensor noise = rng::normal_tensor(rng::split(e.seed ^ 0x5eedULL, 0), mu.shape());
  return axpby(1.0, mu, texture, noise);
}

LatentTensor analytic_target(const RunConfig& config, const GaussianConceptModel& model) {
  return model.mean(config.engine.target_cond, config.engine.target_adapters);
}

}  // namespace cds
