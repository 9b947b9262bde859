#include "cds/editor.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>

#include "json.hpp"

#include "cds/codec.hpp"
#include "cds/error.hpp"
#include "cds/rng.hpp"

namespace cds {

std::string_view to_string(Objective objective) {
  switch (objective) {
    case Objective::Sds: return "sds";
    case Objective::Dds: return "dds";
    case Objective::Cds: return "cds";
  }
  return "cds";
}

Objective parse_objective(std::string_view name) {
  if (name == "sds") return Objective::Sds;
  if (name == "dds") return Objective::Dds;
  if (name == "cds") return Objective::Cds;
  fail(ErrorCode::InvalidArgument, "unknown objective '" + std::string(name) + "'");
}

GradConfig EditConfig::grad_config() const {
  GradConfig g;
  g.eta = eta;
  g.lambda = lambda;
  g.regularizer_mode = regularizer_mode;
  g.w_t = w_t;
  g.learning_rate = learning_rate;
  return g;
}

void EditConfig::validate(const NoiseSchedule& schedule) const {
  grad_config().validate();
  if (!(tau > 0.0) || !std::isfinite(tau)) fail(ErrorCode::InvalidArgument, "tau must be > 0");
  if (patch.height == 0 || patch.width == 0) {
    fail(ErrorCode::InvalidArgument, "patch size must be positive");
  }
  if (t_max > schedule.steps()) {
    fail(ErrorCode::InvalidArgument, "t_max " + std::to_string(t_max) +
                                         " exceeds schedule length " +
                                         std::to_string(schedule.steps()));
  }
  for (const auto* list : {&target_adapters, &source_adapters, &negative_adapters}) {
    for (const auto& a : *list) {
      if (a.id.empty()) fail(ErrorCode::InvalidArgument, "empty adapter id");
    }
  }
}

double EditTrace::mean_entropy() const {
  if (records.empty()) return 0.0;
  double total = 0.0;
  for (const auto& r : records) total += r.weight_entropy;
  return total / static_cast<double>(records.size());
}

namespace {

bool is_backend_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownCondition:
    case ErrorCode::UnknownAdapter:
    case ErrorCode::Transport:
    case ErrorCode::Protocol:
    case ErrorCode::ServerError:
    case ErrorCode::ShapeMismatch:
      return true;
    default:
      return false;
  }
}

struct StepPredictions {
  LatentTensor target;
  LatentTensor source;
  double entropy = 0.0;
};

StepPredictions predict_step(const EditConfig& cfg, const PredictorBackend& backend,
                             const LatentTensor& z_tgt, const LatentTensor& z_src,
                             int t) {
  StepPredictions out;
  LatentTensor positive;
  if (cfg.target_adapters.empty()) {
    positive = predict(backend, z_tgt, t, cfg.target_cond);
  } else {
    auto weighted = dynamic_weighted_predict(backend, cfg.target_adapters, z_tgt, t,
                                             cfg.target_cond, cfg.patch, cfg.tau,
                                             cfg.parallel_predict);
    positive = std::move(weighted.prediction);
    out.entropy = weighted.entropy;
  }
  if (cfg.lambda != 0.0) {
    LatentTensor negative = predict(backend, z_tgt, t, cfg.negative_cond, cfg.negative_adapters);
    out.target = guide(positive, negative, cfg.lambda);
  } else {
    out.target = std::move(positive);
  }
  if (cfg.objective != Objective::Sds) {
    out.source = guided_predict(backend, z_src, t, cfg.source_cond, cfg.negative_cond,
                                cfg.lambda, cfg.source_adapters, cfg.negative_adapters);
  }
  return out;
}

}  // namespace

EditResult run_edit(const EditConfig& cfg, const NoiseSchedule& schedule,
                    const PredictorBackend& backend, const LatentTensor& x0_src,
                    const EditOptions& options) {
  cfg.validate(schedule);
  if (x0_src.shape() != backend.latent_shape()) {
    fail(ErrorCode::ShapeMismatch, "source latent " + to_string(x0_src.shape()) +
                                       " but backend serves " +
                                       to_string(backend.latent_shape()));
  }
  if (options.target_reference) check_same_shape(x0_src, *options.target_reference, "run_edit");
  const TimestepPlan plan = plan_timesteps(cfg.steps, cfg.t_max, cfg.t_min);
  const GradConfig grad_cfg = cfg.grad_config();

  EditResult result{x0_src, {}};
  result.trace.records.reserve(plan.size());
  LatentTensor& x_tgt = result.latent;

  for (std::size_t k = 0; k < plan.size(); ++k) {
    const int step = static_cast<int>(k);
    const int t = plan[k];
    const std::string where = "step " + std::to_string(step) + " (t=" + std::to_string(t) + ")";
    try {
      const std::uint64_t step_seed = rng::split(cfg.seed, k);
      const LatentTensor eps = rng::normal_tensor(step_seed, x0_src.shape());
      const LatentTensor eps_src =
          cfg.shared_noise ? eps : rng::normal_tensor(rng::split(step_seed, 1), x0_src.shape());
      const LatentTensor z_tgt = add_noise(x_tgt, eps, t, schedule);
      const LatentTensor z_src = add_noise(x0_src, eps_src, t, schedule);

      StepPredictions preds = predict_step(cfg, backend, z_tgt, z_src, t);
      GradResult g;
      switch (cfg.objective) {
        case Objective::Sds: g = sds_grad(preds.target, eps, t, cfg.w_t); break;
        case Objective::Dds: g = dds_grad(preds.target, preds.source, t, cfg.w_t); break;
        case Objective::Cds: g = cds_grad(preds.target, preds.source, x_tgt, x0_src, grad_cfg); break;
      }
      if (options.on_gradient) options.on_gradient(step, t, g.grad);
      x_tgt = apply_update(x_tgt, g.grad, cfg.learning_rate, step);

      StepRecord rec;
      rec.step = step;
      rec.t = t;
      rec.grad_norm = l2_norm(g.grad);
      rec.noise_delta_norm = g.noise_delta_norm;
      rec.regularizer_norm = g.regularizer_norm;
      rec.weight_entropy = preds.entropy;
      rec.dist_to_source = l2_distance(x_tgt, x0_src);
      if (options.target_reference) {
        rec.dist_to_target = l2_distance(x_tgt, *options.target_reference);
      }
      result.trace.records.push_back(rec);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NonFinite) {
        throw Error(ErrorCode::NumericalAbort, where + ": " + e.what());
      }
      if (is_backend_error(e.code()) || e.code() == ErrorCode::NumericalAbort) {
        throw Error(e.code(), where + ": " + e.what());
      }
      throw;
    }
  }
  return result;
}

void write_trace_jsonl(std::ostream& out, const EditTrace& trace) {
  for (const auto& r : trace.records) {
    nlohmann::json j{{"step", r.step},
                     {"t", r.t},
                     {"grad_norm", r.grad_norm},
                     {"noise_delta_norm", r.noise_delta_norm},
                     {"regularizer_norm", r.regularizer_norm},
                     {"weight_entropy", r.weight_entropy},
                     {"dist_to_source", r.dist_to_source}};
    if (r.dist_to_target) j["dist_to_target"] = *r.dist_to_target;
    out << j.dump() << '\n';
  }
}

SweepAxis parse_sweep_axis(std::string_view name) {
  if (name == "eta") return SweepAxis::Eta;
  if (name == "tau") return SweepAxis::Tau;
  if (name == "patch") return SweepAxis::Patch;
  if (name == "lr") return SweepAxis::LearningRate;
  fail(ErrorCode::InvalidArgument, "unknown sweep axis '" + std::string(name) +
                                       "' (expected eta, tau, patch or lr)");
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Eta: return "eta";
    case SweepAxis::Tau: return "tau";
    case SweepAxis::Patch: return "patch";
    case SweepAxis::LearningRate: return "lr";
  }
  return "eta";
}

EditConfig with_axis_value(EditConfig cfg, SweepAxis axis, double value) {
  if (!std::isfinite(value)) fail(ErrorCode::InvalidArgument, "sweep value not finite");
  switch (axis) {
    case SweepAxis::Eta:
      if (value < 0.0) fail(ErrorCode::InvalidArgument, "eta must be >= 0");
      cfg.eta = value;
      break;
    case SweepAxis::Tau:
      if (value <= 0.0) fail(ErrorCode::InvalidArgument, "tau must be > 0");
      cfg.tau = value;
      break;
    case SweepAxis::Patch: {
      if (value < 1.0 || value != std::floor(value)) {
        fail(ErrorCode::InvalidArgument, "patch size must be a positive integer");
      }
      auto p = static_cast<std::uint32_t>(value);
      cfg.patch = PatchSize{p, p};
      break;
    }
    case SweepAxis::LearningRate:
      if (value <= 0.0) fail(ErrorCode::InvalidArgument, "lr must be > 0");
      cfg.learning_rate = value;
      break;
  }
  return cfg;
}

std::vector<SweepRow> run_sweep(const EditConfig& base, SweepAxis axis,
                                const std::vector<double>& values,
                                const NoiseSchedule& schedule,
                                const PredictorBackend& backend,
                                const LatentTensor& x0_src,
                                const std::optional<LatentTensor>& target_reference,
                                bool concurrent) {
  if (values.empty()) fail(ErrorCode::InvalidArgument, "sweep needs at least one value");
  std::vector<EditConfig> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(with_axis_value(base, axis, v));

  std::vector<SweepRow> rows(values.size());
  const auto n = static_cast<std::ptrdiff_t>(values.size());
  const bool parallel = concurrent && backend.concurrent_safe();
  EditOptions options;
  options.target_reference = target_reference;
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    SweepRow& row = rows[i];
    row.value = values[i];
    try {
      EditResult r = run_edit(cells[i], schedule, backend, x0_src, options);
      row.ok = true;
      row.dist_to_source = l2_distance(r.latent, x0_src);
      row.dist_to_target = target_reference ? l2_distance(r.latent, *target_reference)
                                            : std::numeric_limits<double>::quiet_NaN();
      row.weight_entropy = r.trace.mean_entropy();
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
      row.dist_to_source = row.dist_to_target = row.weight_entropy =
          std::numeric_limits<double>::quiet_NaN();
    }
  }
  return rows;
}

namespace {

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "axis_value,dist_to_source,dist_to_target,weight_entropy\n";
  for (const auto& r : rows) {
    out << csv_number(r.value) << ',' << csv_number(r.dist_to_source) << ','
        << csv_number(r.dist_to_target) << ',' << csv_number(r.weight_entropy) << '\n';
  }
}

std::filesystem::path gradient_dump_path(const std::filesystem::path& dir, int step) {
  char name[32];
  std::snprintf(name, sizeof name, "grad_%04d.cdst", step);
  return dir / name;
}

std::map<Objective, EditResult> compare_objectives(
    const EditConfig& cfg, const NoiseSchedule& schedule,
    const PredictorBackend& backend, const LatentTensor& x0_src,
    const std::optional<LatentTensor>& target_reference,
    const std::optional<std::filesystem::path>& dump_dir) {
  std::map<Objective, EditResult> out;
  for (Objective objective : {Objective::Sds, Objective::Dds, Objective::Cds}) {
    EditConfig run_cfg = cfg;
    run_cfg.objective = objective;
    EditOptions options;
    options.target_reference = target_reference;
    if (dump_dir) {
      std::filesystem::path dir = *dump_dir / std::string(to_string(objective));
      std::filesystem::create_directories(dir);
      options.on_gradient = [dir](int step, int, const LatentTensor& grad) {
        save_tensor(gradient_dump_path(dir, step), grad);
      };
    }
    out.emplace(objective, run_edit(run_cfg, schedule, backend, x0_src, options));
  }
  return out;
}

}  // namespace cds
