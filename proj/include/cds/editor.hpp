#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cds/distill.hpp"
#include "cds/predictor.hpp"
#include "cds/schedule.hpp"
#include "cds/weighting.hpp"

namespace cds {

enum class Objective { Sds, Dds, Cds };

std::string_view to_string(Objective objective);
Objective parse_objective(std::string_view name);

struct EditConfig {
  int steps = 300;
  int t_max = 970;
  int t_min = 30;
  double eta = 0.5;
  double lambda = 10.0;
  double tau = 0.002;
  PatchSize patch{2, 2};
  double learning_rate = 0.2;
  bool shared_noise = true;
  RegularizerMode regularizer_mode = RegularizerMode::L2Signed;
  TimeWeight w_t;
  std::uint64_t seed = 0;
  ConditionRef source_cond{"source"};
  ConditionRef target_cond{"target"};
  ConditionRef negative_cond{"negative"};
  std::vector<AdapterSpec> target_adapters;
  std::vector<AdapterSpec> source_adapters;
  std::vector<AdapterSpec> negative_adapters;
  bool parallel_predict = false;
  Objective objective = Objective::Cds;

  GradConfig grad_config() const;
  void validate(const NoiseSchedule& schedule) const;
};

struct StepRecord {
  int step = 0;
  int t = 0;
  double grad_norm = 0.0;
  double noise_delta_norm = 0.0;
  double regularizer_norm = 0.0;
  double weight_entropy = 0.0;
  double dist_to_source = 0.0;
  std::optional<double> dist_to_target;
};

struct EditTrace {
  std::vector<StepRecord> records;

  double mean_entropy() const;
};

using GradientSink = std::function<void(int step, int t, const LatentTensor& grad)>;

struct EditOptions {
  // Reference used for the dist_to_target trace column.
  std::optional<LatentTensor> target_reference;
  GradientSink on_gradient;
};

struct EditResult {
  LatentTensor latent;
  EditTrace trace;
};

/// Optimizes a target latent starting from x0_src over the descending
/// timestep plan. Each step draws one seeded noise field, noises both
/// branches, forms guided source and target predictions (the target's
/// positive branch through dynamic concept weighting when adapters are
/// given) and takes a gradient step with the configured objective.
EditResult run_edit(const EditConfig& cfg, const NoiseSchedule& schedule,
                    const PredictorBackend& backend, const LatentTensor& x0_src,
                    const EditOptions& options = {});

void write_trace_jsonl(std::ostream& out, const EditTrace& trace);

enum class SweepAxis { Eta, Tau, Patch, LearningRate };

SweepAxis parse_sweep_axis(std::string_view name);
std::string_view to_string(SweepAxis axis);
EditConfig with_axis_value(EditConfig cfg, SweepAxis axis, double value);

struct SweepRow {
  double value = 0.0;
  bool ok = false;
  double dist_to_source = 0.0;
  double dist_to_target = 0.0;
  double weight_entropy = 0.0;
  std::string error;
};

// One run_edit per value, all with the base seed. Failed cells are marked
// and the sweep carries on. concurrent runs cells on OpenMP threads when the
// backend allows it; rows are identical either way.
std::vector<SweepRow> run_sweep(const EditConfig& base, SweepAxis axis,
                                const std::vector<double>& values,
                                const NoiseSchedule& schedule,
                                const PredictorBackend& backend,
                                const LatentTensor& x0_src,
                                const std::optional<LatentTensor>& target_reference = {},
                                bool concurrent = false);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

// Runs SDS, DDS and CDS from identical seeds. When dump_dir is set, every
// step's gradient is written to <dump_dir>/<objective>/grad_<step>.cdst.
std::map<Objective, EditResult> compare_objectives(
    const EditConfig& cfg, const NoiseSchedule& schedule,
    const PredictorBackend& backend, const LatentTensor& x0_src,
    const std::optional<LatentTensor>& target_reference = {},
    const std::optional<std::filesystem::path>& dump_dir = {});

std::filesystem::path gradient_dump_path(const std::filesystem::path& dir, int step);

}  // namespace cds
