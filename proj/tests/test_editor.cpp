#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "cds/codec.hpp"
#include "cds/error.hpp"
#include "support.hpp"
#include "toy_scene.hpp"

using namespace cds;
using namespace cds::testing;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("cds_editor_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_SUITE("editor") {

TEST_CASE("identity edit leaves the latent untouched") {
  ToyScene scene = make_toy_scene();
  EditConfig cfg = scene.cfg;
  cfg.target_cond = cfg.source_cond;
  cfg.target_adapters.clear();
  for (Objective obj : {Objective::Cds, Objective::Dds}) {
    cfg.objective = obj;
    EditResult r = run_edit(cfg, toy_schedule(), scene.model, scene.source);
    CHECK(r.latent.values() == scene.source.values());
    for (const auto& rec : r.trace.records) CHECK(rec.grad_norm == 0.0);
  }
}

TEST_CASE("trace has one record per step with decreasing timesteps") {
  ToyScene scene = make_toy_scene();
  EditConfig cfg = scene.cfg;
  cfg.steps = 57;
  EditOptions opts;
  opts.target_reference = scene.target;
  EditResult r = run_edit(cfg, toy_schedule(), scene.model, scene.source, opts);
  REQUIRE(r.trace.records.size() == 57);
  CHECK(r.trace.records.front().t == 970);
  CHECK(r.trace.records.back().t == 30);
  for (std::size_t k = 1; k < r.trace.records.size(); ++k) {
    CHECK(r.trace.records[k].t < r.trace.records[k - 1].t);
    CHECK(r.trace.records[k].step == static_cast<int>(k));
  }
  for (const auto& rec : r.trace.records) {
    CHECK(rec.dist_to_target.has_value());
    CHECK(rec.weight_entropy >= 0.0);
  }
  std::ostringstream jsonl;
  write_trace_jsonl(jsonl, r.trace);
  std::istringstream lines(jsonl.str());
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    auto j = nlohmann::json::parse(line);
    CHECK(j.contains("grad_norm"));
    CHECK(j.contains("dist_to_target"));
    ++count;
  }
  CHECK(count == 57);
}

TEST_CASE("runs are deterministic") {
  ToyScene scene = make_toy_scene();
  EditConfig cfg = scene.cfg;
  cfg.steps = 80;
  EditResult a = run_edit(cfg, toy_schedule(), scene.model, scene.source);
  EditResult b = run_edit(cfg, toy_schedule(), scene.model, scene.source);
  cfg.parallel_predict = true;
  EditResult c = run_edit(cfg, toy_schedule(), scene.model, scene.source);
  CHECK(a.latent.values() == b.latent.values());
  CHECK(a.latent.values() == c.latent.values());
  for (std::size_t k = 0; k < a.trace.records.size(); ++k) {
    CHECK(a.trace.records[k].grad_norm == b.trace.records[k].grad_norm);
    CHECK(a.trace.records[k].weight_entropy == c.trace.records[k].weight_entropy);
  }
  cfg.seed = 8;
  EditResult d = run_edit(cfg, toy_schedule(), scene.model, scene.source);
  CHECK(d.latent.values() != a.latent.values());
}

TEST_CASE("edit converges towards the target concept") {
  ToyScene scene = make_toy_scene();
  const double initial = l2_distance(scene.source, scene.target);
  EditResult r = run_edit(scene.cfg, toy_schedule(), scene.model, scene.source);
  CHECK(l2_distance(r.latent, scene.target) <= 0.2 * initial);
}

TEST_CASE("edit stays local to the adapter regions") {
  ToyScene scene = make_toy_scene();
  EditResult r = run_edit(scene.cfg, toy_schedule(), scene.model, scene.source);
  double inside = masked_rms(r.latent, scene.source, scene.edited, true);
  double outside = masked_rms(r.latent, scene.source, scene.edited, false);
  CHECK(inside > 0.5);
  CHECK(outside <= 0.05 * inside);
}

TEST_CASE("large eta keeps the result closer to the source") {
  ToyScene scene = make_toy_scene();
  EditConfig cfg = scene.cfg;
  cfg.learning_rate = 0.1;  // lr must stay below 2 / eta for eta = 10
  cfg.eta = 10.0;
  double strong = l2_distance(run_edit(cfg, toy_schedule(), scene.model, scene.source).latent, scene.source);
  cfg.eta = 0.05;
  double weak = l2_distance(run_edit(cfg, toy_schedule(), scene.model, scene.source).latent, scene.source);
  CHECK(strong <= weak);
}

TEST_CASE("sds ignores the source branch and still moves the latent") {
  ToyScene scene = make_toy_scene();
  EditConfig cfg = scene.cfg;
  cfg.objective = Objective::Sds;
  cfg.steps = 20;
  EditResult r = run_edit(cfg, toy_schedule(), scene.model, scene.source);
  CHECK(r.trace.records.size() == 20);
  CHECK(l2_distance(r.latent, scene.source) > 0.0);
}

TEST_CASE("edit errors carry the failing step") {
  ToyScene scene = make_toy_scene();
  EditConfig cfg = scene.cfg;
  cfg.target_adapters = {AdapterSpec("missing", 0.8)};
  try {
    run_edit(cfg, toy_schedule(), scene.model, scene.source);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownAdapter);
    CHECK(std::string(e.what()).find("step 0") != std::string::npos);
  }

  cfg = scene.cfg;
  cfg.learning_rate = 1e30;
  cfg.eta = 1e9;
  try {
    run_edit(cfg, toy_schedule(), scene.model, scene.source);
    FAIL("expected an abort");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NumericalAbort);
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }

  CHECK_THROWS_AS(run_edit(scene.cfg, toy_schedule(), scene.model, LatentTensor(Shape{4, 8, 8})), Error);
  cfg = scene.cfg;
  cfg.steps = 2000;
  CHECK_THROWS_AS(run_edit(cfg, toy_schedule(), scene.model, scene.source), Error);
}

TEST_CASE("sweep rows") {
  ToyScene scene = make_toy_scene();
  EditConfig cfg = scene.cfg;
  cfg.steps = 60;
  auto rows = run_sweep(cfg, SweepAxis::Eta, {0.5}, toy_schedule(), scene.model, scene.source, scene.target);
  EditResult direct = run_edit(cfg, toy_schedule(), scene.model, scene.source);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].ok);
  CHECK(rows[0].dist_to_source == l2_distance(direct.latent, scene.source));
  CHECK(rows[0].dist_to_target == l2_distance(direct.latent, scene.target));
  CHECK(rows[0].weight_entropy == direct.trace.mean_entropy());

  cfg.learning_rate = 0.1;
  std::vector<double> etas{0.01, 0.05, 1, 5, 10};
  auto eta_rows = run_sweep(cfg, SweepAxis::Eta, etas, toy_schedule(), scene.model, scene.source, scene.target);
  auto eta_rows_par =
      run_sweep(cfg, SweepAxis::Eta, etas, toy_schedule(), scene.model, scene.source, scene.target, true);
  REQUIRE(eta_rows.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(eta_rows[i].ok);
    CHECK(eta_rows[i].value == etas[i]);
    CHECK(eta_rows[i].dist_to_source == eta_rows_par[i].dist_to_source);
    CHECK(eta_rows[i].weight_entropy == eta_rows_par[i].weight_entropy);
  }

  auto tau_rows = run_sweep(cfg, SweepAxis::Tau, {0.002, 1}, toy_schedule(), scene.model, scene.source);
  REQUIRE(tau_rows.size() == 2);
  CHECK(tau_rows[0].weight_entropy < tau_rows[1].weight_entropy);
  CHECK(std::isnan(tau_rows[0].dist_to_target));

  auto bad = run_sweep(cfg, SweepAxis::Patch, {2, 3}, toy_schedule(), scene.model, scene.source);
  CHECK(bad[0].ok);
  CHECK_FALSE(bad[1].ok);
  CHECK(std::isnan(bad[1].dist_to_source));
  CHECK_FALSE(bad[1].error.empty());

  std::ostringstream csv;
  write_sweep_csv(csv, bad);
  std::istringstream in(csv.str());
  std::string header, r0, r1;
  std::getline(in, header);
  std::getline(in, r0);
  std::getline(in, r1);
  CHECK(header == "axis_value,dist_to_source,dist_to_target,weight_entropy");
  CHECK(r1 == "3,nan,nan,nan");
}

TEST_CASE("sweep axis parsing") {
  CHECK(parse_sweep_axis("eta") == SweepAxis::Eta);
  CHECK(parse_sweep_axis("lr") == SweepAxis::LearningRate);
  CHECK_THROWS_AS(parse_sweep_axis("gamma"), Error);
  CHECK(with_axis_value(EditConfig{}, SweepAxis::Patch, 4).patch == PatchSize{4, 4});
  CHECK_THROWS_AS(with_axis_value(EditConfig{}, SweepAxis::Tau, 0), Error);
}

TEST_CASE("compare objectives") {
  ToyScene scene = make_toy_scene();
  EditConfig cfg = scene.cfg;
  cfg.steps = 100;
  TempDir dir;
  auto res = compare_objectives(cfg, toy_schedule(), scene.model, scene.source, scene.target, dir.path);
  REQUIRE(res.size() == 3);
  for (const char* name : {"sds", "dds", "cds"}) {
    for (int k = 0; k < cfg.steps; ++k) {
      auto p = gradient_dump_path(dir.path / name, k);
      REQUIRE(std::filesystem::exists(p));
      CHECK(load_tensor(p).shape() == scene.source.shape());
    }
  }

  // Early steps carry sharper structure than late steps.
  const int tenth = cfg.steps / 10;
  double early = 0, late = 0;
  for (int k = 0; k < tenth; ++k) {
    early += mean_abs_laplacian(load_tensor(gradient_dump_path(dir.path / "cds", k)));
    late += mean_abs_laplacian(load_tensor(gradient_dump_path(dir.path / "cds", cfg.steps - 1 - k)));
  }
  CHECK(early > late);

  cfg.eta = 0.0;
  auto zero = compare_objectives(cfg, toy_schedule(), scene.model, scene.source);
  const auto& cds = zero.at(Objective::Cds);
  const auto& dds = zero.at(Objective::Dds);
  CHECK(cds.latent.values() == dds.latent.values());
  for (std::size_t k = 0; k < cds.trace.records.size(); ++k) {
    CHECK(cds.trace.records[k].grad_norm == dds.trace.records[k].grad_norm);
    CHECK(cds.trace.records[k].dist_to_source == dds.trace.records[k].dist_to_source);
  }
}

}  // TEST_SUITE
