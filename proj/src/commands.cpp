#include "cds/commands.hpp"

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <memory>
#include <optional>
#include <sstream>

#include "cds/codec.hpp"
#include "cds/config.hpp"
#include "cds/remote.hpp"

namespace cds::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownCondition:
    case ErrorCode::UnknownAdapter:
    case ErrorCode::Transport:
    case ErrorCode::Protocol:
    case ErrorCode::ServerError:
    case ErrorCode::ShapeMismatch:
      return kExitBackend;
    case ErrorCode::NumericalAbort:
      return kExitNumerical;
    default:
      return kExitConfig;
  }
}

namespace {

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

int report(std::ostream& err, ErrorCode code, const std::string& what) {
  err << "error kind=" << to_string(code) << " reason=" << one_line(what) << '\n';
  return exit_code_for(code);
}

// Runs body and converts exceptions into the exit-status convention.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const Error& e) {
    return report(err, e.code(), e.what());
  } catch (const std::exception& e) {
    return report(err, ErrorCode::Io, e.what());
  }
}

struct Session {
  RunConfig config;
  std::optional<NoiseSchedule> schedule;
  std::unique_ptr<PredictorBackend> backend;
  const GaussianConceptModel* analytic = nullptr;
  const remote::RemoteBackend* remote = nullptr;
  LatentTensor source;
  std::optional<LatentTensor> target_reference;
  fs::path out_dir;
};

std::string resolve_url(const RunArgs& args, const RunConfig& config) {
  if (!args.backend_url.empty()) return args.backend_url;
  if (!config.backend.url.empty()) return config.backend.url;
  if (const char* env = std::getenv("CDS_BACKEND_URL"); env && *env) return env;
  fail(ErrorCode::Config, "remote backend needs --backend-url, backend.url or CDS_BACKEND_URL");
}

bool looks_like_cdst(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  return in.gcount() == 4 && std::string_view(magic, 4) == "CDST";
}

Session open_session(const RunArgs& args) {
  if (args.config.empty()) fail(ErrorCode::Config, "--config is required");
  Session s;
  s.config = load_run_config(args.config);
  if (!args.backend_url.empty()) s.config.backend.url = args.backend_url;
  if (args.dump_gradients) s.config.output.dump_gradients = true;
  if (!args.out.empty()) s.config.output.dir = args.out;
  s.out_dir = s.config.output.dir;
  s.schedule = s.config.schedule.build();

  if (s.config.backend.kind == "analytic") {
    auto model = std::make_unique<GaussianConceptModel>(
        build_analytic_model(s.config.backend.analytic, *s.schedule));
    s.analytic = model.get();
    s.target_reference = analytic_target(s.config, *model);
    s.backend = std::move(model);
  } else {
    const std::string url = resolve_url(args, s.config);
    s.config.backend.url = url;
    remote::ClientOptions options;
    options.read_timeout_s = s.config.backend.read_timeout_s;
    auto backend = std::make_unique<remote::RemoteBackend>(url, options);
    for (const auto& [name, c] : s.config.backend.conditions) {
      backend->client().register_condition(name, c.text, c.negative);
    }
    s.remote = backend.get();
    s.backend = std::move(backend);
  }

  if (!args.source.empty()) {
    const fs::path path = args.source;
    if (!fs::exists(path)) fail(ErrorCode::Io, "source " + path.string() + " not found");
    if (looks_like_cdst(path)) {
      s.source = load_tensor(path);
    } else if (s.remote) {
      std::ifstream in(path, std::ios::binary);
      std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                      std::istreambuf_iterator<char>());
      s.source = s.remote->client().encode_image(bytes);
    } else {
      fail(ErrorCode::Config, "source " + path.string() +
                                  " is not a CDST file (images need the remote backend)");
    }
  } else if (s.analytic) {
    s.source = analytic_source(s.config, *s.analytic);
  } else {
    fail(ErrorCode::Config, "--source is required with the remote backend");
  }
  if (s.source.shape() != s.backend->latent_shape()) {
    fail(ErrorCode::ShapeMismatch, "source latent " + to_string(s.source.shape()) +
                                       " does not match backend shape " +
                                       to_string(s.backend->latent_shape()));
  }
  fs::create_directories(s.out_dir);
  return s;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << text;
}

void write_effective_config(const Session& s) {
  write_text(s.out_dir / "config.json", to_json(s.config).dump(2) + "\n");
}

void write_trace(const fs::path& path, const EditTrace& trace) {
  std::ostringstream buf;
  write_trace_jsonl(buf, trace);
  write_text(path, buf.str());
}

json summarize(const Session& s, const EditResult& r) {
  json j{{"steps", r.trace.records.size()},
         {"seed", s.config.engine.seed},
         {"backend", s.config.backend.kind},
         {"dist_to_source", l2_distance(r.latent, s.source)},
         {"mean_weight_entropy", r.trace.mean_entropy()}};
  if (s.target_reference) {
    j["dist_to_target"] = l2_distance(r.latent, *s.target_reference);
    j["initial_dist_to_target"] = l2_distance(s.source, *s.target_reference);
  }
  return j;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    auto first = item.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    item = item.substr(first, item.find_last_not_of(" \t") - first + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) fail(ErrorCode::Config, "cannot parse sweep value '" + item + "'");
    values.push_back(v);
  }
  if (values.empty()) fail(ErrorCode::Config, "--values needs at least one value");
  return values;
}

}  // namespace

int cmd_edit(const RunArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Session s = open_session(args);
    write_effective_config(s);
    EditOptions options;
    options.target_reference = s.target_reference;
    if (s.config.output.dump_gradients) {
      const fs::path dir = s.out_dir / "grads";
      fs::create_directories(dir);
      options.on_gradient = [dir](int step, int, const LatentTensor& grad) {
        save_tensor(gradient_dump_path(dir, step), grad);
      };
    }
    EditResult result = run_edit(s.config.engine, *s.schedule, *s.backend, s.source, options);
    save_tensor(s.out_dir / "edited.cdst", result.latent);
    write_trace(s.out_dir / "trace.jsonl", result.trace);
    json summary = summarize(s, result);
    if (s.remote) {
      auto png = s.remote->client().decode_latent(result.latent);
      std::ofstream img(s.out_dir / "edited.png", std::ios::binary | std::ios::trunc);
      img.write(reinterpret_cast<const char*>(png.data()), static_cast<std::streamsize>(png.size()));
    }
    write_text(s.out_dir / "summary.json", summary.dump(2) + "\n");
    out << "edit ok steps=" << result.trace.records.size()
        << " dist_to_source=" << summary["dist_to_source"].get<double>();
    if (summary.contains("dist_to_target")) {
      out << " dist_to_target=" << summary["dist_to_target"].get<double>();
    }
    out << " out=" << s.out_dir.string() << '\n';
    return kExitOk;
  });
}

int cmd_sweep(const RunArgs& args, const std::string& axis, const std::string& values,
              bool concurrent, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    SweepAxis sweep_axis;
    try {
      sweep_axis = parse_sweep_axis(axis);
    } catch (const Error& e) {
      fail(ErrorCode::Config, e.what());
    }
    std::vector<double> cells = parse_values(values);
    for (double v : cells) {
      try {
        with_axis_value(EditConfig{}, sweep_axis, v);
      } catch (const Error& e) {
        fail(ErrorCode::Config, e.what());
      }
    }
    Session s = open_session(args);
    write_effective_config(s);
    auto rows = run_sweep(s.config.engine, sweep_axis, cells, *s.schedule, *s.backend,
                          s.source, s.target_reference, concurrent);
    std::ostringstream csv;
    write_sweep_csv(csv, rows);
    const fs::path report = s.out_dir / ("sweep_" + std::string(to_string(sweep_axis)) + ".csv");
    write_text(report, csv.str());
    std::size_t failed = 0;
    for (const auto& r : rows) {
      if (!r.ok) {
        ++failed;
        err << "cell " << to_string(sweep_axis) << "=" << r.value << " failed: " << one_line(r.error) << '\n';
      }
    }
    out << "sweep ok cells=" << rows.size() << " failed=" << failed << " report=" << report.string() << '\n';
    return kExitOk;
  });
}

int cmd_compare(const RunArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Session s = open_session(args);
    write_effective_config(s);
    std::optional<fs::path> dumps;
    if (s.config.output.dump_gradients) dumps = s.out_dir / "grads";
    auto results = compare_objectives(s.config.engine, *s.schedule, *s.backend, s.source,
                                      s.target_reference, dumps);
    json summary = json::object();
    for (const auto& [objective, result] : results) {
      const std::string name(to_string(objective));
      write_trace(s.out_dir / (name + ".jsonl"), result.trace);
      save_tensor(s.out_dir / (name + ".cdst"), result.latent);
      summary[name] = summarize(s, result);
    }
    write_text(s.out_dir / "summary.json", summary.dump(2) + "\n");
    out << "compare ok objectives=sds,dds,cds out=" << s.out_dir.string() << '\n';
    return kExitOk;
  });
}

int cmd_check_backend(const std::string& url_arg, std::ostream& out, std::ostream& err) {
  std::string url = url_arg;
  if (url.empty()) {
    if (const char* env = std::getenv("CDS_BACKEND_URL"); env && *env) url = env;
  }
  if (url.empty()) return report(err, ErrorCode::Config, "check-backend needs --backend-url or CDS_BACKEND_URL");

  std::string stage = "health";
  try {
    remote::Client client(url, remote::ClientOptions{5.0, 60.0});
    remote::HealthInfo info = client.health();
    stage = "register";
    client.register_condition("cds_probe", "a photo", false);
    stage = "predict";
    remote::PredictRequest request{ConditionRef("cds_probe"), 1, {},
                                   LatentTensor::zeros(info.latent_shape)};
    LatentTensor eps = remote_predict(client, request, info.latent_shape);
    out << "backend ok url=" << url << " protocol_version=" << info.protocol_version
        << " latent_shape=" << to_string(eps.shape()) << " model_spec=" << info.model_spec << '\n';
    return kExitOk;
  } catch (const Error& e) {
    err << "error stage=" << stage << " kind=" << to_string(e.code())
        << " reason=" << one_line(e.what()) << '\n';
    return e.code() == ErrorCode::InvalidArgument ? kExitConfig : kExitBackend;
  }
}

int cmd_source(const RunArgs& args, const std::string& dest, std::ostream& out,
               std::ostream& err) {
  return guarded(err, [&] {
    if (dest.empty()) fail(ErrorCode::Config, "source needs an output path");
    RunConfig config = load_run_config(args.config);
    if (config.backend.kind != "analytic") {
      fail(ErrorCode::Config, "source generation needs the analytic backend");
    }
    GaussianConceptModel model = build_analytic_model(config.backend.analytic,
                                                      config.schedule.build());
    LatentTensor src = analytic_source(config, model);
    save_tensor(dest, src);
    out << "source ok shape=" << to_string(src.shape()) << " out=" << dest << '\n';
    return kExitOk;
  });
}

}  // namespace cds::cli
