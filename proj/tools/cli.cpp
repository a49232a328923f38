#include "cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <set>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "genearl/backends.hpp"
#include "genearl/digest.hpp"
#include "genearl/error.hpp"
#include "genearl/evaluator.hpp"
#include "genearl/importers.hpp"
#include "genearl/json_io.hpp"
#include "genearl/run.hpp"

namespace genearl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kConfig;
  if (dynamic_cast<const MissingEmbeddingError*>(&e)) return kInvalid;
  if (dynamic_cast<const BackendError*>(&e)) return kBackend;
  if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const ValidationError*>(&e) ||
      dynamic_cast<const InputError*>(&e)) {
    return kInvalid;
  }
  return kFailure;
}

namespace {

std::string compact_utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

// Flags shared by run and detect; each overrides the config file when given.
struct RunFlags {
  std::string config;
  std::string dataset;
  std::string ontology;
  std::size_t shots = 0;
  std::string mode;
  std::string method;
  std::uint64_t seed = 0;
  std::string cache_dir;
  std::string out;
  bool include_exemplars = false;
  std::size_t parallelism = 1;
  std::string event_predictions;
  std::string detector;

  CLI::Option* shots_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* parallelism_opt = nullptr;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config, "Run config file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--dataset", f.dataset, "Dataset document");
  cmd->add_option("--ontology", f.ontology, "Ontology document");
  f.shots_opt = cmd->add_option("--shots", f.shots, "In-context exemplar images (genearl only)");
  cmd->add_option("--mode", f.mode, "Description prompt: full, no-event-image or object-caption");
  cmd->add_option("--method", f.method, "genearl, direct-gvlm, alpaca or baseline");
  f.seed_opt = cmd->add_option("--seed", f.seed, "Exemplar sampling seed");
  cmd->add_option("--cache-dir", f.cache_dir, "Response cache directory");
  cmd->add_option("--out", f.out, "Parent directory of run directories");
  cmd->add_flag("--include-exemplars-in-eval", f.include_exemplars,
                "Keep exemplar images in the evaluation pool");
  f.parallelism_opt = cmd->add_option("--parallelism", f.parallelism, "Concurrent work units");
}

fs::path absolute(const std::string& p) { return fs::absolute(p).lexically_normal(); }

RunConfig resolve_config(const RunFlags& f) {
  RunConfig c = load_run_config(f.config);
  if (!f.dataset.empty()) c.dataset = absolute(f.dataset);
  if (!f.ontology.empty()) c.ontology = absolute(f.ontology);
  if (f.shots_opt->count()) c.shots = f.shots;
  if (!f.mode.empty()) c.mode = parse_prompt_mode(f.mode);
  if (!f.method.empty()) c.method = parse_method(f.method);
  if (f.seed_opt->count()) c.seed = f.seed;
  if (!f.cache_dir.empty()) c.cache_dir = absolute(f.cache_dir);
  if (!f.out.empty()) c.output_dir = absolute(f.out);
  if (f.include_exemplars) c.include_exemplars_in_eval = true;
  if (f.parallelism_opt->count()) {
    if (f.parallelism == 0) throw ConfigError("--parallelism must be at least 1");
    c.parallelism = f.parallelism;
  }
  if (!f.event_predictions.empty()) c.event_predictions = absolute(f.event_predictions);
  if (!f.detector.empty()) {
    if (f.detector == "generative") {
      c.detector = Detector::Generative;
    } else if (f.detector == "clip") {
      c.detector = Detector::Clip;
    } else {
      throw ConfigError("--detector must be generative or clip");
    }
  }
  return c;
}

// out/run-<utc>-<config digest>; a numeric suffix keeps directories unique.
fs::path make_run_dir(const RunConfig& config) {
  const std::string digest = sha256_hex(to_json(config).dump()).substr(0, 12);
  const std::string base = "run-" + compact_utc_now() + "-" + digest;
  fs::create_directories(config.output_dir);
  fs::path dir = config.output_dir / base;
  for (int n = 2; fs::exists(dir); ++n) dir = config.output_dir / (base + "-" + std::to_string(n));
  fs::create_directory(dir);
  return dir;
}

json failures_json(const std::vector<StageFailure>& failures) {
  json out = json::array();
  for (const auto& f : failures) {
    out.push_back({{"stage", f.stage},
                   {"image_id", f.image_id},
                   {"object_id", f.object_id},
                   {"message", f.message}});
  }
  return out;
}

json load_report_json(const LoadReport& r) {
  return {{"images_read", r.images_read},
          {"images_kept", r.images_kept},
          {"objects_kept", r.objects_kept},
          {"images_excluded_by_manifest", r.images_excluded_by_manifest},
          {"images_excluded_by_event", r.images_excluded_by_event},
          {"objects_dropped_unknown_role", r.objects_dropped_unknown_role},
          {"warnings", r.warnings}};
}

enum class Task { Earl, Detect };

int execute(const RunFlags& flags, Task task, std::ostream& out, std::ostream& err) {
  const RunConfig config = resolve_config(flags);
  if (task == Task::Earl) {
    validate_for_run(config);
  } else {
    validate_for_detect(config);
  }
  const fs::path dir = make_run_dir(config);
  std::unique_ptr<RunSession> session;
  try {
    session = std::make_unique<RunSession>(config, std::make_shared<ResponseArchive>(dir));
  } catch (...) {
    fs::remove_all(dir);
    throw;
  }
  json_io::write_atomic(dir / "config.json", dump(to_json(config)));
  json_io::write_atomic(dir / "ontology.json", dump(to_json(session->inputs().ontology)));
  json_io::write_atomic(dir / "dataset.json", dump(to_json(session->inputs().dataset)));

  const PredictionSet set = task == Task::Earl ? session->run() : session->detect();
  json_io::write_atomic(dir / "predictions.json", dump(to_json(set)));

  const std::size_t units = set.metadata.value("units", std::size_t{0});
  const std::size_t failed = set.metadata.value("failed_units", std::size_t{0});
  const json summary = {{"command", task == Task::Earl ? "run" : "detect"},
                        {"run_dir", dir.string()},
                        {"predictions", set.predictions.size()},
                        {"event_predictions", set.event_predictions.size()},
                        {"units", units},
                        {"failed_units", failed},
                        {"failures", failures_json(set.failures)},
                        {"dispatches", session->dispatches()},
                        {"backends", session->dispatch_summary()},
                        {"load_report", load_report_json(session->inputs().dataset.report)}};
  json_io::write_atomic(dir / "summary.json", dump(summary));

  out << "run directory: " << dir.string() << "\n";
  if (task == Task::Earl) {
    out << "predictions: " << set.predictions.size();
  } else {
    out << "event predictions: " << set.event_predictions.size();
  }
  out << ", failed units: " << failed << " of " << units
      << ", backend dispatches: " << session->dispatches() << "\n";
  for (const auto& f : set.failures) {
    err << "failed " << f.stage << " " << f.image_id << (f.object_id.empty() ? "" : "/")
        << f.object_id << ": " << f.message << "\n";
  }
  if (units > 0 && failed == units) {
    err << "every work unit failed\n";
    return kBackend;
  }
  return kOk;
}

struct PrepareFlags {
  std::string config;
  std::string dataset;
  std::string ontology;
  std::string manifest;
  std::size_t min_roles = 3;
  std::vector<std::string> excluded_roles{"place"};
  bool as_json = false;
  CLI::Option* min_roles_opt = nullptr;
  CLI::Option* excluded_opt = nullptr;
};

int prepare(const PrepareFlags& f, std::ostream& out) {
  fs::path dataset, ontology;
  std::optional<fs::path> manifest;
  std::size_t min_roles = f.min_roles;
  std::vector<std::string> excluded = f.excluded_roles;
  if (!f.config.empty()) {
    const RunConfig c = load_run_config(f.config);
    dataset = c.dataset;
    ontology = c.ontology;
    manifest = c.manifest;
    if (!f.min_roles_opt->count()) min_roles = c.min_roles;
    if (!f.excluded_opt->count()) excluded = c.excluded_roles;
  }
  if (!f.dataset.empty()) dataset = f.dataset;
  if (!f.ontology.empty()) ontology = f.ontology;
  if (!f.manifest.empty()) manifest = f.manifest;
  if (dataset.empty() || ontology.empty()) {
    throw ConfigError("prepare needs --dataset and --ontology (or --config)");
  }
  if (min_roles == 0) throw ConfigError("--min-roles must be at least 1");

  const PreparedInputs in = prepare_inputs(dataset, ontology, min_roles, excluded, manifest);
  const LoadReport& r = in.dataset.report;
  if (f.as_json) {
    json doc = load_report_json(r);
    doc["images"] = in.dataset.images.size();
    doc["objects"] = in.dataset.object_count();
    doc["events"] = r.events_present.size();
    doc["events_present"] = r.events_present;
    doc["ontology_events"] = in.ontology.events.size();
    out << dump(doc);
    return kOk;
  }
  out << in.dataset.images.size() << " images, " << in.dataset.object_count() << " objects, "
      << r.events_present.size() << " events\n";
  out << "read " << r.images_read << " images; " << r.images_excluded_by_ontology()
      << " excluded by event filter, " << r.images_excluded_by_manifest
      << " excluded by manifest; " << r.objects_dropped_unknown_role
      << " objects dropped for excluded roles; ontology keeps " << in.ontology.events.size()
      << " events\n";
  return kOk;
}

struct EvalFlags {
  std::string predictions;
  std::string run_dir;
  std::string dataset;
  std::string ontology;
  std::string manifest;
  std::size_t min_roles = 3;
  std::vector<std::string> excluded_roles{"place"};
  bool include_exemplars = false;
  std::string report;
};

std::string percent(double v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.1f%%", v * 100.0);
  return buf;
}

int evaluate(const EvalFlags& f, std::ostream& out) {
  fs::path pred_path;
  if (!f.run_dir.empty()) {
    pred_path = fs::path(f.run_dir) / "predictions.json";
  } else if (!f.predictions.empty()) {
    pred_path = f.predictions;
  } else {
    throw ConfigError("eval needs --predictions or --run");
  }
  const PredictionSet set = load_prediction_set(pred_path);
  const fs::path dir = pred_path.parent_path();

  Dataset dataset;
  if (!f.dataset.empty() || !f.ontology.empty()) {
    if (f.dataset.empty() || f.ontology.empty()) {
      throw ConfigError("eval needs both --dataset and --ontology");
    }
    std::optional<fs::path> manifest;
    if (!f.manifest.empty()) manifest = f.manifest;
    dataset = prepare_inputs(f.dataset, f.ontology, f.min_roles, f.excluded_roles, manifest).dataset;
  } else {
    // Snapshots written next to the predictions by run and detect.
    const Ontology ontology = load_ontology(dir / "ontology.json");
    dataset = load_dataset(dir / "dataset.json", ontology);
  }

  const json& meta = set.metadata;
  std::set<std::string> excluded;
  const bool include = f.include_exemplars || meta.value("include_exemplars_in_eval", false);
  if (!include && meta.contains("exemplar_image_ids")) {
    for (const auto& id : meta.at("exemplar_image_ids")) excluded.insert(id.get<std::string>());
  }
  const GoldView gold = gold_view(dataset, excluded);

  json report = {{"convention", kScoringConvention},
                 {"predictions", pred_path.filename().string()},
                 {"excluded_images", excluded}};
  json run = json::object();
  for (const char* key : {"method", "shots", "mode", "seed", "task"}) {
    if (meta.contains(key)) run[key] = meta.at(key);
  }
  report["run"] = run;

  const bool has_earl = !set.predictions.empty() || set.event_predictions.empty();
  const bool has_events = !set.event_predictions.empty();
  std::string title = "EARL";
  if (meta.contains("method")) {
    title += " (" + meta.at("method").get<std::string>();
    if (meta.value("shots", 0) > 0) title += ", " + std::to_string(meta.value("shots", 0)) + "-shot";
    title += ")";
  }

  out << "scoring: " << kScoringConvention << "\n";
  if (has_earl) {
    const MetricsReport earl = score_earl(set, gold);
    report["earl"] = to_json(earl);
    out << "\n" << format_table(earl, title);
  }
  if (has_events) {
    const EventDetectionReport ed = score_event_detection(set.event_predictions, gold);
    report["event_detection"] = to_json(ed);
    out << "\nevent detection accuracy: " << percent(ed.accuracy) << " (" << ed.correct << "/"
        << ed.images << ")\n";
  }
  if (has_earl && has_events && !set.predictions.empty()) {
    const MetricsReport combined = score_combined(set.event_predictions, set, gold);
    report["combined"] = to_json(combined);
    out << "\n" << format_table(combined, "Combined event + role");
  }

  const fs::path report_path = f.report.empty() ? dir / "report.json" : fs::path(f.report);
  json_io::write_atomic(report_path, dump(report));
  out << "\nreport: " << report_path.string() << "\n";
  return kOk;
}

void write_output(const fs::path& path, const json& doc) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  json_io::write_atomic(path, dump(doc));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Training-free multimodal event argument role labeling"};
  app.name("genearl");
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

  PrepareFlags pf;
  auto* prep = app.add_subcommand("prepare", "Validate and filter inputs; print their counts");
  prep->add_option("--config", pf.config, "Take paths and filters from a run config");
  prep->add_option("--dataset", pf.dataset, "Dataset document");
  prep->add_option("--ontology", pf.ontology, "Ontology document");
  prep->add_option("--manifest", pf.manifest, "Image id list restricting the dataset");
  pf.min_roles_opt = prep->add_option("--min-roles", pf.min_roles, "Drop events with fewer roles");
  pf.excluded_opt = prep->add_option("--exclude-role", pf.excluded_roles, "Role to drop (repeatable)");
  prep->add_flag("--json", pf.as_json, "Print the load report as JSON");

  RunFlags rf;
  auto* run_cmd = app.add_subcommand("run", "Label argument roles and write a run directory");
  add_run_flags(run_cmd, rf);
  run_cmd->add_option("--event-predictions", rf.event_predictions,
                      "Label under the events of a detection predictions file");

  RunFlags df;
  auto* detect_cmd = app.add_subcommand("detect", "Predict the event of every image");
  add_run_flags(detect_cmd, df);
  detect_cmd->add_option("--detector", df.detector, "generative or clip");

  EvalFlags ef;
  auto* eval_cmd = app.add_subcommand("eval", "Score a predictions file");
  eval_cmd->add_option("--predictions", ef.predictions, "Predictions file");
  eval_cmd->add_option("--run", ef.run_dir, "Run directory (uses its snapshots)");
  eval_cmd->add_option("--dataset", ef.dataset, "Gold dataset instead of the run snapshot");
  eval_cmd->add_option("--ontology", ef.ontology, "Ontology for --dataset");
  eval_cmd->add_option("--manifest", ef.manifest, "Image id list for --dataset");
  eval_cmd->add_option("--min-roles", ef.min_roles, "Event filter for --dataset");
  eval_cmd->add_option("--exclude-role", ef.excluded_roles, "Role exclusions for --dataset");
  eval_cmd->add_flag("--include-exemplars-in-eval", ef.include_exemplars,
                     "Score exemplar images too");
  eval_cmd->add_option("--report", ef.report, "Report path (default: report.json beside the predictions)");

  std::string m2e2_ann, m2e2_images, m2e2_out;
  auto* im = app.add_subcommand("import-m2e2", "Convert image-event annotations to a dataset");
  im->add_option("--annotations", m2e2_ann, "Annotation file")->required()->check(CLI::ExistingFile);
  im->add_option("--image-dir", m2e2_images, "Directory holding <id>.jpg")->required();
  im->add_option("--out", m2e2_out, "Dataset document to write")->required();

  std::string swig_ann, swig_space, swig_images, swig_out, swig_ont;
  auto* is = app.add_subcommand("import-swig", "Convert situation annotations to a dataset");
  is->add_option("--annotations", swig_ann, "Annotation file")->required()->check(CLI::ExistingFile);
  is->add_option("--space", swig_space, "Verb space file (writes an ontology)")->check(CLI::ExistingFile);
  is->add_option("--image-dir", swig_images, "Image directory")->required();
  is->add_option("--out", swig_out, "Dataset document to write")->required();
  is->add_option("--ontology-out", swig_ont, "Ontology document to write (needs --space)");

  std::vector<std::string> argv_store{"genearl"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfig;
  }
  spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);

  try {
    if (prep->parsed()) return prepare(pf, out);
    if (run_cmd->parsed()) return execute(rf, Task::Earl, out, err);
    if (detect_cmd->parsed()) return execute(df, Task::Detect, out, err);
    if (eval_cmd->parsed()) return evaluate(ef, out);
    if (im->parsed()) {
      ImportStats stats;
      write_output(m2e2_out, import_m2e2(json_io::read(m2e2_ann), absolute(m2e2_images), &stats));
      out << "wrote " << stats.images << " images, " << stats.objects << " objects ("
          << stats.skipped_boxes << " boxes skipped) to " << m2e2_out << "\n";
      return kOk;
    }
    if (is->parsed()) {
      if (!swig_ont.empty() && swig_space.empty()) throw ConfigError("--ontology-out needs --space");
      ImportStats stats;
      write_output(swig_out, import_swig(json_io::read(swig_ann), absolute(swig_images), &stats));
      out << "wrote " << stats.images << " images, " << stats.objects << " objects ("
          << stats.skipped_boxes << " boxes skipped) to " << swig_out << "\n";
      if (!swig_ont.empty()) {
        write_output(swig_ont, import_swig_ontology(json_io::read(swig_space)));
        out << "wrote ontology to " << swig_ont << "\n";
      }
      return kOk;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kFailure;
}

}  // namespace genearl::cli
