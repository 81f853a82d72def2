#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "embedkit/binary_io.hpp"
#include "embedkit/classifier.hpp"
#include "embedkit/dataset.hpp"
#include "embedkit/embedding_store.hpp"
#include "embedkit/error.hpp"
#include "embedkit/metrics.hpp"
#include "embedkit/retrieval.hpp"
#include "embedkit/synthetic.hpp"

namespace embedkit::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

// Argument combinations CLI11 cannot express; maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    io::write_file_atomic(path, text);
  }
}

Split split_arg(const std::string& token) {
  auto s = parse_split(token);
  if (!s) throw UsageError("unknown split '" + token + "'");
  return *s;
}

std::string join_ids(const std::vector<std::string>& ids, std::size_t limit = 10) {
  std::string out;
  for (std::size_t i = 0; i < ids.size() && i < limit; ++i) {
    if (i) out += ", ";
    out += ids[i];
  }
  if (ids.size() > limit) out += ", ... (" + std::to_string(ids.size()) + " total)";
  return out;
}

/// Data error unless every id of `ids` is present in `store`.
void require_ids(const EmbeddingStore& store, const std::vector<std::string>& ids,
                 const std::string& what) {
  std::vector<std::string> missing;
  for (const auto& id : ids) {
    if (!store.find(id)) missing.push_back(id);
  }
  if (!missing.empty()) {
    throw Error(ErrorCode::kAlignment,
                what + " is missing " + std::to_string(missing.size()) + " manifest ids: " +
                    join_ids(missing));
  }
}

LabeledData labeled(const EmbeddingStore& store, const DatasetManifest& m, Split split) {
  const auto ids = split_ids(m, split);
  LabeledData d{gather_columns(store, ids), {}};
  d.labels.reserve(ids.size());
  for (const auto& id : ids) d.labels.push_back(m.label_of(id));
  return d;
}

std::string pretty_report(const EvalReport& r) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2);
  s << "mode      " << r.mode << "\n";
  if (r.accuracy) s << "accuracy  " << 100.0 * *r.accuracy << "\n";
  s << "mAP       " << 100.0 * r.map << "\n";
  s << "units     " << r.per_unit_ap.size() << " (skipped " << r.skipped.size() << ")\n";
  return s.str();
}

struct ReportOutputs {
  std::string out;
  std::string csv;
  bool pretty = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--out", out, "Write the JSON report here (default: stdout)");
    cmd->add_option("--csv", csv, "Also write per-unit AP rows as CSV");
    cmd->add_flag("--pretty", pretty, "Print a human-readable summary to stdout");
  }

  void write(const EvalReport& r, std::ostream& os) const {
    const auto json = dump(to_json(r));
    if (pretty) {
      os << pretty_report(r);
      if (!out.empty() && out != "-") io::write_file_atomic(out, json);
    } else {
      emit(json, out, os);
    }
    if (!csv.empty()) io::write_file_atomic(csv, to_csv(r));
  }
};

// ---------------------------------------------------------------- synth

struct SynthArgs {
  SynthConfig cfg;
  std::optional<double> sigma;
  std::string out_dir;
};

void cmd_synth(SynthArgs a, std::ostream& out) {
  if (a.sigma) a.cfg.sigma_image = a.cfg.sigma_text = *a.sigma;
  try {
    validate(a.cfg);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const auto corpus = generate(a.cfg);
  const fs::path dir(a.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string());
  save_store(corpus.images, dir / "images.cemb");
  save_store(corpus.texts, dir / "texts.cemb");
  save_manifest(corpus.manifest, dir / "manifest.jsonl");

  ojson summary;
  summary["generator"] = kSynthGenerator;
  summary["classes"] = a.cfg.num_classes;
  summary["dim"] = a.cfg.dim;
  summary["sigma_image"] = a.cfg.sigma_image;
  summary["sigma_text"] = a.cfg.sigma_text;
  summary["seed"] = a.cfg.seed;
  summary["items"] = {{"train", a.cfg.num_classes * a.cfg.train_per_class},
                      {"val", a.cfg.num_classes * a.cfg.val_per_class},
                      {"test", a.cfg.num_classes * a.cfg.test_per_class}};
  summary["files"] = {"images.cemb", "texts.cemb", "manifest.jsonl"};
  out << dump(summary);
}

// ------------------------------------------------------------ normalize

struct NormalizeArgs {
  std::string in;
  std::string out;
};

void cmd_normalize(const NormalizeArgs& a, std::ostream& out) {
  const auto store = l2_normalize(load_store(a.in));
  save_store(store, a.out);
  ojson summary;
  summary["count"] = store.size();
  summary["dim"] = store.dim();
  summary["modality"] = to_string(store.modality());
  out << dump(summary);
}

// ---------------------------------------------------------------- check

struct CheckArgs {
  std::string store;
  std::string manifest;
  std::string texts;
  std::string descriptions;
};

int cmd_check(const CheckArgs& a, std::ostream& out) {
  ojson report;
  std::size_t findings = 0;
  const auto store = load_store(a.store);
  report["store"] = {{"path", a.store},
                     {"modality", to_string(store.modality())},
                     {"normalized", store.normalized()},
                     {"dim", store.dim()},
                     {"count", store.size()}};

  std::optional<DatasetManifest> manifest;
  if (!a.manifest.empty()) {
    manifest = load_manifest(a.manifest);
    report["manifest"] = {{"items", manifest->items().size()},
                          {"classes", manifest->num_classes()},
                          {"train", split_ids(*manifest, Split::kTrain).size()},
                          {"val", split_ids(*manifest, Split::kVal).size()},
                          {"test", split_ids(*manifest, Split::kTest).size()}};
    if (store.modality() == Modality::kImage) {
      const auto al = check_alignment(*manifest, store);
      report["alignment"] = {{"aligned", al.aligned()},
                             {"missing", al.missing},
                             {"orphans", al.orphans}};
      // Orphans are usable index-only items and do not count as findings.
      findings += al.missing.size();
    } else {
      std::vector<std::string> missing;
      for (const auto& c : manifest->classes()) {
        if (!store.find(c)) missing.push_back(c);
      }
      report["class_coverage"] = {{"covered", missing.empty()}, {"missing", missing}};
      findings += missing.size();
    }
  }

  if (!a.texts.empty()) {
    const auto texts = load_store(a.texts);
    ojson t = {{"path", a.texts}, {"dim", texts.dim()}, {"count", texts.size()}};
    if (texts.dim() != store.dim()) {
      t["dim_mismatch"] = true;
      ++findings;
    }
    if (manifest) {
      std::vector<std::string> missing;
      for (const auto& c : manifest->classes()) {
        if (!texts.find(c)) missing.push_back(c);
      }
      t["missing_classes"] = missing;
      findings += missing.size();
    }
    report["texts"] = std::move(t);
  }

  if (!a.descriptions.empty()) {
    if (!manifest) throw UsageError("--descriptions requires --manifest");
    const auto catalog = load_descriptions(a.descriptions);
    try {
      validate_catalog(catalog, *manifest);
      report["descriptions"] = {{"valid", true}, {"count", catalog.descriptions.size()}};
    } catch (const Error& e) {
      report["descriptions"] = {{"valid", false}, {"error", e.what()}};
      ++findings;
    }
  }

  report["findings"] = findings;
  out << dump(report);
  return findings == 0 ? kExitOk : kExitRuntime;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string store;
  std::string manifest;
  std::string checkpoint;
  std::string report;
  std::size_t epochs = 300;
  std::size_t batch_size = 64;
  double lr = 1e-4;
  std::size_t hidden = 4096;
  std::uint64_t seed = 0;
  std::string val_split = "val";
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  std::optional<Split> val_split;
  if (a.val_split != "none") val_split = split_arg(a.val_split);

  const auto store = load_store(a.store);
  const auto manifest = load_manifest(a.manifest);
  const auto train_ids = split_ids(manifest, Split::kTrain);
  if (train_ids.empty()) throw Error(ErrorCode::kConfig, "manifest has no train items");
  require_ids(store, train_ids, "store");
  if (val_split) require_ids(store, split_ids(manifest, *val_split), "store");

  const auto train_set = labeled(store, manifest, Split::kTrain);
  std::optional<LabeledData> val_set;
  if (val_split) val_set = labeled(store, manifest, *val_split);

  TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch_size;
  cfg.learning_rate = a.lr;
  cfg.seed = a.seed;

  ojson report;
  report["config"] = {{"epochs", cfg.epochs},
                      {"batch_size", cfg.batch_size},
                      {"lr", cfg.learning_rate},
                      {"hidden", a.hidden},
                      {"seed", cfg.seed},
                      {"optimizer", {{"name", "adam"},
                                     {"beta1", cfg.adam.beta1},
                                     {"beta2", cfg.adam.beta2},
                                     {"eps", cfg.adam.eps}}},
                      {"input_dim", store.dim()},
                      {"num_classes", manifest.num_classes()},
                      {"train_items", train_ids.size()},
                      {"val_split", val_split ? std::string(to_string(*val_split)) : "none"}};

  auto epochs_json = [](const TrainReport& r) {
    auto arr = ojson::array();
    for (const auto& e : r.epochs) {
      ojson row = {{"epoch", e.epoch}, {"train_loss", e.train_loss}};
      if (e.val_accuracy) row["val_accuracy"] = *e.val_accuracy;
      arr.push_back(std::move(row));
    }
    return arr;
  };

  const auto initial = init_params<float>(static_cast<Eigen::Index>(store.dim()),
                                          static_cast<Eigen::Index>(a.hidden),
                                          static_cast<Eigen::Index>(manifest.num_classes()),
                                          a.seed);
  try {
    const auto result = train(initial, cfg, train_set, val_set ? &*val_set : nullptr);
    save_params(result.params, a.checkpoint);
    report["epochs"] = epochs_json(result.report);
    report["final"] = {{"train_accuracy", accuracy_of(result.params, train_set)}};
    if (val_set) report["final"]["val_accuracy"] = accuracy_of(result.params, *val_set);
    report["status"] = "ok";
    emit(dump(report), a.report, out);
    return kExitOk;
  } catch (const DivergenceError& e) {
    save_params(e.last_good(), a.checkpoint);
    report["epochs"] = epochs_json(e.report());
    report["status"] = "diverged";
    report["error"] = e.what();
    emit(dump(report), a.report, out);
    err << "embedkit: " << e.what() << "; wrote last good checkpoint to " << a.checkpoint
        << "\n";
    return kExitRuntime;
  }
}

// -------------------------------------------------------- eval-classify

struct EvalClassifyArgs {
  std::string store;
  std::string manifest;
  std::string checkpoint;
  std::string split = "test";
  ReportOutputs outputs;
};

void cmd_eval_classify(const EvalClassifyArgs& a, std::ostream& out) {
  const auto split = split_arg(a.split);
  const auto store = load_store(a.store);
  const auto manifest = load_manifest(a.manifest);
  const auto params = load_params(a.checkpoint);
  if (static_cast<std::size_t>(params.num_classes()) != manifest.num_classes()) {
    throw Error(ErrorCode::kShape, "checkpoint has " + std::to_string(params.num_classes()) +
                                       " classes, manifest has " +
                                       std::to_string(manifest.num_classes()));
  }
  const auto ids = split_ids(manifest, split);
  if (ids.empty()) throw Error(ErrorCode::kEmpty, "split has no items");
  require_ids(store, ids, "store");
  const auto preds = predict(params, store, ids);
  auto report = classification_map(ids, preds.probs, manifest);
  report.mode = "classifier";
  report.config["split"] = to_string(split);
  report.config["num_items"] = ids.size();
  report.config["num_classes"] = manifest.num_classes();
  report.config["hidden"] = params.hidden_dim();
  a.outputs.write(report, out);
}

// ------------------------------------------------------------ zero-shot

struct ZeroShotArgs {
  std::string images;
  std::string texts;
  std::string manifest;
  std::string split = "test";
  ReportOutputs outputs;
};

void cmd_zero_shot(const ZeroShotArgs& a, std::ostream& out) {
  const auto split = split_arg(a.split);
  const auto images = load_store(a.images);
  const auto texts = load_store(a.texts);
  const auto manifest = load_manifest(a.manifest);
  require_ids(images, split_ids(manifest, split), "image store");
  const auto report = zero_shot_benchmark(manifest, images, texts, split);
  a.outputs.write(report, out);
}

// ------------------------------------------------------------- retrieve

struct RetrieveArgs {
  std::string mode = "visual";
  std::string images;
  std::string index_images;
  std::string texts;
  std::string manifest;
  std::size_t rerank_depth = kDefaultRerankDepth;
  std::string query_split = "val";
  std::string index_split = "test";
  std::string rankings;
  ReportOutputs outputs;
};

void cmd_retrieve(const RetrieveArgs& a, std::ostream& out) {
  const auto kind = parse_pipeline(a.mode);
  if (!kind) throw UsageError("unknown mode '" + a.mode + "'");
  if (needs_text_store(*kind) && a.texts.empty()) {
    throw UsageError("--mode " + a.mode + " requires --texts");
  }
  BenchmarkConfig cfg;
  cfg.mode = {*kind, a.rerank_depth};
  cfg.query_split = split_arg(a.query_split);
  cfg.index_split = split_arg(a.index_split);

  const auto manifest = load_manifest(a.manifest);
  const auto images = load_store(a.images);
  std::optional<EmbeddingStore> index_images;
  if (!a.index_images.empty()) index_images = load_store(a.index_images);
  const auto& index_store = index_images ? *index_images : images;
  std::optional<EmbeddingStore> texts;
  if (!a.texts.empty()) texts = load_store(a.texts);

  require_ids(images, split_ids(manifest, cfg.query_split), "query image store");
  require_ids(index_store, split_ids(manifest, cfg.index_split), "index image store");

  const auto result =
      run_benchmark(cfg, manifest, images, index_store, texts ? &*texts : nullptr);
  if (!a.rankings.empty()) io::write_file_atomic(a.rankings, encode_ranked_lists(result.lists));
  a.outputs.write(result.report, out);
}

// ---------------------------------------------------------- report-diff

struct DiffArgs {
  std::string a;
  std::string b;
  double tol = 0.0;
  bool fail_on_diff = false;
};

int cmd_report_diff(const DiffArgs& args, std::ostream& out) {
  auto load = [](const std::string& path) {
    try {
      return ojson::parse(io::read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kParse, path + ": " + e.what());
    }
  };
  const auto a = load(args.a);
  const auto b = load(args.b);

  bool equal = true;
  ojson diff;
  diff["a"] = args.a;
  diff["b"] = args.b;
  diff["tolerance"] = args.tol;
  auto number_delta = [&](const char* key) {
    const bool in_a = a.contains(key) && a[key].is_number();
    const bool in_b = b.contains(key) && b[key].is_number();
    if (!in_a && !in_b) return;
    if (in_a != in_b) {
      diff[std::string(key) + "_delta"] = nullptr;
      equal = false;
      return;
    }
    const double d = b[key].get<double>() - a[key].get<double>();
    diff[std::string(key) + "_delta"] = d;
    if (std::abs(d) > args.tol) equal = false;
  };
  number_delta("map");
  number_delta("accuracy");

  const ojson empty = ojson::object();
  const auto& ua = a.contains("per_unit_ap") ? a["per_unit_ap"] : empty;
  const auto& ub = b.contains("per_unit_ap") ? b["per_unit_ap"] : empty;
  std::vector<std::string> only_a, only_b;
  ojson unit_deltas = ojson::object();
  double max_abs = 0.0;
  for (const auto& [unit, ap] : ua.items()) {
    if (!ub.contains(unit)) {
      only_a.push_back(unit);
      continue;
    }
    const double d = ub[unit].get<double>() - ap.get<double>();
    max_abs = std::max(max_abs, std::abs(d));
    if (std::abs(d) > args.tol) unit_deltas[unit] = d;
  }
  for (const auto& [unit, _] : ub.items()) {
    if (!ua.contains(unit)) only_b.push_back(unit);
  }
  if (!only_a.empty() || !only_b.empty() || !unit_deltas.empty()) equal = false;
  diff["max_abs_unit_delta"] = max_abs;
  diff["units_only_in_a"] = only_a;
  diff["units_only_in_b"] = only_b;
  diff["unit_deltas"] = std::move(unit_deltas);
  diff["equal"] = equal;
  out << dump(diff);
  return (!equal && args.fail_on_diff) ? kExitRuntime : kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Classification and retrieval over precomputed image/text embeddings",
               "embedkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  auto positive_size = CLI::PositiveNumber;

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a class-clustered synthetic corpus");
  c_synth->add_option("--classes", synth.cfg.num_classes, "Number of classes")
      ->check(positive_size)->capture_default_str();
  c_synth->add_option("--train-per-class", synth.cfg.train_per_class)
      ->check(positive_size)->capture_default_str();
  c_synth->add_option("--val-per-class", synth.cfg.val_per_class)
      ->check(positive_size)->capture_default_str();
  c_synth->add_option("--test-per-class", synth.cfg.test_per_class)
      ->check(positive_size)->capture_default_str();
  c_synth->add_option("--dim", synth.cfg.dim)->check(CLI::Range(2, 1 << 20))
      ->capture_default_str();
  c_synth->add_option("--sigma", synth.sigma, "Noise scale for images and texts")
      ->check(CLI::NonNegativeNumber);
  c_synth->add_option("--sigma-image", synth.cfg.sigma_image)->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  c_synth->add_option("--sigma-text", synth.cfg.sigma_text)->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  c_synth->add_option("--seed", synth.cfg.seed)->capture_default_str();
  c_synth->add_option("--out", synth.out_dir, "Output directory")->required();

  NormalizeArgs norm;
  auto* c_norm = app.add_subcommand("normalize", "L2-normalize an embedding store");
  c_norm->add_option("--in", norm.in)->required()->check(CLI::ExistingFile);
  c_norm->add_option("--out", norm.out)->required();

  CheckArgs check;
  auto* c_check = app.add_subcommand("check", "Validate a store and its alignment with a manifest");
  c_check->add_option("--store", check.store)->required()->check(CLI::ExistingFile);
  c_check->add_option("--manifest", check.manifest)->check(CLI::ExistingFile);
  c_check->add_option("--texts", check.texts, "Class text store")->check(CLI::ExistingFile);
  c_check->add_option("--descriptions", check.descriptions)->check(CLI::ExistingFile);

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train the shallow classifier on image embeddings");
  c_train->add_option("--store", tr.store)->required()->check(CLI::ExistingFile);
  c_train->add_option("--manifest", tr.manifest)->required()->check(CLI::ExistingFile);
  c_train->add_option("--checkpoint", tr.checkpoint, "Output checkpoint path")->required();
  c_train->add_option("--report", tr.report, "Per-epoch JSON report (default: stdout)");
  c_train->add_option("--epochs", tr.epochs)->check(positive_size)->capture_default_str();
  c_train->add_option("--batch-size", tr.batch_size)->check(positive_size)->capture_default_str();
  c_train->add_option("--lr", tr.lr)->check(CLI::PositiveNumber)->capture_default_str();
  c_train->add_option("--hidden", tr.hidden)->check(positive_size)->capture_default_str();
  c_train->add_option("--seed", tr.seed)->capture_default_str();
  c_train->add_option("--val-split", tr.val_split, "train|val|test|none")
      ->check(CLI::IsMember({"train", "val", "test", "none"}))->capture_default_str();

  EvalClassifyArgs ec;
  auto* c_ec = app.add_subcommand("eval-classify", "Evaluate a classifier checkpoint");
  c_ec->add_option("--store", ec.store)->required()->check(CLI::ExistingFile);
  c_ec->add_option("--manifest", ec.manifest)->required()->check(CLI::ExistingFile);
  c_ec->add_option("--checkpoint", ec.checkpoint)->required()->check(CLI::ExistingFile);
  c_ec->add_option("--split", ec.split)->check(CLI::IsMember({"train", "val", "test"}))
      ->capture_default_str();
  ec.outputs.attach(c_ec);

  ZeroShotArgs zs;
  auto* c_zs = app.add_subcommand("zero-shot", "Zero-shot classification against class texts");
  c_zs->add_option("--images", zs.images)->required()->check(CLI::ExistingFile);
  c_zs->add_option("--texts", zs.texts)->required()->check(CLI::ExistingFile);
  c_zs->add_option("--manifest", zs.manifest)->required()->check(CLI::ExistingFile);
  c_zs->add_option("--split", zs.split)->check(CLI::IsMember({"train", "val", "test"}))
      ->capture_default_str();
  zs.outputs.attach(c_zs);

  RetrieveArgs rt;
  auto* c_rt = app.add_subcommand("retrieve", "Run a retrieval pipeline and score it");
  c_rt->add_option("--mode", rt.mode, "visual|class-text|class-text-rerank|oracle")
      ->check(CLI::IsMember({"visual", "class-text", "class-text-rerank", "oracle"}))
      ->capture_default_str();
  c_rt->add_option("--images", rt.images, "Query image store (also the index unless --index-images)")
      ->required()->check(CLI::ExistingFile);
  c_rt->add_option("--index-images", rt.index_images)->check(CLI::ExistingFile);
  c_rt->add_option("--texts", rt.texts, "Class text store")->check(CLI::ExistingFile);
  c_rt->add_option("--manifest", rt.manifest)->required()->check(CLI::ExistingFile);
  c_rt->add_option("--rerank-depth", rt.rerank_depth)->check(positive_size)->capture_default_str();
  c_rt->add_option("--query-split", rt.query_split)
      ->check(CLI::IsMember({"train", "val", "test"}))->capture_default_str();
  c_rt->add_option("--index-split", rt.index_split)
      ->check(CLI::IsMember({"train", "val", "test"}))->capture_default_str();
  c_rt->add_option("--rankings", rt.rankings, "Write ranked lists as JSON Lines");
  rt.outputs.attach(c_rt);

  DiffArgs df;
  auto* c_df = app.add_subcommand("report-diff", "Compare two evaluation reports");
  c_df->add_option("a", df.a)->required()->check(CLI::ExistingFile);
  c_df->add_option("b", df.b)->required()->check(CLI::ExistingFile);
  c_df->add_option("--tol", df.tol, "Absolute tolerance on AP/mAP/accuracy")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  c_df->add_flag("--fail-on-diff", df.fail_on_diff, "Exit 1 when the reports differ");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "embedkit: " << e.what() << "\n";
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitUsage;
  }

  try {
    if (c_synth->parsed()) cmd_synth(synth, out);
    else if (c_norm->parsed()) cmd_normalize(norm, out);
    else if (c_check->parsed()) return cmd_check(check, out);
    else if (c_train->parsed()) return cmd_train(tr, out, err);
    else if (c_ec->parsed()) cmd_eval_classify(ec, out);
    else if (c_zs->parsed()) cmd_zero_shot(zs, out);
    else if (c_rt->parsed()) cmd_retrieve(rt, out);
    else if (c_df->parsed()) return cmd_report_diff(df, out);
    return kExitOk;
  } catch (const UsageError& e) {
    err << "embedkit: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "embedkit: " << to_string(e.code()) << ": " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "embedkit: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace embedkit::cli
