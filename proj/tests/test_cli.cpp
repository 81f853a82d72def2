#include <doctest.h>

#include <nlohmann/json.hpp>

#include "cli_runner.hpp"
#include "embedkit/binary_io.hpp"
#include "embedkit/classifier.hpp"
#include "embedkit/embedding_store.hpp"
#include "test_util.hpp"

using embedkit::io::read_file;
using nlohmann::json;

namespace {

void synth(const TempDir& dir, const std::string& sigma, const std::string& seed = "7") {
  const auto r = run_cli({"synth", "--classes", "20", "--dim", "64", "--sigma", sigma, "--seed",
                          seed, "--out", dir.path().string()});
  REQUIRE(r.code == 0);
}

std::vector<std::string> corpus_args(const TempDir& d) {
  return {"--images", (d / "images.cemb").string(), "--texts", (d / "texts.cemb").string(),
          "--manifest", (d / "manifest.jsonl").string()};
}

CliResult retrieve(const TempDir& d, std::vector<std::string> extra) {
  std::vector<std::string> args{"retrieve"};
  for (auto& a : corpus_args(d)) args.push_back(a);
  for (auto& a : extra) args.push_back(a);
  return run_cli(args);
}

}  // namespace

TEST_CASE("synth writes three files, reproducibly") {
  TempDir a, b;
  synth(a, "0.1");
  for (auto f : {"images.cemb", "texts.cemb", "manifest.jsonl"}) {
    CHECK(std::filesystem::exists(a / f));
  }
  synth(b, "0.1");
  for (auto f : {"images.cemb", "texts.cemb", "manifest.jsonl"}) {
    CHECK(read_file(a / f) == read_file(b / f));
  }
  const auto r = run_cli({"synth", "--classes", "0", "--out", (a / "x").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("--classes") != std::string::npos);
}

TEST_CASE("usage errors exit 2") {
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"frobnicate"}).code == 2);
  CHECK(run_cli({"--help"}).code == 0);
  TempDir d;
  synth(d, "0.1");
  CHECK(retrieve(d, {"--mode", "nonsense"}).code == 2);
  CHECK(retrieve(d, {"--rerank-depth", "0"}).code == 2);
  // class-text without a text store
  const auto r = run_cli({"retrieve", "--mode", "class-text", "--images",
                          (d / "images.cemb").string(), "--manifest",
                          (d / "manifest.jsonl").string()});
  CHECK(r.code == 2);
  CHECK(run_cli({"train", "--store", (d / "images.cemb").string(), "--manifest",
                 (d / "manifest.jsonl").string(), "--checkpoint", (d / "c").string(),
                 "--epochs", "0"})
            .code == 2);
}

TEST_CASE("retrieve and zero-shot on a sigma 0 corpus") {
  TempDir d;
  synth(d, "0");
  const auto r = retrieve(d, {"--mode", "oracle"});
  REQUIRE(r.code == 0);
  const auto report = json::parse(r.out);
  CHECK(report["map"].get<double>() == 1.0);
  CHECK(report["mode"] == "oracle");
  CHECK(report["config"]["query_split"] == "val");
  CHECK(report["config"]["index_split"] == "test");

  std::vector<std::string> zs{"zero-shot"};
  for (auto& a : corpus_args(d)) zs.push_back(a);
  const auto z = run_cli(zs);
  REQUIRE(z.code == 0);
  CHECK(json::parse(z.out)["accuracy"].get<double>() == 1.0);
}

TEST_CASE("rerank depth 1 reproduces class-text") {
  TempDir d;
  synth(d, "0.2");
  const auto text = retrieve(d, {"--mode", "class-text", "--rankings", (d / "t.jsonl").string(),
                                 "--out", (d / "t.json").string()});
  const auto rerank = retrieve(d, {"--mode", "class-text-rerank", "--rerank-depth", "1",
                                   "--rankings", (d / "r.jsonl").string(), "--out",
                                   (d / "r.json").string()});
  REQUIRE(text.code == 0);
  REQUIRE(rerank.code == 0);
  auto a = json::parse(read_file(d / "t.json"));
  auto b = json::parse(read_file(d / "r.json"));
  CHECK(a["per_unit_ap"] == b["per_unit_ap"]);
  CHECK(a["map"] == b["map"]);

  const auto diff = run_cli({"report-diff", (d / "t.json").string(), (d / "r.json").string(),
                             "--fail-on-diff"});
  CHECK(diff.code == 0);
  CHECK(json::parse(diff.out)["equal"] == true);
}

TEST_CASE("csv and pretty outputs") {
  TempDir d;
  synth(d, "0.1");
  const auto r = retrieve(d, {"--csv", (d / "ap.csv").string(), "--pretty", "--out",
                              (d / "rep.json").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("mAP") != std::string::npos);
  const auto csv = read_file(d / "ap.csv");
  CHECK(csv.rfind("unit,ap\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 201);
  CHECK(json::parse(read_file(d / "rep.json"))["num_units"] == 200);
}

TEST_CASE("train and eval-classify") {
  TempDir d;
  synth(d, "0.1");
  const auto store = (d / "images.cemb").string();
  const auto manifest = (d / "manifest.jsonl").string();
  const auto t = run_cli({"train", "--store", store, "--manifest", manifest, "--checkpoint",
                          (d / "c.cprm").string(), "--epochs", "3", "--hidden", "64", "--lr",
                          "1e-3", "--report", (d / "train.json").string()});
  REQUIRE(t.code == 0);
  const auto report = json::parse(read_file(d / "train.json"));
  CHECK(report["epochs"].size() == 3);
  CHECK(report["config"]["hidden"] == 64);
  CHECK(report["epochs"][2]["train_loss"].get<double>() <
        report["epochs"][0]["train_loss"].get<double>());

  const auto e = run_cli({"eval-classify", "--store", store, "--manifest", manifest,
                          "--checkpoint", (d / "c.cprm").string()});
  REQUIRE(e.code == 0);
  const auto ev = json::parse(e.out);
  CHECK(ev["mode"] == "classifier");
  CHECK(ev["config"]["split"] == "test");
  CHECK(ev["per_unit_ap"].size() == 20);
}

TEST_CASE("train defaults echo the documented values") {
  TempDir d;
  // a corpus small enough for one epoch at hidden 4096
  REQUIRE(run_cli({"synth", "--classes", "2", "--dim", "8", "--train-per-class", "2",
                   "--val-per-class", "1", "--test-per-class", "1", "--out", d.path().string()})
              .code == 0);
  // --epochs is the only override; the echo must show the rest untouched
  const auto t = run_cli({"train", "--store", (d / "images.cemb").string(), "--manifest",
                          (d / "manifest.jsonl").string(), "--checkpoint",
                          (d / "c.cprm").string(), "--epochs", "1"});
  REQUIRE(t.code == 0);
  const auto cfg = json::parse(t.out)["config"];
  CHECK(cfg["batch_size"] == 64);
  CHECK(cfg["lr"].get<double>() == 1e-4);
  CHECK(cfg["hidden"] == 4096);
}

TEST_CASE("misaligned store exits 1 naming the missing ids") {
  TempDir d;
  synth(d, "0.1");
  embedkit::EmbeddingStore partial(64, embedkit::Modality::kImage, true);
  const auto full = embedkit::load_store(d / "images.cemb");
  for (std::size_t i = 1; i < full.size(); ++i) {
    partial.add(full.id(i), std::span<const float>(full.row(i).data(), 64));
  }
  embedkit::save_store(partial, d / "partial.cemb");
  const auto t = run_cli({"train", "--store", (d / "partial.cemb").string(), "--manifest",
                          (d / "manifest.jsonl").string(), "--checkpoint",
                          (d / "c.cprm").string(), "--epochs", "1"});
  CHECK(t.code == 1);
  CHECK(t.err.find(full.id(0)) != std::string::npos);

  const auto c = run_cli({"check", "--store", (d / "partial.cemb").string(), "--manifest",
                          (d / "manifest.jsonl").string()});
  CHECK(c.code == 1);
  CHECK(json::parse(c.out)["alignment"]["missing"][0] == full.id(0));
}

TEST_CASE("check and normalize") {
  TempDir d;
  synth(d, "0.1");
  const auto ok = run_cli({"check", "--store", (d / "images.cemb").string(), "--manifest",
                           (d / "manifest.jsonl").string(), "--texts",
                           (d / "texts.cemb").string()});
  CHECK(ok.code == 0);
  CHECK(json::parse(ok.out)["findings"] == 0);

  embedkit::EmbeddingStore raw(2, embedkit::Modality::kImage);
  raw.add("a", std::vector<float>{3, 4});
  embedkit::save_store(raw, d / "raw.cemb");
  CHECK(run_cli({"normalize", "--in", (d / "raw.cemb").string(), "--out",
                 (d / "n.cemb").string()})
            .code == 0);
  const auto n = embedkit::load_store(d / "n.cemb");
  CHECK(n.normalized());
  CHECK(n.at("a")(0) == doctest::Approx(0.6f));

  embedkit::io::write_file_atomic(d / "bad.cemb", "JUNKJUNKJUNK");
  CHECK(run_cli({"check", "--store", (d / "bad.cemb").string()}).code == 1);
}

TEST_CASE("report-diff detects differences") {
  TempDir d;
  synth(d, "0.2");
  REQUIRE(retrieve(d, {"--mode", "visual", "--out", (d / "v.json").string()}).code == 0);
  REQUIRE(retrieve(d, {"--mode", "oracle", "--out", (d / "o.json").string()}).code == 0);
  const auto diff = run_cli({"report-diff", (d / "v.json").string(), (d / "o.json").string()});
  CHECK(diff.code == 0);
  CHECK(json::parse(diff.out)["equal"] == false);
  CHECK(run_cli({"report-diff", (d / "v.json").string(), (d / "o.json").string(),
                 "--fail-on-diff"})
            .code == 1);
}
