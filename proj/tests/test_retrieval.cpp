#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "embedkit/error.hpp"
#include "embedkit/retrieval.hpp"
#include "embedkit/synthetic.hpp"
#include "oracles.hpp"

using namespace embedkit;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an embedkit::Error");
  return ErrorCode::kConfig;
}

std::vector<float> row_vec(const EmbeddingStore& s, std::string_view id) {
  const auto r = s.at(id);
  return {r.data(), r.data() + r.size()};
}

/// mAP of the visual pipeline recomputed from scratch: naive dot products,
/// definition-level AP.
double brute_force_visual_map(const SynthCorpus& c) {
  const auto queries = split_ids(c.manifest, Split::kVal);
  const auto index = split_ids(c.manifest, Split::kTest);
  double sum = 0;
  std::size_t counted = 0;
  for (const auto& q : queries) {
    const auto qv = row_vec(c.images, q);
    std::vector<float> scores;
    std::vector<bool> relevant;
    for (const auto& i : index) {
      scores.push_back(static_cast<float>(oracle::dot(qv, row_vec(c.images, i))));
      relevant.push_back(c.manifest.find(i)->class_id == c.manifest.find(q)->class_id);
    }
    const double ap = oracle::brute_force_ap(scores, relevant);
    if (ap >= 0) sum += ap, ++counted;
  }
  return sum / static_cast<double>(counted);
}

SynthConfig small_config(std::uint64_t seed, double sigma) {
  SynthConfig cfg;
  cfg.num_classes = 20;
  cfg.train_per_class = 1;
  cfg.val_per_class = 10;
  cfg.test_per_class = 10;
  cfg.dim = 64;
  cfg.sigma_image = cfg.sigma_text = sigma;
  cfg.seed = seed;
  return cfg;
}

EmbeddingStore tiny_store(std::initializer_list<std::pair<const char*, std::vector<float>>> rows,
                          Modality m = Modality::kImage) {
  EmbeddingStore raw(rows.begin()->second.size(), m);
  for (const auto& [id, v] : rows) raw.add(id, v);
  return l2_normalize(raw);
}

}  // namespace

TEST_CASE("cosine_score") {
  Eigen::VectorXf a(3), b(3);
  a << 0.6f, 0.8f, 0.0f;
  b << 0.0f, 0.0f, 2.0f;
  CHECK(cosine_score(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cosine_score(a, b) == 0.0);
  CHECK(cosine_score(a, Eigen::VectorXf(-a)) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(code_of([&] { cosine_score(a, Eigen::VectorXf::Zero(3)); }) == ErrorCode::kDegenerate);
  CHECK(code_of([&] { cosine_score(a, Eigen::VectorXf::Ones(2)); }) == ErrorCode::kShape);

  std::mt19937_64 rng(1);
  std::normal_distribution<float> n;
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXf x(10), y(10);
    for (auto& v : x) v = n(rng);
    for (auto& v : y) v = n(rng);
    const double c = cosine_score(x, y);
    CHECK(c <= 1.0 + 1e-6);
    CHECK(c >= -1.0 - 1e-6);
  }
}

TEST_CASE("zero_shot_classify") {
  const auto texts = tiny_store({{"k1", {1, 0, 0}}, {"k2", {0, 1, 0}}, {"k3", {1, 1, 0}}},
                                Modality::kText);
  SUBCASE("class text equal to the query ranks first with score 1") {
    const auto r = zero_shot_classify(texts.row(2), texts, "q");
    CHECK(r.ranking.front().id == "k3");
    CHECK(r.ranking.front().score == doctest::Approx(1.0f));
    CHECK(r.ranking.size() == 3);
  }
  SUBCASE("single class always wins") {
    const auto one = tiny_store({{"only", {0, 0, 1}}}, Modality::kText);
    Eigen::VectorXf q(3);
    q << 1, 0, 0;
    CHECK(zero_shot_classify(q, one).ranking.front().id == "only");
  }
  SUBCASE("ties keep store order") {
    Eigen::VectorXf q(3);
    q << 0, 0, 1;  // orthogonal to all three
    const auto r = zero_shot_classify(q, texts);
    CHECK(r.item_ids() == std::vector<std::string>{"k1", "k2", "k3"});
  }
  SUBCASE("empty class store") {
    EmbeddingStore empty(3, Modality::kText, true);
    CHECK(code_of([&] { zero_shot_classify(Eigen::VectorXf::Ones(3), empty); }) ==
          ErrorCode::kEmpty);
  }
}

TEST_CASE("zero-shot is perfect at sigma 0.05 over 200 queries") {
  const auto corpus = generate(small_config(13, 0.05));
  const auto queries = split_ids(corpus.manifest, Split::kTest);
  REQUIRE(queries.size() == 200);
  std::size_t correct = 0;
  for (const auto& q : queries) {
    // brute force over every (item, class text) pair
    const auto qv = row_vec(corpus.images, q);
    std::string best;
    double best_score = -2;
    for (const auto& c : corpus.texts.ids()) {
      const double s = oracle::dot(qv, row_vec(corpus.texts, c));
      if (s > best_score) best_score = s, best = c;
    }
    const auto predicted = zero_shot_classify(corpus.images.at(q), corpus.texts).ranking[0].id;
    CHECK(predicted == best);
    correct += predicted == corpus.manifest.find(q)->class_id;
  }
  CHECK(correct == 200);
}

TEST_CASE("visual mode sorts by score") {
  const float s1 = 0.9f, s2 = 0.1f, s3 = 0.5f;
  auto unit = [](float c) { return std::vector<float>{c, std::sqrt(1 - c * c)}; };
  const auto index = tiny_store({{"first", unit(s1)}, {"second", unit(s2)}, {"third", unit(s3)}});
  const auto queries = tiny_store({{"q", {1, 0}}});
  const auto r = retrieve({PipelineKind::kVisual}, "q", queries, index, nullptr, nullptr);
  CHECK(r.item_ids() == std::vector<std::string>{"first", "third", "second"});
  CHECK(r.ranking[0].score == doctest::Approx(0.9f));
}

TEST_CASE("pipeline identities on synthetic corpora") {
  const auto corpus = generate(small_config(21, 0.05));
  const auto query_ids = split_ids(corpus.manifest, Split::kVal);
  const auto index = select(corpus.images, split_ids(corpus.manifest, Split::kTest));
  const auto queries = select(corpus.images, query_ids);
  const RetrievalEngine engine(queries, index, &corpus.texts, &corpus.manifest);

  for (const auto& q : query_ids) {
    const auto truth = corpus.manifest.find(q)->class_id;
    const auto zs = engine.zero_shot(q);
    const auto visual = engine.retrieve({PipelineKind::kVisual}, q);
    const auto text = engine.retrieve({PipelineKind::kClassText}, q);
    const auto oracle_list = engine.retrieve({PipelineKind::kOracleText}, q);

    // every list is a permutation of the index
    for (const auto* l : {&visual, &text, &oracle_list}) {
      auto ids = l->item_ids();
      std::sort(ids.begin(), ids.end());
      auto expected = index.ids();
      std::sort(expected.begin(), expected.end());
      CHECK(ids == expected);
      for (std::size_t k = 1; k < l->ranking.size(); ++k) {
        CHECK(l->ranking[k - 1].score >= l->ranking[k].score);
      }
    }
    if (zs.ranking[0].id == truth) CHECK(text == oracle_list);

    const auto depth1 = engine.retrieve({PipelineKind::kClassTextRerank, 1}, q);
    CHECK(depth1.item_ids() == text.item_ids());

    const auto full = engine.retrieve({PipelineKind::kClassTextRerank, 10000}, q);
    CHECK(full == visual);

    // re-ranking the head leaves the tail untouched and keeps the head's items
    const auto top5 = engine.retrieve({PipelineKind::kClassTextRerank, 5}, q);
    const auto text_ids = text.item_ids();
    const std::set<std::string> head_a(text_ids.begin(), text_ids.begin() + 5);
    const auto top5_ids = top5.item_ids();
    const std::set<std::string> head_b(top5_ids.begin(), top5_ids.begin() + 5);
    CHECK(head_a == head_b);
    for (std::size_t k = 5; k < text.ranking.size(); ++k) CHECK(top5.ranking[k] == text.ranking[k]);
    for (std::size_t k = 1; k < 5; ++k) CHECK(top5.ranking[k - 1].score >= top5.ranking[k].score);
  }
}

TEST_CASE("re-ranking a head already in visual order changes nothing") {
  // Text ranks i1 > i2 > i3; visual agrees.
  const auto index = tiny_store({{"i1", {1, 0.1f, 0}}, {"i2", {1, 0.5f, 0}}, {"i3", {1, 2, 0}}});
  const auto queries = tiny_store({{"q", {1, 0, 0.01f}}});
  const auto texts = tiny_store({{"A", {1, 0, 0}}}, Modality::kText);
  const auto m = parse_manifest(
      "{\"id\":\"q\",\"class\":\"A\",\"split\":\"val\"}\n"
      "{\"id\":\"i1\",\"class\":\"A\",\"split\":\"test\"}\n"
      "{\"id\":\"i2\",\"class\":\"A\",\"split\":\"test\"}\n"
      "{\"id\":\"i3\",\"class\":\"A\",\"split\":\"test\"}\n");
  const RetrievalEngine engine(queries, index, &texts, &m);
  const auto text = engine.retrieve({PipelineKind::kClassText}, "q");
  const auto rerank = engine.retrieve({PipelineKind::kClassTextRerank, 2}, "q");
  CHECK(text.item_ids() == std::vector<std::string>{"i1", "i2", "i3"});
  CHECK(rerank.item_ids() == text.item_ids());
}

TEST_CASE("scores are invariant to positive rescaling before normalization") {
  const auto corpus = generate(small_config(2, 0.3));
  EmbeddingStore scaled(corpus.images.dim(), Modality::kImage);
  for (std::size_t i = 0; i < corpus.images.size(); ++i) {
    Eigen::VectorXf v = 8.0f * corpus.images.row(i);
    scaled.add(corpus.images.id(i), std::span<const float>(v.data(), v.size()));
  }
  const auto renorm = l2_normalize(scaled);
  const auto base = l2_normalize(corpus.images);
  for (auto kind : {PipelineKind::kVisual, PipelineKind::kClassTextRerank}) {
    BenchmarkConfig cfg;
    cfg.mode.kind = kind;
    const auto a = run_benchmark(cfg, corpus.manifest, base, base, &corpus.texts);
    const auto b = run_benchmark(cfg, corpus.manifest, renorm, renorm, &corpus.texts);
    CHECK(a.lists == b.lists);
  }
}

TEST_CASE("sigma 0 gives mAP 1 in every mode, matching brute force") {
  const auto corpus = generate(small_config(5, 0.0));
  CHECK(brute_force_visual_map(corpus) == 1.0);
  for (auto kind : {PipelineKind::kVisual, PipelineKind::kClassText,
                    PipelineKind::kClassTextRerank, PipelineKind::kOracleText}) {
    BenchmarkConfig cfg;
    cfg.mode.kind = kind;
    const auto r = run_benchmark(cfg, corpus.manifest, corpus.images, corpus.images, &corpus.texts);
    CHECK(r.report.map == 1.0);
    CHECK(r.report.skipped.empty());
  }
}

TEST_CASE("property: visual mAP matches brute force on small corpora") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    SynthConfig cfg;
    cfg.num_classes = 2 + rng() % 4;
    cfg.train_per_class = 1;
    cfg.val_per_class = 1 + rng() % 2;
    cfg.test_per_class = 1 + rng() % 3;  // index <= 15 items
    cfg.dim = 2 + rng() % 6;
    cfg.sigma_image = 0.5 + (rng() % 100) / 50.0;
    cfg.sigma_text = 0.5;
    cfg.seed = rng();
    const auto corpus = generate(cfg);
    BenchmarkConfig bc;
    const auto r = run_benchmark(bc, corpus.manifest, corpus.images, corpus.images, nullptr);
    CHECK(std::abs(r.report.map - brute_force_visual_map(corpus)) <= 1e-12);
  }
}

TEST_CASE("oracle dominates class-text on aggregate") {
  double oracle_total = 0, text_total = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto cfg = small_config(seed, 0.0);
    cfg.sigma_image = 0.25;
    cfg.sigma_text = 0.25;
    const auto corpus = generate(cfg);
    BenchmarkConfig bc;
    bc.mode.kind = PipelineKind::kOracleText;
    const auto o = run_benchmark(bc, corpus.manifest, corpus.images, corpus.images, &corpus.texts);
    bc.mode.kind = PipelineKind::kClassText;
    const auto t = run_benchmark(bc, corpus.manifest, corpus.images, corpus.images, &corpus.texts);
    MESSAGE("seed " << seed << ": oracle " << o.report.map << ", class-text " << t.report.map);
    oracle_total += o.report.map;
    text_total += t.report.map;
  }
  // Statistical over seeds, not per corpus.
  CHECK(oracle_total >= text_total);
}

TEST_CASE("retrieve errors") {
  const auto corpus = generate(small_config(1, 0.1));
  const auto& imgs = corpus.images;
  CHECK(code_of([&] {
          retrieve({PipelineKind::kVisual}, "nope", imgs, imgs, nullptr, &corpus.manifest);
        }) == ErrorCode::kLookup);
  CHECK(code_of([&] {
          retrieve({PipelineKind::kClassText}, imgs.id(0), imgs, imgs, nullptr, &corpus.manifest);
        }) == ErrorCode::kConfig);
  CHECK(code_of([&] {
          retrieve({PipelineKind::kClassTextRerank, 0}, imgs.id(0), imgs, imgs, &corpus.texts,
                   &corpus.manifest);
        }) == ErrorCode::kConfig);
  EmbeddingStore raw(2, Modality::kImage);
  raw.add("a", std::vector<float>{3, 4});
  CHECK(code_of([&] { retrieve({PipelineKind::kVisual}, "a", raw, raw, nullptr, nullptr); }) ==
        ErrorCode::kConfig);
  // oracle needs the query's class text
  EmbeddingStore texts(corpus.texts.dim(), Modality::kText, true);
  texts.add("unrelated", std::span<const float>(corpus.texts.row(0).data(), corpus.texts.dim()));
  CHECK(code_of([&] {
          retrieve({PipelineKind::kOracleText}, imgs.id(0), imgs, imgs, &texts, &corpus.manifest);
        }) == ErrorCode::kLookup);
}

TEST_CASE("ranked list export") {
  const std::vector<RankedList> lists{{"q1", {{"a", 0.5f}, {"b", 0.25f}}}, {"q2", {}}};
  CHECK(encode_ranked_lists(lists) ==
        "{\"query\":\"q1\",\"ranking\":[[\"a\",0.5],[\"b\",0.25]]}\n"
        "{\"query\":\"q2\",\"ranking\":[]}\n");
}

TEST_CASE("zero_shot_benchmark") {
  const auto corpus = generate(small_config(3, 0.0));
  const auto r = zero_shot_benchmark(corpus.manifest, corpus.images, corpus.texts, Split::kTest);
  CHECK(*r.accuracy == 1.0);
  CHECK(r.map == 1.0);
  CHECK(r.per_unit_ap.size() == 20);
}

TEST_CASE("pipeline names") {
  for (auto k : {PipelineKind::kVisual, PipelineKind::kClassText, PipelineKind::kClassTextRerank,
                 PipelineKind::kOracleText}) {
    CHECK(parse_pipeline(to_string(k)) == k);
  }
  CHECK_FALSE(parse_pipeline("text").has_value());
}
