#include <gtest/gtest.h>

#include "genearl/error.hpp"
#include "genearl/evaluator.hpp"
#include "genearl/mock_backends.hpp"
#include "genearl/pipeline.hpp"
#include "genearl/run.hpp"
#include "support.hpp"

namespace genearl {
namespace {

using nlohmann::json;

BackendConfig constant(BackendKind kind, json options) {
  BackendConfig c;
  c.kind = kind;
  c.provider = "mock-constant";
  c.model = "constant";
  c.retry_backoff = std::chrono::milliseconds(0);
  c.options = std::move(options);
  return c;
}

class ToyPipeline : public ::testing::Test {
 protected:
  void SetUp() override {
    ontology_ = testing::toy_ontology();
    const json doc = {
        {"images",
         {{{"id", "a"}, {"path", "/img/a.jpg"}, {"event", "Arrest"},
           {"objects", {{{"id", "o1"}, {"bbox", {0, 0, 5, 5}}, {"role", "Agent"}},
                        {{"id", "o2"}, {"bbox", {5, 5, 5, 5}}, {"role", "Person"}}}}},
          {{"id", "b"}, {"path", "/img/b.jpg"}, {"event", "Payment"},
           {"objects", {{{"id", "o1"}, {"bbox", {0, 0, 5, 5}}, {"role", "Money"}}}}}}}};
    dataset_ = dataset_from_json(doc, ontology_, "toy");
    instances_ = build_instances(dataset_, ontology_);
  }

  Ontology ontology_;
  Dataset dataset_;
  std::vector<Instance> instances_;
};

TEST_F(ToyPipeline, LabelBatchParsesOneRolePerObject) {
  ConstantBackend llm(constant(BackendKind::LlmChat,
                               {{"text", "Argument Role of Object 2: person\nArgument Role of Object 1: Agent"}}));
  const auto batches = group_by_image(instances_);
  ASSERT_EQ(batches.size(), 2u);
  const auto preds = label_batch(batches[0], "a caption", {"d1", "d2"}, {}, llm);
  ASSERT_EQ(preds.size(), 2u);
  EXPECT_EQ(preds[0].object_id, "o1");
  EXPECT_EQ(preds[0].predicted_role, "Agent");
  EXPECT_EQ(preds[1].predicted_role, "Person");
  EXPECT_EQ(preds[0].method, "genearl");
  EXPECT_EQ(preds[0].shots, 0u);
  EXPECT_THROW(label_batch(batches[0], "c", {"only one"}, {}, llm), ValidationError);
}

TEST_F(ToyPipeline, LabelBatchDegradesMissingAnswersToOther) {
  ConstantBackend llm(constant(BackendKind::LlmChat, {{"text", "Argument Role of Object 1: Instrument"}}));
  const auto preds = label_batch(group_by_image(instances_)[0], "c", {"d1", "d2"}, {}, llm);
  EXPECT_EQ(preds[0].predicted_role, "Instrument");
  EXPECT_EQ(preds[1].predicted_role, "Other");
  EXPECT_FALSE(preds[1].warnings.empty());
}

TEST_F(ToyPipeline, AlpacaTakesFirstArgmax) {
  // Candidates: Agent, Person, Instrument, Other.
  ConstantBackend scorer(constant(BackendKind::LlmScore, {{"scores", {-3.0, -1.0, -1.0, -2.0}}}));
  const Prediction p = label_alpaca(instances_[0], "c", "d", scorer);
  EXPECT_EQ(p.predicted_role, "Person");
  EXPECT_EQ(json::parse(p.raw_response)["Other"], -2.0);
}

TEST_F(ToyPipeline, DirectGvlmGeneratesWhenItCannotScore) {
  ConstantBackend gvlm(constant(BackendKind::GvlmGenerate, {{"text", "The instrument."}}));
  EXPECT_EQ(label_direct_gvlm(instances_[0], gvlm).predicted_role, "Instrument");
  ConstantBackend vague(constant(BackendKind::GvlmGenerate, {{"text", "hard to say"}}));
  const Prediction p = label_direct_gvlm(instances_[0], vague);
  EXPECT_EQ(p.predicted_role, "Other");
  EXPECT_FALSE(p.warnings.empty());
  ConstantBackend scoring(constant(BackendKind::GvlmGenerate,
                                   {{"text", "x"}, {"scores", {0.0, 0.0, 0.5, 0.1}}}));
  EXPECT_EQ(label_direct_gvlm(instances_[0], scoring).predicted_role, "Instrument");
}

TEST_F(ToyPipeline, CaptionFailuresAreRecordedOrThrown) {
  FailingBackend gvlm(constant(BackendKind::GvlmGenerate, {{"fail_times", -1}, {"transient", false}}));
  std::vector<const ImageRecord*> images = {&dataset_.images[0], &dataset_.images[1]};
  std::vector<StageFailure> failures;
  const auto caps = caption_images(images, gvlm, {}, &failures);
  ASSERT_EQ(caps.size(), 2u);
  EXPECT_FALSE(caps[0].ok());
  EXPECT_EQ(failures.size(), 2u);
  EXPECT_EQ(failures[0].stage, "caption");
  try {
    caption_images(images, gvlm);
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_NE(std::string(e.what()).find("'a'"), std::string::npos) << e.what();
  }
}

TEST_F(ToyPipeline, DescribeKeepsOrderAcrossThreads) {
  ScriptedBackend gvlm(constant(BackendKind::GvlmGenerate, json::object()));
  for (const auto& inst : instances_) {
    const MultimodalPrompt p = render_gvlm_description_prompt(inst, PromptMode::Full,
                                                              role_definition_block(*inst.event));
    gvlm.set_text(prompt_digest(generate_request(p)), inst.image->id + "/" + inst.object->id);
  }
  StageOptions opts;
  opts.parallelism = 3;
  const auto records = describe_objects(instances_, gvlm, PromptMode::Full, opts);
  ASSERT_EQ(records.size(), 3u);
  EXPECT_EQ(records[0].text, "a/o1");
  EXPECT_EQ(records[1].text, "a/o2");
  EXPECT_EQ(records[2].text, "b/o1");
  EXPECT_EQ(records[2].event_name, "Payment");
}

TEST_F(ToyPipeline, GenerativeEventDetection) {
  ConstantBackend llm(constant(BackendKind::LlmChat, {{"text", "Event: payment"}}));
  const CaptionRecord cap{"a", "people exchange money", "", ""};
  EXPECT_EQ(detect_event_generative(cap, ontology_, llm).event, "Payment");
  ConstantBackend lost(constant(BackendKind::LlmChat, {{"text", "a picnic"}}));
  EXPECT_EQ(detect_event_generative(cap, ontology_, lost).event, std::string(kUnknownEvent));
}

TEST_F(ToyPipeline, SolvedInstanceNeedsCaptionAndDescriptions) {
  ExemplarImage ex{&dataset_.images[0], std::nullopt, {}};
  EXPECT_THROW(make_solved_instance(ex, ontology_.events[0]), ValidationError);
  ex.caption = "cap";
  EXPECT_THROW(make_solved_instance(ex, ontology_.events[0]), ValidationError);
  ex.descriptions = {"d1", "d2"};
  const SolvedInstance s = make_solved_instance(ex, ontology_.events[0]);
  EXPECT_EQ(s.gold_roles, (std::vector<std::string>{"Agent", "Person"}));
}

TEST(Predictions, JsonRoundTripAndValidation) {
  PredictionSet set;
  set.predictions.push_back({"a", "o1", "Agent", "raw", "genearl", 1, {"w"}});
  set.event_predictions.push_back({"a", "Arrest", "Arrest"});
  set.failures.push_back({"label", "b", "", "boom"});
  set.metadata = {{"method", "genearl"}, {"timestamps", {{"started_at", "t0"}}}};
  const PredictionSet back = prediction_set_from_json(to_json(set), "mem");
  ASSERT_EQ(back.predictions.size(), 1u);
  EXPECT_EQ(back.predictions[0].predicted_role, "Agent");
  EXPECT_EQ(back.predictions[0].warnings, (std::vector<std::string>{"w"}));
  EXPECT_EQ(back.event_for("a"), "Arrest");
  EXPECT_EQ(back.failures.at(0).message, "boom");
  EXPECT_FALSE(to_json(set, false)["metadata"].contains("timestamps"));
  EXPECT_TRUE(to_json(set, true)["metadata"].contains("timestamps"));

  set.predictions.push_back(set.predictions[0]);
  EXPECT_THROW(validate(set), ValidationError);
  EXPECT_THROW(prediction_set_from_json(json::array(), "x"), Error);
}

TEST(Predictions, ArgmaxFirst) {
  EXPECT_EQ(argmax_first({1, 3, 3, 2}), 1u);
  EXPECT_EQ(argmax_first({-1}), 0u);
}

TEST(Methods, Names) {
  for (auto m : {Method::Genearl, Method::DirectGvlm, Method::Alpaca, Method::Baseline}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  EXPECT_THROW(parse_method("clip"), ConfigError);
}

class OracleRun : public ::testing::Test {
 protected:
  PredictionSet run(json overrides, std::size_t* dispatches = nullptr) {
    json doc = testing::oracle_config(dir_ / "out", dir_ / "cache");
    doc["backends"]["embed"]["options"] = {{"dimension", 24}};
    doc.merge_patch(overrides);
    RunSession session(run_config_from_json(doc, dir_.path()));
    PredictionSet set = session.run();
    if (dispatches) *dispatches = session.dispatches();
    return set;
  }

  Metrics score(const PredictionSet& set) {
    const Ontology o = testing::synthetic_ontology();
    const Dataset d = testing::synthetic_dataset(o);
    std::set<std::string> excluded;
    for (const auto& id : set.metadata["exemplar_image_ids"]) excluded.insert(id.get<std::string>());
    return score_earl(set, gold_view(d, excluded)).overall;
  }

  testing::TempDir dir_;
};

TEST_F(OracleRun, EveryMethodIsPerfectAgainstTheOracle) {
  for (const json& o : {json{{"method", "genearl"}, {"shots", 0}},
                        json{{"method", "genearl"}, {"shots", 3}},
                        json{{"method", "genearl"}, {"mode", "object-caption"}},
                        json{{"method", "direct-gvlm"}}, json{{"method", "alpaca"}},
                        json{{"method", "baseline"}}}) {
    SCOPED_TRACE(o.dump());
    const PredictionSet set = run(o);
    EXPECT_TRUE(set.failures.empty());
    const Metrics m = score(set);
    EXPECT_GT(m.counts.gold_total, 0u);
    EXPECT_DOUBLE_EQ(m.accuracy, 1.0);
    EXPECT_DOUBLE_EQ(m.f1, 1.0);
  }
}

TEST_F(OracleRun, ExemplarsFollowTheSeed) {
  const auto a = run({{"shots", 3}, {"seed", 7}});
  const auto b = run({{"shots", 3}, {"seed", 7}});
  EXPECT_EQ(a.metadata["exemplar_image_ids"], json({"syn16", "syn12", "syn09"}));
  EXPECT_EQ(a.metadata["exemplar_image_ids"], b.metadata["exemplar_image_ids"]);
  EXPECT_EQ(a.predictions.size(), 51u);
}

TEST_F(OracleRun, RerunIsServedFromCache) {
  std::size_t first = 0;
  std::size_t second = 0;
  const auto a = run({{"shots", 1}}, &first);
  const auto b = run({{"shots", 1}}, &second);
  EXPECT_GT(first, 0u);
  EXPECT_EQ(second, 0u);
  EXPECT_EQ(to_json(a, false), to_json(b, false));
}

TEST_F(OracleRun, LabelFailuresAreCollected) {
  const auto set = run({{"backends", {{"llm", {{"provider", "mock-failing"},
                                               {"retry_backoff_ms", 0},
                                               {"options", {{"transient", false}}}}}}}});
  EXPECT_TRUE(set.predictions.empty());
  EXPECT_EQ(set.failures.size(), 20u);
  EXPECT_EQ(set.metadata["failed_units"], 20);
  EXPECT_EQ(set.metadata["units"], 20);
}

TEST_F(OracleRun, ShotsOnlyForGenearl) {
  EXPECT_THROW(run({{"method", "alpaca"}, {"shots", 1}}), ConfigError);
}

TEST(RunConfig, Validation) {
  testing::TempDir dir;
  json doc = testing::oracle_config(dir / "out", dir / "cache");
  EXPECT_NO_THROW(run_config_from_json(doc, dir.path()));
  json bad = doc;
  bad["unknown"] = 1;
  EXPECT_THROW(run_config_from_json(bad, dir.path()), ConfigError);
  bad = doc;
  bad["backends"]["painter"] = {{"provider", "mock-oracle"}};
  EXPECT_THROW(run_config_from_json(bad, dir.path()), ConfigError);
  bad = doc;
  bad["backends"]["llm"]["kind"] = "embed";
  EXPECT_THROW(run_config_from_json(bad, dir.path()), ConfigError);
  bad = doc;
  bad["backends"].erase("llm");
  EXPECT_THROW(validate_for_run(run_config_from_json(bad, dir.path())), ConfigError);
  bad = doc;
  bad["dataset"] = "rel/data.json";
  EXPECT_EQ(run_config_from_json(bad, dir.path()).dataset, dir.path() / "rel/data.json");
}

}  // namespace
}  // namespace genearl
