#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "visattn/dataset.hpp"
#include "visattn/error.hpp"
#include "visattn/metrics.hpp"
#include "visattn/scene.hpp"

using namespace visattn;

namespace {

ModelConfig embed_config() {
  ModelConfig c;
  c.layers = 1;
  c.heads = 2;
  c.model_dim = 8;
  c.head_dim = 4;
  c.vocab_size = 44;
  c.patch_side = 24;
  c.max_seq = 700;
  return c;
}

EvalItem mc_item(std::string id, std::string gold, std::optional<std::string> pair = {},
                 std::optional<std::string> set = {}) {
  EvalItem it;
  it.item_id = std::move(id);
  it.question = "q";
  it.options = {"left", "right", "on", "under", "behind", "front"};
  it.gold = static_cast<std::size_t>(std::find(it.options.begin(), it.options.end(), gold) - it.options.begin());
  it.pair_id = std::move(pair);
  it.set_id = std::move(set);
  return it;
}

EvalItem tf_item(std::string id, bool truth) {
  EvalItem it;
  it.item_id = std::move(id);
  it.question = "the cup is left of the plate";
  it.options = {"true", "false"};
  it.gold = truth ? 0 : 1;
  return it;
}

std::vector<Prediction> answers(const std::vector<EvalItem>& items, const std::vector<std::string>& a) {
  std::vector<Prediction> out;
  for (std::size_t i = 0; i < items.size(); ++i) out.push_back({items[i].item_id, a[i], 0.5});
  return out;
}

}  // namespace

TEST(Generator, OneSetIsBalanced) {
  const auto set = generate_controlled_set(1, ControlledMode::A, 3);
  ASSERT_EQ(set.items.size(), 4u);
  std::set<std::string> sets, golds;
  for (const auto& it : set.items) {
    sets.insert(*it.set_id);
    golds.insert(it.gold_text());
    EXPECT_EQ(it.options, (std::vector<std::string>{"left", "right", "on", "under"}));
    ASSERT_TRUE(it.scene.has_value());
    EXPECT_NO_THROW(it.scene->validate());
  }
  EXPECT_EQ(sets.size(), 1u);
  EXPECT_EQ(golds.size(), 4u);
}

TEST(Generator, SeedDeterminism) {
  const auto a = generate_controlled_set(5, ControlledMode::B, 77);
  const auto b = generate_controlled_set(5, ControlledMode::B, 77);
  EXPECT_EQ(a.items, b.items);
  EXPECT_FALSE(generate_controlled_set(5, ControlledMode::B, 78).items == a.items);
}

TEST(Generator, CountsSetsAndPairs) {
  const auto g = generate_controlled_set(3, ControlledMode::A, 1);
  EXPECT_EQ(g.items.size(), 12u);
  std::set<std::string> sets, pairs, ids;
  for (const auto& it : g.items) {
    sets.insert(*it.set_id);
    if (it.pair_id) pairs.insert(*it.pair_id);
    ids.insert(it.item_id);
  }
  EXPECT_EQ(sets.size(), 3u);
  EXPECT_EQ(pairs.size(), 3u);
  EXPECT_EQ(ids.size(), 12u);
}

TEST(Generator, ModeBUsesDepthLabels) {
  const auto g = generate_controlled_set(2, ControlledMode::B, 4);
  for (const auto& it : g.items) {
    EXPECT_EQ(it.options, (std::vector<std::string>{"left", "right", "behind", "front"}));
    EXPECT_NO_THROW(it.scene->validate());
  }
  EXPECT_THROW(generate_controlled_set(0, ControlledMode::A, 1), ContractViolation);
}

TEST(Generator, LabelDistributionUniform) {
  const auto g = generate_controlled_set(23, ControlledMode::A, 9);
  const RelationCounts c = label_distribution(g.items);
  for (Relation r : {Relation::left, Relation::right, Relation::on, Relation::under}) EXPECT_EQ(c[r], 23u);
  EXPECT_EQ(c[Relation::behind], 0u);
  EXPECT_EQ(label_distribution({}), RelationCounts{});
}

TEST(SceneValidation, RejectsBadGeometry) {
  SceneSpec s;
  s.pos_a = {2, 2, 2, 2};
  s.pos_b = {3, 3, 2, 2};
  s.patch_side = 8;
  EXPECT_THROW(s.validate(), ContractViolation);  // overlap
  s.pos_b = {2, 6, 2, 2};
  s.relation = Relation::right;
  EXPECT_THROW(s.validate(), ContractViolation);  // a is left of b
  s.relation = Relation::left;
  EXPECT_NO_THROW(s.validate());
  s.pos_b = {2, 7, 2, 2};
  EXPECT_THROW(s.validate(), ContractViolation);  // leaves the grid
}

TEST(Embedding, SameSceneSameEmbedding) {
  const auto g = generate_controlled_set(1, ControlledMode::A, 2);
  const auto& it = g.items[0];
  const auto a = encode_item(it, embed_config());
  const auto b = encode_item(it, embed_config());
  EXPECT_EQ(a.token_ids, b.token_ids);
  EXPECT_EQ(a.patch_embeddings, b.patch_embeddings);
  EXPECT_EQ(a.image_span.length, 576u);
}

TEST(Embedding, BackgroundCellsShareOneVector) {
  const auto g = generate_controlled_set(1, ControlledMode::A, 2);
  const SceneSpec& s = *g.items[0].scene;
  const auto seq = encode_scene(s, embed_config(), g.items[0].question);
  std::optional<std::vector<double>> bg;
  for (int r = 0; r < 24; ++r)
    for (int c = 0; c < 24; ++c) {
      if (s.pos_a.contains(r, c) || s.pos_b.contains(r, c)) continue;
      const auto row = seq.patch_embeddings.row(static_cast<std::size_t>(r * 24 + c));
      std::vector<double> v(row.begin(), row.end());
      if (!bg) bg = v;
      EXPECT_EQ(v, *bg);
    }
}

TEST(Embedding, SwappingObjectsChangesOnlyTheirCells) {
  SceneSpec s;
  s.object_a = 1;
  s.object_b = 2;
  s.pos_a = {5, 3, 2, 2};
  s.pos_b = {5, 12, 2, 2};
  s.relation = Relation::left;
  s.patch_side = 24;
  SceneSpec t = s;
  std::swap(t.pos_a, t.pos_b);
  t.relation = Relation::right;
  const auto a = encode_scene(s, embed_config(), "q");
  const auto b = encode_scene(t, embed_config(), "q");
  for (int r = 0; r < 24; ++r)
    for (int c = 0; c < 24; ++c) {
      const auto k = static_cast<std::size_t>(r * 24 + c);
      const auto x = a.patch_embeddings.row(k), y = b.patch_embeddings.row(k);
      const bool same = std::equal(x.begin(), x.end(), y.begin());
      EXPECT_EQ(same, !(s.pos_a.contains(r, c) || s.pos_b.contains(r, c))) << r << "," << c;
    }
}

TEST(Questions, ReversalInvertsGold) {
  SceneSpec s;
  s.object_a = 0;
  s.object_b = 8;
  s.pos_a = {5, 2, 2, 2};
  s.pos_b = {5, 10, 2, 2};
  s.relation = Relation::left;
  s.patch_side = 24;
  const auto labels = label_space(ControlledMode::A);
  const Question q = make_question(s, labels, true);
  EXPECT_EQ(q.options[q.gold], "right");
  EXPECT_EQ(q.text.rfind("Where is the table in relation to the mug?", 0), 0u);
  s.pos_a = {3, 10, 2, 2};
  s.relation = Relation::on;
  EXPECT_EQ(make_question(s, labels, true).options[make_question(s, labels, true).gold], "under");
}

TEST(Questions, ReverseItemIsInvolution) {
  for (auto mode : {ControlledMode::A, ControlledMode::B}) {
    for (const auto& it : generate_controlled_set(2, mode, 31).items) {
      const EvalItem once = reverse_item(it);
      EXPECT_NE(once.gold, it.gold);
      EXPECT_EQ(once.gold_text(), std::string(to_string(inverse(*parse_relation(it.gold_text())))));
      EXPECT_EQ(reverse_item(once), it);
    }
  }
}

TEST(Questions, InverseOfEveryRelation) {
  for (Relation r : kAllRelations) {
    EXPECT_EQ(inverse(inverse(r)), r);
    EXPECT_NE(inverse(r), r);
  }
}

TEST(Json, EmptyListLoadsEmpty) {
  EXPECT_TRUE(parse_whatsup_json("[]").empty());
  EXPECT_TRUE(parse_vsr_json("[]").empty());
}

TEST(Json, MissingGoldNamesField) {
  try {
    parse_whatsup_json(R"([{"item_id":"a","question":"q","options":["left","right"]}])");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("'gold'"), std::string::npos);
    EXPECT_EQ(e.offset(), 0u);
  }
}

TEST(Json, SyntaxErrorCarriesOffset) {
  try {
    parse_whatsup_json("[{\"item_id\": }]");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_GT(e.offset(), 0u);
  }
}

TEST(Json, GoldByTextAndRange) {
  const auto items = parse_whatsup_json(R"([{"item_id":"a","question":"q","options":["left","right"],"gold":"right"}])");
  EXPECT_EQ(items.at(0).gold, 1u);
  EXPECT_THROW(parse_whatsup_json(R"([{"item_id":"a","question":"q","options":["left"],"gold":3}])"), ParseError);
}

TEST(Json, WhatsUpRoundTrip) {
  auto items = generate_controlled_set(2, ControlledMode::B, 6).items;
  items.push_back(mc_item("ext-1", "front"));
  items.back().image_path = "images/x.jpg";
  const auto path = std::filesystem::temp_directory_path() / "visattn-roundtrip.json";
  save_whatsup_json(items, path);
  EXPECT_EQ(load_whatsup_json(path), items);
  EXPECT_EQ(load_dataset_json(path), items);
  std::filesystem::remove(path);
}

TEST(Json, VsrRoundTripIsBinary) {
  const std::vector<EvalItem> items{tf_item("v1", true), tf_item("v2", false)};
  const std::string text = format_vsr_json(items);
  const auto back = parse_vsr_json(text);
  EXPECT_EQ(back, items);
  EXPECT_TRUE(back[0].binary());
  EXPECT_EQ(parse_dataset_json(text), items);
  EXPECT_EQ(parse_vsr_json(R"([{"item_id":"x","caption":"c","label":1}])").at(0).gold, 0u);
}

TEST(Score, AllCorrect) {
  const auto items = generate_controlled_set(2, ControlledMode::A, 1).items;
  std::vector<std::string> a;
  for (const auto& it : items) a.push_back(it.gold_text());
  const EvalReport r = score(items, answers(items, a));
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.pair_accuracy, 1.0);
  EXPECT_EQ(r.set_accuracy, 1.0);
  EXPECT_FALSE(r.f1.has_value());
}

TEST(Score, ThreeOfFourSetScoresZero) {
  const std::vector<EvalItem> items{mc_item("a", "left", "p", "s"), mc_item("b", "right", "p", "s"),
                                    mc_item("c", "on", {}, "s"), mc_item("d", "under", {}, "s")};
  const EvalReport r = score(items, answers(items, {"left", "RIGHT ", "on", "left"}));
  EXPECT_EQ(r.accuracy, 0.75);
  EXPECT_EQ(r.set_accuracy, 0.0);
  EXPECT_EQ(r.pair_accuracy, 1.0);
  EXPECT_EQ(r.per_label.at("under").correct, 0u);
  EXPECT_EQ(r.per_label.at("left").accuracy, 1.0);
}

TEST(Score, BinaryF1) {
  // TP = 2, FP = 1, FN = 1, TN = 1
  const std::vector<EvalItem> items{tf_item("1", true), tf_item("2", true), tf_item("3", true),
                                    tf_item("4", false), tf_item("5", false)};
  const EvalReport r = score(items, answers(items, {"true", "true", "false", "true", "false"}));
  ASSERT_TRUE(r.f1.has_value());
  EXPECT_NEAR(*r.f1, 4.0 / 6.0, 1e-12);
  EXPECT_NEAR(*r.f1, 0.667, 1e-3);
  EXPECT_EQ(r.accuracy, 0.6);
}

TEST(Score, MismatchesThrow) {
  const std::vector<EvalItem> items{mc_item("a", "left"), mc_item("b", "on")};
  EXPECT_THROW(score(items, answers({items[0]}, {"left"})), ContractViolation);
  auto preds = answers(items, {"left", "on"});
  std::swap(preds[0], preds[1]);
  EXPECT_THROW(score(items, preds), ContractViolation);
}

TEST(Score, MeanConfidencePerLabel) {
  const std::vector<EvalItem> items{mc_item("a", "left"), mc_item("b", "left")};
  std::vector<Prediction> p{{"a", "left", 0.2}, {"b", "right", 0.6}};
  const EvalReport r = score(items, p);
  EXPECT_NEAR(r.per_label.at("left").mean_confidence, 0.4, 1e-15);
  EXPECT_EQ(r.per_label.at("left").accuracy, 0.5);
}

TEST(LabelCounts, VgTwoRow) {
  std::vector<EvalItem> items;
  const std::map<std::string, int> row{{"right", 137}, {"left", 127}, {"on", 3},
                                       {"under", 0},   {"behind", 5}, {"front", 19}};
  int n = 0;
  for (const auto& [label, count] : row)
    for (int i = 0; i < count; ++i) items.push_back(mc_item("vg-" + std::to_string(n++), label));
  const std::string text = format_whatsup_json(items);
  const RelationCounts c = label_distribution(parse_whatsup_json(text));
  EXPECT_EQ(c[Relation::right], 137u);
  EXPECT_EQ(c[Relation::left], 127u);
  EXPECT_EQ(c[Relation::on], 3u);
  EXPECT_EQ(c[Relation::under], 0u);
  EXPECT_EQ(c[Relation::behind], 5u);
  EXPECT_EQ(c[Relation::front], 19u);
}

TEST(Phrases, CountingRules) {
  RelationCounts c = count_relation_phrases("to the left of the cup");
  EXPECT_EQ(c[Relation::left], 1u);
  c = count_relation_phrases("the lamp is on the left");
  EXPECT_EQ(c[Relation::left], 1u);
  EXPECT_EQ(c[Relation::on], 0u);
  c = count_relation_phrases("The book is on the table\nthe cat sits beneath the chair\nbehind the sofa, under the rug");
  EXPECT_EQ(c[Relation::on], 1u);
  EXPECT_EQ(c[Relation::under], 2u);
  EXPECT_EQ(c[Relation::behind], 1u);
  std::istringstream empty;
  EXPECT_EQ(count_relation_phrases(empty), RelationCounts{});
}

TEST(ReportCsv, StableLayout) {
  const std::vector<EvalItem> items{mc_item("b", "left", "p"), mc_item("a", "right", "p")};
  const EvalReport r = score(items, answers(items, {"left", "left"}));
  const std::string csv = format_report_csv(r);
  EXPECT_EQ(csv.rfind("scope,name,metric,value\n", 0), 0u);
  EXPECT_NE(csv.find("overall,all,accuracy,0.500000"), std::string::npos);
  EXPECT_NE(csv.find("overall,all,pair_accuracy,0.000000"), std::string::npos);
  const std::string preds = format_predictions_csv(items, answers(items, {"left", "left"}));
  EXPECT_EQ(preds.rfind("item_id,gold,answer,correct,confidence\na,", 0), 0u);
}

TEST(Split, WholeGroupsAndDeterminism) {
  const auto items = generate_controlled_set(10, ControlledMode::A, 5).items;
  const Split a = split_validation(items, 0.2, 7);
  const Split b = split_validation(items, 0.2, 7);
  EXPECT_EQ(a.validation, b.validation);
  EXPECT_EQ(a.test, b.test);
  EXPECT_EQ(a.validation.size(), 8u);
  EXPECT_EQ(a.validation.size() + a.test.size(), items.size());
  std::set<std::string> val_sets;
  for (auto i : a.validation) val_sets.insert(*items[i].set_id);
  for (auto i : a.test) EXPECT_FALSE(val_sets.contains(*items[i].set_id));
  EXPECT_THROW(split_validation(items, 0.01, 7), ContractViolation);
  EXPECT_THROW(split_validation(items, 1.0, 7), ContractViolation);
}
