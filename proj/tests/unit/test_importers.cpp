#include <gtest/gtest.h>

#include "genearl/dataset.hpp"
#include "genearl/error.hpp"
#include "genearl/importers.hpp"
#include "genearl/ontology.hpp"
#include "support.hpp"

namespace genearl {
namespace {

using nlohmann::json;

TEST(Importers, CanonicalEventNames) {
  EXPECT_EQ(canonical_m2e2_event("Justice:Arrest-Jail"), "Justice.ArrestJail");
  EXPECT_EQ(canonical_m2e2_event("Contact:Phone-Write"), "Contact.PhoneWrite");
  EXPECT_EQ(canonical_m2e2_event("Life.Die"), "Life.Die");
  EXPECT_EQ(canonical_m2e2_event("Transaction:Transfer_Money"), "Transaction.TransferMoney");
}

TEST(Importers, M2e2Boxes) {
  const json ann = json::parse(R"({
    "a": {"event_type": "Conflict:Attack",
          "role": {"Attacker": [[1, -5, 10, 40, 50], [2, 3, 3, 3, 9]],
                   "Instrument": [[60, 60, 80, 90]]}},
    "b": {"event_type": "Life:Die"}
  })");
  ImportStats stats;
  const json doc = import_m2e2(ann, "/imgs", &stats);
  EXPECT_EQ(stats.images, 2u);
  EXPECT_EQ(stats.objects, 2u);
  EXPECT_EQ(stats.skipped_boxes, 1u);
  const json& a = doc["images"][0];
  EXPECT_EQ(a["path"], "/imgs/a.jpg");
  EXPECT_EQ(a["objects"][0]["bbox"], json({0.0, 10.0, 40.0, 40.0}));
  EXPECT_EQ(a["objects"][1]["id"], "o2");
  EXPECT_EQ(a["objects"][1]["role"], "Instrument");
  EXPECT_EQ(a["objects"][1]["bbox"], json({60.0, 60.0, 20.0, 30.0}));
  EXPECT_TRUE(doc["images"][1]["objects"].empty());
}

TEST(Importers, M2e2Errors) {
  EXPECT_THROW(import_m2e2(json::array(), "/i"), ParseError);
  EXPECT_THROW(import_m2e2(json::parse(R"({"a": {"role": {}}})"), "/i"), ParseError);
  EXPECT_THROW(import_m2e2(json::parse(R"({"a": {"event_type": "X", "role": {"R": [[1, 2]]}}})"), "/i"),
               ParseError);
}

TEST(Importers, SwigSkipsUngroundedRoles) {
  const json ann = json::parse(R"({
    "dialing_7.jpg": {"verb": "dialing",
                      "bb": {"agent": [5, 5, 25, 45], "tool": [-1, -1, -1, -1], "place": [0, 0, 10, 10]}}
  })");
  ImportStats stats;
  const json doc = import_swig(ann, "/of500", &stats);
  EXPECT_EQ(stats.objects, 2u);
  EXPECT_EQ(stats.skipped_boxes, 1u);
  const json& img = doc["images"][0];
  EXPECT_EQ(img["id"], "dialing_7");
  EXPECT_EQ(img["event"], "dialing");
  EXPECT_EQ(img["path"], "/of500/dialing_7.jpg");
  EXPECT_EQ(img["objects"][0]["id"], "agent");
}

// Imported documents load through the regular dataset and ontology readers.
TEST(Importers, SwigRoundTripThroughLoaders) {
  const json space = json::parse(R"({"verbs": {
    "dialing": {"abstract": "the AGENT dials the TOOL in a PLACE", "order": ["agent", "tool", "phone", "place"],
                "roles": {"agent": {"def": "the dialer"}, "tool": {"def": "the dialed thing"},
                          "phone": {"def": ""}, "place": {"def": "where"}}},
    "hopping": {"abstract": "", "order": ["agent"], "roles": {"agent": {"def": "hopper"}}}}})");
  const Ontology o = filter_min_roles(
      exclude_role(ontology_from_json(import_swig_ontology(space), "space"), "place"), 3);
  ASSERT_EQ(o.events.size(), 1u);
  EXPECT_EQ(o.events[0].role_names(), (std::vector<std::string>{"agent", "tool", "phone"}));
  const json ann = json::parse(R"({
    "dialing_1.jpg": {"verb": "dialing", "bb": {"agent": [1, 1, 9, 9], "place": [0, 0, 5, 5]}},
    "hopping_1.jpg": {"verb": "hopping", "bb": {"agent": [1, 1, 9, 9]}}})");
  const Dataset d = dataset_from_json(import_swig(ann, "/x"), o, "swig");
  ASSERT_EQ(d.images.size(), 1u);
  EXPECT_EQ(d.object_count(), 1u);
  EXPECT_EQ(d.report.objects_dropped_unknown_role, 1u);
}

TEST(Importers, ShippedOntologyFilters) {
  const Ontology full = load_ontology(testing::m2e2_ontology_path());
  EXPECT_EQ(full.events.size(), 8u);
  EXPECT_EQ(testing::synthetic_ontology().events.size(), 6u);
}

}  // namespace
}  // namespace genearl
