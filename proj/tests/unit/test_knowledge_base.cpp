#include <gtest/gtest.h>
#include <httplib.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>
#include <unistd.h>

#include "ack/error.hpp"
#include "ack/knowledge_base.hpp"

using namespace ack;
using namespace ack::kb;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = ACK_TEST_FIXTURES;

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("ack_kb_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const fs::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an ack::Error";
  return ErrorCode::InvalidParams;
}

}  // namespace

TEST(NormalizeLabel, Rules) {
  EXPECT_EQ(normalize_label("  Coffee_Table "), "coffee table");
  EXPECT_EQ(normalize_label("LIVING \t  room"), "living room");
  EXPECT_EQ(normalize_label(""), "");
}

TEST(RelationSet, DefaultHasEightLabels) {
  const auto& r = default_relation_set();
  ASSERT_EQ(r.size(), 8u);
  EXPECT_EQ(r.front(), "AtLocation");
}

TEST(Ingest, SingleTriple) {
  auto dir = temp_dir("single");
  auto store = ingest_snapshot(write_file(dir / "s.tsv", "bed\tAtLocation\tbedroom\n"));
  ASSERT_EQ(store.size(), 1u);
  EXPECT_EQ(store.triples()[0], (KnowledgeTriple{"bed", "AtLocation", "bedroom"}));
}

TEST(Ingest, EmptyFile) {
  auto dir = temp_dir("empty");
  EXPECT_TRUE(ingest_snapshot(write_file(dir / "s.tsv", "")).empty());
}

TEST(Ingest, DuplicatesCollapse) {
  auto dir = temp_dir("dup");
  IngestReport report;
  auto store = ingest_snapshot(
      write_file(dir / "s.tsv", "bed\tAtLocation\tbedroom\nsofa\tAtLocation\tliving room\nbed\tAtLocation\tbedroom\n"),
      default_relation_set(), {}, &report);
  EXPECT_EQ(store.size(), 2u);
  EXPECT_EQ(report.duplicates, 1u);
}

TEST(Ingest, FixtureSkipsBadLineAndFiltersRelations) {
  IngestReport report;
  auto store = ingest_snapshot(kFixtures / "snapshot_small.tsv", default_relation_set(), {}, &report);
  EXPECT_EQ(report.lines, 6u);
  EXPECT_EQ(report.accepted, 3u);
  EXPECT_EQ(report.duplicates, 1u);
  EXPECT_EQ(report.filtered, 1u);
  EXPECT_EQ(report.skipped, 1u);
  EXPECT_EQ(report.malformed_lines, std::vector<std::size_t>{3});
  EXPECT_TRUE(store.linked("lamp", "reading light"));
}

TEST(Ingest, StrictModeReportsLineNumber) {
  try {
    ingest_snapshot(kFixtures / "snapshot_small.tsv", default_relation_set(), {.strict = true});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedLine);
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}

TEST(Ingest, MissingFile) {
  EXPECT_EQ(code_of([] { ingest_snapshot("/nonexistent/snapshot.tsv"); }), ErrorCode::FileMissing);
}

TEST(Ingest, ShippedSnapshotLoads) {
  IngestReport report;
  auto store = ingest_snapshot(fs::path(ACK_DATA_DIR) / "conceptnet_snapshot.tsv", default_relation_set(), {},
                               &report);
  EXPECT_GT(store.size(), 200u);
  EXPECT_EQ(report.skipped, 0u);
  EXPECT_TRUE(store.linked("bed", "bedroom"));
}

TEST(Store, RejectsInvalidTriples) {
  KnowledgeStore s;
  EXPECT_EQ(code_of([&] { s.add({"bed", "AtLocation", "bed"}); }), ErrorCode::InvalidParams);
  EXPECT_EQ(code_of([&] { s.add({"Bed", "AtLocation", "bedroom"}); }), ErrorCode::InvalidParams);
  EXPECT_EQ(code_of([&] { s.add({"bed", "Synonym", "cot"}); }), ErrorCode::InvalidParams);
  EXPECT_EQ(code_of([&] { s.add({"", "AtLocation", "bedroom"}); }), ErrorCode::InvalidParams);
}

TEST(Query, ByObjects) {
  KnowledgeStore s;
  s.add({"bed", "AtLocation", "bedroom"});
  EXPECT_EQ(s.query_by_objects({"bed"}), std::vector<KnowledgeTriple>({{"bed", "AtLocation", "bedroom"}}));
  EXPECT_TRUE(s.query_by_objects({}).empty());
  EXPECT_TRUE(s.query_by_objects({"sofa"}).empty());
  // Either endpoint matches.
  EXPECT_EQ(s.query_by_objects({"bedroom"}).size(), 1u);
}

class RandomSnapshots : public ::testing::Test {
 protected:
  std::vector<std::string> labels{"bed", "lamp", "sofa", "bedroom", "kitchen", "oven", "sink", "desk", "chair"};
  std::vector<std::string> relations{"AtLocation", "UsedFor", "IsA", "Synonym", "CapableOf", "PartOf", "HasA"};

  std::string random_snapshot(std::mt19937_64& gen, int lines) {
    std::ostringstream out;
    for (int i = 0; i < lines; ++i) {
      switch (gen() % 10) {
        case 0:
          out << "garbage line " << i << '\n';
          break;
        case 1:
          out << '\n';
          break;
        default:
          out << labels[gen() % labels.size()] << '\t' << relations[gen() % relations.size()] << '\t'
              << labels[gen() % labels.size()] << '\n';
      }
    }
    return out.str();
  }
};

TEST_F(RandomSnapshots, InvariantsHold) {
  std::mt19937_64 gen(77);
  auto dir = temp_dir("random");
  for (int trial = 0; trial < 50; ++trial) {
    auto path = write_file(dir / "s.tsv", random_snapshot(gen, 60));
    auto a = ingest_snapshot(path);
    auto b = ingest_snapshot(path);
    EXPECT_EQ(a, b);
    auto relation_ok = [&](const std::string& r) {
      const auto& set = default_relation_set();
      return std::find(set.begin(), set.end(), r) != set.end();
    };
    for (const auto& t : a.triples()) {
      EXPECT_TRUE(relation_ok(t.relation));
      EXPECT_NE(t.start, t.end);
      auto from_start = a.incident(t.start);
      auto from_end = a.incident(t.end);
      EXPECT_NE(std::find(from_start.begin(), from_start.end(), t), from_start.end());
      EXPECT_NE(std::find(from_end.begin(), from_end.end(), t), from_end.end());
    }
    std::set<std::string> left, right;
    for (const auto& l : labels) (gen() % 2 ? left : right).insert(l);
    if (gen() % 3 == 0) left.insert(right.empty() ? "bed" : *right.begin());
    std::set<std::string> both = left;
    both.insert(right.begin(), right.end());
    auto q_left = a.query_by_objects(left);
    auto q_right = a.query_by_objects(right);
    std::set<KnowledgeTriple> united(q_left.begin(), q_left.end());
    united.insert(q_right.begin(), q_right.end());
    auto q_both = a.query_by_objects(both);
    EXPECT_EQ(std::vector<KnowledgeTriple>(united.begin(), united.end()), q_both);
    EXPECT_TRUE(std::is_sorted(q_both.begin(), q_both.end()));
  }
}

TEST(ConceptNetParse, FixtureResponse) {
  std::size_t skipped = 0;
  auto triples = parse_conceptnet_response(slurp(kFixtures / "conceptnet_bed_atlocation.json"),
                                           default_relation_set(), &skipped);
  ASSERT_EQ(triples.size(), 3u);
  EXPECT_EQ(skipped, 2u);
  for (const auto& t : triples) EXPECT_TRUE(t.start == "bed" || t.end == "bed");
  EXPECT_EQ(triples[1].end, "hotel room");
}

TEST(ConceptNetParse, RejectsNonObjectBody) {
  EXPECT_EQ(code_of([] { parse_conceptnet_response("[1, 2]", default_relation_set()); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { parse_conceptnet_response("not json", default_relation_set()); }), ErrorCode::ParseError);
}

class RemoteClientTest : public ::testing::Test {
 protected:
  void SetUp() override {
    body_ = slurp(kFixtures / "conceptnet_bed_atlocation.json");
    server_.Get("/query", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits_;
      last_query_ = req.get_param_value("node") + "|" + req.get_param_value("rel");
      res.set_content(req.get_param_value("rel") == "/r/AtLocation" ? body_ : R"({"edges": []})",
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::string body_;
  std::atomic<int> hits_{0};
  std::string last_query_;
};

TEST_F(RemoteClientTest, FetchesThenServesFromCache) {
  auto cache = temp_dir("cache");
  RemoteOptions opts;
  opts.endpoint = "http://127.0.0.1:" + std::to_string(port_);
  opts.cache_dir = cache;
  opts.allow_network = true;
  RemoteKnowledgeClient client(opts);
  auto first = client.fetch({"bed"}, {"AtLocation"});
  EXPECT_EQ(hits_, 1);
  EXPECT_EQ(last_query_, "/c/en/bed|/r/AtLocation");
  ASSERT_FALSE(first.empty());
  for (const auto& t : first) EXPECT_TRUE(t.start == "bed" || t.end == "bed");
  auto cached = client.cache_path("bed", "AtLocation");
  EXPECT_EQ(cached.filename(), "bed__AtLocation.json");
  EXPECT_EQ(slurp(cached), body_);

  opts.allow_network = false;
  RemoteKnowledgeClient offline(opts);
  EXPECT_EQ(offline.fetch({"bed"}, {"AtLocation"}), first);
  EXPECT_EQ(offline.network_attempts(), 0u);
  EXPECT_EQ(offline.cache_hits(), 1u);
  EXPECT_EQ(hits_, 1);
  EXPECT_EQ(slurp(cached), body_);
}

TEST(RemoteClient, UnreachableEndpointRetriesThenFails) {
  // Bind and release a port so nothing is listening on it.
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  RemoteOptions opts;
  opts.endpoint = "http://127.0.0.1:" + std::to_string(port);
  opts.cache_dir = temp_dir("unreachable");
  opts.allow_network = true;
  opts.initial_backoff = std::chrono::milliseconds(1);
  opts.timeout = std::chrono::milliseconds(500);
  RemoteKnowledgeClient client(opts);
  EXPECT_EQ(code_of([&] { client.fetch({"bed"}, {"AtLocation"}); }), ErrorCode::NetworkError);
  EXPECT_EQ(client.network_attempts(), 4u);
  EXPECT_FALSE(fs::exists(client.cache_path("bed", "AtLocation")));
}

TEST(RemoteClient, NetworkDisabledWithoutCache) {
  RemoteOptions opts;
  opts.cache_dir = temp_dir("disabled");
  RemoteKnowledgeClient client(opts);
  EXPECT_EQ(code_of([&] { client.fetch({"bed"}, {"AtLocation"}); }), ErrorCode::NetworkError);
  EXPECT_EQ(client.network_attempts(), 0u);
}
