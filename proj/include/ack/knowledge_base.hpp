#pragma once

#include <chrono>
#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace ack::kb {

// Lowercase, trim, underscores to spaces, collapse whitespace runs.
std::string normalize_label(std::string_view raw);

// AtLocation, LocatedNear, UsedFor, PartOf, HasA, IsA, MadeOf, RelatedTo.
const std::vector<std::string>& default_relation_set();

struct KnowledgeTriple {
  std::string start;
  std::string relation;
  std::string end;

  auto operator<=>(const KnowledgeTriple&) const = default;
  bool operator==(const KnowledgeTriple&) const = default;
};

// Triple store over a fixed relation set. Every triple is indexed under both
// endpoints; duplicates are collapsed on insert.
class KnowledgeStore {
 public:
  explicit KnowledgeStore(std::vector<std::string> relation_set = default_relation_set());

  KnowledgeStore(const KnowledgeStore& other);
  KnowledgeStore& operator=(const KnowledgeStore& other);
  KnowledgeStore(KnowledgeStore&&) = default;
  KnowledgeStore& operator=(KnowledgeStore&&) = default;

  // Returns false for a duplicate. Throws InvalidParams when the triple breaks
  // an invariant (unnormalized or empty labels, start == end, foreign relation).
  bool add(KnowledgeTriple triple);

  bool has_relation(std::string_view relation) const;
  const std::vector<std::string>& relation_set() const { return relation_set_; }

  std::size_t size() const { return triples_.size(); }
  bool empty() const { return triples_.empty(); }

  // Sorted by (start, relation, end).
  std::vector<KnowledgeTriple> triples() const { return {triples_.begin(), triples_.end()}; }

  // Triples with start or end in `objects`, sorted by (start, relation, end).
  std::vector<KnowledgeTriple> query_by_objects(const std::set<std::string>& objects) const;

  // Triples incident to one label (index lookup).
  std::vector<KnowledgeTriple> incident(const std::string& label) const;

  // True when some triple connects the two labels, in either direction.
  bool linked(const std::string& a, const std::string& b) const;

  std::map<std::string, std::size_t> relation_counts() const;

  bool operator==(const KnowledgeStore& other) const {
    return relation_set_ == other.relation_set_ && triples_ == other.triples_;
  }

 private:
  void rebuild_index();

  std::vector<std::string> relation_set_;
  std::set<KnowledgeTriple> triples_;
  std::unordered_map<std::string, std::vector<const KnowledgeTriple*>> index_;
  std::unordered_set<std::string> links_;
};

struct IngestOptions {
  bool strict = false;
};

struct IngestReport {
  std::size_t lines = 0;
  std::size_t accepted = 0;
  std::size_t duplicates = 0;
  std::size_t filtered = 0;  // well-formed, relation outside the set
  std::size_t skipped = 0;   // malformed
  std::vector<std::size_t> malformed_lines;
};

// Snapshot format: UTF-8, one `start<TAB>relation<TAB>end` record per line.
// Blank lines are ignored. Throws FileMissing, or MalformedLine in strict mode.
KnowledgeStore ingest_snapshot(const std::filesystem::path& path,
                               const std::vector<std::string>& relation_set = default_relation_set(),
                               const IngestOptions& options = {}, IngestReport* report = nullptr);

// Optional online client for the ConceptNet query API. Responses are cached
// on disk as `<label>__<relation>.json`, written via temp file + rename.
struct RemoteOptions {
  std::string endpoint = "http://api.conceptnet.io";
  std::filesystem::path cache_dir = "conceptnet_cache";
  bool allow_network = false;
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{200};
  std::chrono::milliseconds timeout{10000};
  int limit = 1000;
};

class RemoteKnowledgeClient {
 public:
  explicit RemoteKnowledgeClient(RemoteOptions options);

  // One query per (label, relation). Cached responses never touch the
  // network. Throws NetworkError after the initial attempt plus
  // `max_retries` retries fail.
  std::vector<KnowledgeTriple> fetch(const std::set<std::string>& concepts,
                                     const std::vector<std::string>& relation_set);

  std::filesystem::path cache_path(const std::string& label, const std::string& relation) const;

  std::size_t network_attempts() const { return network_attempts_; }
  std::size_t cache_hits() const { return cache_hits_; }
  std::size_t skipped_records() const { return skipped_records_; }

 private:
  std::string request(const std::string& label, const std::string& relation);

  RemoteOptions options_;
  std::size_t network_attempts_ = 0;
  std::size_t cache_hits_ = 0;
  std::size_t skipped_records_ = 0;
};

// Parses a ConceptNet `/query` response body. Records that are not English,
// lack labels, fall outside the relation set or are self-loops are skipped
// and counted. Throws ParseError when the body is not a JSON object.
std::vector<KnowledgeTriple> parse_conceptnet_response(std::string_view body,
                                                       const std::vector<std::string>& relation_set,
                                                       std::size_t* skipped = nullptr);

}  // namespace ack::kb
