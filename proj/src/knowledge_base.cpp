#include "ack/knowledge_base.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "ack/error.hpp"

namespace ack::kb {

namespace {

std::string link_key(const std::string& a, const std::string& b) {
  return a < b ? a + '\x1f' + b : b + '\x1f' + a;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t begin = 0;
  while (true) {
    auto pos = line.find('\t', begin);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(begin));
      break;
    }
    fields.push_back(line.substr(begin, pos - begin));
    begin = pos + 1;
  }
  return fields;
}

}  // namespace

std::string normalize_label(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char c : raw) {
    auto uc = static_cast<unsigned char>(c);
    if (c == '_' || std::isspace(uc)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(uc)));
  }
  return out;
}

const std::vector<std::string>& default_relation_set() {
  static const std::vector<std::string> relations = {
      "AtLocation", "LocatedNear", "UsedFor", "PartOf", "HasA", "IsA", "MadeOf", "RelatedTo"};
  return relations;
}

KnowledgeStore::KnowledgeStore(std::vector<std::string> relation_set)
    : relation_set_(std::move(relation_set)) {}

KnowledgeStore::KnowledgeStore(const KnowledgeStore& other)
    : relation_set_(other.relation_set_), triples_(other.triples_) {
  rebuild_index();
}

KnowledgeStore& KnowledgeStore::operator=(const KnowledgeStore& other) {
  if (this != &other) {
    relation_set_ = other.relation_set_;
    triples_ = other.triples_;
    rebuild_index();
  }
  return *this;
}

void KnowledgeStore::rebuild_index() {
  index_.clear();
  links_.clear();
  for (const auto& t : triples_) {
    index_[t.start].push_back(&t);
    index_[t.end].push_back(&t);
    links_.insert(link_key(t.start, t.end));
  }
}

bool KnowledgeStore::has_relation(std::string_view relation) const {
  return std::find(relation_set_.begin(), relation_set_.end(), relation) != relation_set_.end();
}

bool KnowledgeStore::add(KnowledgeTriple triple) {
  if (triple.start.empty() || triple.end.empty()) {
    throw Error(ErrorCode::InvalidParams, "triple with empty label");
  }
  if (normalize_label(triple.start) != triple.start || normalize_label(triple.end) != triple.end) {
    throw Error(ErrorCode::InvalidParams, "triple labels must be normalized");
  }
  if (triple.start == triple.end) {
    throw Error(ErrorCode::InvalidParams, "self-loop triple on '" + triple.start + "'");
  }
  if (!has_relation(triple.relation)) {
    throw Error(ErrorCode::InvalidParams, "relation '" + triple.relation + "' not in relation set");
  }
  auto [it, inserted] = triples_.insert(std::move(triple));
  if (!inserted) return false;
  index_[it->start].push_back(&*it);
  index_[it->end].push_back(&*it);
  links_.insert(link_key(it->start, it->end));
  return true;
}

std::vector<KnowledgeTriple> KnowledgeStore::query_by_objects(const std::set<std::string>& objects) const {
  std::set<KnowledgeTriple> hits;
  for (const auto& label : objects) {
    auto it = index_.find(label);
    if (it == index_.end()) continue;
    for (const auto* t : it->second) hits.insert(*t);
  }
  return {hits.begin(), hits.end()};
}

std::vector<KnowledgeTriple> KnowledgeStore::incident(const std::string& label) const {
  std::vector<KnowledgeTriple> out;
  if (auto it = index_.find(label); it != index_.end()) {
    for (const auto* t : it->second) out.push_back(*t);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool KnowledgeStore::linked(const std::string& a, const std::string& b) const {
  return links_.contains(link_key(a, b));
}

std::map<std::string, std::size_t> KnowledgeStore::relation_counts() const {
  std::map<std::string, std::size_t> counts;
  for (const auto& r : relation_set_) counts[r] = 0;
  for (const auto& t : triples_) ++counts[t.relation];
  return counts;
}

KnowledgeStore ingest_snapshot(const std::filesystem::path& path,
                               const std::vector<std::string>& relation_set,
                               const IngestOptions& options, IngestReport* report) {
  std::ifstream in(path);
  if (!std::filesystem::is_regular_file(path) || !in) {
    throw Error(ErrorCode::FileMissing, "snapshot not found: " + path.string());
  }
  KnowledgeStore store(relation_set);
  IngestReport local;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ++local.lines;
    auto fields = split_tabs(line);
    KnowledgeTriple triple;
    bool ok = fields.size() == 3;
    if (ok) {
      triple.start = normalize_label(fields[0]);
      triple.relation = std::string(fields[1]);
      triple.end = normalize_label(fields[2]);
      ok = !triple.start.empty() && !triple.relation.empty() && !triple.end.empty() &&
           triple.relation.find(' ') == std::string::npos && triple.start != triple.end;
    }
    if (!ok) {
      if (options.strict) {
        throw Error(ErrorCode::MalformedLine,
                    path.string() + ":" + std::to_string(line_no) + ": expected start<TAB>relation<TAB>end");
      }
      ++local.skipped;
      local.malformed_lines.push_back(line_no);
      continue;
    }
    if (!store.has_relation(triple.relation)) {
      ++local.filtered;
      continue;
    }
    if (store.add(std::move(triple))) {
      ++local.accepted;
    } else {
      ++local.duplicates;
    }
  }
  if (report) *report = std::move(local);
  return store;
}

}  // namespace ack::kb
