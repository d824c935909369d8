#include "ack/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <mutex>

#include "ack/error.hpp"
#include "ack/random.hpp"

namespace ack::emb {

namespace {

EmbeddingVector hashed_unit_vector(int dim, std::uint64_t seed) {
  EmbeddingVector v(dim);
  std::uint64_t state = seed;
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (int i = 0; i < dim; ++i) {
      // uniform in [-1, 1)
      v[i] = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-52 - 1.0;
      norm2 += v[i] * v[i];
    }
  } while (norm2 == 0.0);
  return v / std::sqrt(norm2);
}

}  // namespace

HashTextEmbedder::HashTextEmbedder(int dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim <= 0) throw Error(ErrorCode::InvalidParams, "embedding dimension must be positive");
}

EmbeddingVector HashTextEmbedder::embed(const std::string& label) const {
  if (label.empty()) throw Error(ErrorCode::EmptyLabel, "cannot embed an empty label");
  return hashed_unit_vector(dim_, mix_seed(seed_, stable_hash(label)));
}

WordSumTextEmbedder::WordSumTextEmbedder(int dim, std::uint64_t seed) : words_(dim, seed) {}

EmbeddingVector WordSumTextEmbedder::embed(const std::string& label) const {
  const std::string norm = kb::normalize_label(label);
  if (norm.empty()) throw Error(ErrorCode::EmptyLabel, "cannot embed an empty label");
  EmbeddingVector sum = EmbeddingVector::Zero(words_.dim());
  std::size_t start = 0;
  while (start < norm.size()) {
    std::size_t end = norm.find(' ', start);
    if (end == std::string::npos) end = norm.size();
    if (end > start) sum += words_.embed(norm.substr(start, end - start));
    start = end + 1;
  }
  const double n = sum.norm();
  // Only a label whose word vectors cancel exactly falls back to the whole-label hash.
  return n > 0.0 ? EmbeddingVector(sum / n) : words_.embed(norm);
}

CachedTextEmbedder::CachedTextEmbedder(std::shared_ptr<const TextEmbedder> inner) : inner_(std::move(inner)) {}

EmbeddingVector CachedTextEmbedder::embed(const std::string& label) const {
  {
    std::shared_lock lock(mutex_);
    if (auto it = cache_.find(label); it != cache_.end()) return it->second;
  }
  auto v = inner_->embed(label);
  std::unique_lock lock(mutex_);
  return cache_.emplace(label, std::move(v)).first->second;
}

SyntheticImageEmbedder::SyntheticImageEmbedder(std::shared_ptr<const TextEmbedder> text, std::uint64_t env_seed,
                                               double noise_scale)
    : text_(std::move(text)), env_seed_(env_seed), noise_scale_(noise_scale) {}

void SyntheticImageEmbedder::add_view(const std::string& view_id, std::vector<std::string> object_labels) {
  views_[view_id] = std::move(object_labels);
}

EmbeddingVector SyntheticImageEmbedder::embed(const std::string& view_id) const {
  auto it = views_.find(view_id);
  if (it == views_.end()) throw Error(ErrorCode::UnknownView, "unknown view '" + view_id + "'");
  EmbeddingVector v = EmbeddingVector::Zero(dim());
  for (const auto& label : it->second) v += text_->embed(label);
  if (!it->second.empty()) v /= static_cast<double>(it->second.size());
  if (noise_scale_ != 0.0) {
    v += noise_scale_ * hashed_unit_vector(dim(), mix_seed(env_seed_, stable_hash(view_id)));
  }
  double n = v.norm();
  if (n == 0.0) throw Error(ErrorCode::ZeroVector, "view '" + view_id + "' has an all-zero embedding");
  return v / n;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "cosine of sizes " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  double na = a.norm();
  double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::ZeroVector, "cosine with a zero vector");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

std::string knowledge_label_of(const kb::KnowledgeTriple& fact, const std::set<std::string>& objects) {
  if (objects.contains(fact.end) && !objects.contains(fact.start)) return fact.start;
  return fact.end;
}

std::vector<RankedFact> rank_knowledge(const TextEmbedder& text, const EmbeddingVector& view_embedding,
                                       const std::set<std::string>& objects,
                                       const std::vector<kb::KnowledgeTriple>& facts, std::size_t k) {
  if (k == 0 || facts.empty()) return {};
  std::vector<EmbeddingVector> object_vecs;
  object_vecs.reserve(objects.size());
  for (const auto& o : objects) object_vecs.push_back(text.embed(o));

  std::vector<RankedFact> ranked;
  ranked.reserve(facts.size());
  for (const auto& fact : facts) {
    RankedFact r{fact, knowledge_label_of(fact, objects), 0.0};
    auto kv = text.embed(r.knowledge_label);
    double image_term = cosine(kv, view_embedding);
    if (object_vecs.empty()) {
      r.score = image_term;
    } else {
      double object_term = 0.0;
      for (const auto& ov : object_vecs) object_term += cosine(kv, ov);
      object_term /= static_cast<double>(object_vecs.size());
      r.score = 0.5 * (image_term + object_term);
    }
    ranked.push_back(std::move(r));
  }
  auto better = [](const RankedFact& a, const RankedFact& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.knowledge_label != b.knowledge_label) return a.knowledge_label < b.knowledge_label;
    return a.triple < b.triple;
  };
  std::size_t keep = std::min(k, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end(), better);
  ranked.resize(keep);
  return ranked;
}

std::vector<RankedFact> rank_knowledge(const TextEmbedder& text, const ImageEmbedder& image,
                                       const std::string& view_id, const std::set<std::string>& objects,
                                       const std::vector<kb::KnowledgeTriple>& facts, std::size_t k) {
  if (k == 0 || facts.empty()) return {};
  return rank_knowledge(text, image.embed(view_id), objects, facts, k);
}

void write_ranked_jsonl(std::ostream& out, const std::string& view_id, const std::vector<RankedFact>& ranked) {
  for (const auto& r : ranked) {
    nlohmann::ordered_json j;
    j["view"] = view_id;
    j["knowledge"] = r.knowledge_label;
    j["score"] = r.score;
    j["triple"] = {r.triple.start, r.triple.relation, r.triple.end};
    out << j.dump() << '\n';
  }
}

}  // namespace ack::emb
