#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "ack/knowledge_base.hpp"

namespace ack::emb {

using EmbeddingVector = Eigen::VectorXd;

inline constexpr std::uint64_t kStubSeed = 0x41434b5f53545542ULL;

// Joint text/image space. Implementations must be deterministic and safe
// for concurrent calls.
class TextEmbedder {
 public:
  virtual ~TextEmbedder() = default;
  virtual int dim() const = 0;
  // Throws EmptyLabel.
  virtual EmbeddingVector embed(const std::string& label) const = 0;
};

class ImageEmbedder {
 public:
  virtual ~ImageEmbedder() = default;
  virtual int dim() const = 0;
  // Throws UnknownView.
  virtual EmbeddingVector embed(const std::string& view_id) const = 0;
};

// Unit-norm vectors whose entries come from a splitmix64 stream seeded by
// the FNV-1a hash of the label. No libm calls, so values are the same on
// every IEEE-754 platform.
class HashTextEmbedder final : public TextEmbedder {
 public:
  explicit HashTextEmbedder(int dim = 64, std::uint64_t seed = kStubSeed);
  int dim() const override { return dim_; }
  EmbeddingVector embed(const std::string& label) const override;

 private:
  int dim_;
  std::uint64_t seed_;
};

// Normalized sum of hashed word vectors over the words of the normalized
// label, so "coat rack" lies between "coat" and "rack". Single-word labels
// embed exactly as HashTextEmbedder does.
class WordSumTextEmbedder final : public TextEmbedder {
 public:
  explicit WordSumTextEmbedder(int dim = 64, std::uint64_t seed = kStubSeed);
  int dim() const override { return words_.dim(); }
  EmbeddingVector embed(const std::string& label) const override;

 private:
  HashTextEmbedder words_;
};

// Memoizing wrapper; single writer, many readers.
class CachedTextEmbedder final : public TextEmbedder {
 public:
  explicit CachedTextEmbedder(std::shared_ptr<const TextEmbedder> inner);
  int dim() const override { return inner_->dim(); }
  EmbeddingVector embed(const std::string& label) const override;

 private:
  std::shared_ptr<const TextEmbedder> inner_;
  mutable std::shared_mutex mutex_;
  mutable std::unordered_map<std::string, EmbeddingVector> cache_;
};

// Synthetic stand-in for an image encoder: a view's embedding is the
// normalized mean of its object-label embeddings plus `noise_scale` times a
// unit vector seeded by (environment seed, view id).
class SyntheticImageEmbedder final : public ImageEmbedder {
 public:
  SyntheticImageEmbedder(std::shared_ptr<const TextEmbedder> text, std::uint64_t env_seed, double noise_scale);

  void add_view(const std::string& view_id, std::vector<std::string> object_labels);
  bool has_view(const std::string& view_id) const { return views_.contains(view_id); }

  int dim() const override { return text_->dim(); }
  EmbeddingVector embed(const std::string& view_id) const override;

 private:
  std::shared_ptr<const TextEmbedder> text_;
  std::uint64_t env_seed_;
  double noise_scale_;
  std::map<std::string, std::vector<std::string>> views_;
};

// Throws DimensionMismatch or ZeroVector.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

struct RankedFact {
  kb::KnowledgeTriple triple;
  std::string knowledge_label;  // endpoint that is not one of the view's objects
  double score = 0.0;
};

// The endpoint of `fact` that is not in `objects` (the end node when both or
// neither are).
std::string knowledge_label_of(const kb::KnowledgeTriple& fact, const std::set<std::string>& objects);

// score = 0.5 * cos(knowledge, view) + 0.5 * mean_o cos(knowledge, o).
// Returns the k best, descending; ties go to the lexicographically smaller
// knowledge label, then the smaller triple.
std::vector<RankedFact> rank_knowledge(const TextEmbedder& text, const EmbeddingVector& view_embedding,
                                       const std::set<std::string>& objects,
                                       const std::vector<kb::KnowledgeTriple>& facts, std::size_t k);

std::vector<RankedFact> rank_knowledge(const TextEmbedder& text, const ImageEmbedder& image,
                                       const std::string& view_id, const std::set<std::string>& objects,
                                       const std::vector<kb::KnowledgeTriple>& facts, std::size_t k);

// One `{"view": ..., "knowledge": ..., "score": ...}` object per line.
void write_ranked_jsonl(std::ostream& out, const std::string& view_id, const std::vector<RankedFact>& ranked);

}  // namespace ack::emb
