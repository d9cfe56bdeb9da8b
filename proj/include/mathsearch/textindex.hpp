// Full-text half of the engine: tokenizer, inverted index, BM25 ranking.

#ifndef MATHSEARCH_TEXTINDEX_HPP
#define MATHSEARCH_TEXTINDEX_HPP

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mathsearch/expr.hpp"

namespace mathsearch {

/// NFC-normalizes, lowercases and splits on anything that is not a letter
/// or digit. Tokens containing non-ASCII letters are followed by their
/// diacritic-free ASCII folding when that differs.
std::vector<std::string> tokenize(std::string_view text);

/// NFC form of a UTF-8 string. Invalid sequences become U+FFFD.
std::string normalize_nfc(std::string_view text);

/// A window of `width` code points of the NFC form of `text` around the
/// first word whose tokens intersect `query_tokens`. Empty when none does.
std::string snippet_around(std::string_view text, const std::vector<std::string>& query_tokens,
                           std::size_t width = 160);

struct Posting {
  std::uint32_t doc = 0;  // ordinal in insertion order
  std::uint32_t tf = 0;
  bool operator==(const Posting&) const = default;
};

struct TextHit {
  std::string doc_id;
  double score = 0;
};

class TextIndex {
 public:
  static constexpr double kK1 = 1.2;
  static constexpr double kB = 0.75;

  /// Throws std::invalid_argument on a duplicate id.
  void add_document(const std::string& doc_id, std::string_view text);

  /// BM25 over the OR of the distinct query tokens. Ties go to the smaller
  /// doc_id. Documents without any query token are never returned.
  std::vector<TextHit> search(std::string_view query, std::size_t limit) const;

  std::size_t doc_count() const { return doc_ids_.size(); }
  std::size_t term_count() const { return postings_.size(); }
  double average_length() const;
  const std::vector<Posting>* postings(const std::string& term) const;
  std::uint32_t doc_length(std::uint32_t doc) const { return lengths_[doc]; }
  const std::string& doc_id(std::uint32_t doc) const { return doc_ids_[doc]; }

  Json to_json() const;
  static TextIndex from_json(const Json& j);

 private:
  std::vector<std::string> doc_ids_;
  std::vector<std::uint32_t> lengths_;
  std::unordered_map<std::string, std::uint32_t> ordinal_;
  std::map<std::string, std::vector<Posting>> postings_;
  std::uint64_t total_length_ = 0;
};

}  // namespace mathsearch

#endif  // MATHSEARCH_TEXTINDEX_HPP
