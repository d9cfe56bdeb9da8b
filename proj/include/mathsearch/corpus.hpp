// Corpus ingestion, document store and snapshot persistence.
//
// Input is JSON Lines, one {"id", "title", "text"} object per line. Math is
// delimited by <math>...</math> inside "text". A snapshot is a directory of
// four UTF-8 JSON files; docs/snapshot-format.md describes their layout.

#ifndef MATHSEARCH_CORPUS_HPP
#define MATHSEARCH_CORPUS_HPP

#include <cstdint>
#include <filesystem>
#include <istream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mathsearch/expr.hpp"
#include "mathsearch/mathindex.hpp"
#include "mathsearch/textindex.hpp"

namespace mathsearch {

inline constexpr std::string_view kSnapshotVersion = "mathsearch-snapshot/1";

struct ByteSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const ByteSpan&) const = default;
};

struct Formula {
  std::uint32_t formula_id = 0;  // ordinal of the <math> element in the body
  std::string latex;
  Expr expr;   // canonical
  ByteSpan span;  // whole <math>...</math> element within the body
};

struct Document {
  std::string id;
  std::string title;
  std::string body;
  std::vector<Formula> formulas;
  std::string plain;  // body with each math element replaced by one space

  const Formula* formula(std::uint32_t formula_id) const;
};

struct MathElement {
  ByteSpan element;
  ByteSpan content;
};

struct MathScan {
  std::vector<MathElement> elements;
  bool unterminated = false;  // a trailing <math> without </math>, left as text
};

MathScan scan_math(std::string_view body);
std::string strip_math(std::string_view body, const std::vector<MathElement>& elements);

struct IngestWarning {
  std::size_t line = 0;
  std::string doc_id;
  std::uint32_t formula_id = 0;
  std::string message;
};

class IngestError : public std::runtime_error {
 public:
  IngestError(std::size_t line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct IngestResult {
  std::vector<Document> docs;
  std::vector<IngestWarning> warnings;
  std::string corpus_hash;  // FNV-1a 64 of the raw input bytes, hex
};

/// Throws IngestError naming the 1-based line for malformed lines and
/// duplicate ids. Unparsable formulas become warnings.
IngestResult ingest(std::istream& in);
IngestResult ingest_text(std::string_view data);

/// Builds a Document from one record; `line` only labels warnings.
Document make_document(std::string id, std::string title, std::string body, std::size_t line,
                       std::vector<IngestWarning>& warnings);

struct SnapshotMeta {
  std::string format_version{kSnapshotVersion};
  std::string corpus_hash;
  std::int64_t built_at = 0;
  std::size_t docs = 0;
  std::size_t formulas = 0;
};

class SnapshotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class VersionMismatch : public SnapshotError {
 public:
  using SnapshotError::SnapshotError;
};

/// Frozen document store plus both indexes.
class Snapshot {
 public:
  Snapshot() = default;
  Snapshot(SnapshotMeta meta, std::vector<Document> docs, MathIndex math, TextIndex text);

  const SnapshotMeta& meta() const { return meta_; }
  const std::vector<Document>& docs() const { return docs_; }
  const MathIndex& math() const { return math_; }
  const TextIndex& text() const { return text_; }
  const Document* find(const std::string& doc_id) const;

 private:
  SnapshotMeta meta_;
  std::vector<Document> docs_;
  MathIndex math_;
  TextIndex text_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

/// Timestamp used for new snapshots: SOURCE_DATE_EPOCH when set, else now.
std::int64_t default_build_time();

Snapshot build_snapshot(std::vector<Document> docs, std::string corpus_hash, std::int64_t built_at);

void save_snapshot(const Snapshot& snapshot, const std::filesystem::path& dir);

/// Throws VersionMismatch for a foreign format version, SnapshotError for
/// I/O failures and inconsistent contents.
Snapshot load_snapshot(const std::filesystem::path& dir);

}  // namespace mathsearch

#endif  // MATHSEARCH_CORPUS_HPP
