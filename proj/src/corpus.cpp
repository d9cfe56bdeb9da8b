#include "mathsearch/corpus.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mathsearch/canon.hpp"
#include "mathsearch/hash.hpp"
#include "mathsearch/texparse.hpp"

namespace mathsearch {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kOpenTag = "<math>";
constexpr std::string_view kCloseTag = "</math>";

Json formula_json(const Formula& f) {
  Json j = Json::object();
  j["id"] = f.formula_id;
  j["latex"] = f.latex;
  j["span"] = Json::array({f.span.begin, f.span.end});
  j["tree"] = to_json(f.expr);
  return j;
}

Json document_json(const Document& d) {
  Json formulas = Json::array();
  for (const Formula& f : d.formulas) formulas.push_back(formula_json(f));
  Json j = Json::object();
  j["id"] = d.id;
  j["title"] = d.title;
  j["text"] = d.body;
  j["formulas"] = std::move(formulas);
  return j;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SnapshotError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw SnapshotError("cannot write " + path.string());
  out << data;
  if (!out) throw SnapshotError("write failed for " + path.string());
}

Json parse_json_file(const fs::path& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw SnapshotError(path.filename().string() + ": " + e.what());
  }
}

}  // namespace

const Formula* Document::formula(std::uint32_t formula_id) const {
  for (const Formula& f : formulas) {
    if (f.formula_id == formula_id) return &f;
  }
  return nullptr;
}

MathScan scan_math(std::string_view body) {
  MathScan scan;
  std::size_t pos = 0;
  while (true) {
    std::size_t open = body.find(kOpenTag, pos);
    if (open == std::string_view::npos) break;
    std::size_t content = open + kOpenTag.size();
    std::size_t close = body.find(kCloseTag, content);
    if (close == std::string_view::npos) {
      scan.unterminated = true;
      break;
    }
    std::size_t end = close + kCloseTag.size();
    scan.elements.push_back({{open, end}, {content, close}});
    pos = end;
  }
  return scan;
}

std::string strip_math(std::string_view body, const std::vector<MathElement>& elements) {
  std::string out;
  out.reserve(body.size());
  std::size_t pos = 0;
  for (const MathElement& m : elements) {
    out.append(body.substr(pos, m.element.begin - pos));
    out.push_back(' ');
    pos = m.element.end;
  }
  out.append(body.substr(pos));
  return out;
}

Document make_document(std::string id, std::string title, std::string body, std::size_t line,
                       std::vector<IngestWarning>& warnings) {
  Document doc{std::move(id), std::move(title), std::move(body), {}, {}};
  const MathScan scan = scan_math(doc.body);
  auto warn = [&](std::uint32_t formula_id, std::string message) {
    warnings.push_back(IngestWarning{line, doc.id, formula_id, std::move(message)});
  };
  for (std::uint32_t i = 0; i < scan.elements.size(); ++i) {
    const MathElement& m = scan.elements[i];
    std::string latex = doc.body.substr(m.content.begin, m.content.end - m.content.begin);
    try {
      Expr expr = canonicalize(parse_formula(latex));
      if (max_commutative_arity(expr) > MathIndex::kMaxCommutativeArity) {
        warn(i, "plus/times arity exceeds " + std::to_string(MathIndex::kMaxCommutativeArity));
        continue;
      }
      doc.formulas.push_back(Formula{i, std::move(latex), std::move(expr), m.element});
    } catch (const ParseError& e) {
      warn(i, e.what());
    }
  }
  if (scan.unterminated) {
    warn(static_cast<std::uint32_t>(scan.elements.size()), "unterminated <math> element kept as text");
  }
  doc.plain = strip_math(doc.body, scan.elements);
  return doc;
}

IngestResult ingest_text(std::string_view data) {
  IngestResult result;
  result.corpus_hash = hex64(fnv1a64(data));
  std::unordered_map<std::string, std::size_t> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < data.size()) {
    std::size_t eol = data.find('\n', pos);
    if (eol == std::string_view::npos) eol = data.size();
    std::string_view line = data.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    Json rec;
    try {
      rec = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw IngestError(line_no, std::string("malformed JSON: ") + e.what());
    }
    auto field = [&](const char* name) {
      if (!rec.is_object() || !rec.contains(name) || !rec[name].is_string()) {
        throw IngestError(line_no, std::string("missing string field '") + name + "'");
      }
      return rec[name].get<std::string>();
    };
    std::string id = field("id");
    std::string title = field("title");
    std::string text = field("text");
    if (id.empty()) throw IngestError(line_no, "empty document id");
    if (auto [it, fresh] = seen.emplace(id, line_no); !fresh) {
      throw IngestError(line_no, "duplicate document id '" + id + "' (first on line " +
                                     std::to_string(it->second) + ")");
    }
    result.docs.push_back(
        make_document(std::move(id), std::move(title), std::move(text), line_no, result.warnings));
  }
  return result;
}

IngestResult ingest(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return ingest_text(ss.str());
}

Snapshot::Snapshot(SnapshotMeta meta, std::vector<Document> docs, MathIndex math, TextIndex text)
    : meta_(std::move(meta)), docs_(std::move(docs)), math_(std::move(math)), text_(std::move(text)) {
  for (std::size_t i = 0; i < docs_.size(); ++i) by_id_.emplace(docs_[i].id, i);
}

const Document* Snapshot::find(const std::string& doc_id) const {
  auto it = by_id_.find(doc_id);
  return it == by_id_.end() ? nullptr : &docs_[it->second];
}

std::int64_t default_build_time() {
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    char* end = nullptr;
    long long v = std::strtoll(epoch, &end, 10);
    if (end && *end == '\0' && end != epoch) return v;
  }
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

Snapshot build_snapshot(std::vector<Document> docs, std::string corpus_hash, std::int64_t built_at) {
  MathIndex math;
  TextIndex text;
  std::size_t formulas = 0;
  for (const Document& d : docs) {
    text.add_document(d.id, d.plain);
    for (const Formula& f : d.formulas) {
      if (math.insert(f.expr, d.id, f.formula_id)) ++formulas;
    }
  }
  SnapshotMeta meta;
  meta.corpus_hash = std::move(corpus_hash);
  meta.built_at = built_at;
  meta.docs = docs.size();
  meta.formulas = formulas;
  return Snapshot(std::move(meta), std::move(docs), std::move(math), std::move(text));
}

void save_snapshot(const Snapshot& snapshot, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw SnapshotError("cannot create " + dir.string() + ": " + ec.message());

  const SnapshotMeta& m = snapshot.meta();
  Json meta = Json::object();
  meta["format_version"] = m.format_version;
  meta["corpus_hash"] = m.corpus_hash;
  meta["built_at"] = m.built_at;
  meta["docs"] = m.docs;
  meta["formulas"] = m.formulas;
  write_file(dir / "meta.json", meta.dump(2) + "\n");

  std::string docs;
  for (const Document& d : snapshot.docs()) docs += document_json(d).dump() + "\n";
  write_file(dir / "docs.jsonl", docs);

  write_file(dir / "mathindex.json", snapshot.math().to_json().dump() + "\n");
  write_file(dir / "textindex.json", snapshot.text().to_json().dump() + "\n");
}

Snapshot load_snapshot(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw SnapshotError("snapshot directory not found: " + dir.string());
  const Json meta_json = parse_json_file(dir / "meta.json");
  SnapshotMeta meta;
  try {
    meta.format_version = meta_json.at("format_version").get<std::string>();
    if (meta.format_version != kSnapshotVersion) {
      throw VersionMismatch("snapshot version '" + meta.format_version + "' is not '" +
                            std::string(kSnapshotVersion) + "'");
    }
    meta.corpus_hash = meta_json.at("corpus_hash").get<std::string>();
    meta.built_at = meta_json.at("built_at").get<std::int64_t>();
    meta.docs = meta_json.at("docs").get<std::size_t>();
    meta.formulas = meta_json.at("formulas").get<std::size_t>();
  } catch (const Json::exception& e) {
    throw SnapshotError(std::string("meta.json: ") + e.what());
  }

  std::vector<Document> docs;
  {
    const std::string data = read_file(dir / "docs.jsonl");
    std::istringstream lines(data);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        const Json j = Json::parse(line);
        Document d{j.at("id").get<std::string>(), j.at("title").get<std::string>(),
                   j.at("text").get<std::string>(), {}, {}};
        for (const Json& f : j.at("formulas")) {
          d.formulas.push_back(Formula{f.at("id").get<std::uint32_t>(), f.at("latex").get<std::string>(),
                                       expr_from_json(f.at("tree")),
                                       ByteSpan{f.at("span").at(0).get<std::size_t>(),
                                                f.at("span").at(1).get<std::size_t>()}});
        }
        d.plain = strip_math(d.body, scan_math(d.body).elements);
        docs.push_back(std::move(d));
      } catch (const std::exception& e) {
        throw SnapshotError("docs.jsonl line " + std::to_string(line_no) + ": " + e.what());
      }
    }
  }

  MathIndex math;
  TextIndex text;
  try {
    math = MathIndex::from_json(parse_json_file(dir / "mathindex.json"));
    text = TextIndex::from_json(parse_json_file(dir / "textindex.json"));
  } catch (const std::invalid_argument& e) {
    throw SnapshotError(e.what());
  }

  if (docs.size() != meta.docs || text.doc_count() != meta.docs ||
      math.formula_count() != meta.formulas) {
    throw SnapshotError("snapshot counts disagree with meta.json");
  }
  Snapshot snap(std::move(meta), std::move(docs), std::move(math), std::move(text));
  for (const IndexedFormula& f : snap.math().formulas()) {
    const Document* d = snap.find(f.doc_id);
    const Formula* stored = d ? d->formula(f.formula_id) : nullptr;
    if (!stored || !(stored->expr == f.expr)) {
      throw SnapshotError("indexed formula " + f.doc_id + "#" + std::to_string(f.formula_id) +
                          " does not resolve to a stored document formula");
    }
  }
  return snap;
}

}  // namespace mathsearch
