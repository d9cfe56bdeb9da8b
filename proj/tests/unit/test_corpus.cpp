#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "corpus_fixture.hpp"
#include "generators.hpp"
#include "mathsearch/canon.hpp"
#include "mathsearch/corpus.hpp"
#include "mathsearch/engine.hpp"
#include "mathsearch/texparse.hpp"

using namespace mathsearch;
namespace fs = std::filesystem;

namespace {

std::string fnv1a64_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string line(const char* id, const char* text, const char* title = "T") {
  Json j{{"id", id}, {"title", title}, {"text", text}};
  return j.dump() + "\n";
}

void write_file(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

std::vector<std::string> snapshot_files(const fs::path& dir) {
  std::vector<std::string> out;
  for (const char* name : {"meta.json", "docs.jsonl", "mathindex.json", "textindex.json"}) {
    out.push_back(mstest::read_text(dir / name));
  }
  return out;
}

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("math elements are extracted and replaced by a space") {
    const auto r = ingest_text(line("d", "see <math>x</math> here"));
    REQUIRE(r.docs.size() == 1);
    const Document& d = r.docs[0];
    REQUIRE(d.formulas.size() == 1);
    CHECK(d.formulas[0].formula_id == 0);
    CHECK(d.formulas[0].latex == "x");
    CHECK(d.formulas[0].expr == Expr::identifier("x"));
    CHECK(d.formulas[0].span == ByteSpan{4, 18});
    CHECK(d.body.substr(4, 14) == "<math>x</math>");
    CHECK(d.plain == "see   here");
    CHECK(r.warnings.empty());
  }

  TEST_CASE("bad formulas become warnings and keep their ordinal") {
    const auto r = ingest_text(line("d", "<math>\\unknowncmd</math> and <math>a+b</math>"));
    REQUIRE(r.docs.size() == 1);
    REQUIRE(r.docs[0].formulas.size() == 1);
    CHECK(r.docs[0].formulas[0].formula_id == 1);
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0].line == 1);
    CHECK(r.warnings[0].doc_id == "d");
    CHECK(r.warnings[0].formula_id == 0);
    CHECK(r.docs[0].formula(1) != nullptr);
    CHECK(r.docs[0].formula(0) == nullptr);
  }

  TEST_CASE("unterminated math stays text") {
    const MathScan s = scan_math("a <math>x</math> b <math>y");
    CHECK(s.elements.size() == 1);
    CHECK(s.unterminated);
    const auto r = ingest_text(line("d", "a <math>y"));
    CHECK(r.docs[0].formulas.empty());
    CHECK(r.warnings.size() == 1);
    CHECK(r.docs[0].plain == "a <math>y");
  }

  TEST_CASE("malformed lines name their line number") {
    const std::string good = line("a", "x");
    try {
      ingest_text(good + "{not json\n");
      FAIL("expected IngestError");
    } catch (const IngestError& e) {
      CHECK(e.line() == 2);
      CHECK(std::string(e.what()).rfind("line 2: ", 0) == 0);
    }
    CHECK_THROWS_AS(ingest_text(good + R"({"id":"b","title":"t"})" "\n"), IngestError);
    CHECK_THROWS_AS(ingest_text(good + R"({"id":"b","title":1,"text":"x"})" "\n"), IngestError);
    try {
      ingest_text(good + line("c", "y") + good);
      FAIL("expected IngestError");
    } catch (const IngestError& e) {
      CHECK(e.line() == 3);
    }
  }

  TEST_CASE("blank lines are skipped and empty input is fine") {
    CHECK(ingest_text("").docs.empty());
    const auto r = ingest_text("\n" + line("a", "x") + "\n\n" + line("b", "y"));
    CHECK(r.docs.size() == 2);
  }

  TEST_CASE("corpus hash is FNV-1a of the raw bytes") {
    const std::string data = line("a", "x <math>y</math>");
    CHECK(ingest_text(data).corpus_hash == fnv1a64_hex(data));
    CHECK(fnv1a64_hex("") == "cbf29ce484222325");
  }

  TEST_CASE("acceptance corpus matches its manifest") {
    const auto& r = mstest::acceptance_ingest();
    const Json& m = mstest::acceptance_manifest();
    CHECK(r.docs.size() == m["docs"].get<std::size_t>());
    std::size_t formulas = 0;
    for (const auto& d : r.docs) formulas += d.formulas.size();
    CHECK(formulas == m["formulas"].get<std::size_t>());
    CHECK(r.warnings.size() == m["bad_formulas"].get<std::size_t>());
    const Snapshot& s = mstest::acceptance_snapshot();
    CHECK(s.meta().docs == r.docs.size());
    CHECK(s.meta().formulas == formulas);
    CHECK(s.math().formula_count() == formulas);
    CHECK(s.text().doc_count() == r.docs.size());

    const Document* bell = s.find(m["bell_doc"]);
    REQUIRE(bell);
    REQUIRE(bell->formulas.size() == 1);
    CHECK(bell->formulas[0].expr ==
          canonicalize(parse_formula("B_{p+n} = B_n + B_{n+1} \\bmod p \\ \\text{for all}\\ n=0,1,2,\\dots")));
    const Document* poly = s.find(m["polynomial_doc"]);
    REQUIRE(poly);
    CHECK(poly->formulas.size() == 4);
    CHECK(poly->formulas[0].latex == "p_1=ax_1^2+bx_2^2+\\epsilon_1x_1y_1");
  }

  TEST_CASE("every indexed formula resolves to its document") {
    const Snapshot& s = mstest::acceptance_snapshot();
    for (const auto& f : s.math().formulas()) {
      const Document* d = s.find(f.doc_id);
      REQUIRE(d);
      const Formula* stored = d->formula(f.formula_id);
      REQUIRE(stored);
      CHECK(stored->expr == f.expr);
      CHECK(d->body.substr(stored->span.begin, stored->span.end - stored->span.begin) ==
            "<math>" + stored->latex + "</math>");
    }
  }

  TEST_CASE("snapshot save and load round trip") {
    mstest::TempDir tmp;
    const Snapshot& s = mstest::acceptance_snapshot();
    save_snapshot(s, tmp / "a");
    const Snapshot back = load_snapshot(tmp / "a");
    CHECK(back.meta().corpus_hash == s.meta().corpus_hash);
    CHECK(back.meta().built_at == 0);
    CHECK(back.docs().size() == s.docs().size());
    save_snapshot(back, tmp / "b");
    CHECK(snapshot_files(tmp / "a") == snapshot_files(tmp / "b"));

    for (const char* math : {"B_{p+n}", "a?x^2+b?y^2+?z", "?x^2+?y^2"}) {
      for (bool alpha : {false, true}) {
        CombinedQuery q;
        q.math = math;
        q.alpha = alpha;
        Json x = to_json(search(s, q));
        Json y = to_json(search(back, q));
        x.erase("timings");
        y.erase("timings");
        CHECK(x == y);
      }
    }
  }

  TEST_CASE("rebuilding the same input is byte-identical") {
    mstest::TempDir tmp;
    const std::string data = mstest::read_text(mstest::data_file("acceptance_corpus.jsonl"));
    for (const char* name : {"a", "b"}) {
      auto r = ingest_text(data);
      save_snapshot(build_snapshot(std::move(r.docs), r.corpus_hash, 42), tmp / name);
    }
    CHECK(snapshot_files(tmp / "a") == snapshot_files(tmp / "b"));
  }

  TEST_CASE("meta.json layout") {
    mstest::TempDir tmp;
    auto r = ingest_text(line("a", "x <math>y+1</math>"));
    save_snapshot(build_snapshot(std::move(r.docs), r.corpus_hash, 7), tmp.path());
    const Json meta = Json::parse(mstest::read_text(tmp / "meta.json"));
    CHECK(meta["format_version"] == "mathsearch-snapshot/1");
    CHECK(meta["built_at"] == 7);
    CHECK(meta["docs"] == 1);
    CHECK(meta["formulas"] == 1);
  }

  TEST_CASE("broken snapshots are rejected") {
    mstest::TempDir tmp;
    CHECK_THROWS_AS(load_snapshot(tmp / "missing"), SnapshotError);

    auto r = ingest_text(line("a", "x <math>y+1</math>") + line("b", "<math>z</math>"));
    const Snapshot s = build_snapshot(std::move(r.docs), r.corpus_hash, 0);
    save_snapshot(s, tmp / "ok");
    CHECK_NOTHROW(load_snapshot(tmp / "ok"));

    fs::copy(tmp / "ok", tmp / "version");
    Json meta = Json::parse(mstest::read_text(tmp / "version" / "meta.json"));
    meta["format_version"] = "mathsearch-snapshot/0";
    write_file(tmp / "version" / "meta.json", meta.dump(2));
    CHECK_THROWS_AS(load_snapshot(tmp / "version"), VersionMismatch);

    fs::copy(tmp / "ok", tmp / "counts");
    meta = Json::parse(mstest::read_text(tmp / "counts" / "meta.json"));
    meta["formulas"] = 5;
    write_file(tmp / "counts" / "meta.json", meta.dump(2));
    CHECK_THROWS_AS(load_snapshot(tmp / "counts"), SnapshotError);

    fs::copy(tmp / "ok", tmp / "garbage");
    write_file(tmp / "garbage" / "mathindex.json", "{");
    CHECK_THROWS_AS(load_snapshot(tmp / "garbage"), SnapshotError);

    fs::copy(tmp / "ok", tmp / "nofile");
    fs::remove(tmp / "nofile" / "textindex.json");
    CHECK_THROWS_AS(load_snapshot(tmp / "nofile"), SnapshotError);

    // A stored formula that no longer agrees with the index.
    fs::copy(tmp / "ok", tmp / "tampered");
    std::string docs = mstest::read_text(tmp / "tampered" / "docs.jsonl");
    std::istringstream in(docs);
    std::string out, l;
    while (std::getline(in, l)) {
      Json d = Json::parse(l);
      for (auto& f : d["formulas"]) f["tree"] = to_json(Expr::identifier("q"));
      out += d.dump() + "\n";
    }
    write_file(tmp / "tampered" / "docs.jsonl", out);
    CHECK_THROWS_AS(load_snapshot(tmp / "tampered"), SnapshotError);
  }

  TEST_CASE("default build time honours SOURCE_DATE_EPOCH") {
    ::setenv("SOURCE_DATE_EPOCH", "1234", 1);
    CHECK(default_build_time() == 1234);
    ::unsetenv("SOURCE_DATE_EPOCH");
    CHECK(default_build_time() > 1600000000);
  }

  TEST_CASE("random corpora survive the round trip") {
    mstest::Rng rng(61);
    mstest::TempDir tmp;
    for (int i = 0; i < 5; ++i) {
      const Snapshot s = mstest::random_snapshot(rng);
      const fs::path dir = tmp / std::to_string(i);
      save_snapshot(s, dir);
      const Snapshot back = load_snapshot(dir);
      CHECK(back.math().to_json() == s.math().to_json());
      CHECK(back.text().to_json() == s.text().to_json());
    }
  }
}
