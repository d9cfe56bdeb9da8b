#include "mathsearch/cli.hpp"

#include <csignal>
#include <fstream>
#include <iomanip>
#include <pthread.h>
#include <thread>

#include <CLI11.hpp>
#include <httplib.h>

#include "mathsearch/canon.hpp"
#include "mathsearch/engine.hpp"
#include "mathsearch/service.hpp"
#include "mathsearch/texparse.hpp"

namespace mathsearch {

namespace {

struct BuildArgs {
  std::string corpus;
  std::string out;
};

struct QueryArgs {
  std::string index;
  std::optional<std::string> text;
  std::optional<std::string> math;
  bool alpha = false;
  std::size_t limit = 10;
  bool json = false;
};

struct ServeArgs {
  std::string index;
  std::string listen = "127.0.0.1:8080";
  std::vector<std::string> backends;
  std::string static_dir;
};

struct ParseArgs {
  std::string latex;
  bool query = false;
};

int run_build(const BuildArgs& a, std::ostream& out, std::ostream& err) {
  std::ifstream in(a.corpus, std::ios::binary);
  if (!in) {
    err << "error: cannot open corpus " << a.corpus << "\n";
    return kExitIo;
  }
  try {
    IngestResult ingested = ingest(in);
    for (const IngestWarning& w : ingested.warnings) {
      err << "warning: line " << w.line << " doc " << w.doc_id << " formula " << w.formula_id << ": "
          << w.message << "\n";
    }
    const std::size_t warnings = ingested.warnings.size();
    Snapshot snap = build_snapshot(std::move(ingested.docs), ingested.corpus_hash, default_build_time());
    save_snapshot(snap, a.out);
    out << snap.meta().docs << " docs, " << snap.meta().formulas << " formulas, " << warnings
        << " warnings\n";
    return kExitOk;
  } catch (const IngestError& e) {
    err << "error: " << e.what() << "\n";
  } catch (const SnapshotError& e) {
    err << "error: " << e.what() << "\n";
  }
  return kExitIo;
}

std::optional<Snapshot> open_snapshot(const std::string& dir, std::ostream& err) {
  try {
    return load_snapshot(dir);
  } catch (const SnapshotError& e) {
    err << "error: " << e.what() << "\n";
    return std::nullopt;
  }
}

void print_pairs(std::ostream& out, const char* label, const LatexPairs& pairs, const char* sigil) {
  if (pairs.empty()) return;
  out << "       " << label << ":";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out << (i ? ", " : " ") << sigil << pairs[i].first << " -> " << pairs[i].second;
  }
  out << "\n";
}

void print_human(const SearchResponse& r, std::ostream& out) {
  if (r.results.empty()) {
    out << "no results\n";
    return;
  }
  for (std::size_t i = 0; i < r.results.size(); ++i) {
    const DocResult& d = r.results[i];
    out << i + 1 << ". " << d.title << " [" << d.doc_id << "]";
    if (d.text_score) out << "  text " << std::fixed << std::setprecision(4) << *d.text_score << std::defaultfloat;
    out << "\n   " << d.snippet << "\n";
    for (const RenderedHit& h : d.formula_hits) {
      out << "   - formula " << h.formula_id << " at [";
      for (std::size_t k = 0; k < h.path.size(); ++k) out << (k ? "," : "") << h.path[k];
      out << "] score " << h.score.str() << ": " << h.latex << "\n";
      out << "       source: " << h.formula_latex << "\n";
      print_pairs(out, "substitution", h.substitution, "?");
      print_pairs(out, "renaming", h.renaming, "");
    }
  }
  out << r.results.size() << " of " << r.total << " documents\n";
}

int run_query(const QueryArgs& a, std::ostream& out, std::ostream& err) {
  CombinedQuery q{a.text, a.math, a.alpha, a.limit};
  std::optional<Snapshot> snap = open_snapshot(a.index, err);
  if (!snap) return kExitIo;
  try {
    SearchResponse r = search(*snap, q);
    if (a.json) out << response_body(r);
    else print_human(r, out);
    return kExitOk;
  } catch (const QueryError& e) {
    if (a.json) out << json_body(e.to_json());
    err << "error: " << e.what() << "\n";
    if (e.parse_error() && a.math) {
      err << "  " << *a.math << "\n  " << std::string(e.parse_error()->position(), ' ') << "^\n";
    }
    return kExitBadQuery;
  }
}

bool split_listen(const std::string& listen, std::string& host, int& port) {
  std::size_t colon = listen.rfind(':');
  if (colon == std::string::npos) return false;
  host = listen.substr(0, colon);
  if (host.empty()) host = "0.0.0.0";
  try {
    std::size_t used = 0;
    port = std::stoi(listen.substr(colon + 1), &used);
    return used == listen.size() - colon - 1 && port >= 0 && port < 65536;
  } catch (const std::exception&) {
    return false;
  }
}

int run_serve(const ServeArgs& a, std::ostream& out, std::ostream& err) {
  std::string host;
  int port = 0;
  if (!split_listen(a.listen, host, port)) {
    err << "error: --listen expects host:port, got '" << a.listen << "'\n";
    return kExitBadQuery;
  }
  std::optional<Snapshot> snap = open_snapshot(a.index, err);
  if (!snap) return kExitIo;
  auto snapshot = std::make_shared<const Snapshot>(std::move(*snap));
  auto pool = std::make_shared<BackendPool>(a.backends);
  Service service(snapshot, pool);

  httplib::Server server;
  if (!service.install(server, a.static_dir)) {
    err << "error: cannot serve static directory " << a.static_dir << "\n";
    return kExitIo;
  }

  // Block the shutdown signals in every thread; one waiter thread turns
  // them into server.stop().
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  if (port == 0) {
    port = server.bind_to_any_port(host);
  } else if (!server.bind_to_port(host, port)) {
    port = -1;
  }
  if (port < 0) {
    err << "error: cannot listen on " << a.listen << "\n";
    pthread_sigmask(SIG_UNBLOCK, &signals, nullptr);
    return kExitIo;
  }
  out << "listening on http://" << host << ":" << port << " (" << snapshot->meta().docs << " docs, "
      << snapshot->meta().formulas << " formulas, " << pool->size() << " backends)" << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  const bool clean = server.listen_after_bind();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  pthread_sigmask(SIG_UNBLOCK, &signals, nullptr);
  return clean ? kExitOk : kExitIo;
}

int run_parse(const ParseArgs& a, std::ostream& out, std::ostream& err) {
  try {
    const Expr e = a.query ? parse_query(a.latex) : parse_formula(a.latex);
    const Expr c = canonicalize(e);
    out << to_json(e).dump() << "\n";
    out << "canonical: " << to_latex(c) << "\n";
    out << "canonical tree: " << to_json(c).dump() << "\n";
    return kExitOk;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    err << "  " << a.latex << "\n  " << std::string(e.position(), ' ') << "^\n";
    return kExitBadQuery;
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Combined text and formula search over wiki-style corpora", "mathsearch"};
  app.require_subcommand(1);

  BuildArgs build;
  auto* build_cmd = app.add_subcommand("build", "Ingest a JSON Lines corpus and write a snapshot");
  build_cmd->add_option("--corpus", build.corpus, "Corpus file (.jsonl)")->required();
  build_cmd->add_option("--out", build.out, "Snapshot directory")->required();

  QueryArgs query;
  auto* query_cmd = app.add_subcommand("query", "Run a combined query against a snapshot");
  query_cmd->add_option("--index", query.index, "Snapshot directory")->required();
  query_cmd->add_option("--text", query.text, "Full-text query");
  query_cmd->add_option("--math", query.math, "LaTeX pattern; ?x is a wildcard");
  query_cmd->add_flag("--alpha", query.alpha, "Match up to renaming of identifiers");
  query_cmd->add_option("--limit", query.limit, "Maximum number of documents")->check(CLI::PositiveNumber);
  query_cmd->add_flag("--json", query.json, "Print the /api/search response body");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API");
  serve_cmd->add_option("--index", serve.index, "Snapshot directory")->required();
  serve_cmd->add_option("--listen", serve.listen, "host:port (port 0 picks a free port)")->capture_default_str();
  serve_cmd->add_option("--backend", serve.backends, "Render backend base URL (repeatable)");
  serve_cmd->add_option("--static", serve.static_dir, "Directory served at /");

  ParseArgs parse;
  auto* parse_cmd = app.add_subcommand("parse", "Parse one formula and print its content tree");
  parse_cmd->add_option("--latex", parse.latex, "LaTeX source")->required();
  parse_cmd->add_flag("--query", parse.query, "Allow ?x wildcards");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitBadQuery;
  }

  if (*build_cmd) return run_build(build, out, err);
  if (*query_cmd) return run_query(query, out, err);
  if (*serve_cmd) return run_serve(serve, out, err);
  return run_parse(parse, out, err);
}

}  // namespace mathsearch
