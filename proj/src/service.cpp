#include "mathsearch/service.hpp"

#include <httplib.h>

#include "mathsearch/canon.hpp"
#include "mathsearch/engine.hpp"
#include "mathsearch/texparse.hpp"

namespace mathsearch {

namespace {

HttpReply json_reply(int status, const Json& j) { return HttpReply{status, json_body(j), "application/json"}; }

HttpReply bad_request(const std::string& message) {
  Json err = Json::object();
  err["kind"] = "bad-request";
  err["message"] = message;
  Json j = Json::object();
  j["ok"] = false;
  j["error"] = std::move(err);
  return json_reply(400, j);
}

bool truthy(const Json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number()) return v.get<double>() != 0;
  if (v.is_string()) return v.get<std::string>() == "1" || v.get<std::string>() == "true";
  return false;
}

struct RenderRequest {
  std::string latex;
  bool query = false;
};

// nullopt plus a message when the body is not a render request.
std::optional<RenderRequest> parse_render_request(const std::string& body, std::string& problem) {
  Json j = Json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    problem = "body must be a JSON object";
    return std::nullopt;
  }
  if (!j.contains("latex") || !j["latex"].is_string()) {
    problem = "field 'latex' must be a string";
    return std::nullopt;
  }
  RenderRequest r{j["latex"].get<std::string>(), j.contains("query") && truthy(j["query"])};
  return r;
}

void split_url(const std::string& url, std::string& origin, std::string& prefix) {
  std::size_t scheme = url.find("://");
  std::size_t slash = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  origin = url.substr(0, slash);
  prefix = slash == std::string::npos ? "" : url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
}

}  // namespace

RenderTransport http_transport(std::chrono::milliseconds timeout) {
  return [timeout](const std::string& url, const std::string& body) -> std::optional<HttpReply> {
    std::string origin, prefix;
    split_url(url, origin, prefix);
    httplib::Client client(origin);
    if (!client.is_valid()) return std::nullopt;
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    auto res = client.Post(prefix + "/api/render", body, "application/json");
    if (!res) return std::nullopt;
    std::string type = res->get_header_value("Content-Type");
    return HttpReply{res->status, res->body, type.empty() ? "application/json" : type};
  };
}

BackendPool::BackendPool(std::vector<std::string> urls, RenderTransport transport, Clock clock,
                         std::size_t threshold, std::chrono::steady_clock::duration cooldown)
    : transport_(std::move(transport)), clock_(std::move(clock)), threshold_(threshold), cooldown_(cooldown) {
  for (std::string& u : urls) backends_.push_back(Backend{std::move(u), 0, {}});
}

bool BackendPool::healthy_locked(const Backend& b, std::chrono::steady_clock::time_point now) const {
  return b.failures < threshold_ || now - b.last_failure >= cooldown_;
}

std::optional<HttpReply> BackendPool::dispatch(const std::string& body) {
  const std::size_t n = backends_.size();
  if (n == 0) return std::nullopt;
  std::size_t start;
  {
    std::lock_guard lock(mu_);
    start = cursor_;
    cursor_ = (cursor_ + 1) % n;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t idx = (start + i) % n;
    std::string url;
    {
      std::lock_guard lock(mu_);
      if (!healthy_locked(backends_[idx], clock_())) continue;
      url = backends_[idx].url;
    }
    std::optional<HttpReply> reply = transport_(url, body);
    const bool failed = !reply || reply->status >= 500;
    {
      std::lock_guard lock(mu_);
      Backend& b = backends_[idx];
      if (failed) {
        ++b.failures;
        b.last_failure = clock_();
      } else {
        b.failures = 0;
      }
    }
    if (!failed) return reply;
  }
  return std::nullopt;
}

std::vector<BackendStatus> BackendPool::status() const {
  std::lock_guard lock(mu_);
  const auto now = clock_();
  std::vector<BackendStatus> out;
  for (const Backend& b : backends_) out.push_back(BackendStatus{b.url, healthy_locked(b, now), b.failures});
  return out;
}

HttpReply render_locally(const std::string& body) {
  std::string problem;
  std::optional<RenderRequest> req = parse_render_request(body, problem);
  if (!req) return bad_request(problem);
  try {
    const Expr parsed = req->query ? parse_query(req->latex) : parse_formula(req->latex);
    const Expr canonical = canonicalize(parsed);
    Json j = Json::object();
    j["ok"] = true;
    j["tree"] = to_json(canonical);
    j["canonical_latex"] = to_latex(canonical);
    return json_reply(200, j);
  } catch (const ParseError& e) {
    Json j = Json::object();
    j["ok"] = false;
    j["error"] = e.to_json();
    return json_reply(422, j);
  }
}

Service::Service(std::shared_ptr<const Snapshot> snapshot, std::shared_ptr<BackendPool> pool)
    : snapshot_(std::move(snapshot)), pool_(std::move(pool)) {
  if (!pool_) pool_ = std::make_shared<BackendPool>(std::vector<std::string>{});
}

HttpReply Service::render(const std::string& body) {
  std::string problem;
  if (!parse_render_request(body, problem)) return bad_request(problem);
  if (pool_->size() > 0) {
    if (std::optional<HttpReply> relayed = pool_->dispatch(body)) return *relayed;
  }
  return render_locally(body);
}

HttpReply Service::search(const std::string& body) const {
  Json j = Json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return bad_request("body must be a JSON object");

  CombinedQuery q;
  for (const char* field : {"text", "math"}) {
    if (!j.contains(field) || j[field].is_null()) continue;
    if (!j[field].is_string()) return bad_request(std::string("field '") + field + "' must be a string");
    (field[0] == 't' ? q.text : q.math) = j[field].get<std::string>();
  }
  if (j.contains("alpha") && !j["alpha"].is_null()) {
    if (!j["alpha"].is_boolean()) return bad_request("field 'alpha' must be a boolean");
    q.alpha = j["alpha"].get<bool>();
  }
  if (j.contains("limit") && !j["limit"].is_null()) {
    const Json& l = j["limit"];
    if (!l.is_number_integer() || l.get<std::int64_t>() <= 0) {
      return bad_request("field 'limit' must be a positive integer");
    }
    q.limit = static_cast<std::size_t>(l.get<std::int64_t>());
  }

  try {
    return HttpReply{200, response_body(mathsearch::search(*snapshot_, q)), "application/json"};
  } catch (const QueryError& e) {
    return json_reply(e.kind() == QueryErrorKind::MathParse ? 422 : 400, e.to_json());
  }
}

HttpReply Service::healthz() const {
  Json backends = Json::array();
  for (const BackendStatus& s : pool_->status()) {
    Json b = Json::object();
    b["url"] = s.url;
    b["healthy"] = s.healthy;
    backends.push_back(std::move(b));
  }
  Json j = Json::object();
  j["status"] = "ok";
  j["docs"] = snapshot_->meta().docs;
  j["formulas"] = snapshot_->meta().formulas;
  j["backends"] = std::move(backends);
  return json_reply(200, j);
}

bool Service::install(httplib::Server& server, const std::string& static_dir) {
  auto send = [](httplib::Response& res, const HttpReply& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  server.Post("/api/render", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, render(req.body));
  });
  server.Post("/api/search", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, search(req.body));
  });
  server.Get("/healthz", [this, send](const httplib::Request&, httplib::Response& res) { send(res, healthz()); });
  if (!static_dir.empty()) return server.set_mount_point("/", static_dir);
  return true;
}

}  // namespace mathsearch
