#pragma once

// HTTP/JSON service: compile, generate and validate endpoints plus a
// file-backed store of named constraints. The constraint always travels in
// its own request field and is never spliced into the prompt.
//
// Request handling is exposed as Service::handle() so it can be exercised
// without sockets; mount() binds the same handlers to an httplib::Server.
// Endpoint reference: docs/api.md.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "constraintsmith/automaton.hpp"
#include "constraintsmith/constraint_model.hpp"
#include "constraintsmith/decoder.hpp"
#include "constraintsmith/errors.hpp"
#include "constraintsmith/hash.hpp"
#include "constraintsmith/regex_compiler.hpp"
#include "constraintsmith/remote_scorer.hpp"
#include "constraintsmith/token_index.hpp"
#include "constraintsmith/vocabulary.hpp"

namespace constraintsmith {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

enum class ScorerKind { Uniform, Echo, Remote };

struct ScorerConfig {
  ScorerKind kind = ScorerKind::Uniform;
  std::string script_file;  // Echo: text replayed through the vocabulary
  RemoteScorerConfig remote;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string vocab_path;   // empty = bundled test vocabulary
  std::string store_dir = "constraint-store";
  std::size_t state_cap = 100'000;
  DecodeParams decode;
  ScorerConfig scorer;
  std::string cors_origin = "*";
  std::size_t cache_capacity = 64;
};

namespace detail {

inline void parse_listen(ServiceConfig& c, const std::string& listen) {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) throw Error("ConfigError", "listen must be host:port");
  c.host = listen.substr(0, colon);
  try {
    c.port = std::stoi(listen.substr(colon + 1));
  } catch (const std::exception&) {
    throw Error("ConfigError", "bad port in listen address \"" + listen + "\"");
  }
}

inline DecodeParams parse_decode_params(const json& j, DecodeParams base) {
  if (!j.is_object()) throw Error("BadRequest", "params must be an object");
  for (const auto& [k, v] : j.items()) {
    if (k == "mode") {
      const auto m = v.is_string() ? v.get<std::string>() : std::string();
      if (m == "greedy") {
        base.mode = DecodeMode::Greedy;
      } else if (m == "sample") {
        base.mode = DecodeMode::Sample;
      } else {
        throw Error("BadRequest", "params.mode must be \"greedy\" or \"sample\"");
      }
    } else if (k == "seed") {
      if (!v.is_number_integer()) throw Error("BadRequest", "params.seed must be an integer");
      base.seed = v.is_number_unsigned() ? v.get<std::uint64_t>()
                                         : static_cast<std::uint64_t>(v.get<std::int64_t>());
    } else if (k == "max_tokens") {
      if (!v.is_number_integer() || v.get<std::int64_t>() < 1) {
        throw Error("BadRequest", "params.max_tokens must be an integer >= 1");
      }
      base.max_tokens = v.get<std::size_t>();
    } else if (k == "eos_bias") {
      if (!v.is_number() || v.get<double>() < 0) {
        throw Error("BadRequest", "params.eos_bias must be a number >= 0");
      }
      base.eos_bias = v.get<double>();
    } else {
      throw Error("BadRequest", "unknown params key \"" + k + "\"");
    }
  }
  return base;
}

}  // namespace detail

// Reads a JSON config file (may be empty path) and applies the CSMITH_LISTEN,
// CSMITH_VOCAB and CSMITH_STORE environment overrides.
inline ServiceConfig load_service_config(const std::string& path) {
  ServiceConfig c;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw Error("ConfigError", "cannot open config file " + path);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw Error("ConfigError", std::string("malformed config: ") + e.what());
    }
    if (j.contains("listen")) detail::parse_listen(c, j["listen"].get<std::string>());
    if (j.contains("vocab")) c.vocab_path = j["vocab"].get<std::string>();
    if (j.contains("store")) c.store_dir = j["store"].get<std::string>();
    if (j.contains("state_cap")) c.state_cap = j["state_cap"].get<std::size_t>();
    if (j.contains("cors_origin")) c.cors_origin = j["cors_origin"].get<std::string>();
    if (j.contains("decode")) c.decode = detail::parse_decode_params(j["decode"], c.decode);
    if (j.contains("scorer")) {
      const auto& s = j["scorer"];
      const auto kind = s.value("kind", std::string("uniform"));
      if (kind == "uniform") {
        c.scorer.kind = ScorerKind::Uniform;
      } else if (kind == "echo") {
        c.scorer.kind = ScorerKind::Echo;
        c.scorer.script_file = s.at("script").get<std::string>();
      } else if (kind == "remote") {
        c.scorer.kind = ScorerKind::Remote;
        c.scorer.remote.base_url = s.at("url").get<std::string>();
        c.scorer.remote.path = s.value("path", std::string("/score"));
        c.scorer.remote.timeout_ms = s.value("timeout_ms", 30'000);
      } else {
        throw Error("ConfigError", "unknown scorer kind \"" + kind + "\"");
      }
    }
  }
  if (const char* v = std::getenv("CSMITH_LISTEN"); v && *v) detail::parse_listen(c, v);
  if (const char* v = std::getenv("CSMITH_VOCAB"); v && *v) c.vocab_path = v;
  if (const char* v = std::getenv("CSMITH_STORE"); v && *v) c.store_dir = v;
  return c;
}

// ---------------------------------------------------------------------------
// Compiled artifacts and their cache

struct CompiledArtifact {
  std::string pattern;
  Automaton automaton;
  std::shared_ptr<const TokenIndex> index;
};

inline std::uint64_t pattern_hash(std::string_view pattern) { return fnv1a64(pattern); }

// LRU map from (pattern hash, vocabulary hash) to compiled artifacts.
class IndexCache {
 public:
  explicit IndexCache(std::size_t capacity) : capacity_(capacity) {}

  std::shared_ptr<const CompiledArtifact> find(const std::string& key) {
    std::lock_guard lock(mutex_);
    auto it = map_.find(key);
    if (it == map_.end()) return nullptr;
    order_.splice(order_.begin(), order_, it->second.position);
    return it->second.value;
  }

  void insert(const std::string& key, std::shared_ptr<const CompiledArtifact> value) {
    std::lock_guard lock(mutex_);
    if (auto it = map_.find(key); it != map_.end()) {
      order_.splice(order_.begin(), order_, it->second.position);
      return;
    }
    order_.push_front(key);
    map_.emplace(key, Slot{std::move(value), order_.begin()});
    while (map_.size() > capacity_) {
      map_.erase(order_.back());
      order_.pop_back();
    }
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return map_.size();
  }

 private:
  struct Slot {
    std::shared_ptr<const CompiledArtifact> value;
    std::list<std::string>::iterator position;
  };

  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::list<std::string> order_;
  std::unordered_map<std::string, Slot> map_;
};

// ---------------------------------------------------------------------------
// Constraint store

struct StoreEntry {
  std::string name;
  std::string pattern_hash;
  std::string created;
  std::string modified;
};

class StoreError : public Error {
 public:
  StoreError(int status, std::string kind, const std::string& message)
      : Error(std::move(kind), message), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

namespace detail {

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file_atomic(const fs::path& p, const std::string& content) {
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("StoreError", "cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, p);
}

inline std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace detail

// A stored constraint document is either a canonical spec (see
// serialize_spec) or {"name"?, "pattern"} for a manually written regex.
inline CompiledConstraint compile_document(const json& doc) {
  if (doc.is_object() && doc.contains("pattern") && !doc.contains("primitives")) {
    for (const auto& [k, v] : doc.items()) {
      if (k != "pattern" && k != "name") throw SpecParseError("/" + k, "unknown key \"" + k + "\"");
    }
    if (!doc["pattern"].is_string()) throw SpecParseError("/pattern", "expected a string");
    return parse_manual_regex(doc["pattern"].get<std::string>());
  }
  return compile_spec(spec_from_json(doc));
}

inline std::string canonical_document(const json& doc) {
  if (doc.is_object() && doc.contains("pattern") && !doc.contains("primitives")) {
    auto compiled = compile_document(doc);
    ordered_json out;
    if (doc.contains("name")) out["name"] = doc["name"];
    out["pattern"] = compiled.pattern;
    return out.dump(2) + "\n";
  }
  return serialize_spec(spec_from_json(doc));
}

class ConstraintStore {
 public:
  explicit ConstraintStore(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  static bool valid_name(const std::string& name) {
    static const std::regex re("[A-Za-z0-9_-]{1,64}");
    return std::regex_match(name, re);
  }

  // Returns true when a new entry was created. Throws StoreError (400 bad
  // name or body, 409 case-insensitive clash) or spec/regex errors.
  bool put(const std::string& name, std::string_view body) {
    check_name(name);
    json doc;
    try {
      doc = json::parse(body);
    } catch (const json::parse_error& e) {
      throw SpecParseError("", std::string("malformed JSON: ") + e.what(), e.byte);
    }
    if (doc.is_object() && doc.contains("name") &&
        (!doc["name"].is_string() || doc["name"].get<std::string>() != name)) {
      throw StoreError(400, "NameMismatch", "document name does not match \"" + name + "\"");
    }
    const std::string canonical = canonical_document(doc);
    const std::string hash = hex64(pattern_hash(compile_document(json::parse(canonical)).pattern));

    std::lock_guard lock(mutex_);
    for (const auto& existing : names_locked()) {
      if (existing != name && detail::lower(existing) == detail::lower(name)) {
        throw StoreError(409, "NameConflict",
                         "\"" + name + "\" differs only in case from stored \"" + existing + "\"");
      }
    }
    const bool created = !fs::exists(doc_path(name));
    json meta;
    const auto now = detail::utc_timestamp();
    meta["created"] = created ? now : read_meta_locked(name).value("created", now);
    meta["modified"] = now;
    meta["pattern_hash"] = hash;
    detail::write_file_atomic(doc_path(name), canonical);
    detail::write_file_atomic(meta_path(name), meta.dump(2) + "\n");
    return created;
  }

  std::optional<std::string> get(const std::string& name) const {
    if (!valid_name(name)) return std::nullopt;
    std::lock_guard lock(mutex_);
    if (!fs::exists(doc_path(name))) return std::nullopt;
    return detail::read_file(doc_path(name));
  }

  bool remove(const std::string& name) {
    if (!valid_name(name)) return false;
    std::lock_guard lock(mutex_);
    if (!fs::exists(doc_path(name))) return false;
    fs::remove(doc_path(name));
    fs::remove(meta_path(name));
    return true;
  }

  // Sorted by name (byte-wise lexicographic).
  std::vector<StoreEntry> list() const {
    std::lock_guard lock(mutex_);
    std::vector<StoreEntry> out;
    for (const auto& name : names_locked()) {
      const json meta = read_meta_locked(name);
      out.push_back({name, meta.value("pattern_hash", std::string()),
                     meta.value("created", std::string()), meta.value("modified", std::string())});
    }
    return out;
  }

  const fs::path& directory() const noexcept { return dir_; }

 private:
  static void check_name(const std::string& name) {
    if (!valid_name(name)) {
      throw StoreError(400, "BadName", "constraint names are 1-64 characters of [A-Za-z0-9_-]");
    }
  }

  fs::path doc_path(const std::string& name) const { return dir_ / (name + ".json"); }
  fs::path meta_path(const std::string& name) const { return dir_ / (name + ".meta"); }

  std::vector<std::string> names_locked() const {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir_)) {
      if (!e.is_regular_file() || e.path().extension() != ".json") continue;
      auto stem = e.path().stem().string();
      if (valid_name(stem)) names.push_back(std::move(stem));
    }
    std::sort(names.begin(), names.end());
    return names;
  }

  json read_meta_locked(const std::string& name) const {
    if (!fs::exists(meta_path(name))) return json::object();
    try {
      return json::parse(detail::read_file(meta_path(name)));
    } catch (const json::parse_error&) {
      return json::object();
    }
  }

  fs::path dir_;
  mutable std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Service

struct HttpResponse {
  int status = 200;
  std::string body;  // JSON unless content_type says otherwise
  std::string content_type = "application/json";
};

class Service {
 public:
  explicit Service(ServiceConfig config)
      : config_(std::move(config)),
        vocab_(std::make_shared<const Vocabulary>(config_.vocab_path.empty()
                                                      ? bundled_test_vocabulary()
                                                      : Vocabulary::load(config_.vocab_path))),
        vocab_hash_(vocab_->hash()),
        store_(config_.store_dir),
        cache_(config_.cache_capacity) {
    if (config_.scorer.kind == ScorerKind::Echo) {
      echo_script_ = vocab_->encode(detail::read_file(config_.scorer.script_file));
    }
  }

  const ServiceConfig& config() const noexcept { return config_; }
  const Vocabulary& vocabulary() const noexcept { return *vocab_; }
  ConstraintStore& store() noexcept { return store_; }
  IndexCache& cache() noexcept { return cache_; }

  HttpResponse handle(const std::string& method, const std::string& path,
                      const std::string& body) {
    try {
      if (method == "POST" && path == "/v1/compile") return compile(parse_body(body));
      if (method == "POST" && path == "/v1/generate") return generate(parse_body(body));
      if (method == "POST" && path == "/v1/validate") return validate(parse_body(body));
      if (method == "GET" && path == "/v1/constraints") return list_constraints();
      static const std::string prefix = "/v1/constraints/";
      if (path.starts_with(prefix)) {
        const std::string name = path.substr(prefix.size());
        if (method == "PUT") return put_constraint(name, body);
        if (method == "GET") return get_constraint(name);
        if (method == "DELETE") return delete_constraint(name);
      }
      return error(404, "NotFound", "no route for " + method + " " + path);
    } catch (const StoreError& e) {
      return error(e.status(), e.kind(), e.what());
    } catch (const InvalidSpec& e) {
      json j = error_json(e.kind(), e.what());
      for (const auto& v : e.violations()) {
        j["error"]["violations"].push_back({{"path", v.path}, {"message", v.message}});
      }
      return {400, j.dump()};
    } catch (const SpecParseError& e) {
      json j = error_json(e.kind(), e.what());
      j["error"]["path"] = e.path();
      if (e.byte_offset() != SpecParseError::npos) j["error"]["offset"] = e.byte_offset();
      return {400, j.dump()};
    } catch (const UnsupportedFeature& e) {
      json j = error_json(e.kind(), e.what());
      j["error"]["feature"] = e.feature();
      j["error"]["offset"] = e.offset();
      return {400, j.dump()};
    } catch (const RegexSyntaxError& e) {
      json j = error_json(e.kind(), e.what());
      j["error"]["offset"] = e.offset();
      return {400, j.dump()};
    } catch (const ComplexityLimit& e) {
      return error(422, e.kind(), e.what());
    } catch (const ScorerError& e) {
      json j = error_json(e.kind(), e.what());
      j["error"]["step"] = e.step();
      return {502, j.dump()};
    } catch (const Error& e) {
      return error(400, e.kind(), e.what());
    } catch (const std::exception& e) {
      return error(500, "InternalError", e.what());
    }
  }

  // Registers every route, plus CORS preflight handling.
  void mount(httplib::Server& server) {
    auto bind = [this](const char* method) {
      return [this, method](const httplib::Request& req, httplib::Response& res) {
        auto out = handle(method, req.path, req.body);
        res.status = out.status;
        res.set_content(out.body, out.content_type);
      };
    };
    server.Post("/v1/compile", bind("POST"));
    server.Post("/v1/generate", bind("POST"));
    server.Post("/v1/validate", bind("POST"));
    server.Get("/v1/constraints", bind("GET"));
    server.Put(R"(/v1/constraints/[^/]+)", bind("PUT"));
    server.Get(R"(/v1/constraints/[^/]+)", bind("GET"));
    server.Delete(R"(/v1/constraints/[^/]+)", bind("DELETE"));
    server.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.status = 204;
    });
    const std::string origin = config_.cors_origin;
    server.set_default_headers({
        {"Access-Control-Allow-Origin", origin},
        {"Access-Control-Allow-Methods", "GET, POST, PUT, DELETE, OPTIONS"},
        {"Access-Control-Allow-Headers", "Content-Type"},
    });
  }

  // Compiles (or fetches from cache) the artifact for a constraint.
  std::pair<std::shared_ptr<const CompiledArtifact>, bool> artifact_for(
      const CompiledConstraint& compiled) {
    const std::string key = hex64(pattern_hash(compiled.pattern)) + ":" + hex64(vocab_hash_);
    if (auto hit = cache_.find(key)) return {hit, true};
    auto automaton = build_dfa(compiled.ast, {config_.state_cap, true});
    auto index = std::make_shared<const TokenIndex>(build_index(automaton, vocab_));
    auto artifact = std::make_shared<const CompiledArtifact>(
        CompiledArtifact{compiled.pattern, std::move(automaton), std::move(index)});
    cache_.insert(key, artifact);
    return {artifact, false};
  }

 private:
  static json parse_body(const std::string& body) {
    try {
      auto j = json::parse(body);
      if (!j.is_object()) throw Error("BadRequest", "request body must be a JSON object");
      return j;
    } catch (const json::parse_error& e) {
      throw Error("BadRequest", std::string("malformed JSON body: ") + e.what());
    }
  }

  static json error_json(const std::string& kind, const std::string& message) {
    json j;
    j["error"]["kind"] = kind;
    j["error"]["message"] = message;
    return j;
  }

  static HttpResponse error(int status, const std::string& kind, const std::string& message) {
    return {status, error_json(kind, message).dump()};
  }

  // Exactly one of `constraints`, `pattern` and (when allowed) `stored_name`.
  CompiledConstraint resolve(const json& req, bool allow_stored) {
    const bool has_c = req.contains("constraints");
    const bool has_p = req.contains("pattern");
    const bool has_s = allow_stored && req.contains("stored_name");
    if (int(has_c) + int(has_p) + int(has_s) != 1) {
      throw Error("BadRequest", allow_stored
                                    ? "supply exactly one of constraints, pattern, stored_name"
                                    : "supply exactly one of constraints, pattern");
    }
    if (has_c) return compile_spec(spec_from_json(req["constraints"]));
    if (has_p) {
      if (!req["pattern"].is_string()) throw Error("BadRequest", "pattern must be a string");
      return parse_manual_regex(req["pattern"].get<std::string>());
    }
    if (!req["stored_name"].is_string()) throw Error("BadRequest", "stored_name must be a string");
    const auto name = req["stored_name"].get<std::string>();
    auto doc = store_.get(name);
    if (!doc) throw StoreError(404, "NotFound", "no stored constraint named \"" + name + "\"");
    return compile_document(json::parse(*doc));
  }

  HttpResponse compile(const json& req) {
    const auto compiled = resolve(req, false);
    const auto [artifact, cached] = artifact_for(compiled);
    json out;
    out["pattern"] = compiled.pattern;
    out["state_count"] = artifact->automaton.state_count();
    out["token_index_cached"] = cached;
    return {200, out.dump()};
  }

  HttpResponse generate(const json& req) {
    if (!req.contains("prompt") || !req["prompt"].is_string()) {
      throw Error("BadRequest", "prompt must be a string");
    }
    const auto compiled = resolve(req, true);
    DecodeParams params = config_.decode;
    if (req.contains("params")) params = detail::parse_decode_params(req["params"], params);
    const auto [artifact, cached] = artifact_for(compiled);
    const auto prompt = req["prompt"].get<std::string>();

    GenerationResult result;
    switch (config_.scorer.kind) {
      case ScorerKind::Uniform:
        result = constraintsmith::generate(prompt, *artifact->index, UniformScorer{}, params);
        break;
      case ScorerKind::Echo:
        result = constraintsmith::generate(prompt, *artifact->index, EchoScorer(echo_script_),
                                           params);
        break;
      case ScorerKind::Remote:
        result = constraintsmith::generate(prompt, *artifact->index,
                                           RemoteScorer(config_.scorer.remote), params);
        break;
    }
    json out;
    out["text"] = result.text;
    out["finish"] = std::string(finish_name(result.finish));
    out["steps"] = result.steps;
    out["pattern"] = compiled.pattern;
    if (!result.succeeded()) {
      out["error"]["kind"] = "CompletionFailure";
      out["error"]["message"] = result.diagnostic;
      return {422, out.dump()};
    }
    return {200, out.dump()};
  }

  HttpResponse validate(const json& req) {
    if (!req.contains("text") || !req["text"].is_string()) {
      throw Error("BadRequest", "text must be a string");
    }
    const auto compiled = resolve(req, true);
    const auto [artifact, cached] = artifact_for(compiled);
    const auto reject = first_reject_offset(artifact->automaton, req["text"].get<std::string>());
    json out;
    out["valid"] = !reject.has_value();
    if (reject) out["first_reject_offset"] = *reject;
    return {200, out.dump()};
  }

  HttpResponse put_constraint(const std::string& name, const std::string& body) {
    const bool created = store_.put(name, body);
    return {created ? 201 : 200, *store_.get(name)};
  }

  HttpResponse get_constraint(const std::string& name) {
    auto doc = store_.get(name);
    if (!doc) return error(404, "NotFound", "no stored constraint named \"" + name + "\"");
    return {200, *doc};
  }

  HttpResponse delete_constraint(const std::string& name) {
    if (!store_.remove(name)) {
      return error(404, "NotFound", "no stored constraint named \"" + name + "\"");
    }
    return {204, ""};
  }

  HttpResponse list_constraints() {
    json out = json::array();
    for (const auto& e : store_.list()) {
      out.push_back({{"name", e.name},
                     {"pattern_hash", e.pattern_hash},
                     {"created", e.created},
                     {"modified", e.modified}});
    }
    return {200, out.dump()};
  }

  ServiceConfig config_;
  std::shared_ptr<const Vocabulary> vocab_;
  std::uint64_t vocab_hash_;
  ConstraintStore store_;
  IndexCache cache_;
  std::vector<TokenId> echo_script_;
};

}  // namespace constraintsmith
