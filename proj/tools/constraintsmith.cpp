// constraintsmith command-line front end: compile, generate, validate, serve.
//
// Exit codes: 0 success, 1 invalid input (or a non-matching validate),
// 2 completion failure or scorer error.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "constraintsmith/service.hpp"

namespace cs = constraintsmith;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kFailed = 2;

struct Source {
  std::string constraints_file;
  std::string pattern;
  bool have_pattern = false;
};

void add_source(CLI::App* cmd, Source& src) {
  auto* c = cmd->add_option("--constraints", src.constraints_file, "Constraint spec JSON file");
  auto* p = cmd->add_option("--pattern", src.pattern, "Regex in the supported dialect");
  c->excludes(p);
  p->excludes(c);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cs::Error("IoError", "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

cs::CompiledConstraint resolve(const Source& src) {
  if (!src.constraints_file.empty()) {
    const auto text = slurp(src.constraints_file);
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw cs::SpecParseError("", std::string("malformed JSON: ") + e.what(), e.byte);
    }
    return cs::compile_document(doc);
  }
  if (src.have_pattern) return cs::parse_manual_regex(src.pattern);
  throw cs::Error("BadRequest", "supply --constraints FILE or --pattern STR");
}

std::shared_ptr<const cs::Vocabulary> load_vocab(const std::string& path) {
  return std::make_shared<const cs::Vocabulary>(path.empty() ? cs::bundled_test_vocabulary()
                                                             : cs::Vocabulary::load(path));
}

void report(const cs::Error& e) {
  std::cerr << e.kind() << ": " << e.what() << "\n";
  if (const auto* inv = dynamic_cast<const cs::InvalidSpec*>(&e)) {
    for (const auto& v : inv->violations()) std::cerr << "  " << v.path << ": " << v.message << "\n";
  }
}

std::string read_stdin() {
  std::ostringstream ss;
  ss << std::cin.rdbuf();
  return ss.str();
}

httplib::Server* g_server = nullptr;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained generation: compile output constraints to automata and decode under them"};
  app.require_subcommand(1);

  // compile
  Source compile_src;
  bool compile_json = false;
  std::string dot_file;
  std::size_t state_cap = 100'000;
  auto* compile_cmd = app.add_subcommand("compile", "Print the regex for a constraint and its automaton size");
  add_source(compile_cmd, compile_src);
  compile_cmd->add_flag("--json", compile_json, "Machine-readable output");
  compile_cmd->add_option("--dot", dot_file, "Also write the automaton as Graphviz DOT to FILE");
  compile_cmd->add_option("--state-cap", state_cap, "Maximum automaton states");

  // generate
  Source gen_src;
  std::string prompt, prompt_file, vocab_path, mode = "sample", echo_file, remote_url;
  std::uint64_t seed = 0;
  std::size_t max_tokens = 512;
  double eos_bias = 1.0;
  bool gen_json = false;
  auto* gen_cmd = app.add_subcommand("generate", "Generate a completion that satisfies the constraint");
  add_source(gen_cmd, gen_src);
  auto* prompt_opt = gen_cmd->add_option("--prompt", prompt, "Prompt text");
  auto* prompt_file_opt = gen_cmd->add_option("--prompt-file", prompt_file, "Read the prompt from FILE");
  prompt_opt->excludes(prompt_file_opt);
  gen_cmd->add_option("--seed", seed, "Sampling seed");
  gen_cmd->add_option("--mode", mode, "greedy or sample")->check(CLI::IsMember({"greedy", "sample"}));
  gen_cmd->add_option("--max-tokens", max_tokens, "Token budget")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--eos-bias", eos_bias, "Multiplier on the end-of-sequence weight")
      ->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--vocab", vocab_path, "Vocabulary JSON file (default: bundled test vocabulary)");
  auto* echo_opt = gen_cmd->add_option("--echo-script", echo_file, "Score by replaying the text in FILE");
  auto* remote_opt = gen_cmd->add_option("--remote", remote_url, "Score through a remote endpoint, e.g. http://host:port");
  echo_opt->excludes(remote_opt);
  gen_cmd->add_flag("--json", gen_json, "Machine-readable output");

  // validate
  Source val_src;
  std::string text;
  bool val_json = false;
  auto* val_cmd = app.add_subcommand("validate", "Check text against a constraint (stdin unless --text)");
  add_source(val_cmd, val_src);
  auto* text_opt = val_cmd->add_option("--text", text, "Text to check");
  val_cmd->add_flag("--json", val_json, "Machine-readable output");

  // serve
  std::string config_path, listen, store_dir, serve_vocab;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
  serve_cmd->add_option("--config", config_path, "JSON config file");
  serve_cmd->add_option("--listen", listen, "host:port (overrides config and CSMITH_LISTEN)");
  serve_cmd->add_option("--store", store_dir, "Constraint store directory");
  serve_cmd->add_option("--vocab", serve_vocab, "Vocabulary JSON file");

  // export-vocab
  auto* export_cmd = app.add_subcommand("export-vocab", "Print the bundled test vocabulary as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInvalid;
  }
  compile_src.have_pattern = compile_cmd->count("--pattern") > 0;
  gen_src.have_pattern = gen_cmd->count("--pattern") > 0;
  val_src.have_pattern = val_cmd->count("--pattern") > 0;

  try {
    if (*compile_cmd) {
      const auto compiled = resolve(compile_src);
      const auto automaton = cs::build_dfa(compiled.ast, {state_cap, true});
      if (!dot_file.empty()) {
        std::ofstream out(dot_file);
        if (!out) throw cs::Error("IoError", "cannot write " + dot_file);
        out << cs::to_dot(automaton);
      }
      if (compile_json) {
        std::cout << json{{"pattern", compiled.pattern}, {"state_count", automaton.state_count()}}.dump()
                  << "\n";
      } else {
        std::cout << compiled.pattern << "\n";
        std::cerr << automaton.state_count() << " states\n";
      }
      return kOk;
    }

    if (*gen_cmd) {
      if (!prompt_file.empty()) prompt = slurp(prompt_file);
      const auto compiled = resolve(gen_src);
      const auto vocab = load_vocab(vocab_path);
      const auto automaton = cs::build_dfa(compiled.ast);
      const auto index = cs::build_index(automaton, vocab);
      cs::DecodeParams params;
      params.mode = mode == "greedy" ? cs::DecodeMode::Greedy : cs::DecodeMode::Sample;
      params.seed = seed;
      params.max_tokens = max_tokens;
      params.eos_bias = eos_bias;

      cs::GenerationResult result;
      try {
        if (!echo_file.empty()) {
          result = cs::generate(prompt, index, cs::echo_scorer(vocab->encode(slurp(echo_file))), params);
        } else if (!remote_url.empty()) {
          result = cs::generate(prompt, index, cs::remote_scorer({remote_url}), params);
        } else {
          result = cs::generate(prompt, index, cs::uniform_scorer(), params);
        }
      } catch (const cs::ScorerError& e) {
        std::cerr << "ScorerError at step " << e.step() << ": " << e.what() << "\n";
        return kFailed;
      }
      if (gen_json) {
        std::cout << json{{"text", result.text},
                          {"finish", std::string(cs::finish_name(result.finish))},
                          {"steps", result.steps},
                          {"pattern", compiled.pattern}}
                         .dump()
                  << "\n";
      } else {
        std::cout << result.text << "\n";
      }
      if (!result.succeeded()) {
        std::cerr << "CompletionFailure: " << result.diagnostic << "\n";
        return kFailed;
      }
      return kOk;
    }

    if (*val_cmd) {
      if (!*text_opt) {
        text = read_stdin();
        if (text.ends_with('\n')) text.pop_back();
      }
      const auto compiled = resolve(val_src);
      const auto automaton = cs::build_dfa(compiled.ast);
      const auto reject = cs::first_reject_offset(automaton, text);
      if (val_json) {
        json out{{"valid", !reject}};
        if (reject) out["first_reject_offset"] = *reject;
        std::cout << out.dump() << "\n";
      } else if (reject) {
        std::cout << "invalid at byte " << *reject << "\n";
      } else {
        std::cout << "valid\n";
      }
      return reject ? kInvalid : kOk;
    }

    if (*serve_cmd) {
      auto config = cs::load_service_config(config_path);
      if (!listen.empty()) cs::detail::parse_listen(config, listen);
      if (!store_dir.empty()) config.store_dir = store_dir;
      if (!serve_vocab.empty()) config.vocab_path = serve_vocab;
      cs::Service service(config);
      httplib::Server server;
      service.mount(server);
      g_server = &server;
      std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
      std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
      std::cerr << "listening on " << config.host << ":" << config.port << "\n";
      if (!server.listen(config.host, config.port)) {
        std::cerr << "cannot listen on " << config.host << ":" << config.port << "\n";
        return kInvalid;
      }
      return kOk;
    }

    if (*export_cmd) {
      std::cout << cs::bundled_test_vocabulary().to_json();
      return kOk;
    }
  } catch (const cs::Error& e) {
    report(e);
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  }
  return kOk;
}
