#include "menucsi/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include <toml.hpp>

namespace menucsi {
namespace {

class Reader {
 public:
  Reader(const toml::table* table, std::string section, const std::filesystem::path& base)
      : table_(table), section_(std::move(section)), base_(base) {}

  bool present() const { return table_ != nullptr; }

  void allow(std::initializer_list<std::string_view> keys) const {
    if (!table_) return;
    std::set<std::string_view> allowed(keys);
    for (const auto& [key, _] : *table_) {
      if (!allowed.contains(key.str())) fail(std::string(key.str()), "unknown key");
    }
  }

  std::optional<std::string> string(std::string_view key) const {
    const toml::node* n = node(key);
    if (!n) return std::nullopt;
    if (auto v = n->value<std::string>()) return *v;
    fail(key, "must be a string");
  }

  std::optional<double> number(std::string_view key) const {
    const toml::node* n = node(key);
    if (!n) return std::nullopt;
    if (n->is_integer()) return static_cast<double>(*n->value<int64_t>());
    if (auto v = n->value<double>()) return *v;
    fail(key, "must be a number");
  }

  std::optional<int64_t> integer(std::string_view key) const {
    const toml::node* n = node(key);
    if (!n) return std::nullopt;
    if (auto v = n->value<int64_t>(); v && n->is_integer()) return *v;
    fail(key, "must be an integer");
  }

  std::optional<bool> boolean(std::string_view key) const {
    const toml::node* n = node(key);
    if (!n) return std::nullopt;
    if (auto v = n->value<bool>()) return *v;
    fail(key, "must be a boolean");
  }

  std::optional<std::vector<std::string>> strings(std::string_view key) const {
    const toml::node* n = node(key);
    if (!n) return std::nullopt;
    const toml::array* arr = n->as_array();
    if (!arr) fail(key, "must be an array of strings");
    std::vector<std::string> out;
    for (const auto& item : *arr) {
      auto v = item.value<std::string>();
      if (!v) fail(key, "must be an array of strings");
      out.push_back(*v);
    }
    return out;
  }

  std::optional<std::filesystem::path> path(std::string_view key) const {
    auto s = string(key);
    if (!s) return std::nullopt;
    std::filesystem::path p(*s);
    return p.is_absolute() ? p : (base_ / p).lexically_normal();
  }

  [[noreturn]] void fail(std::string_view key, std::string_view message) const {
    throw ConfigError(section_ + "." + std::string(key) + ": " + std::string(message));
  }

 private:
  const toml::node* node(std::string_view key) const {
    if (!table_) return nullptr;
    return table_->get(key);
  }

  const toml::table* table_;
  std::string section_;
  std::filesystem::path base_;
};

Reader section(const toml::table& root, std::string_view name, const std::filesystem::path& base) {
  const toml::node* n = root.get(name);
  if (n && !n->is_table()) throw ConfigError(std::string(name) + ": must be a table");
  return Reader(n ? n->as_table() : nullptr, std::string(name), base);
}

template <typename T>
void set_if(T& target, const std::optional<T>& value) {
  if (value) target = *value;
}

BackendDescriptor read_backend(const toml::table& t, std::size_t index, const std::filesystem::path& base) {
  Reader r(&t, "backends[" + std::to_string(index) + "]", base);
  r.allow({"id", "kind", "api", "endpoint", "auth_env", "rate_limit", "model", "temperature", "system_message",
           "mock_table"});
  BackendDescriptor d;
  auto id = r.string("id");
  if (!id || id->empty()) r.fail("id", "is required");
  d.backend_id = *id;
  Reader named(&t, "backends." + d.backend_id, base);

  auto kind = named.string("kind");
  if (!kind) named.fail("kind", "is required");
  auto k = parse_kind(*kind);
  if (!k) named.fail("kind", "must be mt, chat or wiki");
  d.kind = *k;

  auto api = named.string("api");
  if (!api) named.fail("api", "is required");
  auto a = parse_api(*api);
  if (!a) named.fail("api", "must be google, deepl, openai, wikipedia or mock");
  d.api = *a;

  set_if(d.endpoint, named.string("endpoint"));
  set_if(d.auth_env, named.string("auth_env"));
  set_if(d.rate_limit, named.number("rate_limit"));
  if (!(d.rate_limit > 0)) named.fail("rate_limit", "must be positive");
  set_if(d.model, named.string("model"));
  set_if(d.temperature, named.number("temperature"));
  set_if(d.system_message, named.string("system_message"));
  set_if(d.mock_table, named.path("mock_table"));
  if (d.api == BackendApi::mock && d.mock_table.empty()) named.fail("mock_table", "is required for mock backends");

  bool api_fits = d.api == BackendApi::mock ||
                  (d.kind == BackendKind::mt && (d.api == BackendApi::google || d.api == BackendApi::deepl)) ||
                  (d.kind == BackendKind::chat && d.api == BackendApi::openai) ||
                  (d.kind == BackendKind::wiki && d.api == BackendApi::wikipedia);
  if (!api_fits) named.fail("api", std::string(api_name(d.api)) + " does not serve kind " + std::string(kind_name(d.kind)));
  return d;
}

void require_backend(const RunConfig& cfg, const std::string& id, BackendKind kind, const std::string& where) {
  if (id.empty()) return;
  auto it = cfg.backends.find(id);
  if (it == cfg.backends.end()) throw ConfigError(where + ": unknown backend '" + id + "'");
  if (it->second.kind != kind) {
    throw ConfigError(where + ": backend '" + id + "' is " + std::string(kind_name(it->second.kind)) + ", expected " +
                      std::string(kind_name(kind)));
  }
}

}  // namespace

const BackendDescriptor& RunConfig::backend(const std::string& id) const {
  auto it = backends.find(id);
  if (it == backends.end()) throw ConfigError("unknown backend '" + id + "'");
  return it->second;
}

RunConfig parse_run_config(std::string_view toml_text, const std::filesystem::path& base_dir,
                           const std::string& source_name) {
  toml::table root;
  try {
    root = toml::parse(toml_text, source_name);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source_name << ":" << e.source().begin.line << ": " << e.description();
    throw ConfigError(msg.str());
  }

  static const std::set<std::string_view> kSections = {"paths",     "backends", "ingest",   "identify", "retrieval",
                                                       "translate", "evaluate", "mode",     "run"};
  for (const auto& [key, _] : root) {
    if (!kSections.contains(key.str())) throw ConfigError("unknown section '" + std::string(key.str()) + "'");
  }

  RunConfig cfg;
  cfg.paths.cache_dir = base_dir / "cache";
  cfg.paths.output_dir = base_dir / "out";

  Reader paths = section(root, "paths", base_dir);
  paths.allow({"entries", "annotations", "recipes", "dictionary", "ocr", "scores", "cache_dir", "output_dir"});
  set_if(cfg.paths.entries, paths.path("entries"));
  set_if(cfg.paths.annotations, paths.path("annotations"));
  set_if(cfg.paths.recipes, paths.path("recipes"));
  set_if(cfg.paths.dictionary, paths.path("dictionary"));
  set_if(cfg.paths.ocr, paths.path("ocr"));
  set_if(cfg.paths.scores, paths.path("scores"));
  set_if(cfg.paths.cache_dir, paths.path("cache_dir"));
  set_if(cfg.paths.output_dir, paths.path("output_dir"));

  if (const toml::node* b = root.get("backends")) {
    const toml::array* arr = b->as_array();
    if (!arr) throw ConfigError("backends: must be an array of tables ([[backends]])");
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const toml::table* t = (*arr)[i].as_table();
      if (!t) throw ConfigError("backends[" + std::to_string(i) + "]: must be a table");
      BackendDescriptor d = read_backend(*t, i, base_dir);
      std::string id = d.backend_id;
      if (!cfg.backends.emplace(id, std::move(d)).second) throw ConfigError("backends: duplicate id '" + id + "'");
    }
  }

  Reader ingest = section(root, "ingest", base_dir);
  ingest.allow({"lambda", "radius_factor", "similarity", "mt"});
  set_if(cfg.ingest.align.lambda, ingest.number("lambda"));
  set_if(cfg.ingest.align.radius_factor, ingest.number("radius_factor"));
  set_if(cfg.ingest.similarity, ingest.string("similarity"));
  set_if(cfg.ingest.mt_backend, ingest.string("mt"));
  if (cfg.ingest.similarity != "geometry" && cfg.ingest.similarity != "mt") {
    ingest.fail("similarity", "must be geometry or mt");
  }
  if (cfg.ingest.similarity == "mt" && cfg.ingest.mt_backend.empty()) ingest.fail("mt", "is required when similarity = mt");
  if (cfg.ingest.align.lambda < 0) ingest.fail("lambda", "must be non-negative");
  if (!(cfg.ingest.align.radius_factor > 0)) ingest.fail("radius_factor", "must be positive");

  Reader identify = section(root, "identify", base_dir);
  identify.allow({"checks", "percentile", "generic_threshold", "inclusive_cutoff", "forward_mt", "reverse_mt", "wiki",
                  "wiki_editions", "history_titles"});
  if (auto checks = identify.string("checks")) {
    try {
      cfg.identify.config.checks = parse_checks(*checks);
    } catch (const std::invalid_argument& e) {
      identify.fail("checks", e.what());
    }
  }
  set_if(cfg.identify.percentile, identify.number("percentile"));
  if (cfg.identify.percentile < 0 || cfg.identify.percentile > 100) identify.fail("percentile", "must be in [0, 100]");
  if (auto g = identify.integer("generic_threshold")) {
    if (*g < 1) identify.fail("generic_threshold", "must be at least 1");
    cfg.identify.config.generic_threshold = static_cast<std::uint64_t>(*g);
  }
  set_if(cfg.identify.config.inclusive_cutoff, identify.boolean("inclusive_cutoff"));
  set_if(cfg.identify.forward_mt, identify.string("forward_mt"));
  set_if(cfg.identify.reverse_mt, identify.string("reverse_mt"));
  set_if(cfg.identify.wiki, identify.string("wiki"));
  set_if(cfg.identify.wiki_options.editions, identify.strings("wiki_editions"));
  set_if(cfg.identify.wiki_options.history_titles, identify.strings("history_titles"));

  Reader retrieval = section(root, "retrieval", base_dir);
  retrieval.allow({"w_dish", "w_span", "dish_multiplier", "alpha", "k1", "b"});
  set_if(cfg.retrieval.w_dish, retrieval.number("w_dish"));
  set_if(cfg.retrieval.w_span, retrieval.number("w_span"));
  set_if(cfg.retrieval.dish_multiplier, retrieval.number("dish_multiplier"));
  set_if(cfg.retrieval.alpha, retrieval.number("alpha"));
  set_if(cfg.retrieval.k1, retrieval.number("k1"));
  set_if(cfg.retrieval.b, retrieval.number("b"));
  try {
    validate(cfg.retrieval);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("retrieval: ") + e.what());
  }

  Reader translate = section(root, "translate", base_dir);
  translate.allow({"chat", "strategies", "fix_typos", "output_trailer"});
  set_if(cfg.translate.chat, translate.string("chat"));
  if (auto list = translate.strings("strategies")) {
    cfg.translate.strategies.clear();
    for (const auto& id : *list) {
      auto s = parse_strategy(id);
      if (!s) translate.fail("strategies", "unknown strategy '" + id + "'");
      if (std::find(cfg.translate.strategies.begin(), cfg.translate.strategies.end(), *s) ==
          cfg.translate.strategies.end()) {
        cfg.translate.strategies.push_back(*s);
      }
    }
    if (cfg.translate.strategies.empty()) translate.fail("strategies", "must not be empty");
  }
  set_if(cfg.translate.templates.fix_typos, translate.boolean("fix_typos"));
  set_if(cfg.translate.templates.output_trailer, translate.boolean("output_trailer"));

  Reader evaluate = section(root, "evaluate", base_dir);
  evaluate.allow({"baseline", "match", "comet_command", "comet_model", "comet_batch_size"});
  set_if(cfg.evaluate.baseline, evaluate.string("baseline"));
  if (auto m = evaluate.string("match")) {
    try {
      cfg.evaluate.match = parse_match_mode(*m);
    } catch (const std::invalid_argument& e) {
      evaluate.fail("match", e.what());
    }
  }
  set_if(cfg.evaluate.comet_command, evaluate.strings("comet_command"));
  set_if(cfg.evaluate.comet_model, evaluate.string("comet_model"));
  if (auto bs = evaluate.integer("comet_batch_size")) {
    if (*bs < 1) evaluate.fail("comet_batch_size", "must be positive");
    cfg.evaluate.comet_batch_size = static_cast<int>(*bs);
  }

  Reader mode = section(root, "mode", base_dir);
  mode.allow({"cache_only", "offline"});
  set_if(cfg.modes.cache_only, mode.boolean("cache_only"));
  set_if(cfg.modes.offline, mode.boolean("offline"));

  Reader run = section(root, "run", base_dir);
  run.allow({"jobs"});
  if (auto j = run.integer("jobs")) {
    if (*j < 1) run.fail("jobs", "must be at least 1");
    cfg.jobs = static_cast<int>(*j);
  }

  require_backend(cfg, cfg.ingest.mt_backend, BackendKind::mt, "ingest.mt");
  require_backend(cfg, cfg.identify.forward_mt, BackendKind::mt, "identify.forward_mt");
  require_backend(cfg, cfg.identify.reverse_mt, BackendKind::mt, "identify.reverse_mt");
  require_backend(cfg, cfg.identify.wiki, BackendKind::wiki, "identify.wiki");
  require_backend(cfg, cfg.translate.chat, BackendKind::chat, "translate.chat");
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  std::filesystem::path base = std::filesystem::absolute(path).parent_path();
  RunConfig cfg = parse_run_config(buf.str(), base, path.string());
  cfg.source = path;
  return cfg;
}

}  // namespace menucsi
