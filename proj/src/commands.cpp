#include "menucsi/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstring>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <thread>
#include <tuple>
#include <unordered_map>

#include <spawn.h>
#include <sys/wait.h>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "menucsi/config.hpp"
#include "menucsi/corpus.hpp"
#include "menucsi/identify.hpp"
#include "menucsi/ingest.hpp"
#include "menucsi/metrics.hpp"
#include "menucsi/prompt.hpp"
#include "menucsi/retrieval.hpp"
#include "menucsi/segmenter.hpp"
#include "menucsi/text.hpp"

extern char** environ;

namespace menucsi::cli {
namespace {

namespace fs = std::filesystem;

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::string config;
  bool offline = false;
  bool cache_only = false;
  int jobs = 0;
  bool verbose = false;
  bool quiet = false;
  std::string output_dir;
  std::string entries;
  std::string recipes;

  std::string ocr;
  std::string checks;
  std::string spans = "gold";
  std::vector<std::string> strategies;
  bool fix_typos = false;
  std::string score;
  std::string match;
  std::string annotations;
  std::string level = "category";
};

void setup_logging(const Flags& f) {
  auto logger = spdlog::get("menucsi");
  if (!logger) logger = spdlog::stderr_color_mt("menucsi");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("%^%l%$: %v");
  spdlog::set_level(f.verbose ? spdlog::level::debug : f.quiet ? spdlog::level::warn : spdlog::level::info);
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first failure.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn fn) {
  std::size_t workers = std::min<std::size_t>(std::max(jobs, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

const fs::path& require_path(const fs::path& p, const char* key) {
  if (p.empty()) throw InputError(std::string("paths.") + key + " is not set in the config");
  if (!fs::exists(p)) throw InputError(std::string("paths.") + key + ": " + p.string() + " does not exist");
  return p;
}

class Session {
 public:
  Session(RunConfig cfg) : cfg_(std::move(cfg)) {}

  const RunConfig& cfg() const { return cfg_; }
  fs::path out(const std::string& name) const { return cfg_.paths.output_dir / name; }

  const DictSegmenter& segmenter() {
    if (!seg_) {
      auto dict = std::make_shared<SegDictionary>(SegDictionary::load_tsv(require_path(cfg_.paths.dictionary, "dictionary")));
      seg_ = std::make_unique<DictSegmenter>(std::move(dict));
    }
    return *seg_;
  }

  MtClient& mt(const std::string& id) {
    if (auto it = mt_.find(id); it != mt_.end()) return *it->second;
    const auto& d = cfg_.backend(id);
    std::unique_ptr<MtUpstream> up;
    if (!offline()) up = d.api == BackendApi::mock ? std::unique_ptr<MtUpstream>(MockMt::from_tsv(d.mock_table)) : make_http_mt(d);
    auto client = std::make_unique<MtClient>(d, cache_for(d), std::move(up), options());
    return *mt_.emplace(id, std::move(client)).first->second;
  }

  ChatClient& chat(const std::string& id) {
    if (auto it = chat_.find(id); it != chat_.end()) return *it->second;
    const auto& d = cfg_.backend(id);
    std::unique_ptr<ChatUpstream> up;
    if (!offline()) {
      up = d.api == BackendApi::mock ? std::unique_ptr<ChatUpstream>(MockChat::from_tsv(d.mock_table)) : make_http_chat(d);
    }
    auto client = std::make_unique<ChatClient>(d, cache_for(d), std::move(up), options());
    return *chat_.emplace(id, std::move(client)).first->second;
  }

  WikiClient& wiki(const std::string& id) {
    if (auto it = wiki_.find(id); it != wiki_.end()) return *it->second;
    const auto& d = cfg_.backend(id);
    std::unique_ptr<WikiUpstream> up;
    if (!offline()) {
      up = d.api == BackendApi::mock ? std::unique_ptr<WikiUpstream>(MockWiki::from_tsv(d.mock_table)) : make_http_wiki(d);
    }
    auto client = std::make_unique<WikiClient>(d, cache_for(d), std::move(up), options(), cfg_.identify.wiki_options);
    return *wiki_.emplace(id, std::move(client)).first->second;
  }

  bool offline() const { return cfg_.modes.offline; }

 private:
  ClientOptions options() const {
    ClientOptions o;
    o.mode = cfg_.modes.cache_only || cfg_.modes.offline ? CacheMode::cache_only : CacheMode::read_write;
    return o;
  }

  std::shared_ptr<ResponseCache> cache_for(const BackendDescriptor& d) {
    fs::path file = ResponseCache::file_for(cfg_.paths.cache_dir, d.backend_id);
    if (offline() && !fs::exists(file)) {
      throw BackendError(d.backend_id, BackendError::Reason::cache_miss,
                         "offline mode needs a response cache, but " + file.string() + " does not exist");
    }
    return std::make_shared<ResponseCache>(file);
  }

  RunConfig cfg_;
  std::unique_ptr<DictSegmenter> seg_;
  std::map<std::string, std::unique_ptr<MtClient>> mt_;
  std::map<std::string, std::unique_ptr<ChatClient>> chat_;
  std::map<std::string, std::unique_ptr<WikiClient>> wiki_;
};

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::map<std::string, std::vector<CsiSpan>> load_spans(Session& s, const std::string& source) {
  std::map<std::string, std::vector<CsiSpan>> out;
  if (source == "predicted") {
    for (auto& p : load_predictions(require_path(s.out("predictions.jsonl"), "output_dir/predictions.jsonl"))) {
      out[p.entry_id] = std::move(p.spans);
    }
  } else if (source == "gold") {
    if (s.cfg().paths.annotations.empty()) {
      spdlog::warn("no annotations configured; queries use the dish name only");
      return out;
    }
    auto annotations = load_annotations(require_path(s.cfg().paths.annotations, "annotations"));
    for (auto& g : consensus_gold(annotations)) out[g.entry_id] = std::move(g.spans);
  } else {
    throw InputError("--spans must be gold or predicted");
  }
  return out;
}

std::string span_text(const std::vector<CsiSpan>& spans) {
  std::string out;
  for (const auto& s : spans) {
    if (!out.empty()) out += "、";
    out += s.surface;
  }
  return out;
}

void check_offline_counter(const Session& s) {
  if (s.offline() && http_request_count() != 0) {
    throw std::logic_error("offline run issued " + std::to_string(http_request_count()) + " HTTP requests");
  }
}

// ---------------------------------------------------------------------------

int cmd_ingest(Session& s, const Flags& f) {
  fs::path ocr_path = f.ocr.empty() ? s.cfg().paths.ocr : fs::path(f.ocr);
  auto blocks = load_ocr(require_path(ocr_path, "ocr"));
  auto anchors = detect_prices(blocks, s.cfg().ingest.price_patterns);
  SimilarityFn sim = s.cfg().ingest.similarity == "mt" ? mt_similarity(s.mt(s.cfg().ingest.mt_backend))
                                                       : geometry_similarity();
  AlignResult result = align(blocks, anchors, sim, s.cfg().ingest.align);
  save_corpus(std::span<const MenuEntry>(result.entries), s.out("entries.jsonl"));
  auto report = alignment_report(blocks, anchors, result);
  write_jsonl(s.out("alignment_report.jsonl"), report);
  spdlog::info("ingest: {} blocks, {} price anchors, {} entries, {} anchors skipped", blocks.size(), anchors.size(),
               result.entries.size(), result.skipped.size());
  check_offline_counter(s);
  return kOk;
}

int cmd_identify(Session& s, const Flags& f) {
  IdentifyConfig config = s.cfg().identify.config;
  if (!f.checks.empty()) config.checks = parse_checks(f.checks);
  auto entries = load_entries(require_path(s.cfg().paths.entries, "entries"));
  const auto& seg = s.segmenter();
  FreqTable table = build_freq_table(entries, seg, s.cfg().identify.percentile);

  IdentifyContext ctx{seg, table, nullptr, nullptr, nullptr, config};
  if (config.checks.rtt) {
    if (s.cfg().identify.forward_mt.empty() || s.cfg().identify.reverse_mt.empty()) {
      throw ConfigError("identify.forward_mt and identify.reverse_mt are required for the rtt check");
    }
    ctx.forward = &s.mt(s.cfg().identify.forward_mt);
    ctx.reverse = &s.mt(s.cfg().identify.reverse_mt);
  }
  if (config.checks.hs) {
    if (s.cfg().identify.wiki.empty()) throw ConfigError("identify.wiki is required for the hs check");
    ctx.wiki = &s.wiki(s.cfg().identify.wiki);
  }

  std::vector<CsiPrediction> predictions(entries.size());
  parallel_for(entries.size(), s.cfg().jobs, [&](std::size_t i) {
    IdentifyContext local = ctx;
    predictions[i] = combined_identify(entries[i], local);
  });
  save_predictions(predictions, s.out("predictions.jsonl"));

  std::size_t failed = 0, csi = 0;
  for (const auto& p : predictions) {
    if (p.is_csi) ++csi;
    if (!p.errors.empty()) {
      ++failed;
      for (const auto& e : p.errors) spdlog::error("{}: {}", p.entry_id, e);
    }
  }
  spdlog::info("identify [{}]: {} entries, {} with CSI spans, cutoff {:.6g}", format_checks(config.checks),
               entries.size(), csi, table.cutoff());
  check_offline_counter(s);
  return failed ? kBackendError : kOk;
}

int cmd_retrieve(Session& s, const Flags& f) {
  auto entries = load_entries(require_path(s.cfg().paths.entries, "entries"));
  auto recipes = load_recipes(require_path(s.cfg().paths.recipes, "recipes"));
  const auto& seg = s.segmenter();
  RecipeIndex index = RecipeIndex::build(recipes, seg, s.cfg().retrieval);
  auto spans = load_spans(s, f.spans);

  std::vector<RetrievalRecord> records(entries.size());
  parallel_for(entries.size(), s.cfg().jobs, [&](std::size_t i) {
    const MenuEntry& e = entries[i];
    auto it = spans.find(e.id);
    std::vector<CsiSpan> none;
    DishQuery q = make_query(e.zh_text, it == spans.end() ? none : it->second, seg);
    auto ranking = index.retrieve_top(q, 1);
    const auto& top = ranking.hits.front();
    records[i] = {e.id, top.recipe_id, top.score, top.rank, ranking.no_match};
  });
  save_retrievals(records, s.out("retrievals.jsonl"));
  std::size_t misses = std::count_if(records.begin(), records.end(), [](const auto& r) { return r.no_match; });
  spdlog::info("retrieve: {} entries over {} recipes, {} without a match", entries.size(), recipes.size(), misses);
  return kOk;
}

struct PromptInputs {
  std::vector<MenuEntry> entries;
  std::map<std::string, std::vector<CsiSpan>> spans;
  std::map<std::string, RetrievalRecord> retrievals;
  std::map<std::string, Recipe> recipes;
};

std::vector<Strategy> strategies_for(const Session& s, const Flags& f) {
  if (f.strategies.empty()) return s.cfg().translate.strategies;
  std::vector<Strategy> out;
  for (const auto& id : f.strategies) {
    auto st = parse_strategy(id);
    if (!st) throw InputError("unknown strategy '" + id + "'");
    out.push_back(*st);
  }
  return out;
}

TemplateOptions templates_for(const Session& s, const Flags& f) {
  TemplateOptions t = s.cfg().translate.templates;
  if (f.fix_typos) t.fix_typos = true;
  return t;
}

PromptInputs prompt_inputs(Session& s, const Flags& f, const std::vector<Strategy>& strategies) {
  PromptInputs in;
  in.entries = load_entries(require_path(s.cfg().paths.entries, "entries"));
  in.spans = load_spans(s, f.spans);
  bool need_recipes = std::any_of(strategies.begin(), strategies.end(), uses_recipe);
  if (need_recipes) {
    for (auto& r : load_retrievals(require_path(s.out("retrievals.jsonl"), "output_dir/retrievals.jsonl"))) {
      in.retrievals.emplace(r.entry_id, r);
    }
    for (auto& r : load_recipes(require_path(s.cfg().paths.recipes, "recipes"))) in.recipes.emplace(r.id, r);
  }
  return in;
}

PromptSpec spec_for(const PromptInputs& in, const MenuEntry& e, Strategy st, const TemplateOptions& t) {
  std::optional<std::string> span;
  if (auto it = in.spans.find(e.id); it != in.spans.end() && !it->second.empty()) span = span_text(it->second);
  std::optional<Recipe> recipe;
  if (uses_recipe(st)) {
    auto r = in.retrievals.find(e.id);
    if (r == in.retrievals.end()) throw InputError("no retrieval record for entry '" + e.id + "'");
    auto rec = in.recipes.find(r->second.recipe_id);
    if (rec == in.recipes.end()) {
      throw InputError("retrieval for entry '" + e.id + "' names unknown recipe '" + r->second.recipe_id + "'");
    }
    recipe = rec->second;
  }
  return PromptSpec::make(st, e.zh_text, span, recipe, t);
}

int cmd_prompt(Session& s, const Flags& f) {
  auto strategies = strategies_for(s, f);
  auto t = templates_for(s, f);
  PromptInputs in = prompt_inputs(s, f, strategies);
  std::vector<PromptRecord> out;
  for (const auto& e : in.entries) {
    for (Strategy st : strategies) {
      PromptSpec spec = spec_for(in, e, st, t);
      out.push_back({e.id, st, render(spec), spec.template_version()});
    }
  }
  save_prompts(out, s.out("prompts.jsonl"));
  spdlog::info("prompt: {} prompts, template version {}", out.size(), template_version(t));
  return kOk;
}

int cmd_translate(Session& s, const Flags& f) {
  if (s.cfg().translate.chat.empty()) throw ConfigError("translate.chat is not set");
  auto strategies = strategies_for(s, f);
  auto t = templates_for(s, f);
  PromptInputs in = prompt_inputs(s, f, strategies);
  ChatClient& chat = s.chat(s.cfg().translate.chat);
  const std::string backend_id = chat.id();

  fs::path out_path = s.out("translations.jsonl");
  std::vector<TranslationRecord> records;
  if (fs::exists(out_path)) records = load_translations(out_path);
  std::set<std::tuple<std::string, std::string, Strategy>> done;
  std::vector<TranslationRecord> kept;
  for (auto& r : records) {
    if (r.status == TranslationStatus::error) continue;
    done.emplace(r.entry_id, r.backend_id, r.strategy);
    kept.push_back(std::move(r));
  }

  struct Job {
    const MenuEntry* entry;
    Strategy strategy;
  };
  std::vector<Job> jobs;
  for (const auto& e : in.entries) {
    for (Strategy st : strategies) {
      if (!done.contains({e.id, backend_id, st})) jobs.push_back({&e, st});
    }
  }

  std::vector<TranslationRecord> fresh(jobs.size());
  std::atomic<std::size_t> failures{0}, warnings{0};
  parallel_for(jobs.size(), s.cfg().jobs, [&](std::size_t i) {
    const Job& job = jobs[i];
    TranslationRecord& r = fresh[i];
    r.entry_id = job.entry->id;
    r.backend_id = backend_id;
    r.strategy = job.strategy;
    r.prompt_text = render(spec_for(in, *job.entry, job.strategy, t));
    try {
      BackendResponse resp = chat.complete(r.prompt_text);
      r.raw_response = resp.text;
      r.timestamp = resp.created_at;
      ParsedResponse parsed = parse_response(job.strategy, resp.text);
      r.final_translation = parsed.translation;
      if (parsed.parse_warning) {
        r.status = TranslationStatus::parse_warning;
        ++warnings;
        spdlog::warn("{} [{}]: no answer marker, kept the last line", r.entry_id, strategy_id(job.strategy));
      }
    } catch (const BackendError& e) {
      r.status = TranslationStatus::error;
      ++failures;
      spdlog::error("{} [{}]: {}", r.entry_id, strategy_id(job.strategy), e.what());
    }
  });

  std::unordered_map<std::string, std::size_t> entry_rank;
  for (std::size_t i = 0; i < in.entries.size(); ++i) entry_rank.emplace(in.entries[i].id, i);
  std::vector<TranslationRecord> all = std::move(kept);
  for (auto& r : fresh) all.push_back(std::move(r));
  auto strategy_rank = [](Strategy st) {
    return std::find(kAllStrategies.begin(), kAllStrategies.end(), st) - kAllStrategies.begin();
  };
  std::stable_sort(all.begin(), all.end(), [&](const TranslationRecord& a, const TranslationRecord& b) {
    auto ra = entry_rank.contains(a.entry_id) ? entry_rank.at(a.entry_id) : entry_rank.size();
    auto rb = entry_rank.contains(b.entry_id) ? entry_rank.at(b.entry_id) : entry_rank.size();
    return std::tuple(ra, a.entry_id, a.backend_id, strategy_rank(a.strategy)) <
           std::tuple(rb, b.entry_id, b.backend_id, strategy_rank(b.strategy));
  });
  save_corpus(std::span<const TranslationRecord>(all), out_path);
  spdlog::info("translate: {} new records ({} skipped as done), {} parse warnings, {} errors", jobs.size(),
               done.size(), warnings.load(), failures.load());
  check_offline_counter(s);
  return failures ? kBackendError : kOk;
}

// Runs argv, waiting for it to exit. Returns the exit status, or throws if it cannot start.
int run_process(const std::vector<std::string>& argv) {
  std::vector<char*> cargs;
  for (const auto& a : argv) cargs.push_back(const_cast<char*>(a.c_str()));
  cargs.push_back(nullptr);
  pid_t pid = 0;
  int rc = posix_spawnp(&pid, cargs[0], nullptr, nullptr, cargs.data(), environ);
  if (rc != 0) throw std::runtime_error("cannot start " + argv[0] + ": " + std::strerror(rc));
  int status = 0;
  while (waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) throw std::runtime_error("waitpid failed for " + argv[0]);
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
}

// Writes one triplet file per strategy, scores each with the sidecar and
// converts the results to ×100 score records.
std::vector<ScoreRecord> comet_scores(Session& s, const std::map<std::string, GoldEntry>& gold) {
  const auto& ev = s.cfg().evaluate;
  if (ev.comet_command.empty()) throw ConfigError("evaluate.comet_command is not set");
  if (s.cfg().translate.chat.empty()) throw ConfigError("translate.chat is not set");
  auto entries = load_entries(require_path(s.cfg().paths.entries, "entries"));
  std::map<std::string, const MenuEntry*> by_id;
  for (const auto& e : entries) by_id.emplace(e.id, &e);
  auto translations = load_translations(require_path(s.out("translations.jsonl"), "output_dir/translations.jsonl"));

  std::map<Strategy, std::vector<ojson>> triplets;
  for (const auto& t : translations) {
    if (t.backend_id != s.cfg().translate.chat || t.status == TranslationStatus::error) continue;
    auto e = by_id.find(t.entry_id);
    if (e == by_id.end()) throw InputError("translation for unknown entry '" + t.entry_id + "'");
    if (!e->second->en_ref || text::trim(*e->second->en_ref).empty() || text::trim(t.final_translation).empty()) continue;
    ojson j;
    j["entry_id"] = t.entry_id;
    j["src"] = e->second->zh_text;
    j["mt"] = t.final_translation;
    j["ref"] = *e->second->en_ref;
    triplets[t.strategy].push_back(std::move(j));
  }

  std::vector<ScoreRecord> out;
  fs::path dir = s.out("comet");
  for (const auto& [strategy, rows] : triplets) {
    std::string stem = std::string(strategy_id(strategy));
    fs::path in_path = dir / (stem + ".triplets.jsonl");
    fs::path out_path = dir / (stem + ".scores.jsonl");
    write_jsonl(in_path, rows);
    std::vector<std::string> argv = ev.comet_command;
    argv.insert(argv.end(), {"--input", in_path.string(), "--output", out_path.string(), "--model", ev.comet_model,
                             "--batch-size", std::to_string(ev.comet_batch_size), "--cpu"});
    spdlog::info("scoring {} triplets for {}", rows.size(), stem);
    int rc = run_process(argv);
    if (rc != 0) {
      throw BackendError("comet", BackendError::Reason::bad_response,
                         "scoring sidecar exited with status " + std::to_string(rc) + " for " + in_path.string());
    }
    std::size_t n = 0;
    read_jsonl(out_path, [&](std::size_t line, const ojson& j) {
      std::string id = j.value("entry_id", "");
      if (n >= rows.size() || id != rows[n]["entry_id"].get<std::string>()) {
        throw DataError(out_path.string(), line, id, "sidecar output does not follow the input order");
      }
      ++n;
      if (!j.contains("score") || !j["score"].is_number()) throw DataError(out_path.string(), line, id, "missing score");
      auto g = gold.find(id);
      if (g == gold.end() || g->second.label == CsiLabel::NonCsi) return;
      out.push_back({id, stem, 100.0 * j["score"].get<double>(), static_cast<int>(g->second.label)});
    });
    if (n != rows.size()) {
      throw DataError(out_path.string(), n, "", "sidecar wrote " + std::to_string(n) + " scores for " +
                                                    std::to_string(rows.size()) + " triplets");
    }
  }
  return out;
}

int cmd_evaluate(Session& s, const Flags& f) {
  MatchMode mode = f.match.empty() ? s.cfg().evaluate.match : parse_match_mode(f.match);
  auto annotations = load_annotations(require_path(s.cfg().paths.annotations, "annotations"));
  auto gold_list = consensus_gold(annotations);
  std::map<std::string, GoldEntry> gold;
  for (const auto& g : gold_list) gold.emplace(g.entry_id, g);

  std::string text_report;
  CsvReport csv;

  fs::path pred_path = s.out("predictions.jsonl");
  if (fs::exists(pred_path)) {
    auto predictions = load_predictions(pred_path);
    CheckSet checks = predictions.empty() ? CheckSet{} : predictions.front().checks;
    std::vector<std::pair<std::string, SpanEvalResult>> rows;
    if (checks.rtt) rows.emplace_back("RTT", span_prf(predictions, gold_list, FlagSource::rtt, mode));
    if (checks.cu) rows.emplace_back("CU", span_prf(predictions, gold_list, FlagSource::cu, mode));
    if (checks.hs) rows.emplace_back("HS", span_prf(predictions, gold_list, FlagSource::hs, mode));
    rows.emplace_back("Combined", span_prf(predictions, gold_list, FlagSource::combined, mode));
    text_report += render_text(rows);
    for (const auto& [method, r] : rows) csv.add(method, r);
  } else {
    spdlog::info("no predictions at {}; span evaluation skipped", pred_path.string());
  }

  std::vector<ScoreRecord> scores;
  if (f.score == "comet") {
    scores = comet_scores(s, gold);
    save_scores(scores, s.out("scores.jsonl"));
  } else if (!f.score.empty() && f.score != "file") {
    throw InputError("--score must be comet or file");
  } else if (!s.cfg().paths.scores.empty()) {
    scores = load_scores(require_path(s.cfg().paths.scores, "scores"));
  }
  if (!scores.empty()) {
    ScoreTable table = aggregate_scores(scores, s.cfg().evaluate.baseline);
    if (!text_report.empty()) text_report += "\n";
    text_report += render_text(table);
    csv.add(table);
  }

  write_text(s.out("report.txt"), text_report);
  write_text(s.out("report.csv"), csv.str());
  std::cout << text_report;
  check_offline_counter(s);
  return kOk;
}

int cmd_kappa(Session& s, const Flags& f) {
  fs::path path = f.annotations.empty() ? s.cfg().paths.annotations : fs::path(f.annotations);
  auto annotations = load_annotations(require_path(path, "annotations"));
  AgreementLevel level;
  if (f.level == "category") level = AgreementLevel::category;
  else if (f.level == "binary") level = AgreementLevel::binary;
  else throw InputError("--level must be category or binary");

  std::string report = "Agreement (" + f.level + " level)\n";
  char buf[160];
  for (const auto& p : pairwise_cohen(annotations, level)) {
    std::snprintf(buf, sizeof buf, "cohen  %-12s %-12s items=%-5zu kappa=%.4f\n", p.annotator_a.c_str(),
                  p.annotator_b.c_str(), p.result.n_items, p.result.kappa);
    report += buf;
  }
  auto matrix = rating_matrix(annotations, level);
  if (matrix.empty()) {
    report += "fleiss  no entry is rated by every annotator\n";
  } else {
    AgreementResult r = fleiss_kappa(matrix);
    std::snprintf(buf, sizeof buf, "fleiss raters=%zu items=%zu kappa=%.4f\n", r.n_raters, r.n_items, r.kappa);
    report += buf;
  }
  write_text(s.out("agreement_" + f.level + ".txt"), report);
  std::cout << report;
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Culture-specific item identification, recipe retrieval, prompting and evaluation for Chinese menus",
               "menucsi"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config, "run.toml")->required()->check(CLI::ExistingFile);
  app.add_flag("--offline", f.offline, "Serve every backend from its shipped cache; no network");
  app.add_flag("--cache-only", f.cache_only, "Fail on any cache miss instead of calling a backend");
  app.add_option("--jobs", f.jobs, "Worker threads for per-entry stages")->check(CLI::PositiveNumber);
  app.add_flag("-v,--verbose", f.verbose);
  app.add_flag("-q,--quiet", f.quiet);
  app.add_option("--output-dir", f.output_dir, "Overrides paths.output_dir");

  auto* ingest = app.add_subcommand("ingest", "Align OCR blocks into menu entries");
  ingest->add_option("--ocr", f.ocr, "OCR JSON (overrides paths.ocr)");
  auto* identify = app.add_subcommand("identify", "Flag culture-specific words in dish names");
  identify->add_option("--checks", f.checks, "Subset of rtt,cu,hs");
  auto* retrieve = app.add_subcommand("retrieve", "Rank recipes for every dish");
  retrieve->add_option("--recipes", f.recipes, "Recipe corpus JSONL (overrides paths.recipes)");
  auto* prompt = app.add_subcommand("prompt", "Render prompts for every dish and strategy");
  auto* translate = app.add_subcommand("translate", "Translate dishes with the chat backend");
  auto* evaluate = app.add_subcommand("evaluate", "Span P/R/F1 and score tables");
  evaluate->add_option("--score", f.score, "comet: run the scoring sidecar; file: use paths.scores");
  evaluate->add_option("--match", f.match, "token or exact-span");
  auto* kappa = app.add_subcommand("kappa", "Inter-annotator agreement");
  kappa->add_option("--annotations", f.annotations, "Annotations JSONL (overrides paths.annotations)");
  kappa->add_option("--level", f.level, "category or binary");
  for (auto* sub : {identify, retrieve, prompt, translate, evaluate}) {
    sub->add_option("--entries", f.entries, "Entries JSONL, e.g. the output of ingest (overrides paths.entries)");
  }
  for (auto* sub : {retrieve, prompt, translate}) {
    sub->add_option("--spans", f.spans, "CSI spans from gold annotations or predictions");
  }
  for (auto* sub : {prompt, translate}) {
    sub->add_option("--strategies", f.strategies, "Strategy ids (overrides translate.strategies)")->delimiter(',');
    sub->add_flag("--fix-typos", f.fix_typos, "Use corrected template spelling");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kInputError;
  }
  setup_logging(f);

  try {
    RunConfig cfg = load_run_config(f.config);
    if (f.offline) cfg.modes.offline = true;
    if (f.cache_only) cfg.modes.cache_only = true;
    if (f.jobs > 0) cfg.jobs = f.jobs;
    if (!f.output_dir.empty()) cfg.paths.output_dir = f.output_dir;
    if (!f.entries.empty()) cfg.paths.entries = f.entries;
    if (!f.recipes.empty()) cfg.paths.recipes = f.recipes;
    Session session(std::move(cfg));
    if (ingest->parsed()) return cmd_ingest(session, f);
    if (identify->parsed()) return cmd_identify(session, f);
    if (retrieve->parsed()) return cmd_retrieve(session, f);
    if (prompt->parsed()) return cmd_prompt(session, f);
    if (translate->parsed()) return cmd_translate(session, f);
    if (evaluate->parsed()) return cmd_evaluate(session, f);
    if (kappa->parsed()) return cmd_kappa(session, f);
  } catch (const BackendError& e) {
    spdlog::error("{}", e.what());
    return kBackendError;
  } catch (const DataError& e) {
    spdlog::error("{}", e.what());
    return kInputError;
  } catch (const ConfigError& e) {
    spdlog::error("config: {}", e.what());
    return kInputError;
  } catch (const InputError& e) {
    spdlog::error("{}", e.what());
    return kInputError;
  } catch (const std::invalid_argument& e) {
    spdlog::error("{}", e.what());
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return kInputError;
  }
  return kInputError;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace menucsi::cli
