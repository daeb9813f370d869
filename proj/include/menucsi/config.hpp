#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "menucsi/backends.hpp"
#include "menucsi/identify.hpp"
#include "menucsi/ingest.hpp"
#include "menucsi/metrics.hpp"
#include "menucsi/prompt.hpp"
#include "menucsi/retrieval.hpp"
#include "menucsi/strategy.hpp"

namespace menucsi {

// Relative paths in run.toml resolve against the directory holding the file.
struct RunPaths {
  std::filesystem::path entries;
  std::filesystem::path annotations;  // gold for span evaluation
  std::filesystem::path recipes;
  std::filesystem::path dictionary;
  std::filesystem::path ocr;
  std::filesystem::path scores;
  std::filesystem::path cache_dir = "cache";
  std::filesystem::path output_dir = "out";
};

struct IngestSettings {
  AlignConfig align;
  std::string similarity = "geometry";  // "geometry" or "mt"
  std::string mt_backend;
  std::vector<PricePattern> price_patterns = default_price_patterns();
};

struct IdentifySettings {
  IdentifyConfig config;
  double percentile = 95.0;
  std::string forward_mt;
  std::string reverse_mt;
  std::string wiki;
  WikiOptions wiki_options;
};

struct TranslateSettings {
  std::string chat;
  std::vector<Strategy> strategies{Strategy::Baseline};
  TemplateOptions templates;
};

struct EvaluateSettings {
  std::string baseline = "baseline";
  MatchMode match = MatchMode::token;
  std::vector<std::string> comet_command;
  std::string comet_model = "Unbabel/wmt22-comet-da";
  int comet_batch_size = 8;
};

struct RunModes {
  bool cache_only = false;
  bool offline = false;
};

struct RunConfig {
  std::filesystem::path source;  // the run.toml itself
  RunPaths paths;
  std::map<std::string, BackendDescriptor> backends;
  IngestSettings ingest;
  IdentifySettings identify;
  RetrievalConfig retrieval;
  TranslateSettings translate;
  EvaluateSettings evaluate;
  RunModes modes;
  int jobs = 1;

  const BackendDescriptor& backend(const std::string& id) const;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Throws ConfigError on a parse failure, an unknown key value or an invalid setting.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(std::string_view toml_text, const std::filesystem::path& base_dir,
                           const std::string& source_name = "run.toml");

}  // namespace menucsi
