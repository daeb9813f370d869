#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "menucsi/corpus.hpp"
#include "menucsi/jsonl.hpp"
#include "menucsi/strategy.hpp"

namespace menucsi {

// Named text assets. Placeholders: {dish_name}, {csi_span}, {recipe_name}, {recipe_instructions}.
namespace assets {

std::string_view get(std::string_view name);
std::vector<std::string_view> names();

}  // namespace assets

struct TemplateOptions {
  bool fix_typos = false;
  // Appends the FINAL:/BEST: output-format instruction.
  bool output_trailer = true;
};

// Template text for a strategy, with placeholders unexpanded.
std::string template_text(Strategy s, const TemplateOptions& opts = {});
// Digest over every strategy's template text under opts.
std::string template_version(const TemplateOptions& opts = {});

class PromptSpec {
 public:
  // Throws std::invalid_argument when the recipe presence does not match the strategy.
  static PromptSpec make(Strategy strategy, std::string dish_name, std::optional<std::string> csi_span,
                         std::optional<Recipe> recipe, const TemplateOptions& opts = {});

  Strategy strategy() const { return strategy_; }
  const std::string& dish_name() const { return dish_name_; }
  const std::optional<std::string>& csi_span() const { return csi_span_; }
  const std::optional<Recipe>& recipe() const { return recipe_; }
  const TemplateOptions& options() const { return opts_; }
  const std::string& template_version() const { return template_version_; }

 private:
  PromptSpec() = default;

  Strategy strategy_ = Strategy::Baseline;
  std::string dish_name_;
  std::optional<std::string> csi_span_;
  std::optional<Recipe> recipe_;
  TemplateOptions opts_;
  std::string template_version_;
};

std::string render(const PromptSpec& spec);

struct ParsedResponse {
  std::string translation;
  bool parse_warning = false;
  // Options listed in a three-way answer, in order; empty otherwise.
  std::vector<std::string> options;
};

// Throws std::invalid_argument on an empty or whitespace-only response.
ParsedResponse parse_response(Strategy strategy, std::string_view raw);

struct PromptRecord {
  std::string entry_id;
  Strategy strategy = Strategy::Baseline;
  std::string prompt_text;
  std::string template_version;

  bool operator==(const PromptRecord&) const = default;
};

ojson to_json(const PromptRecord& r);
std::vector<PromptRecord> load_prompts(const std::filesystem::path& path);
void save_prompts(std::span<const PromptRecord> records, const std::filesystem::path& path);

}  // namespace menucsi
