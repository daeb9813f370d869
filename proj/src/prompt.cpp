#include "menucsi/prompt.hpp"

#include <array>
#include <stdexcept>

#include "json_fields.hpp"
#include "menucsi/cache.hpp"
#include "menucsi/text.hpp"

namespace menucsi {
namespace {

constexpr std::string_view kParagraphBreak = "\n\n";

std::string apply_typo_fixes(std::string s) {
  std::string_view fixes = assets::get("typo_fixes");
  std::size_t pos = 0;
  while (pos < fixes.size()) {
    std::size_t eol = fixes.find('\n', pos);
    if (eol == std::string_view::npos) eol = fixes.size();
    std::string_view row = fixes.substr(pos, eol - pos);
    pos = eol + 1;
    std::size_t tab = row.find('\t');
    if (tab == std::string_view::npos) continue;
    std::string_view from = row.substr(0, tab);
    std::string_view to = row.substr(tab + 1);
    for (std::size_t at = s.find(from); at != std::string::npos; at = s.find(from, at + to.size())) {
      s.replace(at, from.size(), to);
    }
  }
  return s;
}

std::vector<std::string_view> paragraphs_for(Strategy s) {
  switch (s) {
    case Strategy::Baseline:
      return {"instruction_translate"};
    case Strategy::Recipe:
      return {"recipe_context", "recipe_note", "instruction_recipe_translate"};
    case Strategy::RecipeEtT:
      return {"recipe_context", "recipe_note", "instruction_ett"};
    case Strategy::Equivalents:
      return {"instruction_three", "def_cultural", "def_functional", "def_descriptive"};
    case Strategy::RecipeEquivalents:
      return {"recipe_context", "instruction_three_recipe", "def_cultural", "def_functional", "def_descriptive"};
    case Strategy::Neutralisation:
      return {"instruction_single", "def_neutralisation"};
    case Strategy::RecipeNeutralisation:
      return {"recipe_context", "instruction_single_recipe", "def_neutralisation"};
    case Strategy::Cultural:
      return {"instruction_single", "def_cultural"};
    case Strategy::Descriptive:
      return {"instruction_single", "def_descriptive"};
    case Strategy::Functional:
      return {"instruction_single", "def_functional"};
    case Strategy::RecipeCultural:
      return {"recipe_context", "instruction_single_recipe", "def_cultural"};
    case Strategy::RecipeDescriptive:
      return {"recipe_context", "instruction_single_recipe", "def_descriptive"};
    case Strategy::RecipeFunctional:
      return {"recipe_context", "instruction_single_recipe", "def_functional"};
  }
  throw std::logic_error("unhandled strategy");
}

// Single left-to-right pass so placeholder-like text inside values is never re-expanded.
std::string expand(std::string_view tmpl, const PromptSpec& spec) {
  std::string out;
  out.reserve(tmpl.size() + 256);
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      std::size_t close = tmpl.find('}', i);
      if (close != std::string_view::npos) {
        std::string_view name = tmpl.substr(i + 1, close - i - 1);
        const std::string* value = nullptr;
        if (name == "dish_name") {
          value = &spec.dish_name();
        } else if (name == "csi_span") {
          value = spec.csi_span() ? &*spec.csi_span() : &spec.dish_name();
        } else if (name == "recipe_name" && spec.recipe()) {
          value = &spec.recipe()->name;
        } else if (name == "recipe_instructions" && spec.recipe()) {
          value = &spec.recipe()->instructions;
        }
        if (value != nullptr) {
          out += *value;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i]);
    ++i;
  }
  return out;
}

std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t eol = s.find('\n', pos);
    if (eol == std::string_view::npos) eol = s.size();
    std::string_view line = s.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = eol + 1;
  }
  return lines;
}

std::string_view strip_emphasis(std::string_view s) {
  while (!s.empty() && (s.front() == '*' || s.front() == '#' || s.front() == ' ')) s.remove_prefix(1);
  return s;
}

// Value after `marker` (case-insensitive, optional markdown emphasis), or nullopt.
std::optional<std::string> marker_value(std::string_view line, std::string_view marker) {
  std::string trimmed = text::trim(line);
  std::string_view rest = strip_emphasis(trimmed);
  if (rest.size() < marker.size()) return std::nullopt;
  if (text::ascii_lower(rest.substr(0, marker.size())) != text::ascii_lower(marker)) return std::nullopt;
  rest.remove_prefix(marker.size());
  while (!rest.empty() && rest.front() == '*') rest.remove_prefix(1);
  std::string value = text::trim(rest);
  while (!value.empty() && value.back() == '*') value.pop_back();
  return text::trim(value);
}

// "2. text" or "2) text" → (2, text); labels like "Functional Equivalent:" are dropped.
std::optional<std::pair<int, std::string>> numbered_option(std::string_view line) {
  std::string trimmed = text::trim(line);
  std::string_view rest = strip_emphasis(trimmed);
  if (rest.size() < 2 || rest[0] < '1' || rest[0] > '3' || (rest[1] != '.' && rest[1] != ')')) return std::nullopt;
  int n = rest[0] - '0';
  rest.remove_prefix(2);
  std::string value = text::trim(rest);
  for (std::string_view label : {"Cultural Equivalent", "Functional Equivalent", "Descriptive Equivalent"}) {
    std::string_view v = strip_emphasis(value);
    if (v.size() > label.size() && text::ascii_lower(v.substr(0, label.size())) == text::ascii_lower(label)) {
      std::string_view after = v.substr(label.size());
      while (!after.empty() && after.front() == '*') after.remove_prefix(1);
      if (!after.empty() && after.front() == ':') {
        after.remove_prefix(1);
        while (!after.empty() && after.front() == '*') after.remove_prefix(1);
        value = text::trim(after);
      }
      break;
    }
  }
  if (value.empty()) return std::nullopt;
  return std::pair{n, value};
}

}  // namespace

std::string template_text(Strategy s, const TemplateOptions& opts) {
  std::string out;
  for (std::string_view name : paragraphs_for(s)) {
    if (!out.empty()) out += kParagraphBreak;
    out += assets::get(name);
  }
  if (opts.output_trailer) {
    out += kParagraphBreak;
    out += assets::get(selects_among_three(s) ? "trailer_best" : "trailer_final");
  }
  if (opts.fix_typos) out = apply_typo_fixes(std::move(out));
  return out;
}

std::string template_version(const TemplateOptions& opts) {
  std::string material;
  for (Strategy s : kAllStrategies) {
    material += strategy_id(s);
    material.push_back('\x1f');
    material += template_text(s, opts);
    material.push_back('\x1e');
  }
  return "tpl-" + sha256_hex(material).substr(0, 16);
}

PromptSpec PromptSpec::make(Strategy strategy, std::string dish_name, std::optional<std::string> csi_span,
                            std::optional<Recipe> recipe, const TemplateOptions& opts) {
  if (uses_recipe(strategy) && !recipe) {
    throw std::invalid_argument("strategy " + std::string(strategy_id(strategy)) + " requires a recipe");
  }
  if (!uses_recipe(strategy) && recipe) {
    throw std::invalid_argument("strategy " + std::string(strategy_id(strategy)) + " must not carry a recipe");
  }
  if (text::trim(dish_name).empty()) throw std::invalid_argument("dish name is empty");
  PromptSpec spec;
  spec.strategy_ = strategy;
  spec.dish_name_ = text::nfc(dish_name);
  if (csi_span && !text::trim(*csi_span).empty()) spec.csi_span_ = text::nfc(*csi_span);
  spec.recipe_ = std::move(recipe);
  spec.opts_ = opts;
  spec.template_version_ = menucsi::template_version(opts);
  return spec;
}

std::string render(const PromptSpec& spec) {
  return expand(template_text(spec.strategy(), spec.options()), spec);
}

ParsedResponse parse_response(Strategy strategy, std::string_view raw) {
  if (text::trim(raw).empty()) throw std::invalid_argument("empty response");
  std::vector<std::string_view> lines = split_lines(raw);

  ParsedResponse out;
  std::optional<std::string> final_value;
  for (std::string_view line : lines) {
    if (auto v = marker_value(line, "FINAL:"); v && !v->empty()) final_value = std::move(v);
  }

  if (selects_among_three(strategy)) {
    std::array<std::optional<std::string>, 3> opts;
    std::optional<int> best;
    for (std::string_view line : lines) {
      if (auto opt = numbered_option(line); opt && !opts[opt->first - 1]) {
        opts[opt->first - 1] = opt->second;
      }
      if (auto v = marker_value(line, "BEST:")) {
        std::string_view digits = *v;
        if (!digits.empty() && digits.front() >= '1' && digits.front() <= '3') best = digits.front() - '0';
      }
    }
    for (const auto& o : opts) {
      if (o) out.options.push_back(*o);
    }
    if (best && opts[*best - 1]) {
      out.translation = *opts[*best - 1];
      return out;
    }
    if (final_value) {
      out.translation = *final_value;
      return out;
    }
  } else if (final_value) {
    out.translation = *final_value;
    return out;
  }

  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    std::string t = text::trim(*it);
    if (!t.empty()) {
      out.translation = std::move(t);
      break;
    }
  }
  out.parse_warning = true;
  return out;
}

ojson to_json(const PromptRecord& r) {
  ojson j;
  j["entry_id"] = r.entry_id;
  j["strategy"] = strategy_id(r.strategy);
  j["prompt_text"] = r.prompt_text;
  j["template_version"] = r.template_version;
  return j;
}

std::vector<PromptRecord> load_prompts(const std::filesystem::path& path) {
  std::vector<PromptRecord> out;
  read_jsonl(path, [&](std::size_t line, const ojson& j) {
    try {
      PromptRecord r;
      r.entry_id = detail::get_string(j, "entry_id");
      std::string sid = detail::get_string(j, "strategy");
      auto s = parse_strategy(sid);
      if (!s) throw std::invalid_argument("unknown strategy '" + sid + "'");
      r.strategy = *s;
      r.prompt_text = detail::get_string(j, "prompt_text");
      r.template_version = detail::get_string(j, "template_version");
      out.push_back(std::move(r));
    } catch (const std::invalid_argument& e) {
      throw DataError(path.string(), line, j.value("entry_id", ""), e.what());
    }
  });
  return out;
}

void save_prompts(std::span<const PromptRecord> records, const std::filesystem::path& path) {
  std::vector<ojson> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(to_json(r));
  write_jsonl(path, rows);
}

}  // namespace menucsi
