#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace menucsi {

// Closed set of prompt strategies. Recipe* variants carry a retrieved recipe.
enum class Strategy {
  Baseline,
  Recipe,
  RecipeEtT,
  Equivalents,
  Neutralisation,
  RecipeEquivalents,
  RecipeNeutralisation,
  Cultural,
  Descriptive,
  Functional,
  RecipeCultural,
  RecipeDescriptive,
  RecipeFunctional,
};

inline constexpr std::array<Strategy, 13> kAllStrategies = {
    Strategy::Baseline,          Strategy::Recipe,           Strategy::RecipeEtT,
    Strategy::Equivalents,       Strategy::Neutralisation,   Strategy::RecipeEquivalents,
    Strategy::RecipeNeutralisation, Strategy::Cultural,      Strategy::Descriptive,
    Strategy::Functional,        Strategy::RecipeCultural,   Strategy::RecipeDescriptive,
    Strategy::RecipeFunctional,
};

// Machine name used in JSONL files and on the command line, e.g. "recipe_equivalents".
std::string_view strategy_id(Strategy s);
// Row label in report tables, e.g. "Recipe + Equivalents".
std::string_view strategy_label(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view id);

bool uses_recipe(Strategy s);
// Strategies whose answer is a numbered list of three options plus a BEST selection.
bool selects_among_three(Strategy s);

}  // namespace menucsi
