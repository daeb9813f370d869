#include "menucsi/strategy.hpp"

namespace menucsi {

namespace {

struct StrategyNames {
  Strategy strategy;
  std::string_view id;
  std::string_view label;
};

constexpr std::array<StrategyNames, 13> kNames = {{
    {Strategy::Baseline, "baseline", "Original"},
    {Strategy::Recipe, "recipe", "Recipe"},
    {Strategy::RecipeEtT, "recipe_ett", "Recipe + EtT"},
    {Strategy::Equivalents, "equivalents", "Equivalents"},
    {Strategy::Neutralisation, "neutralisation", "Neutralisation"},
    {Strategy::RecipeEquivalents, "recipe_equivalents", "Recipe + Equivalents"},
    {Strategy::RecipeNeutralisation, "recipe_neutralisation", "Recipe + Neutralisation"},
    {Strategy::Cultural, "cultural", "Cultural"},
    {Strategy::Descriptive, "descriptive", "Descriptive"},
    {Strategy::Functional, "functional", "Functional"},
    {Strategy::RecipeCultural, "recipe_cultural", "Recipe + Cultural"},
    {Strategy::RecipeDescriptive, "recipe_descriptive", "Recipe + Descriptive"},
    {Strategy::RecipeFunctional, "recipe_functional", "Recipe + Functional"},
}};

const StrategyNames& names(Strategy s) {
  return kNames[static_cast<std::size_t>(s)];
}

}  // namespace

std::string_view strategy_id(Strategy s) { return names(s).id; }

std::string_view strategy_label(Strategy s) { return names(s).label; }

std::optional<Strategy> parse_strategy(std::string_view id) {
  for (const auto& n : kNames) {
    if (n.id == id) return n.strategy;
  }
  return std::nullopt;
}

bool uses_recipe(Strategy s) {
  switch (s) {
    case Strategy::Recipe:
    case Strategy::RecipeEtT:
    case Strategy::RecipeEquivalents:
    case Strategy::RecipeNeutralisation:
    case Strategy::RecipeCultural:
    case Strategy::RecipeDescriptive:
    case Strategy::RecipeFunctional:
      return true;
    default:
      return false;
  }
}

bool selects_among_three(Strategy s) {
  return s == Strategy::Equivalents || s == Strategy::RecipeEquivalents;
}

}  // namespace menucsi
