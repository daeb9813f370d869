#include <array>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "menucsi/prompt.hpp"

namespace menucsi::assets {
namespace {

using Asset = std::pair<std::string_view, std::string_view>;

// Wording of the recipe-context, three-way and single-strategy instructions and of the four
// strategy definitions is fixed; the remaining assets are local.
constexpr std::array<Asset, 16> kAssets = {{
    {"recipe_context", "Similiar Recipe: {recipe_instructions}."},
    {"recipe_note",
     "The recipe above is for {recipe_name}. It may not correspond exactly to the dish below, "
     "but it contains the culture-specific items to translate."},
    {"instruction_translate", "Translate the Chinese dish name {dish_name} into English."},
    {"instruction_recipe_translate",
     "Based on the above recipe information, translate the Chinese dish name {dish_name} into English."},
    {"instruction_ett",
     "Based on the above recipe information, first explain the meaning of the culture-specific items "
     "{csi_span} in the Chinese dish name {dish_name}. Then translate {dish_name} into English."},
    {"instruction_three_recipe",
     "Based on the above recipe information, provide three translations for {dish_name} based on the "
     "three translation strategies listed below and select the best one:"},
    {"instruction_three",
     "Provide three translations for {dish_name} based on the three translation strategies listed "
     "below and select the best one:"},
    {"instruction_single_recipe",
     "Based on the above recipe information, provide a translation for {dish_name} with the following "
     "translation strategy:"},
    {"instruction_single",
     "Provide a translation for {dish_name} with the following translation strategy:"},
    {"def_cultural",
     "Cultural Equivalent: Substituting a source language term with a term from the target language "
     "that has similar cultural resonance and functionality."},
    {"def_functional",
     "Functional Equivalent: Rendering the source language's meaning, intent, and style into the "
     "target language in a culturally appropriate and understandable way. This strategy prioritizes "
     "the effect and function of the text in the target culture over a word-for-word translation, "
     "ensuring the translation fulfills the same purpose as the original."},
    {"def_descriptive",
     "Descriptive Equivalent: Providing an in-depth explanation of a term or concept that lacks a "
     "straightforward equivalent in the target language. The explanation could include details such "
     "as ingredients, culinary method, key characteristics, etc."},
    {"def_neutralisation",
     "Menu Description Strategy: This strategy involves using culturally neutral language to describe "
     "or explain a cultural word, phrase, or rhetorical expression from the source text (ST). It "
     "answers the question, 'What is this?' and is similar to converting a metaphor to its literal "
     "meaning. The translations should include the key culinary method, ingredients, and "
     "characteristics."},
    {"trailer_final",
     "Write the English translation on the last line of your answer, in the form:\n"
     "FINAL: <translation>"},
    {"trailer_best",
     "List the three translations in the order given above, one per line, in the form:\n"
     "1. <Cultural Equivalent translation>\n"
     "2. <Functional Equivalent translation>\n"
     "3. <Descriptive Equivalent translation>\n"
     "Then give the number of the best one on a line in the form:\n"
     "BEST: <number>\n"
     "and write the selected translation on the last line of your answer, in the form:\n"
     "FINAL: <translation>"},
    {"typo_fixes", "Similiar\tSimilar"},
}};

}  // namespace

std::string_view get(std::string_view name) {
  for (const auto& [key, text] : kAssets) {
    if (key == name) return text;
  }
  throw std::out_of_range("unknown prompt asset: " + std::string(name));
}

std::vector<std::string_view> names() {
  std::vector<std::string_view> out;
  out.reserve(kAssets.size());
  for (const auto& asset : kAssets) out.push_back(asset.first);
  return out;
}

}  // namespace menucsi::assets
