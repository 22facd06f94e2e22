#include "tspmgs/prompting.hpp"

#include <algorithm>
#include <cctype>
#include <string>

#include "tspmgs/errors.hpp"

namespace tspmgs {

std::string_view to_string(TaskKind task) {
  return task == TaskKind::perception ? "perception" : "alignment";
}

std::string_view to_string(PromptScheme scheme) {
  switch (scheme) {
    case PromptScheme::antonym:
      return "antonym";
    case PromptScheme::adjective:
      return "adjective";
    case PromptScheme::adverb:
      return "adverb";
  }
  return "unknown";
}

TaskKind parse_task(std::string_view text) {
  if (text == "perception" || text == "quality") return TaskKind::perception;
  if (text == "alignment" || text == "align") return TaskKind::alignment;
  throw ConfigError("unknown task '" + std::string(text) + "' (expected perception|alignment)");
}

PromptScheme parse_scheme(std::string_view text) {
  if (text == "antonym" || text == "ant") return PromptScheme::antonym;
  if (text == "adjective" || text == "adj") return PromptScheme::adjective;
  if (text == "adverb" || text == "adv") return PromptScheme::adverb;
  throw ConfigError("unknown prompt scheme '" + std::string(text) +
                    "' (expected antonym|adjective|adverb)");
}

const std::vector<std::string>& level_words(PromptScheme scheme) {
  static const std::vector<std::string> antonyms{"bad", "good"};
  static const std::vector<std::string> adjectives{"bad", "poor", "fair", "good", "perfect"};
  static const std::vector<std::string> adverbs{"badly", "poorly", "fairly", "well", "perfectly"};
  switch (scheme) {
    case PromptScheme::antonym:
      return antonyms;
    case PromptScheme::adjective:
      return adjectives;
    case PromptScheme::adverb:
      return adverbs;
  }
  return adjectives;
}

int levels_of(PromptScheme scheme) { return static_cast<int>(level_words(scheme).size()); }

bool scheme_valid_for(PromptScheme scheme, TaskKind task) {
  if (task == TaskKind::alignment) return scheme == PromptScheme::adverb;
  return scheme == PromptScheme::antonym || scheme == PromptScheme::adjective;
}

std::string instantiate(PromptScheme scheme, std::string_view level_word,
                        std::string_view initial_prompt) {
  std::string out;
  switch (scheme) {
    case PromptScheme::antonym:
      out.append(level_word).append(" photo.");
      break;
    case PromptScheme::adjective:
      out.append("A photo of ").append(level_word).append(" quality.");
      break;
    case PromptScheme::adverb:
      out.append("A photo that ")
          .append(level_word)
          .append(" matches ")
          .append(initial_prompt)
          .append(".");
      break;
  }
  return out;
}

PromptSet build_prompts(TaskKind task, PromptScheme scheme, const std::string& initial_prompt,
                        const PromptOptions& options) {
  if (!options.allow_cross_task && !scheme_valid_for(scheme, task)) {
    throw ConfigError("prompt scheme '" + std::string(to_string(scheme)) +
                      "' is not valid for the " + std::string(to_string(task)) + " task");
  }
  const bool blank = std::all_of(initial_prompt.begin(), initial_prompt.end(),
                                 [](unsigned char c) { return std::isspace(c) != 0; });
  if (blank) throw InputError("initial prompt is empty");

  const auto& words = options.custom_levels.empty() ? level_words(scheme) : options.custom_levels;
  if (words.size() < 2) throw ConfigError("a prompt scheme needs at least two quality levels");

  PromptSet set;
  set.task = task;
  set.scheme = scheme;
  set.initial_prompt = initial_prompt;
  set.sentences.reserve(words.size());
  for (const auto& w : words) set.sentences.push_back(instantiate(scheme, w, initial_prompt));
  return set;
}

}  // namespace tspmgs
