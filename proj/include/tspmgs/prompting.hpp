#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tspmgs {

enum class TaskKind { perception, alignment };

enum class PromptScheme { antonym, adjective, adverb };

std::string_view to_string(TaskKind task);
std::string_view to_string(PromptScheme scheme);
TaskKind parse_task(std::string_view text);
PromptScheme parse_scheme(std::string_view text);

/// Number of quality levels L a scheme produces with the built-in level words.
int levels_of(PromptScheme scheme);

/// True when the scheme is meant for the task: adverb for alignment,
/// antonym/adjective for perception.
bool scheme_valid_for(PromptScheme scheme, TaskKind task);

/// The built-in quality-level words, worst first.
const std::vector<std::string>& level_words(PromptScheme scheme);

/// Task-specific sentences for one image. sentences[0] describes the worst
/// quality level and sentences.back() the best.
struct PromptSet {
  TaskKind task = TaskKind::perception;
  PromptScheme scheme = PromptScheme::adjective;
  std::vector<std::string> sentences;
  std::string initial_prompt;

  int levels() const { return static_cast<int>(sentences.size()); }
};

struct PromptOptions {
  /// Replaces the built-in level words when nonempty; L becomes its size.
  std::vector<std::string> custom_levels;
  /// Allows antonym/adjective on alignment and adverb on perception. Only the
  /// ablation driver turns this on.
  bool allow_cross_task = false;
};

/// Instantiates the scheme's template once per quality level. The initial
/// prompt is inserted verbatim.
///
/// Throws ConfigError on a scheme/task mismatch or a custom level list with
/// fewer than two entries, and InputError on an empty initial prompt.
PromptSet build_prompts(TaskKind task, PromptScheme scheme, const std::string& initial_prompt,
                        const PromptOptions& options = {});

/// The template sentence for a single level word.
std::string instantiate(PromptScheme scheme, std::string_view level_word,
                        std::string_view initial_prompt);

}  // namespace tspmgs
