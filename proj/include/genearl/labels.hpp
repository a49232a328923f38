#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace genearl {

// Maps free text onto `vocabulary`:
//   1. strip surrounding whitespace, punctuation and quotes, then match a
//      vocabulary entry case-insensitively;
//   2. otherwise, if exactly one entry occurs in the text as a whole word
//      (entries contained in a longer matching entry do not count), take it;
//   3. otherwise "Other".
// "Other" is always a legal result and never takes part in step 2.
std::string normalize_label(std::string_view raw, const std::vector<std::string>& vocabulary);

// As normalize_label, but an unmatched answer becomes `fallback`.
std::string normalize_answer(std::string_view raw, const std::vector<std::string>& vocabulary,
                             std::string_view fallback);

enum class LabelSource { Pattern, Positional, Missing };

struct ParsedLabels {
  std::vector<std::string> labels;        // exactly expected_count entries
  std::vector<LabelSource> sources;       // parallel to labels
  std::vector<std::string> raw_answers;   // text each label was read from
  std::vector<std::string> warnings;
};

// Reads one role per object from a labeling response. "Argument Role of
// Object i:" lines are matched first (case-insensitive; the unnumbered form
// fills slots in order). Only when no such line exists at all does the i-th
// non-empty line answer object i. Answers beyond expected_count are dropped,
// missing ones become "Other", and every answer goes through normalize_label.
// Each degradation adds a warning. Throws ValidationError if expected_count is 0.
ParsedLabels parse_labels_detailed(std::string_view response, std::size_t expected_count,
                                   const std::vector<std::string>& vocabulary);

std::vector<std::string> parse_labels(std::string_view response, std::size_t expected_count,
                                      const std::vector<std::string>& vocabulary);

}  // namespace genearl
