#include "genearl/labels.hpp"

#include <cctype>
#include <map>
#include <regex>

#include "genearl/error.hpp"
#include "genearl/ontology.hpp"
#include "genearl/text.hpp"

namespace genearl {

namespace {

constexpr std::string_view kCurlyQuotes[] = {"\xE2\x80\x9C", "\xE2\x80\x9D", "\xE2\x80\x98",
                                             "\xE2\x80\x99"};

bool strip_one(std::string_view& s, bool front) {
  if (s.empty()) return false;
  const unsigned char c = front ? s.front() : s.back();
  if (std::isspace(c) || std::ispunct(c)) {
    front ? s.remove_prefix(1) : s.remove_suffix(1);
    return true;
  }
  for (auto q : kCurlyQuotes) {
    if (front && s.substr(0, q.size()) == q) {
      s.remove_prefix(q.size());
      return true;
    }
    if (!front && s.size() >= q.size() && s.substr(s.size() - q.size()) == q) {
      s.remove_suffix(q.size());
      return true;
    }
  }
  return false;
}

std::string_view strip_decoration(std::string_view s) {
  while (strip_one(s, true)) {
  }
  while (strip_one(s, false)) {
  }
  return s;
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

struct Span {
  std::size_t begin;
  std::size_t end;
};

std::vector<Span> whole_word_spans(const std::string& haystack, const std::string& needle) {
  std::vector<Span> spans;
  if (needle.empty()) return spans;
  for (std::size_t pos = haystack.find(needle); pos != std::string::npos;
       pos = haystack.find(needle, pos + 1)) {
    const std::size_t end = pos + needle.size();
    const bool left_ok = pos == 0 || !is_word_char(haystack[pos - 1]) || !is_word_char(needle.front());
    const bool right_ok =
        end == haystack.size() || !is_word_char(haystack[end]) || !is_word_char(needle.back());
    if (left_ok && right_ok) spans.push_back({pos, end});
  }
  return spans;
}

}  // namespace

std::string normalize_answer(std::string_view raw, const std::vector<std::string>& vocabulary,
                             std::string_view fallback) {
  const std::string_view core = strip_decoration(raw);
  for (const auto& v : vocabulary) {
    if (text::iequals(core, v)) return v;
  }

  const std::string hay = text::to_lower(raw);
  struct Match {
    const std::string* name;
    std::vector<Span> spans;
  };
  std::vector<Match> matches;
  for (const auto& v : vocabulary) {
    if (text::iequals(v, kOtherLabel) || text::trim(v).empty()) continue;
    auto spans = whole_word_spans(hay, text::to_lower(v));
    if (!spans.empty()) matches.push_back({&v, std::move(spans)});
  }
  // A match counts only if some occurrence is not inside a longer match.
  std::vector<const std::string*> standing;
  for (const auto& m : matches) {
    bool free_occurrence = false;
    for (const auto& s : m.spans) {
      bool covered = false;
      for (const auto& other : matches) {
        if (&other == &m || other.name->size() <= m.name->size()) continue;
        for (const auto& o : other.spans) {
          if (o.begin <= s.begin && s.end <= o.end) covered = true;
        }
      }
      if (!covered) free_occurrence = true;
    }
    if (free_occurrence) standing.push_back(m.name);
  }
  if (standing.size() == 1) return *standing.front();
  return std::string(fallback);
}

std::string normalize_label(std::string_view raw, const std::vector<std::string>& vocabulary) {
  return normalize_answer(raw, vocabulary, kOtherLabel);
}

ParsedLabels parse_labels_detailed(std::string_view response, std::size_t expected_count,
                                   const std::vector<std::string>& vocabulary) {
  if (expected_count == 0) throw ValidationError("parse_labels needs expected_count >= 1");
  static const std::regex header(R"(argument\s+role\s+of\s+object\s*#?\s*(\d*)\s*[*_]*\s*[:\-])",
                                 std::regex::icase);

  ParsedLabels out;
  std::map<std::size_t, std::string> answers;  // 1-based slot -> raw answer
  LabelSource source = LabelSource::Pattern;
  const auto lines = text::split_lines(response);

  std::size_t next_unnumbered = 1;
  bool any_header = false;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const std::string& line = lines[li];
    std::vector<std::smatch> found;
    for (auto it = std::sregex_iterator(line.begin(), line.end(), header);
         it != std::sregex_iterator(); ++it) {
      found.push_back(*it);
    }
    for (std::size_t k = 0; k < found.size(); ++k) {
      any_header = true;
      const auto& m = found[k];
      const std::size_t start = static_cast<std::size_t>(m.position(0) + m.length(0));
      const std::size_t stop =
          k + 1 < found.size() ? static_cast<std::size_t>(found[k + 1].position(0)) : line.size();
      std::string answer = text::trim(std::string_view(line).substr(start, stop - start));
      // "Argument Role of Object 1:" followed by the answer on the next line.
      if (strip_decoration(answer).empty() && found.size() == 1) {
        for (std::size_t nj = li + 1; nj < lines.size(); ++nj) {
          if (text::trim(lines[nj]).empty()) continue;
          if (!std::regex_search(lines[nj], header)) answer = text::trim(lines[nj]);
          break;
        }
      }
      std::size_t index = 0;
      if (m[1].length() > 0) {
        try {
          index = std::stoul(m[1].str());
        } catch (const std::exception&) {
          index = 0;
        }
      } else {
        index = next_unnumbered++;
      }
      if (index == 0) {
        out.warnings.push_back("ignored answer for object 0");
      } else if (index > expected_count) {
        out.warnings.push_back("dropped answer for object " + std::to_string(index) + " (only " +
                               std::to_string(expected_count) + " expected)");
      } else if (answers.count(index)) {
        out.warnings.push_back("duplicate answer for object " + std::to_string(index) +
                               "; keeping the first");
      } else {
        answers[index] = answer;
      }
    }
  }

  if (!any_header) {
    static const std::regex list_marker(R"(^\s*(?:[-*]|\d+[.)])\s*)");
    std::vector<std::string> content;
    for (const auto& line : lines) {
      if (!text::trim(line).empty()) content.push_back(text::trim(line));
    }
    if (!content.empty()) {
      source = LabelSource::Positional;
      out.warnings.push_back("no answer lines found; reading answers by position");
      for (std::size_t i = 0; i < content.size() && i < expected_count; ++i) {
        answers[i + 1] =
            std::regex_replace(content[i], list_marker, "", std::regex_constants::format_first_only);
      }
      if (content.size() > expected_count) {
        out.warnings.push_back("dropped " + std::to_string(content.size() - expected_count) +
                               " extra lines");
      }
    } else {
      out.warnings.push_back("empty response");
    }
  }

  for (std::size_t i = 1; i <= expected_count; ++i) {
    auto it = answers.find(i);
    if (it == answers.end()) {
      if (!lines.empty() && !text::trim(response).empty()) {
        out.warnings.push_back("no answer for object " + std::to_string(i) + "; using Other");
      }
      out.labels.emplace_back(kOtherLabel);
      out.sources.push_back(LabelSource::Missing);
      out.raw_answers.emplace_back();
      continue;
    }
    std::string label = normalize_label(it->second, vocabulary);
    if (text::iequals(label, kOtherLabel) && !text::iequals(strip_decoration(it->second), kOtherLabel)) {
      out.warnings.push_back("object " + std::to_string(i) + ": answer '" + it->second +
                             "' is not a legal role; using Other");
    }
    out.labels.push_back(std::move(label));
    out.sources.push_back(source);
    out.raw_answers.push_back(it->second);
  }
  return out;
}

std::vector<std::string> parse_labels(std::string_view response, std::size_t expected_count,
                                      const std::vector<std::string>& vocabulary) {
  return parse_labels_detailed(response, expected_count, vocabulary).labels;
}

}  // namespace genearl
