#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace handover {

enum class Holder { kNone, kRobot, kHuman };

std::string to_string(Holder h);
Holder holder_from_string(const std::string& s);

struct ParsedCommand {
  std::string object_phrase;             // T_O, adjectives included
  std::string object_noun;               // the lexicon phrase inside T_O
  std::vector<std::string> adjectives;   // words of T_O before the noun
  std::optional<std::string> part;       // T_P
  Holder holder = Holder::kNone;         // T_H
  bool low_confidence = false;           // holder fell through to the default
  std::vector<std::string> diagnostics;  // e.g. extra object phrases

  bool operator==(const ParsedCommand& o) const {
    return object_phrase == o.object_phrase && part == o.part && holder == o.holder;
  }
};

struct Lexicon {
  std::set<std::string> object_nouns;  // may contain multi-word phrases
  std::set<std::string> part_nouns;
  std::set<std::string> self_referents{"i", "me", "myself", "my"};
  std::set<std::string> action_verbs;
  std::set<std::string> determiners;
  std::set<std::string> function_words;  // prepositions, particles, auxiliaries, connectives

  void validate() const;
  bool is_gerund(const std::string& w) const;
};

/// Household nouns (including every catalog name and synonym), common part
/// nouns and handover verbs.
const Lexicon& default_lexicon();

Lexicon lexicon_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Lexicon& lex);
Lexicon load_lexicon(const std::string& path);

/// Lowercase words; punctuation other than commas dropped; "x's" -> "x", "'s".
std::vector<std::string> tokenize(const std::string& utterance);

std::string extract_object(const std::string& utterance, const Lexicon& lex);
std::optional<std::string> extract_part(const std::string& utterance, const std::string& object_phrase,
                                        const Lexicon& lex);
/// Holder for a part-bearing utterance; sets `low_confidence` when no rule fires.
Holder infer_holder(const std::string& utterance, const std::string& part, const Lexicon& lex,
                    bool* low_confidence = nullptr);

ParsedCommand parse(const std::string& utterance, const Lexicon& lex = default_lexicon());

nlohmann::json to_json(const ParsedCommand& c);
ParsedCommand parsed_command_from_json(const nlohmann::json& j);

}  // namespace handover
