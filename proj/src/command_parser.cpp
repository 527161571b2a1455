#include "handover/command_parser.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "handover/error.hpp"
#include "handover/scene.hpp"

namespace handover {

std::string to_string(Holder h) {
  switch (h) {
    case Holder::kRobot: return "robot";
    case Holder::kHuman: return "human";
    case Holder::kNone: return "none";
  }
  return "none";
}

Holder holder_from_string(const std::string& s) {
  if (s == "robot") return Holder::kRobot;
  if (s == "human") return Holder::kHuman;
  if (s == "none") return Holder::kNone;
  throw Error(ErrorCode::kParse, "unknown holder '" + s + "'");
}

void Lexicon::validate() const {
  for (const auto& s : self_referents)
    if (part_nouns.count(s)) throw Error(ErrorCode::kInvalidArgument, "'" + s + "' is both a self-referent and a part noun");
}

bool Lexicon::is_gerund(const std::string& w) const {
  return w.size() > 4 && w.compare(w.size() - 3, 3, "ing") == 0 && action_verbs.count(w);
}

const Lexicon& default_lexicon() {
  static const Lexicon lex = [] {
    Lexicon l;
    for (const auto& t : default_catalog()) {
      l.object_nouns.insert(t.name);
      for (const auto& s : t.synonyms) l.object_nouns.insert(s);
    }
    for (const char* w : {"clamp",  "can",   "hammer", "plane", "bottle", "pan",  "knife", "apple", "orange",
                          "spoon",  "fork",  "plate",  "book",  "pen",    "pencil", "phone", "ball",  "box",
                          "wrench", "brush", "lemon",  "peach", "plum",   "marker", "sponge", "kettle", "jar",
                          "tape",   "spatula", "ladle", "remote", "toothbrush"})
      l.object_nouns.insert(w);
    l.part_nouns = {"handle", "handles", "tip",  "shaft",   "stem",   "rim",   "body",  "head", "blade", "blades",
                    "lid",    "base",    "side", "middle",  "battery", "cap",  "neck",  "spout", "bottom", "top",
                    "edge",   "grip",    "end",  "lip",     "trigger", "barrel", "jaw", "jaws", "point", "leaves"};
    l.action_verbs = {"give",     "hand",     "pass",    "deliver", "grab",    "grabbing", "hold",   "holding",
                      "want",     "get",      "bring",   "take",    "taking",  "grasp",    "grasping", "pick",
                      "picking",  "fetch",    "reach",   "carry",   "carrying", "gripping", "need",   "use",
                      "using",    "keep",     "catch",   "touch",   "touching", "put",     "lift",   "lifting"};
    l.determiners = {"the", "a", "an", "this", "that", "these", "those", "its", "your", "his", "her", "their",
                     "some", "any", "our", "another"};
    l.function_words = {"to",   "over",  "by",     "with",  "from",  "at",   "on",    "in",    "of",    "for",
                        "so",   "and",   "can",    "could", "would", "will", "please", "then", "up",    "down",
                        "into", "onto",  "just",   "now",   "you",   "it",   "is",    "be",    "but",   "because",
                        "while", "let",  "here",   "there", "we",    "he",   "she",   "they",  "should", "may",
                        "might", "must", "am", "are", "have", "quickly", "carefully", "gently", "also", "too", "me"};
    return l;
  }();
  return lex;
}

Lexicon lexicon_from_json(const nlohmann::json& j) {
  Lexicon l;
  auto set_of = [&](const char* key, std::set<std::string>& dst) {
    if (j.contains(key)) dst = j.at(key).get<std::set<std::string>>();
  };
  set_of("object_nouns", l.object_nouns);
  set_of("part_nouns", l.part_nouns);
  set_of("self_referents", l.self_referents);
  set_of("action_verbs", l.action_verbs);
  set_of("determiners", l.determiners);
  set_of("function_words", l.function_words);
  l.validate();
  return l;
}

nlohmann::json to_json(const Lexicon& l) {
  return {{"object_nouns", l.object_nouns}, {"part_nouns", l.part_nouns},         {"self_referents", l.self_referents},
          {"action_verbs", l.action_verbs}, {"determiners", l.determiners},       {"function_words", l.function_words}};
}

Lexicon load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  try {
    return lexicon_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, path + ": " + e.what());
  }
}

namespace {
const std::map<std::string, std::string> kContractions{
    {"ll", "will"}, {"d", "would"}, {"m", "am"}, {"ve", "have"}, {"re", "are"}};
}  // namespace

std::vector<std::string> tokenize(const std::string& utterance) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) return;
    if (cur.size() > 2 && cur.compare(cur.size() - 2, 2, "'s") == 0) {
      out.push_back(cur.substr(0, cur.size() - 2));
      out.push_back("'s");
    } else if (const auto apos = cur.find('\''); apos != std::string::npos && apos > 0 &&
               kContractions.count(cur.substr(apos + 1))) {
      out.push_back(cur.substr(0, apos));
      out.push_back(kContractions.at(cur.substr(apos + 1)));
    } else {
      // Stray apostrophes ("hammer'") carry no meaning here.
      cur.erase(std::remove(cur.begin(), cur.end(), '\''), cur.end());
      if (!cur.empty()) out.push_back(cur);
    }
    cur.clear();
  };
  for (unsigned char ch : utterance) {
    if (std::isalnum(ch) || ch == '\'') {
      cur.push_back(static_cast<char>(std::tolower(ch)));
    } else if (ch == ',' || ch == ';') {
      flush();
      out.push_back(",");
    } else {
      flush();
    }
  }
  flush();
  return out;
}

namespace {

struct Span {
  size_t begin = 0, end = 0;  // tokens [begin, end)
  size_t noun_begin = 0;
};

std::string join(const std::vector<std::string>& t, size_t b, size_t e) {
  std::string s;
  for (size_t i = b; i < e; ++i) {
    if (i > b) s += ' ';
    s += t[i];
  }
  return s;
}

// Longest object phrase starting at i, 0 if none.
size_t match_at(const std::vector<std::string>& t, size_t i, const Lexicon& lex) {
  for (size_t len = std::min<size_t>(4, t.size() - i); len >= 1; --len) {
    const std::string phrase = join(t, i, i + len);
    // "can" the noun vs. "can" the auxiliary: bare function words never match.
    if (len == 1 && lex.function_words.count(phrase)) continue;
    if (lex.object_nouns.count(phrase)) return len;
  }
  return 0;
}

bool is_open_word(const std::string& w, const Lexicon& lex) {
  if (w == "," || w == "'s") return false;
  return !lex.determiners.count(w) && !lex.function_words.count(w) && !lex.self_referents.count(w) &&
         !lex.action_verbs.count(w) && !lex.part_nouns.count(w) && !lex.object_nouns.count(w);
}

// All object phrases in order of appearance.
std::vector<Span> object_spans(const std::vector<std::string>& t, const Lexicon& lex) {
  std::vector<Span> spans;
  size_t i = 0;
  while (i < t.size()) {
    size_t len = match_at(t, i, lex);
    if (len == 0) {
      ++i;
      continue;
    }
    Span s;
    s.noun_begin = i;
    s.end = i + len;
    // A noun directly followed by another object noun is a modifier ("toy plane").
    while (s.end < t.size()) {
      const size_t next = match_at(t, s.end, lex);
      if (next == 0) break;
      s.noun_begin = s.end;
      s.end += next;
    }
    s.begin = i;
    while (s.begin > 0 && is_open_word(t[s.begin - 1], lex)) --s.begin;
    spans.push_back(s);
    i = s.end;
  }
  return spans;
}

std::optional<size_t> part_index(const std::vector<std::string>& t, const Span* object, const Lexicon& lex) {
  for (size_t i = 0; i < t.size(); ++i) {
    if (object && i >= object->begin && i < object->end) continue;
    if (lex.self_referents.count(t[i])) continue;
    if (lex.part_nouns.count(t[i])) return i;
  }
  return std::nullopt;
}

std::optional<Span> find_phrase(const std::vector<std::string>& t, const std::string& phrase, const Lexicon& lex) {
  const auto p = tokenize(phrase);
  if (p.empty() || p.size() > t.size()) return std::nullopt;
  for (size_t i = 0; i + p.size() <= t.size(); ++i)
    if (std::equal(p.begin(), p.end(), t.begin() + static_cast<long>(i))) {
      Span s{i, i + p.size(), i};
      for (const auto& sp : object_spans(t, lex))
        if (sp.begin == s.begin && sp.end == s.end) s.noun_begin = sp.noun_begin;
      return s;
    }
  return std::nullopt;
}

bool is_boundary(const std::string& w) {
  return w == "," || w == "so" || w == "and" || w == "then" || w == "because" || w == "but" || w == "while";
}

bool is_preposition(const std::string& w) {
  static const std::set<std::string> preps{"by", "with", "from", "at", "on", "in", "of", "for", "to", "into", "onto"};
  return preps.count(w) > 0;
}

Holder holder_cascade(const std::vector<std::string>& t, size_t p, const Lexicon& lex, bool& low_confidence) {
  low_confidence = false;
  size_t cb = p, ce = p + 1;
  while (cb > 0 && !is_boundary(t[cb - 1])) --cb;
  while (ce < t.size() && !is_boundary(t[ce])) ++ce;

  std::optional<size_t> verb;
  for (size_t i = p; i-- > cb;)
    if (lex.action_verbs.count(t[i])) {
      verb = i;
      break;
    }

  // (a) "by <gerund> ... part": the robot acts on the part.
  if (verb && *verb > cb && t[*verb - 1] == "by" && lex.is_gerund(t[*verb])) return Holder::kRobot;

  // (b) subject of the governing verb.
  if (verb) {
    static const std::set<std::string> subjects{"i", "you", "we", "he", "she", "they"};
    for (size_t i = *verb; i-- > cb;) {
      if (!subjects.count(t[i])) continue;
      if (lex.self_referents.count(t[i])) return Holder::kHuman;
      break;
    }
  }

  // (d) recipient plus possessive attachment ("give me the knife by its handle").
  const bool recipient = std::find(t.begin(), t.begin() + static_cast<long>(p), "me") != t.begin() + static_cast<long>(p);
  if (recipient && p > 0 && (t[p - 1] == "its" || t[p - 1] == "their")) return Holder::kHuman;

  // (c) imperative verb taking the part as its direct object.
  if (verb) {
    bool imperative = true;
    for (size_t i = cb; i < *verb; ++i)
      if (t[i] != "please" && t[i] != "now" && t[i] != "just") imperative = false;
    bool direct = true;
    for (size_t i = *verb + 1; i < p; ++i)
      if (is_preposition(t[i])) direct = false;
    if (imperative && direct) return Holder::kRobot;
  }

  low_confidence = true;
  return Holder::kRobot;
}

}  // namespace

std::string extract_object(const std::string& utterance, const Lexicon& lex) {
  const auto t = tokenize(utterance);
  if (t.empty()) throw Error(ErrorCode::kEmptyInput, "empty utterance");
  const auto spans = object_spans(t, lex);
  if (spans.empty()) throw Error(ErrorCode::kNoObject, "no known object in '" + utterance + "'");
  return join(t, spans.front().begin, spans.front().end);
}

std::optional<std::string> extract_part(const std::string& utterance, const std::string& object_phrase,
                                        const Lexicon& lex) {
  const auto t = tokenize(utterance);
  const auto span = find_phrase(t, object_phrase, lex);
  const auto p = part_index(t, span ? &*span : nullptr, lex);
  if (!p) return std::nullopt;
  return t[*p];
}

Holder infer_holder(const std::string& utterance, const std::string& part, const Lexicon& lex, bool* low_confidence) {
  const auto t = tokenize(utterance);
  const auto it = std::find(t.begin(), t.end(), part);
  if (it == t.end()) throw Error(ErrorCode::kInvalidArgument, "part '" + part + "' does not occur in the utterance");
  bool low = false;
  const Holder h = holder_cascade(t, static_cast<size_t>(it - t.begin()), lex, low);
  if (low_confidence) *low_confidence = low;
  return h;
}

ParsedCommand parse(const std::string& utterance, const Lexicon& lex) {
  const auto t = tokenize(utterance);
  if (t.empty()) throw Error(ErrorCode::kEmptyInput, "empty utterance");
  const auto spans = object_spans(t, lex);
  if (spans.empty()) throw Error(ErrorCode::kNoObject, "no known object in '" + utterance + "'");
  const Span& s = spans.front();
  ParsedCommand c;
  c.object_phrase = join(t, s.begin, s.end);
  c.object_noun = join(t, s.noun_begin, s.end);
  for (size_t i = s.begin; i < s.noun_begin; ++i) c.adjectives.push_back(t[i]);
  for (size_t k = 1; k < spans.size(); ++k)
    c.diagnostics.push_back("additional object phrase ignored: " + join(t, spans[k].begin, spans[k].end));
  if (const auto p = part_index(t, &s, lex)) {
    c.part = t[*p];
    c.holder = holder_cascade(t, *p, lex, c.low_confidence);
    if (c.low_confidence) c.diagnostics.push_back("holder defaulted to robot");
  }
  return c;
}

nlohmann::json to_json(const ParsedCommand& c) {
  return {{"object", c.object_phrase},
          {"object_noun", c.object_noun},
          {"adjectives", c.adjectives},
          {"part", c.part ? nlohmann::json(*c.part) : nlohmann::json(nullptr)},
          {"holder", to_string(c.holder)},
          {"low_confidence", c.low_confidence},
          {"diagnostics", c.diagnostics}};
}

ParsedCommand parsed_command_from_json(const nlohmann::json& j) {
  ParsedCommand c;
  c.object_phrase = j.at("object");
  c.object_noun = j.value("object_noun", c.object_phrase);
  c.adjectives = j.value("adjectives", std::vector<std::string>{});
  if (j.contains("part") && !j["part"].is_null()) c.part = j["part"].get<std::string>();
  c.holder = holder_from_string(j.at("holder"));
  c.low_confidence = j.value("low_confidence", false);
  c.diagnostics = j.value("diagnostics", std::vector<std::string>{});
  return c;
}

}  // namespace handover
