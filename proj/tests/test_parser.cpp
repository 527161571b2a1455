#include <gtest/gtest.h>

#include <cctype>

#include "handover/command_parser.hpp"
#include "handover/error.hpp"

using namespace handover;

namespace {

struct Row {
  const char* sentence;
  const char* object;
  std::optional<std::string> part;
  Holder holder;
};

const Row kRows[] = {
    {"Give me the wooden hammer.", "wooden hammer", std::nullopt, Holder::kNone},
    {"Hand over the cup to me.", "cup", std::nullopt, Holder::kNone},
    {"Pass the toy plane over.", "toy plane", std::nullopt, Holder::kNone},
    {"I want the orange", "orange", std::nullopt, Holder::kNone},
    {"Hand me the mustard bottle by grabbing the tip.", "mustard bottle", "tip", Holder::kRobot},
    {"Grab the screwdriver's shaft.", "screwdriver", "shaft", Holder::kRobot},
    {"Deliver me the frying pan so I can hold the handle.", "frying pan", "handle", Holder::kHuman},
    {"I want to hold the apple by the stem.", "apple", "stem", Holder::kHuman},
    {"Give me the knife by its handle.", "knife", "handle", Holder::kHuman},
};

class ReferenceSentences : public ::testing::TestWithParam<Row> {};

}  // namespace

TEST_P(ReferenceSentences, Parse) {
  const Row& r = GetParam();
  const ParsedCommand c = parse(r.sentence);
  EXPECT_EQ(c.object_phrase, r.object);
  EXPECT_EQ(c.part, r.part);
  EXPECT_EQ(c.holder, r.holder);
}

INSTANTIATE_TEST_SUITE_P(Parser, ReferenceSentences, ::testing::ValuesIn(kRows),
                         [](const ::testing::TestParamInfo<Row>& info) {
                           std::string name = "row" + std::to_string(info.index) + "_";
                           for (const char* c = info.param.object; *c; ++c)
                             name += std::isalnum(static_cast<unsigned char>(*c)) ? *c : '_';
                           return name;
                         });

TEST(Parser, Tokenize) {
  EXPECT_EQ(tokenize("Grab the screwdriver's shaft."), (std::vector<std::string>{"grab", "the", "screwdriver", "'s", "shaft"}));
  EXPECT_EQ(tokenize("  Hi, THERE!  "), (std::vector<std::string>{"hi", ",", "there"}));
  EXPECT_EQ(tokenize("I'll hold it"), (std::vector<std::string>{"i", "will", "hold", "it"}));
}

TEST(Parser, ContractedSelfReferent) {
  const ParsedCommand c = parse("give me the mug, I'll hold the handle");
  EXPECT_EQ(c.object_noun, "mug");
  EXPECT_EQ(c.part, "handle");
  EXPECT_EQ(c.holder, Holder::kHuman);
}

TEST(Parser, AdjectivesStayWithTheObject) {
  const ParsedCommand c = parse("give me the red flashlight");
  EXPECT_EQ(c.object_phrase, "red flashlight");
  EXPECT_EQ(c.object_noun, "flashlight");
  EXPECT_EQ(c.adjectives, std::vector<std::string>{"red"});
  EXPECT_FALSE(c.part);
}

TEST(Parser, HolderVariants) {
  EXPECT_EQ(parse("Hand me the mug and I want to hold the handle").holder, Holder::kHuman);
  EXPECT_EQ(parse("Pick up the mug by the handle").holder, Holder::kRobot);
  EXPECT_EQ(parse("Give me the mug so I can hold the handle").part, "handle");
}

TEST(Parser, Errors) {
  try {
    parse("   ");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyInput);
  }
  try {
    parse("give me that thing");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoObject);
  }
}

TEST(Parser, JsonRoundTrip) {
  const ParsedCommand c = parse("Give me the knife by its handle.");
  EXPECT_EQ(parsed_command_from_json(to_json(c)), c);
  EXPECT_EQ(holder_from_string(to_string(Holder::kHuman)), Holder::kHuman);
}

TEST(Parser, LexiconRejectsOverlap) {
  Lexicon lex = default_lexicon();
  lex.part_nouns.insert("me");
  EXPECT_THROW(lex.validate(), Error);
  const Lexicon back = lexicon_from_json(to_json(default_lexicon()));
  EXPECT_EQ(back.object_nouns, default_lexicon().object_nouns);
}
