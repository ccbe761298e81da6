#include <doctest.h>

#include <random>

#include "eca/errors.hpp"
#include "eca/prompting.hpp"

#include "support.hpp"

using namespace eca;

namespace {

const TemplateSet& templates() {
    static const TemplateSet set = TemplateSet::load(TemplateSet::default_dir());
    return set;
}

Conversation three_line_conversation() {
    Conversation conv;
    conv.id = "t1";
    conv.utterances = {
        {1, "Ana", "The parade starts at noon.", {}, {}, EmotionLabel::neutral},
        {2, "Ben", "I finally found my costume!", {}, {}, EmotionLabel::joy},
        {3, "Ana", "You will melt in that fur suit.", {}, {}, EmotionLabel::neutral},
    };
    return conv;
}

size_t count_occurrences(const std::string& text, const std::string& needle) {
    size_t count = 0;
    for (size_t pos = text.find(needle); pos != std::string::npos;
         pos = text.find(needle, pos + 1)) {
        ++count;
    }
    return count;
}

}  // namespace

TEST_CASE("PromptTemplate renders by pure substitution") {
    PromptTemplate tmpl{TemplateName::llama_emotion, "A {conversation} B {emotion} C"};
    CHECK(tmpl.render({{"conversation", "X"}, {"emotion", "joy"}}) == "A X B joy C");
    CHECK_THROWS_AS(tmpl.render({{"conversation", "X"}}), PlaceholderError);

    // values containing brace syntax are not re-expanded
    PromptTemplate loop{TemplateName::llama_emotion, "{conversation}"};
    CHECK(loop.render({{"conversation", "{emotion}"}}) == "{emotion}");
}

TEST_CASE("template files reject unknown placeholders") {
    ecatest::TempDir tmp("templates");
    for (TemplateName name :
         {TemplateName::llama_emotion, TemplateName::llama_cause, TemplateName::gpt_emotion_icl,
          TemplateName::gpt_cause_icl, TemplateName::emotion_explanation,
          TemplateName::cause_explanation, TemplateName::video_caption,
          TemplateName::caption_stitch}) {
        write_file(tmp.path() / (std::string(to_string(name)) + ".txt"), "ok {conversation}");
    }
    write_file(tmp.path() / "llama_emotion.txt", "bad {definitely_not_a_placeholder}");
    CHECK_THROWS_AS(TemplateSet::load(tmp.path()), PlaceholderError);
}

TEST_CASE("emotion prompt includes every line and the instruction block") {
    const auto conv = three_line_conversation();
    const auto prompt = render_emotion_prompt(conv, 2, PromptMode::llama, templates());
    CHECK(prompt.text.find("1. Ana: The parade starts at noon.") != std::string::npos);
    CHECK(prompt.text.find("2. Ben: I finally found my costume!") != std::string::npos);
    CHECK(prompt.text.find("3. Ana: You will melt in that fur suit.") != std::string::npos);
    CHECK(prompt.text.find("Emotion ::") != std::string::npos);
    CHECK(prompt.text.find("Ana, Ben") != std::string::npos);
    CHECK(prompt.token_estimate == default_token_estimate(prompt.text));

    // deterministic rendering
    const auto again = render_emotion_prompt(conv, 2, PromptMode::llama, templates());
    CHECK(prompt.text == again.text);
}

TEST_CASE("gpt_icl emotion prompt orders demonstration, explanation, caption, query") {
    const auto conv = three_line_conversation();
    const Demonstration demo{"DEMO-BLOCK", "EXPLANATION-BLOCK"};
    const auto prompt = render_emotion_prompt(conv, 2, PromptMode::gpt_icl, templates(), demo,
                                              std::string("CAPTION-BLOCK"));
    const auto posDemo = prompt.text.find("DEMO-BLOCK");
    const auto posExpl = prompt.text.find("EXPLANATION-BLOCK");
    const auto posCaption = prompt.text.find("CAPTION-BLOCK");
    const auto posQuery = prompt.text.find("1. Ana: The parade starts at noon.");
    REQUIRE(posDemo != std::string::npos);
    REQUIRE(posExpl != std::string::npos);
    REQUIRE(posCaption != std::string::npos);
    REQUIRE(posQuery != std::string::npos);
    CHECK(posDemo < posExpl);
    CHECK(posExpl < posCaption);
    CHECK(posCaption < posQuery);
}

TEST_CASE("emotion prompt demonstration rules") {
    const auto conv = three_line_conversation();
    CHECK_THROWS_AS(render_emotion_prompt(conv, 2, PromptMode::gpt_icl, templates()),
                    MissingDemonstrationError);
    const Demonstration demo{"d", "e"};
    CHECK_THROWS_AS(render_emotion_prompt(conv, 2, PromptMode::llama, templates(), demo),
                    MissingDemonstrationError);
    CHECK_THROWS_AS(render_emotion_prompt(conv, 9, PromptMode::llama, templates()), RangeError);
}

TEST_CASE("cause prompt annotates lines and rejects neutral targets") {
    Conversation conv;
    conv.id = "c4";
    conv.utterances = {
        {1, "Ana", "We missed the last train.", {}, {}, {}},
        {2, "Ben", "And my phone just died.", {}, {}, {}},
        {3, "Ana", "The night bus still runs though!", {}, {}, {}},
        {4, "Ben", "You saved the whole evening.", {}, {}, {}},
    };
    const std::map<UttId, EmotionLabel> labels{{1, EmotionLabel::sadness},
                                               {2, EmotionLabel::anger},
                                               {3, EmotionLabel::joy},
                                               {4, EmotionLabel::joy}};
    const auto prompt = render_cause_prompt(conv, 3, {1, 4}, labels, PromptMode::llama,
                                            templates());
    CHECK(count_occurrences(prompt.text, "(sadness)") >= 1);
    CHECK(count_occurrences(prompt.text, "(anger)") >= 1);
    CHECK(count_occurrences(prompt.text, "(joy)") >= 2);

    const std::map<UttId, EmotionLabel> withNeutral{{1, EmotionLabel::neutral},
                                                    {2, EmotionLabel::anger},
                                                    {3, EmotionLabel::joy},
                                                    {4, EmotionLabel::neutral}};
    const auto mixed =
        render_cause_prompt(conv, 3, {1, 4}, withNeutral, PromptMode::llama, templates());
    // neutral lines stay bare
    CHECK(mixed.text.find("(neutral)") == std::string::npos);
    CHECK(mixed.text.find("1. Ana: We missed the last train.") != std::string::npos);

    CHECK_THROWS_AS(
        render_cause_prompt(conv, 1, {1, 4}, withNeutral, PromptMode::llama, templates()),
        NeutralTargetError);

    const std::map<UttId, EmotionLabel> partial{{3, EmotionLabel::joy}};
    CHECK_THROWS_AS(render_cause_prompt(conv, 3, {1, 4}, partial, PromptMode::llama, templates()),
                    PlaceholderError);
}

TEST_CASE("prompt snapshots stay stable") {
    const auto eval = load_corpus(ecatest::fixture("mini_eval.json"));
    const Conversation& ev02 = eval[1];
    const Conversation& ev04 = eval[3];
    const Demonstration demo{"1. Alex (joy): We won the game!",
                             "Utterance 1 shows joy because winning delights Alex."};
    const std::string caption = "Two friends celebrate near a scoreboard.";
    std::map<UttId, EmotionLabel> ev02gold, ev04gold;
    for (const auto& utt : ev02.utterances) ev02gold[utt.id] = *utt.gold_emotion;
    for (const auto& utt : ev04.utterances) ev04gold[utt.id] = *utt.gold_emotion;

    CHECK(render_emotion_prompt(ev02, 3, PromptMode::llama, templates()).text ==
          read_file(ecatest::fixture("snapshot_emotion_llama.txt")));
    CHECK(render_emotion_prompt(ev02, 3, PromptMode::gpt_icl, templates(), demo, caption).text ==
          read_file(ecatest::fixture("snapshot_emotion_icl.txt")));
    CHECK(render_cause_prompt(ev02, 3, {1, ev02.size()}, ev02gold, PromptMode::llama, templates())
              .text == read_file(ecatest::fixture("snapshot_cause_llama.txt")));
    const auto window = extract_window(ev04, 5);
    CHECK(render_cause_prompt(ev04, 5, {window.first_utt_id, window.last_utt_id}, ev04gold,
                              PromptMode::gpt_icl, templates(), demo, caption)
              .text == read_file(ecatest::fixture("snapshot_cause_icl.txt")));
}

TEST_CASE("parse_emotion follows the :: extraction rule") {
    CHECK(parse_emotion("Emotion :: joy").label == EmotionLabel::joy);
    CHECK(parse_emotion("the answer is:: Surprise!").label == EmotionLabel::surprise);
    CHECK_THROWS_AS(parse_emotion("I cannot determine this"), NoLabelError);

    // all seven labels after "::", case-insensitive, word-boundary
    for (EmotionLabel label : all_emotion_labels()) {
        const std::string name(to_string(label));
        std::string upper = name;
        upper[0] = static_cast<char>(std::toupper(upper[0]));
        CHECK(parse_emotion("Emotion :: " + name).label == label);
        CHECK(parse_emotion("Emotion :: " + upper + ".").label == label);
        CHECK(parse_emotion("prefix text :: maybe " + name + " overall").label == label);
    }

    // positional first match, not enum order
    CHECK(parse_emotion(":: sadness then joy").label == EmotionLabel::sadness);
    // word boundaries: embedded substrings do not count
    CHECK_THROWS_AS(parse_emotion(":: enjoyable, fearless"), NoLabelError);
    // fallback scan when no "::" anywhere
    CHECK(parse_emotion("label = fear").label == EmotionLabel::fear);
    // fallback scan when "::" exists but the label precedes it
    CHECK(parse_emotion("joy :: confirmed").label == EmotionLabel::joy);
}

TEST_CASE("parse_causes extracts and filters ids") {
    const std::set<UttId> valid{1, 2, 3, 4, 5};
    SUBCASE("bracketed list") {
        const auto parsed = parse_causes("[2, 4]", valid);
        CHECK(parsed.cause_ids == std::set<UttId>{2, 4});
        CHECK(parsed.filtered_out.empty());
    }
    SUBCASE("out-of-range ids are filtered and reported") {
        const auto parsed = parse_causes("causes: [2, 9]", valid);
        CHECK(parsed.cause_ids == std::set<UttId>{2});
        REQUIRE(parsed.filtered_out.size() == 1);
        CHECK(parsed.filtered_out[0] == 9);
    }
    SUBCASE("no cause") {
        CHECK(parse_causes("none", valid).cause_ids.empty());
        CHECK(parse_causes("[]", valid).cause_ids.empty());
    }
    SUBCASE("unterminated bracket means retry") {
        CHECK_THROWS_AS(parse_causes("[2, 4", valid), UnparseableError);
    }
    SUBCASE("bare integers without brackets") {
        CHECK(parse_causes("utterances 2 and 3 caused it", valid).cause_ids ==
              std::set<UttId>{2, 3});
    }
    SUBCASE("only the first bracketed list counts") {
        CHECK(parse_causes("[2] and also [4]", valid).cause_ids == std::set<UttId>{2});
    }
    SUBCASE("valid_ids must be non-empty") {
        CHECK_THROWS_AS(parse_causes("[1]", {}), RangeError);
    }
}

TEST_CASE("parse_causes output is always a subset of valid_ids") {
    std::mt19937 rng(9001);
    const std::string alphabet = "0123456789[],. abcnoneyes-";
    std::uniform_int_distribution<size_t> pick(0, alphabet.size() - 1);
    std::uniform_int_distribution<int> len(0, 40);
    const std::set<UttId> valid{2, 3, 5, 8};
    int parsed_count = 0;
    for (int i = 0; i < 1000; ++i) {
        std::string raw;
        const int n = len(rng);
        for (int j = 0; j < n; ++j) raw.push_back(alphabet[pick(rng)]);
        try {
            const auto parsed = parse_causes(raw, valid);
            ++parsed_count;
            for (UttId id : parsed.cause_ids) CHECK(valid.count(id) == 1);
        } catch (const UnparseableError&) {
            // broken bracket lists may request a retry; nothing else may throw
        }
    }
    CHECK(parsed_count > 0);
}

TEST_CASE("guard_token_budget") {
    RenderedPrompt big{TemplateName::llama_emotion, std::string(400, 'x'), 100, false, false};
    RenderedPrompt small{TemplateName::llama_emotion, "short", 2, false, false};

    SUBCASE("within budget passes through unchanged") {
        const auto result = guard_token_budget(small, 4096, [] {
            FAIL("fallback must not run");
            return RenderedPrompt{};
        });
        CHECK(result.text == "short");
        CHECK(!result.windowed);
        CHECK(!result.over_budget);
    }
    SUBCASE("over budget re-renders with the window") {
        const auto result = guard_token_budget(big, 50, [&] {
            return RenderedPrompt{TemplateName::llama_emotion, "windowed", 3, false, false};
        });
        CHECK(result.windowed);
        CHECK(!result.over_budget);
        CHECK(result.text == "windowed");
    }
    SUBCASE("still over budget is flagged") {
        const auto result = guard_token_budget(big, 10, [&] {
            return RenderedPrompt{TemplateName::llama_emotion, std::string(80, 'y'), 20, false,
                                  false};
        });
        CHECK(result.windowed);
        CHECK(result.over_budget);
    }
    SUBCASE("never increases the token estimate") {
        const auto result = guard_token_budget(big, 50, [&] {
            return RenderedPrompt{TemplateName::llama_emotion, std::string(999, 'z'), 250, false,
                                  false};
        });
        CHECK(result.token_estimate <= big.token_estimate);
        CHECK(result.over_budget);
    }
}

TEST_CASE("default token estimate is ceil(len/4)") {
    CHECK(default_token_estimate("") == 0);
    CHECK(default_token_estimate("abc") == 1);
    CHECK(default_token_estimate("abcd") == 1);
    CHECK(default_token_estimate("abcde") == 2);
}
