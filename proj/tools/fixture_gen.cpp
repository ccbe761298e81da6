// Regenerates the bundled test fixtures: mini corpora, frame directories,
// retrieval indices, the recorded cassette, golden prediction documents, and
// prompt snapshots. Run from the repo root:
//
//   eca-fixture-gen [fixtures-dir]
//
// The outputs are committed; rerun this tool whenever templates, prompt
// rendering, or the fixture script tables change.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "eca/commands.hpp"
#include "eca/util.hpp"

namespace fs = std::filesystem;
using namespace eca;

namespace {

struct UttSpec {
    const char* speaker;
    const char* text;
    const char* emotion;
    const char* video = nullptr;
};

struct PairSpec {
    int emotion_utt;
    const char* label;
    int cause_utt;
};

Conversation make_conversation(const std::string& id, const std::vector<UttSpec>& utts,
                               const std::vector<PairSpec>& pairs) {
    Conversation conv;
    conv.id = id;
    int next = 1;
    for (const auto& spec : utts) {
        Utterance utt;
        utt.id = next++;
        utt.speaker = spec.speaker;
        utt.text = spec.text;
        utt.gold_emotion = parse_emotion_label(spec.emotion);
        if (spec.video) utt.video_ref = spec.video;
        conv.utterances.push_back(std::move(utt));
    }
    for (const auto& pair : pairs) {
        conv.gold_pairs.insert(EmotionCausePair{pair.emotion_utt,
                                                *parse_emotion_label(pair.label),
                                                pair.cause_utt});
    }
    return conv;
}

std::vector<Conversation> train_corpus() {
    std::vector<Conversation> corpus;
    corpus.push_back(make_conversation(
        "tr_01",
        {{"Alex", "We got the grant, the whole project is funded!", "joy"},
         {"Sam", "The committee sent the letter this morning.", "neutral"},
         {"Alex", "And still, Priya left the team before hearing it.", "sadness"}},
        {{1, "joy", 1}, {3, "sadness", 2}}));
    corpus.push_back(make_conversation(
        "tr_02",
        {{"Riley", "You borrowed my bike and returned it with a flat tire!", "anger"},
         {"Jordan", "I hit a nail near the construction site.", "neutral"},
         {"Riley", "At least the repair shop fixed it for free.", "joy"},
         {"Jordan", "They do that on Tuesdays.", "neutral"}},
        {{1, "anger", 1}, {3, "joy", 3}}));
    corpus.push_back(make_conversation(
        "tr_03",
        {{"Casey", "The lights went out in the whole building.", "neutral"},
         {"Morgan", "Wait, the elevator doors just opened by themselves?", "surprise"},
         {"Casey", "Maintenance is testing the backup power.", "neutral"},
         {"Morgan", "Good, the cake in the fridge survived the outage.", "joy"}},
        {{2, "surprise", 1}, {4, "joy", 3}}));
    corpus.push_back(make_conversation(
        "tr_04",
        {{"Priya", "My flight home got cancelled again.", "sadness"},
         {"Alex", "If the storm grows they might close the airport for days.", "fear"},
         {"Priya", "The airline rebooked me for Friday.", "neutral"}},
        {{1, "sadness", 1}, {2, "fear", 1}}));
    corpus.push_back(make_conversation(
        "tr_05",
        {{"Sam", "Someone left dishes in the sink for a week.", "neutral"},
         {"Riley", "There is mold growing on that pan, that is revolting.", "disgust"},
         {"Sam", "I will soak it tonight.", "neutral"},
         {"Riley", "Oh! The landlord just refunded our cleaning deposit!", "surprise"}},
        {{2, "disgust", 2}, {4, "surprise", 3}}));
    corpus.push_back(make_conversation(
        "tr_06",
        {{"Jordan", "The referee ignored the handball in the last minute.", "neutral"},
         {"Casey", "We lost the final because of that call, it is infuriating!", "anger"},
         {"Jordan", "There is always next season.", "neutral"}},
        {{2, "anger", 1}, {2, "anger", 2}}));
    corpus.push_back(make_conversation(
        "tr_07",
        {{"Morgan", "There is a huge spider right above your pillow.", "fear"},
         {"Priya", "Caught it in a cup, it is out the window now.", "joy"}},
        {{1, "fear", 1}, {2, "joy", 1}}));
    corpus.push_back(make_conversation(
        "tr_08",
        {{"Alex", "The results page is loading.", "neutral"},
         {"Sam", "Refresh it one more time.", "neutral"},
         {"Alex", "I missed the cutoff by two points.", "sadness"},
         {"Sam", "The appeals window opens on Monday.", "neutral"},
         {"Alex", "They changed the cutoff after we registered, that is unfair!", "anger"}},
        {{3, "sadness", 3}, {5, "anger", 4}}));
    corpus.push_back(make_conversation(
        "tr_09",
        {{"Casey", "My sister finally adopted the shelter dog!", "joy"},
         {"Riley", "The brown one from the photos?", "neutral"},
         {"Casey", "Wait, it already learned to open the fridge?", "surprise"}},
        {{1, "joy", 1}, {3, "surprise", 2}}));
    corpus.push_back(make_conversation(
        "tr_10",
        {{"Jordan", "Dinner is on me tonight.", "neutral"},
         {"Morgan", "You got the promotion, that is wonderful!", "joy"},
         {"Jordan", "Now I have to present to the board on Monday, and I freeze on stages.",
          "fear"},
         {"Morgan", "We can rehearse this weekend.", "neutral"}},
        {{2, "joy", 1}, {3, "fear", 2}, {3, "fear", 3}}));
    corpus.push_back(make_conversation(
        "tr_11",
        {{"Priya", "The fridge smells like something died in there.", "disgust"},
         {"Casey", "I forgot to tell you the freezer broke while you were away.", "sadness"},
         {"Priya", "Let us clean it out tonight.", "neutral"}},
        {{1, "disgust", 1}, {2, "sadness", 2}}));
    corpus.push_back(make_conversation(
        "tr_12",
        {{"Sam", "Back in spring you promised the attic would be cleared by June.", "neutral"},
         {"Alex", "The boxes belong to my cousin.", "neutral"},
         {"Sam", "The cousin moved out two years ago.", "neutral"},
         {"Alex", "He keeps saying he will pick them up.", "neutral"},
         {"Sam", "The inspector flagged the attic as a fire risk.", "neutral"},
         {"Alex", "I will call him tonight.", "neutral"},
         {"Sam", "You said that last month too.", "neutral"},
         {"Alex", "Fine, the broken promise from spring still makes me furious at myself!",
          "anger"}},
        {{8, "anger", 1}, {8, "anger", 8}}));
    return corpus;
}

std::vector<Conversation> eval_corpus() {
    std::vector<Conversation> corpus;
    corpus.push_back(make_conversation(
        "ev_01",
        {{"Alex", "A whole afternoon off, picnic by the lake!", "joy", "frames/ev_01_u1"},
         {"Sam", "I packed the sandwiches and the lemonade.", "neutral", "frames/ev_01_u2"},
         {"Alex", "Whoa, where did that frisbee come from?", "surprise", "frames/ev_01_u3"},
         {"Sam", "Everything landed on the blanket, we are lucky and I love it.", "joy",
          "frames/ev_01_u4"}},
        {{1, "joy", 1}, {3, "surprise", 2}, {4, "joy", 4}}));
    corpus.push_back(make_conversation(
        "ev_02",
        {{"Riley", "You promised to water my plants and every single one is dry!", "anger"},
         {"Jordan", "I lost the spare key you gave me.", "neutral"},
         {"Riley", "If the orchids are dead I am afraid nothing will bring them back.", "fear"},
         {"Jordan", "I feel terrible about the whole thing.", "sadness"},
         {"Riley", "The fern by the window looks fine.", "neutral"},
         {"Jordan", "Then let me replant the rest this weekend, I would genuinely enjoy that.",
          "joy"}},
        {{1, "anger", 1}, {1, "anger", 2}, {3, "fear", 2}, {3, "fear", 3}, {4, "sadness", 4}}));
    corpus.push_back(make_conversation(
        "ev_03",
        {{"Casey", "The old cinema on Main Street closed for good last night.", "sadness"}},
        {{1, "sadness", 1}}));
    corpus.push_back(make_conversation(
        "ev_04",
        {{"Morgan", "The hike starts at the north gate.", "neutral"},
         {"Priya", "Someone dumped trash all along the trailhead, disgusting.", "disgust"},
         {"Morgan", "Rangers will haul it out on Friday.", "neutral"},
         {"Priya", "The trail map says six kilometers.", "neutral"},
         {"Morgan", "Six? The flyer promised three, whoever wrote it wasted our whole morning!",
          "anger"},
         {"Priya", "We can take the shortcut past the falls.", "neutral"},
         {"Morgan", "The falls path reopened?", "neutral"},
         {"Priya", "No way, there is a family of otters in the pool!", "surprise"}},
        {{2, "disgust", 2}, {5, "anger", 3}, {5, "anger", 5}, {8, "surprise", 7}}));
    corpus.push_back(make_conversation(
        "ev_05",
        {{"Sam", "The bus leaves at nine.", "neutral"},
         {"Alex", "Platform four, same as always.", "neutral"},
         {"Sam", "I will bring the tickets.", "neutral"}},
        {}));
    corpus.push_back(make_conversation(
        "ev_06",
        {{"Jordan", "I signed us up for the midnight kayak tour.", "neutral"},
         {"Casey", "Midnight? On the bay? That is actually happening?", "surprise"},
         {"Jordan", "They hand out glow sticks and the water sparkles.", "neutral"},
         {"Casey", "I keep imagining tipping over in the dark water.", "fear"},
         {"Jordan", "The guides keep everyone close to shore.", "neutral"}},
        {{2, "surprise", 1}, {4, "fear", 3}, {4, "fear", 4}}));
    return corpus;
}

void write_frames(const fs::path& root) {
    const struct {
        const char* dir;
        int frames;
        int utt;
    } specs[] = {
        {"frames/ev_01_u1", 10, 1},
        {"frames/ev_01_u2", 9, 2},
        {"frames/ev_01_u3", 13, 3},
        {"frames/ev_01_u4", 1, 4},
    };
    for (const auto& spec : specs) {
        const fs::path dir = root / spec.dir;
        fs::create_directories(dir);
        for (int f = 0; f < spec.frames; ++f) {
            Image frame = Image::solid(
                48, 36, static_cast<std::uint8_t>((40 * spec.utt + 12 * f) % 256),
                static_cast<std::uint8_t>((90 + 9 * f) % 256),
                static_cast<std::uint8_t>((60 * spec.utt + 5 * f) % 256));
            char name[32];
            std::snprintf(name, sizeof(name), "frame_%03d.png", f);
            save_png(frame, dir / name);
        }
    }
}

// Deterministic stand-in for a production model stack: embeddings hash the
// input text, chat answers come from per-utterance script tables.
class ScriptedBackend : public Backend {
public:
    ScriptedBackend() {
        label_overrides_ = {{"ev_02:4", "neutral"}, {"ev_06:2", "joy"}};
        emotion_raw_overrides_ = {
            {"ev_01:2", "I think this one is calm.\nEmotion :: Neutral."},
            {"ev_04:5", "emotion::anger"},
        };
        cause_scripts_ = {
            {"ev_01:1", "[1]"},
            {"ev_01:3", "causes: [2]"},
            {"ev_01:4", "none"},
            {"ev_02:1", "[1, 2]"},
            {"ev_02:3", "[2, 3]"},
            {"ev_02:4", "[4]"},  // reached only when gold emotions drive the cause step
            {"ev_02:6", "none"},
            {"ev_03:1", "[1]"},
            {"ev_04:2", "[2]"},
            {"ev_04:5", "The causes are [3, 5]."},
            {"ev_04:8", "[7]"},
            {"ev_06:2", "[1]"},
            {"ev_06:4", "[3, 9]"},
        };
        vision_scripts_ = {
            {"ev_01:1", "Four friends spread a blanket in a sunny park and unpack a basket."},
            {"ev_01:2", "A frisbee flies in from the left while the group reaches for plates."},
            {"ev_01:3", "The basket tips over and everyone flinches back from the spill."},
            {"ev_01:4", "They laugh together while picking sandwiches off the blanket."},
        };
        stitch_scripts_ = {
            {"ev_01",
             "Four friends picnic by a lake; a stray frisbee tips the basket, startling them, "
             "and they laugh while gathering the food back onto the blanket."},
        };
        for (const auto& conv : eval_corpus()) {
            for (const auto& utt : conv.utterances) {
                gold_labels_[conv.id + ":" + std::to_string(utt.id)] =
                    std::string(to_string(*utt.gold_emotion));
            }
        }
    }

    ModelResponse complete(const ModelRequest& request) override {
        ModelResponse response;
        response.kind = request.kind;
        if (request.kind == RequestKind::embedding) {
            response.embedding = embed(request.input_text);
            return response;
        }
        const std::string& tag = request.trace_tag;
        const auto after = [&](const std::string& prefix) {
            return tag.substr(prefix.size());
        };
        if (tag.rfind("emotion:", 0) == 0) {
            const std::string key = after("emotion:");
            const auto raw = emotion_raw_overrides_.find(key);
            if (raw != emotion_raw_overrides_.end()) {
                response.content = raw->second;
            } else {
                const auto label = label_overrides_.count(key) ? label_overrides_.at(key)
                                                               : gold_labels_.at(key);
                response.content = "Emotion :: " + label;
            }
        } else if (tag.rfind("cause:", 0) == 0) {
            response.content = cause_scripts_.at(after("cause:"));
        } else if (tag.rfind("vision:", 0) == 0) {
            response.content = vision_scripts_.at(after("vision:"));
        } else if (tag.rfind("stitch:", 0) == 0) {
            response.content = stitch_scripts_.at(after("stitch:"));
        } else if (tag.rfind("explain-emotion:", 0) == 0) {
            response.content =
                "The neutral lines carry plain information, while each annotated utterance in " +
                after("explain-emotion:") +
                " signals its emotion through exclamations or loaded wording.";
        } else if (tag.rfind("explain-cause:", 0) == 0) {
            response.content =
                "For " + after("explain-cause:") +
                ", the listed causes are the utterances that introduce or restate the "
                "triggering event inside the window, including the target when it voices the "
                "trigger itself.";
        } else {
            throw BackendError("scripted backend cannot answer tag '" + tag + "'", 0, "");
        }
        return response;
    }

    std::string describe() const override { return "scripted"; }

    static std::vector<float> embed(const std::string& text) {
        std::mt19937_64 rng(fnv1a64(text));
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        std::vector<float> vec(8);
        for (auto& v : vec) {
            v = static_cast<float>(std::round(dist(rng) * 10000.0) / 10000.0);
        }
        return vec;
    }

private:
    std::map<std::string, std::string> gold_labels_;
    std::map<std::string, std::string> label_overrides_;
    std::map<std::string, std::string> emotion_raw_overrides_;
    std::map<std::string, std::string> cause_scripts_;
    std::map<std::string, std::string> vision_scripts_;
    std::map<std::string, std::string> stitch_scripts_;
};

void write_run_config(const fs::path& path, const std::string& approach, bool selfCauses,
                      bool captions) {
    nlohmann::json doc;
    doc["eval_corpus"] = "mini_eval.json";
    doc["train_corpus"] = "mini_train.json";
    doc["approach"] = approach;
    doc["use_video_captions"] = captions;
    doc["add_self_causes"] = selfCauses;
    doc["max_attempts"] = 3;
    doc["caption_batch_size"] = 2;
    doc["models"] = {{"chat", "chat-model"},
                     {"vision", "vision-model"},
                     {"embedding", "embed-model"}};
    doc["backend"] = {{"kind", "replay"}, {"cassette", "cassette.json"}};
    if (approach == "icl") {
        doc["index"] = {{"conversation", "conversation_index.json"},
                        {"causes", "cause_indices.json"},
                        {"payloads", "payloads.json"}};
    }
    doc["media_root"] = ".";
    write_file(path, doc.dump(2) + "\n");
}

PipelineConfig pipeline_config(const fs::path& fixtures, const std::string& approach,
                               bool selfCauses, bool captions) {
    PipelineConfig config;
    config.approach = *parse_approach(approach);
    config.use_video_captions = captions;
    config.add_self_causes = selfCauses;
    config.max_attempts = 3;
    config.caption_batch_size = 2;
    config.chat_model = "chat-model";
    config.vision_model = "vision-model";
    config.embedding_model = "embed-model";
    config.media_root = fixtures;
    if (config.approach == Approach::icl) {
        config.conversation_index =
            std::make_shared<VectorIndex>(load_index(fixtures / "conversation_index.json"));
        config.cause_indices = std::make_shared<std::map<IndexKey, VectorIndex>>(
            load_cause_indices(fixtures / "cause_indices.json"));
        config.payloads =
            std::make_shared<PayloadStore>(PayloadStore::load(fixtures / "payloads.json"));
    }
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path fixtures = argc > 1 ? fs::path(argv[1]) : fs::path("tests/fixtures");
    fs::create_directories(fixtures);

    const auto train = train_corpus();
    const auto eval = eval_corpus();
    save_corpus(train, fixtures / "mini_train.json");
    save_corpus(eval, fixtures / "mini_eval.json");
    write_frames(fixtures);

    const TemplateSet templates = TemplateSet::load(TemplateSet::default_dir());

    // Phase A: record everything the pipelines and index builds request.
    const fs::path cassettePath = fixtures / "cassette.json";
    fs::remove(cassettePath);
    ScriptedBackend scripted;
    CassetteBackend recorder(CassetteMode::record, cassettePath, &scripted);
    std::map<std::string, std::vector<std::string>> digests_by_tag;
    recorder.on_record = [&](const std::string& digest, const ModelRequest& request) {
        digests_by_tag[request.trace_tag].push_back(digest);
    };

    // Index building goes through the same routine the CLI subcommand uses,
    // so the recorded digests match later replayed builds exactly.
    {
        RunConfig buildConfig;
        buildConfig.train_corpus = fixtures / "mini_train.json";
        buildConfig.chat_model = "chat-model";
        buildConfig.vision_model = "vision-model";
        buildConfig.embedding_model = "embed-model";
        buildConfig.conversation_index = fixtures / "conversation_index.json";
        buildConfig.cause_indices = fixtures / "cause_indices.json";
        buildConfig.payloads = fixtures / "payloads.json";
        buildConfig.out_dir = fixtures;
        for (const auto& conv : train) buildConfig.selection.push_back(conv.id);
        fs::remove(buildConfig.payloads);
        run_index_build(buildConfig, recorder, templates, "conversation", true);
        run_index_build(buildConfig, recorder, templates, "cause", true);
    }

    const struct {
        const char* name;
        const char* approach;
        bool self;
        bool captions;
    } configs[] = {
        {"finetuned_self", "finetuned_chat", true, false},
        {"finetuned_noself", "finetuned_chat", false, false},
        {"icl_self", "icl", true, true},
        {"icl_noself", "icl", false, true},
    };
    for (const auto& spec : configs) {
        const PipelineConfig config =
            pipeline_config(fixtures, spec.approach, spec.self, spec.captions);
        run_pipeline(eval, config, recorder, templates);
    }
    {
        // gold-emotion ablation run, recorded so replays can isolate the
        // self-cause post-processing effect from emotion mistakes
        PipelineConfig config = pipeline_config(fixtures, "finetuned_chat", false, false);
        config.use_gold_emotions = true;
        run_pipeline(eval, config, recorder, templates);
    }

    // Phase B: the cassette is complete; produce goldens via the exact replay
    // path the CLI uses so future replays match byte for byte.
    for (const auto& spec : configs) {
        write_run_config(fixtures / (std::string("run_") + spec.name + ".json"), spec.approach,
                         spec.self, spec.captions);
    }
    for (const auto& spec : configs) {
        RunConfig config = RunConfig::load(fixtures / (std::string("run_") + spec.name + ".json"));
        config.out_dir = fixtures / ".golden_tmp";
        const RunOutcome outcome = run_from_config(config, std::cerr);
        if (outcome.exit_code != 0) {
            std::cerr << "fixture-gen: golden run " << spec.name << " exited "
                      << outcome.exit_code << "\n";
            return 1;
        }
        fs::copy_file(outcome.document_path,
                      fixtures / (std::string("golden_") + spec.name + ".json"),
                      fs::copy_options::overwrite_existing);
    }
    fs::remove_all(fixtures / ".golden_tmp");

    // Degraded cassette: drop the recorded emotion answer for ev_02:3 so a
    // replay run exhausts retries there and exits 2.
    {
        auto entries = nlohmann::json::parse(read_file(cassettePath));
        const auto tagged = digests_by_tag.find("emotion:ev_02:3");
        if (tagged == digests_by_tag.end()) {
            std::cerr << "fixture-gen: no recorded digests for emotion:ev_02:3\n";
            return 1;
        }
        for (const auto& digest : tagged->second) entries.erase(digest);
        write_file(fixtures / "cassette_degraded.json", entries.dump(2) + "\n");
        nlohmann::json doc;
        doc["eval_corpus"] = "mini_eval.json";
        doc["approach"] = "finetuned_chat";
        doc["add_self_causes"] = true;
        doc["max_attempts"] = 3;
        doc["models"] = {{"chat", "chat-model"},
                         {"vision", "vision-model"},
                         {"embedding", "embed-model"}};
        doc["backend"] = {{"kind", "replay"}, {"cassette", "cassette_degraded.json"}};
        write_file(fixtures / "run_finetuned_degraded.json", doc.dump(2) + "\n");
    }

    // A prediction document equal to gold, for scorer fixtures.
    {
        PredictionDocument document;
        document.provenance.approach = "gold";
        for (const auto& conv : eval) {
            ConversationPrediction prediction;
            prediction.conversation_id = conv.id;
            for (const auto& utt : conv.utterances) {
                prediction.emotions[utt.id] = *utt.gold_emotion;
            }
            prediction.pairs = conv.gold_pairs;
            document.conversations.push_back(std::move(prediction));
        }
        document.save(fixtures / "predictions_gold.json");
    }

    // Prompt snapshots guard rendering against accidental drift.
    {
        const Conversation& ev02 = eval[1];
        const Conversation& ev04 = eval[3];
        const Demonstration demo{"1. Alex (joy): We won the game!",
                                 "Utterance 1 shows joy because winning delights Alex."};
        const std::string caption = "Two friends celebrate near a scoreboard.";
        std::map<UttId, EmotionLabel> ev02gold, ev04gold;
        for (const auto& utt : ev02.utterances) ev02gold[utt.id] = *utt.gold_emotion;
        for (const auto& utt : ev04.utterances) ev04gold[utt.id] = *utt.gold_emotion;

        write_file(fixtures / "snapshot_emotion_llama.txt",
                   render_emotion_prompt(ev02, 3, PromptMode::llama, templates).text);
        write_file(fixtures / "snapshot_emotion_icl.txt",
                   render_emotion_prompt(ev02, 3, PromptMode::gpt_icl, templates, demo, caption)
                       .text);
        write_file(fixtures / "snapshot_cause_llama.txt",
                   render_cause_prompt(ev02, 3, {1, ev02.size()}, ev02gold, PromptMode::llama,
                                       templates)
                       .text);
        const auto window = extract_window(ev04, 5);
        write_file(fixtures / "snapshot_cause_icl.txt",
                   render_cause_prompt(ev04, 5, {window.first_utt_id, window.last_utt_id},
                                       ev04gold, PromptMode::gpt_icl, templates, demo, caption)
                       .text);
    }

    std::cout << "fixtures written to " << fixtures.string() << "\n";
    return 0;
}
