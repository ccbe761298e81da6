#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "eca/corpus.hpp"
#include "eca/evaluation.hpp"
#include "eca/montage.hpp"
#include "eca/prediction_document.hpp"
#include "eca/retrieval.hpp"
#include "eca/util.hpp"

#include "support.hpp"

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::string& args, const ecatest::TempDir& tmp) {
    const auto outFile = tmp.path() / "stdout.txt";
    const auto errFile = tmp.path() / "stderr.txt";
    const std::string command = std::string(ECA_BIN) + " " + args + " > " + outFile.string() +
                                " 2> " + errFile.string();
    const int status = std::system(command.c_str());
    CliResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = eca::read_file(outFile);
    result.err = eca::read_file(errFile);
    return result;
}

std::string fx(const std::string& name) { return ecatest::fixture(name).string(); }

}  // namespace

TEST_CASE("cli stats writes reports and mirrors them on stdout") {
    ecatest::TempDir tmp("cli_stats");
    const auto result =
        run_cli("stats " + fx("mini_eval.json") + " --out-dir " + tmp.path().string(), tmp);
    CHECK(result.exit_code == 0);
    CHECK(result.out.find("\"conversations\": 6") != std::string::npos);
    CHECK(result.out.find("\"emotional_utterances\": 13") != std::string::npos);
    CHECK(std::filesystem::exists(tmp.path() / "stats.json"));
    CHECK(std::filesystem::exists(tmp.path() / "emotion_histogram.csv"));
    CHECK(std::filesystem::exists(tmp.path() / "relative_positions.csv"));
    const auto csv = eca::read_file(tmp.path() / "emotion_histogram.csv");
    CHECK(csv.find("joy,3") != std::string::npos);
    CHECK(csv.find("neutral,14") != std::string::npos);
}

TEST_CASE("cli stats on a missing file fails with a diagnostic on stderr") {
    ecatest::TempDir tmp("cli_stats_bad");
    const auto result = run_cli("stats /definitely/not/here.json", tmp);
    CHECK(result.exit_code == 1);
    CHECK(result.out.empty());
    CHECK(!result.err.empty());
}

TEST_CASE("cli run: golden, degraded, and bad configs map to exit codes 0/2/1") {
    SUBCASE("golden run exits 0") {
        ecatest::TempDir tmp("cli_run");
        const auto result = run_cli("run --config " + fx("run_finetuned_self.json") +
                                        " --out-dir " + tmp.path().string(),
                                    tmp);
        CHECK(result.exit_code == 0);
        CHECK(eca::read_file(tmp.path() / "predictions.json") ==
              eca::read_file(ecatest::fixture("golden_finetuned_self.json")));
        CHECK(std::filesystem::exists(tmp.path() / "run.log"));
    }
    SUBCASE("degraded run exits 2 but writes the document") {
        ecatest::TempDir tmp("cli_degraded");
        const auto result = run_cli("run --config " + fx("run_finetuned_degraded.json") +
                                        " --out-dir " + tmp.path().string(),
                                    tmp);
        CHECK(result.exit_code == 2);
        CHECK(std::filesystem::exists(tmp.path() / "predictions.json"));
        CHECK(result.err.find("ev_02:3") != std::string::npos);
    }
    SUBCASE("bad config exits 1") {
        ecatest::TempDir tmp("cli_bad");
        eca::write_file(tmp.path() / "bad.json", "{\"approach\": \"icl\"}");
        const auto result =
            run_cli("run --config " + (tmp.path() / "bad.json").string(), tmp);
        CHECK(result.exit_code == 1);
        CHECK(!result.err.empty());
    }
}

TEST_CASE("cli evaluate prints micro and weighted F1 as the final lines") {
    ecatest::TempDir tmp("cli_eval");
    const auto result = run_cli("evaluate --gold " + fx("mini_eval.json") + " --pred " +
                                    fx("predictions_gold.json") + " --format csv --out-dir " +
                                    tmp.path().string(),
                                tmp);
    CHECK(result.exit_code == 0);
    const std::string tail = "F1: 1.0000\nw-avg F1: 1.0000\n";
    REQUIRE(result.out.size() >= tail.size());
    CHECK(result.out.substr(result.out.size() - tail.size()) == tail);
    CHECK(std::filesystem::exists(tmp.path() / "evaluation.csv"));
}

TEST_CASE("cli evaluate against the golden run matches in-process scoring") {
    ecatest::TempDir tmp("cli_eval2");
    const auto result = run_cli("evaluate --gold " + fx("mini_eval.json") + " --pred " +
                                    fx("golden_icl_self.json") + " --format json --out-dir " +
                                    tmp.path().string(),
                                tmp);
    CHECK(result.exit_code == 0);

    const auto corpus = eca::load_corpus(ecatest::fixture("mini_eval.json"));
    const auto document =
        eca::PredictionDocument::load(ecatest::fixture("golden_icl_self.json"));
    const auto scores = eca::score_pairs(eca::gold_pairs_of(corpus), eca::pairs_of(document));
    std::ostringstream expected;
    expected << "F1: " << eca::format_fixed(scores.micro.f1(), 4) << "\nw-avg F1: "
             << eca::format_fixed(scores.breakdown.weighted_f1, 4) << "\n";
    CHECK(result.out.find(expected.str()) != std::string::npos);
}

TEST_CASE("cli evaluate with mismatched conversations exits 1") {
    ecatest::TempDir tmp("cli_eval3");
    eca::write_file(tmp.path() / "pred.json",
                    "{\"conversations\": [{\"conversation_ID\": \"other\", \"emotions\": {}, "
                    "\"pairs\": []}]}");
    const auto result = run_cli("evaluate --gold " + fx("mini_eval.json") + " --pred " +
                                    (tmp.path() / "pred.json").string(),
                                tmp);
    CHECK(result.exit_code == 1);
    CHECK(!result.err.empty());
}

TEST_CASE("cli analyze-errors emits the confusion report") {
    ecatest::TempDir tmp("cli_confusion");
    const auto result = run_cli("analyze-errors --gold " + fx("mini_eval.json") + " --pred " +
                                    fx("predictions_gold.json") + " --format markdown --out-dir " +
                                    tmp.path().string(),
                                tmp);
    CHECK(result.exit_code == 0);
    CHECK(result.out.find("## Emotion recognition") != std::string::npos);
    // identity predictions: per-class F1 of a supported label is 1
    CHECK(result.out.find("| joy | 1.0000 | 1.0000 | 1.0000 | 3 |") != std::string::npos);
    CHECK(std::filesystem::exists(tmp.path() / "confusion.md"));
}

TEST_CASE("cli window prints bounds per utterance") {
    ecatest::TempDir tmp("cli_window");
    const auto result =
        run_cli("window " + fx("mini_eval.json") + " --conversation ev_04", tmp);
    CHECK(result.exit_code == 0);
    CHECK(result.out.find("ev_04 target 1: [1, 3] beginning") != std::string::npos);
    CHECK(result.out.find("ev_04 target 8: [3, 8] end") != std::string::npos);
    CHECK(result.out.find("ev_04 target 5: [1, 7] middle") != std::string::npos);
}

TEST_CASE("cli render prints an assembled prompt to stdout") {
    ecatest::TempDir tmp("cli_render");
    const auto result = run_cli("render --config " + fx("run_finetuned_self.json") +
                                    " --conversation ev_03 --target 1 --step emotion",
                                tmp);
    CHECK(result.exit_code == 0);
    CHECK(result.out.find("The old cinema on Main Street") != std::string::npos);
    CHECK(result.out.find("Emotion ::") != std::string::npos);
    CHECK(result.err.find("token estimate:") != std::string::npos);
}

TEST_CASE("cli validate reports findings") {
    ecatest::TempDir tmp("cli_validate");
    const auto clean = run_cli("validate --corpus " + fx("mini_eval.json") + " --pred " +
                                   fx("predictions_gold.json"),
                               tmp);
    CHECK(clean.exit_code == 0);
    CHECK(clean.out.find("0 finding(s)") != std::string::npos);

    eca::write_file(tmp.path() / "pred.json",
                    "{\"conversations\": [{\"conversation_ID\": \"ev_05\", \"emotions\": {\"99\": "
                    "\"joy\"}, \"pairs\": []}]}");
    const auto dirty = run_cli("validate --corpus " + fx("mini_eval.json") + " --pred " +
                                   (tmp.path() / "pred.json").string(),
                               tmp);
    CHECK(dirty.exit_code == 1);
    CHECK(dirty.out.find("out-of-range") != std::string::npos);
}

TEST_CASE("cli build-index reproduces the fixture indices") {
    ecatest::TempDir tmp("cli_build");
    // cassette already holds every embed/explain answer, so replay suffices
    nlohmann::json config;
    config["train_corpus"] = fx("mini_train.json");
    config["eval_corpus"] = fx("mini_eval.json");
    config["models"] = {{"chat", "chat-model"},
                        {"vision", "vision-model"},
                        {"embedding", "embed-model"}};
    config["backend"] = {{"kind", "replay"}, {"cassette", fx("cassette.json")}};
    nlohmann::json selection = nlohmann::json::array();
    for (int i = 1; i <= 12; ++i) {
        char id[8];
        std::snprintf(id, sizeof(id), "tr_%02d", i);
        selection.push_back(id);
    }
    config["selection"] = selection;
    config["out_dir"] = tmp.path().string();
    eca::write_file(tmp.path() / "config.json", config.dump(2));

    const auto conv = run_cli("build-index --config " + (tmp.path() / "config.json").string() +
                                  " --kind conversation",
                              tmp);
    CHECK(conv.exit_code == 0);
    CHECK(conv.out.find("\"records\": 12") != std::string::npos);

    const auto cause = run_cli("build-index --config " + (tmp.path() / "config.json").string() +
                                   " --kind cause",
                               tmp);
    CHECK(cause.exit_code == 0);

    const auto built = eca::load_cause_indices(tmp.path() / "cause_indices.json");
    const auto shipped = eca::load_cause_indices(ecatest::fixture("cause_indices.json"));
    for (const auto& [key, index] : shipped) {
        CHECK(built.at(key).records.size() == index.records.size());
    }
    const auto builtConv = eca::load_index(tmp.path() / "conversation_index.json");
    const auto shippedConv = eca::load_index(ecatest::fixture("conversation_index.json"));
    REQUIRE(builtConv.records.size() == shippedConv.records.size());
    for (size_t i = 0; i < builtConv.records.size(); ++i) {
        CHECK(builtConv.records[i].key == shippedConv.records[i].key);
        CHECK(builtConv.records[i].vector == shippedConv.records[i].vector);
    }
}

TEST_CASE("cli caption fills the cache from the cassette") {
    ecatest::TempDir tmp("cli_caption");
    nlohmann::json config;
    config["eval_corpus"] = fx("mini_eval.json");
    config["caption_batch_size"] = 2;
    config["models"] = {{"chat", "chat-model"},
                        {"vision", "vision-model"},
                        {"embedding", "embed-model"}};
    config["backend"] = {{"kind", "replay"}, {"cassette", fx("cassette.json")}};
    config["media_root"] = ecatest::fixture_dir().string();
    config["out_dir"] = tmp.path().string();
    eca::write_file(tmp.path() / "config.json", config.dump(2));

    const auto result =
        run_cli("caption --config " + (tmp.path() / "config.json").string(), tmp);
    CHECK(result.exit_code == 0);
    const auto cache = eca::load_caption_cache(tmp.path() / "captions.json");
    REQUIRE(cache.count("ev_01") == 1);
    CHECK(cache.at("ev_01").find("picnic") != std::string::npos);
    // conversations without videos get the placeholder caption
    CHECK(cache.at("ev_05") == "(no video content available)");
}
