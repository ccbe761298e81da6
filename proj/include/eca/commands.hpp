#pragma once

#include <iosfwd>
#include <memory>

#include "eca/run_config.hpp"

namespace eca {

/// Owns the configured backend chain (http / cassette / throttle).
class BackendStack {
public:
    explicit BackendStack(const BackendSettings& settings);
    Backend& active() { return *active_; }
    CassetteBackend* cassette() { return cassette_.get(); }

private:
    std::unique_ptr<HttpBackend> http_;
    std::unique_ptr<CassetteBackend> cassette_;
    std::unique_ptr<Throttle> throttle_;
    std::unique_ptr<ThrottledBackend> throttled_;
    Backend* active_ = nullptr;
};

// Exit codes: 0 success, 1 usage/config/load failure, 2 run degraded by
// per-utterance failures. Results go to `out`, diagnostics to `err`.
int cmd_stats(const std::filesystem::path& corpus_path, const std::filesystem::path& out_dir,
              std::ostream& out, std::ostream& err);

/// Shared body of the build-index subcommand; `backend` supplies embeddings
/// and explanation chat calls. Returns the build report.
nlohmann::json run_index_build(const RunConfig& config, Backend& backend,
                               const TemplateSet& templates, const std::string& kind,
                               bool with_explanations);

int cmd_build_index(const RunConfig& config, const std::string& kind, bool with_explanations,
                    std::ostream& out, std::ostream& err);

int cmd_caption(const RunConfig& config, bool dump_grids, std::ostream& out, std::ostream& err);

struct RunOutcome {
    int exit_code = 1;
    std::filesystem::path document_path;
    RunResult result;
};

/// The `run` subcommand body; also the entry point for replay-determinism
/// tests, which need the document bytes and traces.
RunOutcome run_from_config(const RunConfig& config, std::ostream& err);

int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err);

int cmd_evaluate(const std::filesystem::path& gold_corpus,
                 const std::filesystem::path& predictions, ReportFormat format,
                 const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err);

int cmd_analyze_errors(const std::filesystem::path& gold_corpus,
                       const std::filesystem::path& predictions, ReportFormat format,
                       const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err);

int cmd_render(const RunConfig& config, const std::string& conversation_id, UttId target,
               const std::string& step, std::ostream& out, std::ostream& err);

int cmd_window(const std::filesystem::path& corpus_path, const std::string& conversation_id,
               std::ostream& out, std::ostream& err);

int cmd_validate(const std::filesystem::path& corpus_path,
                 const std::filesystem::path& predictions, std::ostream& out, std::ostream& err);

}  // namespace eca
