#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "eca/corpus.hpp"
#include "eca/gateway.hpp"
#include "eca/image.hpp"
#include "eca/prompting.hpp"

namespace eca {

/// Frame access behind a thin interface so tests can use directories of still
/// images instead of codec-backed videos.
class VideoSource {
public:
    virtual ~VideoSource() = default;
    virtual long frame_count() const = 0;
    virtual Image frame(long index) const = 0;
};

/// A directory of PNG frames, ordered by filename.
class FrameDirectory : public VideoSource {
public:
    explicit FrameDirectory(const std::filesystem::path& dir);
    long frame_count() const override { return static_cast<long>(files_.size()); }
    Image frame(long index) const override;

private:
    std::vector<std::filesystem::path> files_;
};

/// Opens a frame directory. Container video files are not decoded here;
/// pre-extract frames (one PNG per frame) and point video_name at the
/// directory. Throws VideoDecodeError otherwise.
std::unique_ptr<VideoSource> open_video(const std::filesystem::path& path);

/// Indices of the nine equidistant frames: floor(i * (frame_count - 1) / 8),
/// i = 0..8. Degenerate short videos repeat frames.
std::array<long, 9> sample_frames(long frame_count);

struct FramePlan {
    std::filesystem::path source;
    std::array<long, 9> frame_indices{};
};

FramePlan plan_frames(const std::filesystem::path& source, long frame_count);

/// 3x3 row-major grid of equally sized frames with the speaker text rendered
/// in a white-on-black strip below.
struct GridImage {
    Image image;
    int tile_width = 0;
    int tile_height = 0;
    int strip_height = 0;
    std::string strip_text;
};

GridImage compose_grid(const std::array<Image, 9>& frames, const std::string& speaker_text);

struct CaptionBatch {
    std::string conversation_id;
    std::vector<UttId> utterance_ids;  // contiguous slice of the video-bearing utterances
    std::string partial_caption;
};

struct CaptionOptions {
    int batch_size = 8;
    std::string vision_model = "vision-model";
    std::string chat_model = "chat-model";
    int max_output_tokens = 512;
    std::filesystem::path media_root;       // video_ref paths resolve against this
    std::filesystem::path dump_grids_dir;   // when set, grids are written as PNG
};

struct CaptionResult {
    std::string caption;
    std::vector<CaptionBatch> batches;
    std::vector<UttId> skipped;  // unreadable videos, logged with placeholders
    int vision_calls = 0;
    int stitch_calls = 0;
};

/// One vision request per readable utterance video, batched into contiguous
/// partial captions; multiple batches are merged by one stitch chat request.
CaptionResult caption_conversation(const Conversation& conversation, Backend& backend,
                                   const TemplateSet& templates, const CaptionOptions& options);

/// Caption cache file: JSON object conversation_id -> caption.
void save_caption_cache(const std::map<std::string, std::string>& cache,
                        const std::filesystem::path& path);
std::map<std::string, std::string> load_caption_cache(const std::filesystem::path& path);

}  // namespace eca
