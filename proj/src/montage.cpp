#include "eca/montage.hpp"

#include <algorithm>
#include <sstream>

#include "eca/util.hpp"

namespace eca {

FrameDirectory::FrameDirectory(const std::filesystem::path& dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) {
        throw VideoDecodeError("not a frame directory: " + dir.string());
    }
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") {
            files_.push_back(entry.path());
        }
    }
    std::sort(files_.begin(), files_.end());
    if (files_.empty()) {
        throw VideoDecodeError("frame directory has no .png frames: " + dir.string());
    }
}

Image FrameDirectory::frame(long index) const {
    if (index < 0 || index >= frame_count()) {
        throw RangeError("frame index " + std::to_string(index) + " out of range");
    }
    return load_png(files_[static_cast<size_t>(index)]);
}

std::unique_ptr<VideoSource> open_video(const std::filesystem::path& path) {
    std::error_code ec;
    if (std::filesystem::is_directory(path, ec)) {
        return std::make_unique<FrameDirectory>(path);
    }
    throw VideoDecodeError("no decoder for '" + path.string() +
                           "': pre-extract frames into a directory of PNGs");
}

std::array<long, 9> sample_frames(long frame_count) {
    if (frame_count < 1) throw RangeError("frame_count must be >= 1");
    std::array<long, 9> indices{};
    for (long i = 0; i <= 8; ++i) {
        indices[static_cast<size_t>(i)] = i * (frame_count - 1) / 8;
    }
    return indices;
}

FramePlan plan_frames(const std::filesystem::path& source, long frame_count) {
    return FramePlan{source, sample_frames(frame_count)};
}

namespace {

std::vector<std::string> wrap_text(const std::string& text, int max_chars) {
    std::vector<std::string> lines;
    std::string current;
    std::istringstream words(text);
    std::string word;
    while (words >> word) {
        while (static_cast<int>(word.size()) > max_chars) {
            if (!current.empty()) {
                lines.push_back(current);
                current.clear();
            }
            lines.push_back(word.substr(0, static_cast<size_t>(max_chars)));
            word = word.substr(static_cast<size_t>(max_chars));
        }
        if (current.empty()) {
            current = word;
        } else if (static_cast<int>(current.size() + 1 + word.size()) <= max_chars) {
            current += " " + word;
        } else {
            lines.push_back(current);
            current = word;
        }
    }
    if (!current.empty()) lines.push_back(current);
    if (lines.empty()) lines.push_back("");
    return lines;
}

}  // namespace

GridImage compose_grid(const std::array<Image, 9>& frames, const std::string& speaker_text) {
    const int w = frames[0].width;
    const int h = frames[0].height;
    for (const auto& frame : frames) {
        if (frame.width != w || frame.height != h) {
            throw DimensionMismatchError("grid frames must share dimensions (expected " +
                                         std::to_string(w) + "x" + std::to_string(h) + ", got " +
                                         std::to_string(frame.width) + "x" +
                                         std::to_string(frame.height) + ")");
        }
    }

    const int grid_width = 3 * w;
    const int max_chars = std::max(1, grid_width / kGlyphAdvance);
    const auto lines = wrap_text(speaker_text, max_chars);
    const int strip_height = static_cast<int>(lines.size()) * kLineHeight + 4;

    GridImage grid;
    grid.tile_width = w;
    grid.tile_height = h;
    grid.strip_height = strip_height;
    grid.strip_text = speaker_text;
    grid.image = Image::solid(grid_width, 3 * h + strip_height, 0, 0, 0);

    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            const Image& tile = frames[static_cast<size_t>(3 * r + c)];
            for (int y = 0; y < h; ++y) {
                std::copy_n(tile.pixel(0, y), static_cast<size_t>(w) * 3,
                            grid.image.pixel(c * w, r * h + y));
            }
        }
    }
    for (size_t i = 0; i < lines.size(); ++i) {
        draw_text(grid.image, 2, 3 * h + 2 + static_cast<int>(i) * kLineHeight, lines[i], 255,
                  255, 255);
    }
    return grid;
}

namespace {

std::string grid_caption_request(const Conversation& conv, const Utterance& utt, Backend& backend,
                                 const TemplateSet& templates, const CaptionOptions& options,
                                 const GridImage& grid) {
    const auto bytes = encode_png(grid.image);
    ModelRequest request;
    request.kind = RequestKind::vision;
    request.model_id = options.vision_model;
    request.max_output_tokens = options.max_output_tokens;
    request.image_png_b64 =
        base64_encode(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    request.image_content_digest = pixel_digest(grid.image);
    request.trace_tag = "vision:" + conv.id + ":" + std::to_string(utt.id);
    const std::string prompt = templates.get(TemplateName::video_caption)
                                   .render({{"target_utterance", render_utterance_line(utt)}});
    request.messages = {{"user", prompt}};
    return complete(request, backend).content;
}

}  // namespace

CaptionResult caption_conversation(const Conversation& conversation, Backend& backend,
                                   const TemplateSet& templates, const CaptionOptions& options) {
    if (options.batch_size < 1) throw RangeError("batch_size must be >= 1");

    std::vector<const Utterance*> withVideo;
    for (const auto& utt : conversation.utterances) {
        if (utt.video_ref) withVideo.push_back(&utt);
    }

    CaptionResult result;
    for (size_t start = 0; start < withVideo.size();
         start += static_cast<size_t>(options.batch_size)) {
        const size_t stop = std::min(withVideo.size(), start + static_cast<size_t>(options.batch_size));
        CaptionBatch batch;
        batch.conversation_id = conversation.id;
        std::ostringstream partial;
        bool first_line = true;
        for (size_t i = start; i < stop; ++i) {
            const Utterance& utt = *withVideo[i];
            batch.utterance_ids.push_back(utt.id);
            std::string description;
            try {
                const auto source = options.media_root / *utt.video_ref;
                const auto video = open_video(source);
                const FramePlan plan = plan_frames(source, video->frame_count());
                std::array<Image, 9> frames;
                for (size_t f = 0; f < 9; ++f) frames[f] = video->frame(plan.frame_indices[f]);
                const GridImage grid =
                    compose_grid(frames, utt.speaker + ": " + utt.text);
                if (!options.dump_grids_dir.empty()) {
                    save_png(grid.image, options.dump_grids_dir /
                                             (conversation.id + "_" + std::to_string(utt.id) +
                                              ".png"));
                }
                description =
                    grid_caption_request(conversation, utt, backend, templates, options, grid);
                result.vision_calls += 1;
            } catch (const VideoDecodeError&) {
                result.skipped.push_back(utt.id);
                description = "(video unavailable)";
            }
            if (!first_line) partial << "\n";
            partial << "Utterance " << utt.id << ": " << description;
            first_line = false;
        }
        batch.partial_caption = partial.str();
        result.batches.push_back(std::move(batch));
    }

    if (result.batches.empty()) {
        result.caption = "(no video content available)";
        return result;
    }
    if (result.batches.size() == 1) {
        result.caption = result.batches[0].partial_caption;
        return result;
    }

    std::ostringstream joined;
    for (size_t i = 0; i < result.batches.size(); ++i) {
        if (i) joined << "\n---\n";
        joined << result.batches[i].partial_caption;
    }
    ModelRequest stitch;
    stitch.kind = RequestKind::chat;
    stitch.model_id = options.chat_model;
    stitch.max_output_tokens = options.max_output_tokens;
    stitch.trace_tag = "stitch:" + conversation.id;
    stitch.messages = {{"user", templates.get(TemplateName::caption_stitch)
                                    .render({{"caption", joined.str()}})}};
    result.caption = complete(stitch, backend).content;
    result.stitch_calls = 1;
    if (result.caption.empty()) result.caption = joined.str();
    return result;
}

void save_caption_cache(const std::map<std::string, std::string>& cache,
                        const std::filesystem::path& path) {
    nlohmann::json doc = nlohmann::json::object();
    for (const auto& [id, caption] : cache) doc[id] = caption;
    write_file(path, doc.dump(2) + "\n");
}

std::map<std::string, std::string> load_caption_cache(const std::filesystem::path& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("caption cache " + path.string() + ": " + e.what());
    }
    std::map<std::string, std::string> cache;
    for (const auto& [id, caption] : doc.items()) cache[id] = caption.get<std::string>();
    return cache;
}

}  // namespace eca
