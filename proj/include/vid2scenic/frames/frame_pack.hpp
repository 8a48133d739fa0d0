#pragma once

#include <chrono>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace vid2scenic::frames {

struct VideoRef {
    std::filesystem::path path;
    int frame_count = 0;
    double fps = 0.0;
    double duration_s = 0.0;
};

/// Encoded frame payload. `format` is "jpeg" for images decoded from real
/// videos and "token" for the JSON stand-ins produced from mock videos.
struct EncodedImage {
    std::string format;
    std::string bytes;
};

struct FramePack {
    VideoRef source;
    std::vector<int> indices;
    std::vector<EncodedImage> images;
    int width = 0;
    int height = 0;
    std::string format = "jpeg";
};

struct FrameConfig {
    int n = 10;
    int max_dim = 512;
    int jpeg_quality = 85;
    /// Must print ffprobe-style JSON on stdout. Placeholder: {input}.
    std::string probe_command =
        "ffprobe -v error -select_streams v:0 -count_frames "
        "-show_entries stream=nb_read_frames,r_frame_rate -of json {input}";
    /// Must write frame {frame_index} of {input} as an image to {output}.
    std::string extract_command =
        "ffmpeg -v error -y -i {input} -vf 'select=eq(n\\,{frame_index})' -vsync 0 -frames:v 1 {output}";
    std::chrono::seconds tool_timeout{120};
};

class FrameError : public std::runtime_error {
public:
    FrameError(const std::string& what, std::string tool_output = {})
        : std::runtime_error(what), tool_output_(std::move(tool_output)) {}
    const std::string& tool_output() const { return tool_output_; }

private:
    std::string tool_output_;
};

/// The video could not be probed (missing file, tool failure, unreadable output).
class ProbeError : public FrameError {
public:
    using FrameError::FrameError;
};

/// The extractor exited non-zero or produced no readable image.
class ExtractorError : public FrameError {
public:
    using FrameError::FrameError;
};

/// The video has no decodable frames.
class EmptyVideoError : public FrameError {
public:
    using FrameError::FrameError;
};

/// index_k = floor(k * (frame_count - 1) / (n - 1)); [0] for n = 1.
/// Throws std::invalid_argument for n = 0, n > frame_count, frame_count < 1.
std::vector<int> sample_indices(int frame_count, int n);

/// Mock videos (`.mockvid`, a JSON document) are handled in-process.
bool is_token_video(const std::filesystem::path& path);

VideoRef probe_video(const std::filesystem::path& path, const FrameConfig& cfg);

/// Probes, samples, extracts, resizes so max(w, h) <= max_dim and encodes.
FramePack build_frame_pack(const std::filesystem::path& video, const FrameConfig& cfg);

/// `{"source", "indices", "width", "height", "format", "frame_count", "fps"}`
nlohmann::json manifest_json(const FramePack& pack);

/// Writes manifest.json plus frame_<k>.jpg (.tok for token frames). The
/// directory appears complete or not at all.
void write_frame_pack(const FramePack& pack, const std::filesystem::path& dir);
FramePack load_frame_pack(const std::filesystem::path& dir);

}  // namespace vid2scenic::frames
