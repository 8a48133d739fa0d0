#include "vid2scenic/frames/frame_pack.hpp"

#include <cmath>

#include <fmt/format.h>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "vid2scenic/util/fs.hpp"
#include "vid2scenic/util/process.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace vid2scenic::frames {

namespace {

struct TempDir {
    fs::path path;
    ~TempDir() {
        std::error_code ec;
        if (!path.empty()) fs::remove_all(path, ec);
    }
};

std::string tool_text(const util::ProcessResult& r) {
    std::string s = r.err;
    if (s.empty()) s = r.out;
    if (r.timed_out) s += "(timed out)";
    return s;
}

double parse_rate(const std::string& s) {
    auto slash = s.find('/');
    if (slash == std::string::npos) return std::strtod(s.c_str(), nullptr);
    double num = std::strtod(s.substr(0, slash).c_str(), nullptr);
    double den = std::strtod(s.substr(slash + 1).c_str(), nullptr);
    return den > 0 ? num / den : 0.0;
}

int json_int(const json& j) {
    if (j.is_number_integer()) return j.get<int>();
    if (j.is_string()) return std::atoi(j.get<std::string>().c_str());
    return 0;
}

json read_token_video(const fs::path& path) {
    json doc;
    try {
        doc = json::parse(util::read_file(path));
    } catch (const util::IoError& e) {
        throw ProbeError(fmt::format("cannot read video {}", path.string()), e.what());
    } catch (const json::exception& e) {
        throw ProbeError(fmt::format("mock video {} is not valid JSON", path.string()), e.what());
    }
    if (!doc.is_object()) throw ProbeError(fmt::format("mock video {} is not a JSON object", path.string()));
    return doc;
}

FramePack build_token_pack(const fs::path& video, const FrameConfig& cfg) {
    json doc = read_token_video(video);
    VideoRef ref{video, doc.value("frames", 0), doc.value("fps", 20.0), 0.0};
    if (ref.frame_count < 1) throw EmptyVideoError(fmt::format("{} has no frames", video.string()));
    if (ref.fps > 0) ref.duration_s = ref.frame_count / ref.fps;
    FramePack pack;
    pack.source = ref;
    pack.format = "token";
    pack.indices = sample_indices(ref.frame_count, cfg.n);
    for (int idx : pack.indices) {
        json tok{{"frame_index", idx}, {"video", doc}};
        pack.images.push_back(EncodedImage{"token", tok.dump()});
    }
    return pack;
}

std::pair<cv::Mat, bool> decode(const fs::path& p) {
    cv::Mat m = cv::imread(p.string(), cv::IMREAD_COLOR);
    return {m, !m.empty()};
}

}  // namespace

std::vector<int> sample_indices(int frame_count, int n) {
    if (frame_count < 1) throw std::invalid_argument("frame_count must be at least 1");
    if (n < 1) throw std::invalid_argument("n must be at least 1");
    if (n > frame_count) {
        throw std::invalid_argument(fmt::format("cannot sample {} frames from {}", n, frame_count));
    }
    if (n == 1) return {0};
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(n));
    const long long span = frame_count - 1;
    for (long long k = 0; k < n; ++k) out.push_back(static_cast<int>(k * span / (n - 1)));
    return out;
}

bool is_token_video(const fs::path& path) { return path.extension() == ".mockvid"; }

VideoRef probe_video(const fs::path& path, const FrameConfig& cfg) {
    if (!fs::exists(path)) throw ProbeError(fmt::format("video {} does not exist", path.string()));
    if (is_token_video(path)) {
        json doc = read_token_video(path);
        VideoRef ref{path, doc.value("frames", 0), doc.value("fps", 20.0), 0.0};
        if (ref.fps > 0) ref.duration_s = ref.frame_count / ref.fps;
        return ref;
    }

    auto argv = util::substitute(util::split_command(cfg.probe_command), {{"input", path.string()}});
    util::ProcessOptions opts;
    opts.timeout = cfg.tool_timeout;
    util::ProcessResult r = util::run_process(argv, opts);
    if (!r.ok()) {
        throw ProbeError(fmt::format("probe of {} failed (exit {})", path.string(), r.exit_code), tool_text(r));
    }
    VideoRef ref{path, 0, 0.0, 0.0};
    try {
        json j = json::parse(r.out);
        const json& s = j.at("streams").at(0);
        ref.frame_count = s.contains("nb_read_frames") ? json_int(s["nb_read_frames"]) : json_int(s.value("nb_frames", json()));
        ref.fps = parse_rate(s.value("r_frame_rate", std::string("0/1")));
    } catch (const json::exception& e) {
        throw ProbeError(fmt::format("probe of {} printed unexpected output", path.string()), r.out + r.err);
    }
    if (ref.fps > 0) ref.duration_s = ref.frame_count / ref.fps;
    return ref;
}

FramePack build_frame_pack(const fs::path& video, const FrameConfig& cfg) {
    if (cfg.n < 1) throw std::invalid_argument("frame count n must be at least 1");
    if (cfg.max_dim < 1) throw std::invalid_argument("max_dim must be positive");
    if (is_token_video(video)) {
        if (!fs::exists(video)) throw ProbeError(fmt::format("video {} does not exist", video.string()));
        return build_token_pack(video, cfg);
    }

    VideoRef ref = probe_video(video, cfg);
    if (ref.frame_count < 1) throw EmptyVideoError(fmt::format("{} has no decodable frames", video.string()));
    if (cfg.n > ref.frame_count) {
        throw std::invalid_argument(
            fmt::format("{} has {} frames, fewer than the {} requested", video.string(), ref.frame_count, cfg.n));
    }

    FramePack pack;
    pack.source = ref;
    pack.indices = sample_indices(ref.frame_count, cfg.n);

    TempDir work{util::make_temp_dir(fs::temp_directory_path(), "v2s-frames-")};
    const auto words = util::split_command(cfg.extract_command);
    util::ProcessOptions opts;
    opts.timeout = cfg.tool_timeout;
    int decoded = 0;
    for (std::size_t k = 0; k < pack.indices.size(); ++k) {
        fs::path out = work.path / fmt::format("raw_{}.png", k);
        auto argv = util::substitute(words, {{"input", video.string()},
                                             {"frame_index", std::to_string(pack.indices[k])},
                                             {"output", out.string()}});
        util::ProcessResult r = util::run_process(argv, opts);
        if (!r.ok()) {
            throw ExtractorError(fmt::format("extracting frame {} of {} failed (exit {})", pack.indices[k],
                                             video.string(), r.exit_code),
                                 tool_text(r));
        }
        auto [img, ok] = decode(out);
        if (!ok) {
            if (decoded == 0 && k == 0) {
                throw EmptyVideoError(fmt::format("{}: extractor produced no image for frame 0", video.string()),
                                      tool_text(r));
            }
            throw ExtractorError(fmt::format("extractor wrote no readable image for frame {}", pack.indices[k]),
                                 tool_text(r));
        }
        ++decoded;

        const int longest = std::max(img.cols, img.rows);
        if (longest > cfg.max_dim) {
            const double scale = static_cast<double>(cfg.max_dim) / longest;
            int w = std::max(1, static_cast<int>(std::lround(img.cols * scale)));
            int h = std::max(1, static_cast<int>(std::lround(img.rows * scale)));
            w = std::min(w, cfg.max_dim);
            h = std::min(h, cfg.max_dim);
            cv::Mat small;
            cv::resize(img, small, cv::Size(w, h), 0, 0, cv::INTER_AREA);
            img = small;
        }
        if (k == 0) {
            pack.width = img.cols;
            pack.height = img.rows;
        }
        std::vector<uchar> buf;
        cv::imencode(".jpg", img, buf, {cv::IMWRITE_JPEG_QUALITY, cfg.jpeg_quality});
        pack.images.push_back(EncodedImage{"jpeg", std::string(buf.begin(), buf.end())});
    }
    return pack;
}

json manifest_json(const FramePack& pack) {
    return json{{"source", pack.source.path.string()},
                {"indices", pack.indices},
                {"width", pack.width},
                {"height", pack.height},
                {"format", pack.format},
                {"frame_count", pack.source.frame_count},
                {"fps", pack.source.fps}};
}

static std::string frame_name(const std::string& format, std::size_t k) {
    return fmt::format("frame_{}.{}", k, format == "token" ? "tok" : "jpg");
}

void write_frame_pack(const FramePack& pack, const fs::path& dir) {
    fs::path parent = dir.parent_path().empty() ? fs::path(".") : dir.parent_path();
    fs::path staged = util::make_temp_dir(parent, "." + dir.filename().string() + ".partial-");
    try {
        for (std::size_t k = 0; k < pack.images.size(); ++k) {
            util::write_file_atomic(staged / frame_name(pack.format, k), pack.images[k].bytes);
        }
        util::write_file_atomic(staged / "manifest.json", manifest_json(pack).dump(2) + "\n");
        util::publish_dir(staged, dir);
    } catch (...) {
        std::error_code ec;
        fs::remove_all(staged, ec);
        throw;
    }
}

FramePack load_frame_pack(const fs::path& dir) {
    json m;
    try {
        m = json::parse(util::read_file(dir / "manifest.json"));
    } catch (const json::exception& e) {
        throw util::IoError(fmt::format("{}: {}", (dir / "manifest.json").string(), e.what()));
    }
    FramePack pack;
    try {
        pack.source.path = m.at("source").get<std::string>();
        pack.indices = m.at("indices").get<std::vector<int>>();
        pack.width = m.at("width").get<int>();
        pack.height = m.at("height").get<int>();
        pack.format = m.at("format").get<std::string>();
        pack.source.frame_count = m.value("frame_count", 0);
        pack.source.fps = m.value("fps", 0.0);
    } catch (const json::exception& e) {
        throw util::IoError(fmt::format("{}: {}", (dir / "manifest.json").string(), e.what()));
    }
    for (std::size_t k = 0; k < pack.indices.size(); ++k) {
        pack.images.push_back(EncodedImage{pack.format, util::read_file(dir / frame_name(pack.format, k))});
    }
    return pack;
}

}  // namespace vid2scenic::frames
