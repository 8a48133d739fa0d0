// Small frame tool speaking the extractor command contract, for hosts
// without a media toolchain.
//
//   framectl probe <input>                        ffprobe-style JSON on stdout
//   framectl extract <input> <frame_index> <output>
//   framectl synth <output.avi> [frames] [fps] [width] [height]

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/videoio.hpp>

namespace {

int usage() {
    std::cerr << "usage: framectl probe <input>\n"
                 "       framectl extract <input> <frame_index> <output>\n"
                 "       framectl synth <output.avi> [frames] [fps] [width] [height]\n";
    return 2;
}

int probe(const std::string& input) {
    cv::VideoCapture cap(input);
    if (!cap.isOpened()) {
        std::cerr << input << ": cannot open video\n";
        return 1;
    }
    double fps = cap.get(cv::CAP_PROP_FPS);
    long count = 0;
    while (cap.grab()) ++count;
    long fps_num = std::lround(fps * 1000.0);
    std::printf("{\"streams\": [{\"nb_read_frames\": \"%ld\", \"r_frame_rate\": \"%ld/1000\"}]}\n", count, fps_num);
    return 0;
}

int extract(const std::string& input, long index, const std::string& output) {
    cv::VideoCapture cap(input);
    if (!cap.isOpened()) {
        std::cerr << input << ": cannot open video\n";
        return 1;
    }
    cv::Mat frame;
    for (long i = 0; i <= index; ++i) {
        if (!cap.grab()) {
            std::cerr << input << ": frame " << index << " out of range\n";
            return 1;
        }
    }
    if (!cap.retrieve(frame) || frame.empty()) {
        std::cerr << input << ": cannot decode frame " << index << "\n";
        return 1;
    }
    if (!cv::imwrite(output, frame)) {
        std::cerr << output << ": cannot write image\n";
        return 1;
    }
    return 0;
}

int synth(const std::string& output, int frames, double fps, int width, int height) {
    cv::VideoWriter w(output, cv::VideoWriter::fourcc('M', 'J', 'P', 'G'), fps, cv::Size(width, height));
    if (!w.isOpened()) {
        std::cerr << output << ": cannot open for writing\n";
        return 1;
    }
    for (int i = 0; i < frames; ++i) {
        // solid colour that drifts with the index so frames are distinguishable
        cv::Mat f(height, width, CV_8UC3, cv::Scalar((i * 7) % 256, (i * 3 + 80) % 256, (255 - i) % 256));
        w.write(f);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 3) return usage();
    std::string cmd = argv[1];
    try {
        if (cmd == "probe" && argc == 3) return probe(argv[2]);
        if (cmd == "extract" && argc == 5) return extract(argv[2], std::atol(argv[3]), argv[4]);
        if (cmd == "synth") {
            int frames = argc > 3 ? std::atoi(argv[3]) : 300;
            double fps = argc > 4 ? std::atof(argv[4]) : 30.0;
            int width = argc > 5 ? std::atoi(argv[5]) : 640;
            int height = argc > 6 ? std::atoi(argv[6]) : 360;
            return synth(argv[2], frames, fps, width, height);
        }
    } catch (const cv::Exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    return usage();
}
