#include "vid2scenic/pipeline/batch.hpp"

#include <atomic>
#include <ctime>
#include <thread>

#include <fmt/chrono.h>
#include <fmt/format.h>

namespace fs = std::filesystem;

namespace vid2scenic::pipeline {

fs::path reserve_run_dir(const fs::path& runs_dir, const fs::path& video) {
    fs::create_directories(runs_dir);
    std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    const std::string base = fmt::format("{}-{:%Y%m%dT%H%M%S}", video.stem().string(), fmt::gmtime(t));
    for (int n = 1;; ++n) {
        fs::path dir = runs_dir / (n == 1 ? base : fmt::format("{}-{}", base, n));
        // create_directory is the atomic claim; false means someone has it
        if (fs::create_directory(dir)) return dir;
    }
}

std::vector<BatchItem> run_batch(const std::vector<BatchJob>& jobs, const EngineConfig& cfg, Backends backends,
                                 int parallelism, const Observer& observer) {
    std::vector<BatchItem> items(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next++) < jobs.size();) {
            items[i].job = jobs[i];
            try {
                items[i].state = run_pipeline(jobs[i].video, jobs[i].run_dir, cfg, backends, observer);
            } catch (const std::exception& e) {
                items[i].error = e.what();
            }
        }
    };
    const int k = std::max(1, std::min<int>(parallelism, static_cast<int>(jobs.size())));
    std::vector<std::thread> pool;
    for (int t = 0; t < k; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return items;
}

}  // namespace vid2scenic::pipeline
