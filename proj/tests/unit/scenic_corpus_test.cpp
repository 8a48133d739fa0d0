#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "vid2scenic/scenic/catalog.hpp"
#include "vid2scenic/scenic/hints.hpp"
#include "vid2scenic/scenic/printer.hpp"
#include "vid2scenic/scenic/validator.hpp"

namespace fs = std::filesystem;
using namespace vid2scenic::scenic;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<fs::path> corpus() {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(fs::path(V2S_FIXTURES_DIR) / "script")) {
        if (fs::exists(e.path() / "script.scenic")) out.push_back(e.path() / "script.scenic");
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string joined(const std::vector<Diagnostic>& ds, const fs::path& file) {
    std::string s;
    for (const auto& d : ds) s += format_text(d, file.string());
    return s;
}

}  // namespace

TEST(ScenicCorpus, HasTwentyScripts) { EXPECT_EQ(corpus().size(), 20u); }

TEST(ScenicCorpus, EveryScriptParsesValidatesAndRoundTrips) {
    const Catalog catalog = load_catalog(fs::path(V2S_FIXTURES_DIR) / "catalog.json");
    for (const auto& path : corpus()) {
        SCOPED_TRACE(path.string());
        auto parsed = parse(slurp(path));
        ASSERT_TRUE(parsed.has_value()) << joined(parsed.diagnostics(), path);
        auto diags = validate(parsed.value(), catalog);
        EXPECT_TRUE(diags.empty()) << joined(diags, path);

        std::string text = render(parsed.value());
        auto again = parse(text);
        ASSERT_TRUE(again.has_value()) << text;
        EXPECT_EQ(again.value().tree(), parsed.value().tree()) << text;
        EXPECT_EQ(render(again.value()), text);
    }
}

TEST(ScenicCorpus, EveryScriptEvidencesSomeFeature) {
    for (const auto& path : corpus()) {
        auto parsed = parse(slurp(path));
        ASSERT_TRUE(parsed.has_value());
        auto hints = static_feature_hints(parsed.value());
        std::string line;
        for (const auto& h : hints) line += h + " ";
        std::cout << path.parent_path().filename().string() << ": " << line << "\n";
        EXPECT_FALSE(hints.empty()) << path;
    }
}
