#include <gtest/gtest.h>

#include <filesystem>

#include "deminify/deminify.hpp"
#include "support/corpus.hpp"

using namespace deminify;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("deminify_pipeline_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }
    void put(const std::string& name, const std::string& content) const {
        fs::create_directories((path_ / name).parent_path());
        write_file(path_ / name, content);
    }

private:
    fs::path path_;
};

PipelineConfig tiny_config() {
    PipelineConfig c;
    c.hp = {2, 3, 32, 16, 4, 8};
    c.ae_epochs = 2;
    c.pr_epochs = 2;
    c.seed = 5;
    return c;
}

void put_corpus(const TempDir& dir, int files, std::uint64_t seed) {
    testing_support::CorpusGenerator gen(seed);
    for (int i = 0; i < files; ++i) dir.put("src/f" + std::to_string(100 + i) + ".js", gen.file());
}

} // namespace

TEST(Config, ParsesKeyValueLines) {
    auto c = PipelineConfig::parse("# desk run\nq = 2\n  l=4  \n\nvin = 100\nae_lr = 0.05\nseed=9\n");
    EXPECT_EQ(c.hp.q, 2u);
    EXPECT_EQ(c.hp.l, 4u);
    EXPECT_EQ(c.hp.vin, 100u);
    EXPECT_EQ(c.ae_lr, 0.05);
    EXPECT_EQ(c.seed, 9u);
    EXPECT_EQ(c.hp.vout, 512u);
}

TEST(Config, RejectsBadInput) {
    EXPECT_THROW(PipelineConfig::parse("colour = red\n"), DataError);
    EXPECT_THROW(PipelineConfig::parse("q 3\n"), DataError);
    EXPECT_THROW(PipelineConfig::parse("q = three\n"), DataError);
    EXPECT_THROW(PipelineConfig::parse("q = -1\n"), DataError);
    EXPECT_THROW(PipelineConfig::parse("q = 0\n"), DataError);
    EXPECT_THROW(PipelineConfig::parse("ae_lr = nan\n"), DataError);
    EXPECT_THROW(PipelineConfig::parse("vin = 2\n"), DataError);
}

TEST(Config, EveryListedKeyIsAccepted) {
    PipelineConfig c;
    for (const auto& k : PipelineConfig::keys()) EXPECT_NO_THROW(c.set(k, "3")) << k;
}

TEST(Pipeline, CountCharsCountsCodePoints) {
    EXPECT_EQ(count_chars("abc"), 3u);
    EXPECT_EQ(count_chars("h\xC3\xA9llo"), 5u);
    EXPECT_EQ(count_chars("\xE2\x82\xAC"), 1u);
}

TEST(Pipeline, ParallelForCoversEveryIndexAndRethrows) {
    std::vector<int> seen(100, 0);
    parallel_for(seen.size(), 4, [&](std::size_t i) { seen[i]++; });
    EXPECT_EQ(std::count(seen.begin(), seen.end(), 1), 100);
    EXPECT_THROW(parallel_for(10, 3,
                              [](std::size_t i) {
                                  if (i == 7) throw DataError("boom");
                              }),
                 DataError);
}

TEST(Ingest, AppliesEachFilter) {
    TempDir d;
    const std::string good = "function f(count, total) { return count + total; }\n";
    d.put("a_good.js", good);
    d.put("b_copy.js", good);
    d.put("c_broken.js", "function (( {");
    d.put("d_minified.js", "function f(a, b) { var c = a + b; return c; }\n");
    std::string big = "var x = 1;\n//";
    big += std::string(131073 - count_chars(big), 'x');
    ASSERT_EQ(count_chars(big), 131073u);
    d.put("e_big.js", big);
    std::string fits = big.substr(0, big.size() - 1);
    d.put("f_fits.js", fits);
    d.put("g_globals_only.js", "console.log(window.location);\n");
    d.put("notes.txt", "ignored");

    Manifest m = ingest(d.path(), PipelineConfig{});
    ASSERT_EQ(m.entries.size(), 7u);
    auto status = [&](std::size_t i) { return m.entries[i].status; };
    EXPECT_EQ(status(0), IngestStatus::accepted);
    EXPECT_EQ(status(1), IngestStatus::duplicate);
    EXPECT_EQ(m.entries[1].detail, m.entries[0].path);
    EXPECT_EQ(status(2), IngestStatus::parse_failure);
    EXPECT_FALSE(m.entries[2].detail.empty());
    EXPECT_EQ(status(3), IngestStatus::already_minified);
    EXPECT_EQ(status(4), IngestStatus::too_large);
    EXPECT_EQ(status(5), IngestStatus::accepted);
    EXPECT_EQ(status(6), IngestStatus::accepted);
    EXPECT_EQ(m.entries[0].locals, 2u);
    EXPECT_EQ(m.entries[0].bytes, good.size());
    EXPECT_EQ(m.entries[0].sha256, sha256_hex(good));
    EXPECT_EQ(m.accepted().size(), 3u);
}

TEST(Ingest, ManifestIsOrderedAndRoundTrips) {
    TempDir d;
    put_corpus(d, 12, 3);
    d.put("src/sub/z.js", "function g(value) { return value; }");
    d.put("src/broken.js", "var = ;");
    PipelineConfig serial, parallel;
    parallel.jobs = 4;
    Manifest a = ingest(d.path(), serial);
    Manifest b = ingest(d.path(), parallel);
    EXPECT_EQ(a.to_jsonl(), b.to_jsonl());
    for (std::size_t i = 1; i < a.entries.size(); ++i) EXPECT_LT(a.entries[i - 1].path, a.entries[i].path);
    EXPECT_EQ(Manifest::from_jsonl(a.to_jsonl()).entries, a.entries);
    EXPECT_NE(a.to_jsonl().find(R"("status":"rejected","reason":"parse-failure")"), std::string::npos);
    EXPECT_THROW(Manifest::from_jsonl("{not json}\n"), DataError);
    EXPECT_THROW(ingest(d.path() / "missing", serial), IoError);
}

TEST(Train, EmptyManifestIsEmptyCorpus) {
    EXPECT_THROW(train(Manifest{}, tiny_config()), EmptyCorpus);
    TempDir d;
    d.put("g.js", "console.log(1);");
    EXPECT_THROW(train(ingest(d.path(), PipelineConfig{}), tiny_config()), EmptyCorpus);
}

TEST(Train, SameSeedGivesIdenticalBundles) {
    TempDir d;
    put_corpus(d, 8, 4);
    Manifest m = ingest(d.path(), PipelineConfig{});
    PipelineConfig c = tiny_config();
    const std::string a = train(m, c).serialize();
    c.jobs = 3;
    EXPECT_EQ(train(m, c).serialize(), a);
    c.seed = 6;
    EXPECT_NE(train(m, c).serialize(), a);
}

TEST(Train, InMemoryBundleMatchesItsSavedForm) {
    TempDir d;
    put_corpus(d, 6, 8);
    Manifest m = ingest(d.path(), PipelineConfig{});
    ModelBundle b = train(m, tiny_config());
    ModelBundle back = ModelBundle::parse(b.serialize());
    const std::string src = mangle(testing_support::CorpusGenerator(1).file()).source;
    EXPECT_EQ(recover_names(src, b).map, recover_names(src, back).map);
    EXPECT_EQ(b.hp, tiny_config().hp);
    EXPECT_FALSE(b.meta.corpus_digest.empty());
}

TEST(Train, WritesCheckpointsAndLogs) {
    TempDir d;
    put_corpus(d, 4, 2);
    Manifest m = ingest(d.path(), PipelineConfig{});
    std::vector<std::string> lines;
    TrainOptions opt{d.path() / "ckpt.bin", [&](const std::string& s) { lines.push_back(s); }};
    train(m, tiny_config(), opt);
    Container c = Container::load((d.path() / "ckpt.bin").string());
    EXPECT_EQ(c.require("phase"), "predictor");
    EXPECT_EQ(c.require("epoch"), "2");
    EXPECT_NE(c.find_tensor("pr.out.W"), nullptr);
    EXPECT_EQ(std::count_if(lines.begin(), lines.end(),
                            [](const std::string& s) { return s.rfind("autoencoder epoch", 0) == 0; }),
              2);
}

TEST(Train, DetectsFilesChangedAfterIngest) {
    TempDir d;
    put_corpus(d, 3, 2);
    Manifest m = ingest(d.path(), PipelineConfig{});
    write_file(m.entries[0].path, "function changed(x) { return x; }");
    EXPECT_THROW(train(m, tiny_config()), DataError);
}

TEST(PipelineProperty, RecoveryIsAlphaEquivalentToMinifiedInput) {
    TempDir d;
    put_corpus(d, 6, 12);
    ModelBundle b = train(ingest(d.path(), PipelineConfig{}), tiny_config());
    testing_support::CorpusGenerator gen(77);
    for (int i = 0; i < 25; ++i) {
        const std::string minified = mangle(gen.file(), static_cast<std::uint64_t>(i)).source;
        Recovery r = recover_names(minified, b);
        std::string why;
        EXPECT_TRUE(alpha_equivalent(analyze(minified), analyze(r.source), &why)) << why;
    }
}
