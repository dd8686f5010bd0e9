#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "deminify/deminify.hpp"

namespace fs = std::filesystem;
using namespace deminify;

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> q, l, vin, vout, embed, hidden, jobs, ae_epochs, pr_epochs;
};

PipelineConfig load_config(const Overrides& o) {
    PipelineConfig c;
    if (!o.config.empty()) c = PipelineConfig::load(o.config);
    auto apply = [](auto& field, const auto& v) {
        if (v) field = *v;
    };
    apply(c.seed, o.seed);
    apply(c.hp.q, o.q);
    apply(c.hp.l, o.l);
    apply(c.hp.vin, o.vin);
    apply(c.hp.vout, o.vout);
    apply(c.hp.embed, o.embed);
    apply(c.hp.hidden, o.hidden);
    apply(c.jobs, o.jobs);
    apply(c.ae_epochs, o.ae_epochs);
    apply(c.pr_epochs, o.pr_epochs);
    c.validate();
    return c;
}

void print_timing(std::ostream& os, const PhaseTimes& t) {
    os << std::fixed << std::setprecision(3) << "extract " << t.extract_ms << " ms, embed " << t.embed_ms
       << " ms, predict " << t.predict_ms << " ms, assign " << t.assign_ms << " ms, total " << t.total_ms()
       << " ms\n";
}

int run(int argc, char** argv) {
    CLI::App app{"Recover descriptive names for minified JavaScript locals"};
    app.require_subcommand(1);
    app.fallthrough();
    Overrides o;
    app.add_option("--config", o.config, "key = value configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", o.seed, "Random seed (training; mangle permutation)");
    app.add_option("--q", o.q, "Context half-width");
    app.add_option("--l", o.l, "Contexts per usage summary");
    app.add_option("--vin", o.vin, "Input vocabulary size");
    app.add_option("--vout", o.vout, "Output vocabulary size");
    app.add_option("--embed", o.embed, "Embedding size");
    app.add_option("--hidden", o.hidden, "Predictor hidden size");
    app.add_option("--jobs,-j", o.jobs, "Worker threads for per-file work");
    app.add_option("--ae-epochs", o.ae_epochs, "Autoencoder epochs");
    app.add_option("--pr-epochs", o.pr_epochs, "Predictor epochs");

    std::string dir, manifest_path, bundle_path, source_path, out_path, map_path;
    bool timing = false;

    auto* ingest_cmd = app.add_subcommand("ingest", "Screen a directory of .js files and write a manifest");
    ingest_cmd->add_option("dir", dir, "Corpus directory")->required();
    ingest_cmd->add_option("-o,--output", out_path, "Manifest path (default: stdout)");

    auto* train_cmd = app.add_subcommand("train", "Train a model bundle from a manifest");
    train_cmd->add_option("manifest", manifest_path, "Manifest from ingest")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("-o,--output", out_path, "Bundle path")->required();

    auto* recover_cmd = app.add_subcommand("recover", "Print a minified file with recovered local names");
    recover_cmd->add_option("bundle", bundle_path)->required();
    recover_cmd->add_option("file", source_path)->required();
    recover_cmd->add_option("-m,--map", map_path, "Write the prediction map here");
    recover_cmd->add_flag("--timing", timing, "Print the per-phase timing breakdown to stderr");

    auto* evaluate_cmd = app.add_subcommand("evaluate", "Mangle, recover and score every .js file in a directory");
    evaluate_cmd->add_option("bundle", bundle_path)->required();
    evaluate_cmd->add_option("dir", dir)->required();

    auto* vocab_cmd = app.add_subcommand("vocab-report", "Vocabulary sizes and training-corpus coverage");
    vocab_cmd->add_option("bundle", bundle_path)->required();

    auto* mangle_cmd = app.add_subcommand("mangle", "Minify local names; print the result");
    mangle_cmd->add_option("file", source_path)->required();
    mangle_cmd->add_option("-m,--map", map_path, "Write the rename map here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (*ingest_cmd) {
        const PipelineConfig c = load_config(o);
        Manifest m = ingest(dir, c);
        if (out_path.empty()) std::cout << m.to_jsonl();
        else m.save(out_path);
        std::cerr << m.accepted().size() << " of " << m.entries.size() << " files accepted\n";
    } else if (*train_cmd) {
        const PipelineConfig c = load_config(o);
        const fs::path ckpt = out_path + ".ckpt";
        TrainOptions opt{ckpt, [](const std::string& s) { std::cerr << s << '\n'; }};
        ModelBundle b = train(Manifest::load(manifest_path), c, opt);
        b.save(out_path);
        std::error_code ec;
        fs::remove(ckpt, ec);
    } else if (*recover_cmd) {
        const ModelBundle b = ModelBundle::load(bundle_path);
        Recovery r = recover_names(read_file(source_path), b);
        std::cout << r.source;
        if (!map_path.empty()) write_file(map_path, r.map.to_json().dump(2) + "\n");
        if (timing) print_timing(std::cerr, r.times);
    } else if (*evaluate_cmd) {
        const PipelineConfig c = load_config(o);
        const ModelBundle b = ModelBundle::load(bundle_path);
        Manifest m = ingest(dir, c);
        const auto files = m.accepted();
        if (files.empty()) throw EmptyCorpus("no usable .js files under " + dir);
        std::vector<FileEvaluation> results(files.size());
        parallel_for(files.size(), c.jobs, [&](std::size_t i) {
            results[i] = evaluate_source(read_file(files[i]->path), b, o.seed.value_or(0));
        });
        make_report(results).print_table(std::cerr);
        std::cout << make_report(results).to_json().dump(2) << '\n';
    } else if (*vocab_cmd) {
        const ModelBundle b = ModelBundle::load(bundle_path);
        auto show = [](const char* label, const Vocabulary& v, const FrequencyTable& f, std::size_t requested) {
            const Coverage cov = coverage_report(v, f);
            std::cout << std::fixed << std::setprecision(2) << label << ": " << v.size() << " entries (requested "
                      << requested << "), covers " << cov.unique_pct << "% of distinct items and "
                      << cov.occurrence_pct << "% of occurrences; sha256 " << v.digest() << '\n';
        };
        show("input vocabulary", b.input_vocab, b.input_frequencies, b.hp.vin);
        show("output vocabulary", b.output_vocab, b.name_frequencies, b.hp.vout);
    } else if (*mangle_cmd) {
        MangleResult r = mangle(read_file(source_path), o.seed.value_or(0));
        std::cout << r.source;
        if (!map_path.empty()) write_file(map_path, r.map.to_json().dump(2) + "\n");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ModelError& e) {
        std::cerr << "model error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
