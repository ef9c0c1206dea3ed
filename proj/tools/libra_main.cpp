// libra command-line entry point.
#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <iostream>

#include "libra/errors.hpp"
#include "libra/keywords.hpp"
#include "libra/kboundary.hpp"
#include "libra/pipeline.hpp"
#include "libra/provider_server.hpp"
#include "libra/review_server.hpp"

namespace fs = std::filesystem;
using namespace libra;

namespace {

struct Common {
    std::string config_file;
    std::vector<std::string> sets;
    std::string out;
    std::optional<std::uint64_t> seed;
    bool force = false;
    bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("-c,--config", c.config_file, "JSON config file");
    cmd->add_option("--set", c.sets, "Override a config key, e.g. --set scoring.max_in_flight=8")->take_all();
    cmd->add_option("-o,--out", c.out, "Output directory (overrides output_dir)");
    cmd->add_option("--seed", c.seed, "Global seed (overrides seed)");
    cmd->add_flag("--force", c.force, "Re-run even if the manifest says the stage is up to date");
    cmd->add_flag("-q,--quiet", c.quiet, "Only print errors");
}

config::RunConfig load_config(const Common& c) {
    auto overrides = c.sets;
    if (!c.out.empty()) overrides.push_back("output_dir=" + Json(fs::absolute(c.out).string()).dump());
    if (c.seed) overrides.push_back("seed=" + std::to_string(*c.seed));
    std::optional<fs::path> file;
    if (!c.config_file.empty()) file = c.config_file;
    return config::load(file, overrides);
}

pipeline::Options options_for(const Common& c) {
    pipeline::Options o;
    o.force = c.force;
    if (!c.quiet) o.log = &std::cerr;
    return o;
}

std::function<void()> g_stop;

void on_signal(int) {
    if (g_stop) g_stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LIBRA: local-bias benchmark builder and scorer"};
    app.require_subcommand(1);
    Common common;

    struct Stage {
        const char* name;
        const char* help;
        pipeline::StageResult (*run)(const config::RunConfig&, const pipeline::Options&);
    };
    const Stage stages[] = {
        {"ingest", "Load and filter the corpus", pipeline::run_ingest},
        {"keywords", "Build the keyword catalog", pipeline::run_keywords},
        {"cluster", "Cluster articles and allocate groups", pipeline::run_cluster},
        {"search", "Find candidate sentences", pipeline::run_search},
        {"build-triplets", "Perturb candidates into triplets", pipeline::run_build_triplets},
        {"kb-probe", "Probe the knowledge boundary and compute bbs", pipeline::run_kb_probe},
    };
    std::vector<std::pair<CLI::App*, const Stage*>> stage_cmds;
    for (const auto& s : stages) {
        auto* cmd = app.add_subcommand(s.name, s.help);
        add_common(cmd, common);
        stage_cmds.emplace_back(cmd, &s);
    }

    auto* score = app.add_subcommand("score", "Score eligible triplets with the logprob provider");
    add_common(score, common);
    bool include_pending = false;
    score->add_flag("--include-pending", include_pending, "Also score triplets not yet reviewed");

    auto* metrics_cmd = app.add_subcommand("metrics", "Compute lms, ss, JSD, iCAT and EiCAT");
    add_common(metrics_cmd, common);
    std::string scores_file, triplets_file, report_out;
    std::optional<double> bbs;
    metrics_cmd->add_option("--scores", scores_file, "scores.jsonl to read");
    metrics_cmd->add_option("--triplets", triplets_file, "triplets.jsonl for invalid/rejected counts");
    metrics_cmd->add_option("--bbs", bbs, "Use this bbs instead of kb_report.json")->check(CLI::Range(0.0, 1.0));
    metrics_cmd->add_option("--report", report_out, "Where to write report.json");

    auto* report = app.add_subcommand("report", "Print the results row");
    add_common(report, common);
    std::string format = "md";
    report->add_option("--format", format, "md or json")->check(CLI::IsMember({"md", "json"}));

    auto* run_all = app.add_subcommand("run-all", "Run every stage in order");
    add_common(run_all, common);
    bool allow_pending = false;
    run_all->add_flag("--allow-pending", allow_pending, "Score pending triplets instead of stopping for review");

    auto* review = app.add_subcommand("review-serve", "Serve the review API (and UI if configured)");
    add_common(review, common);
    std::optional<int> port;
    std::string host;
    review->add_option("--port", port, "Port (default review.port)");
    review->add_option("--host", host, "Host (default review.host)");

    auto* stub_serve = app.add_subcommand("stub-serve", "Serve the configured stub providers over HTTP");
    add_common(stub_serve, common);
    int stub_port = 0;
    stub_serve->add_option("--port", stub_port, "Port (0 picks a free one)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : pipeline::kValidation;
    }

    try {
        const auto cfg = load_config(common);
        auto opts = options_for(common);

        for (const auto& [cmd, stage] : stage_cmds)
            if (cmd->parsed()) {
                stage->run(cfg, opts);
                return 0;
            }

        if (score->parsed()) {
            if (include_pending) opts.include_pending = true;
            pipeline::run_score(cfg, opts);
        } else if (metrics_cmd->parsed()) {
            if (!scores_file.empty()) opts.scores_file = fs::absolute(scores_file);
            if (!triplets_file.empty()) opts.triplets_file = fs::absolute(triplets_file);
            if (!report_out.empty()) opts.report_out = fs::absolute(report_out);
            opts.bbs = bbs;
            const auto r = pipeline::run_metrics(cfg, opts);
            if (!common.quiet) std::cout << r.counts.dump() << '\n';
        } else if (report->parsed()) {
            opts.log = nullptr;
            const auto r = pipeline::run_report(cfg, opts, format);
            std::cout << r.counts.at("text").get<std::string>();
        } else if (run_all->parsed()) {
            opts.allow_pending = allow_pending;
            pipeline::run_all(cfg, opts);
            std::cout << read_file(pipeline::paths_for(cfg).report_md);
        } else if (review->parsed()) {
            const auto paths = pipeline::paths_for(cfg);
            if (!fs::exists(paths.triplets)) throw UpstreamMissingError(paths.triplets.string(), "build-triplets");
            triplets::TripletStore store(paths.triplets, paths.audit);
            review::ReviewServer server(store, cfg.path("review.static_dir"));
            const auto h = host.empty() ? cfg.at("review.host").get<std::string>() : host;
            const int p = port.value_or(cfg.at("review.port").get<int>());
            if (!server.bind(h, p)) throw ValidationError("cannot bind " + h + ":" + std::to_string(p));
            g_stop = [&] { server.stop(); };
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cerr << "review server on http://" << h << ":" << p << "\n";
            server.serve();
        } else if (stub_serve->parsed()) {
            const auto paths = pipeline::paths_for(cfg);
            std::optional<keywords::KeywordCatalog> catalog;
            std::optional<triplets::Dataset> dataset;
            if (fs::exists(paths.keywords)) catalog = keywords::KeywordCatalog::load(paths.keywords);
            if (fs::exists(paths.triplets)) dataset = triplets::Dataset::load(paths.triplets);
            pipeline::ProviderContext ctx;
            ctx.catalog = catalog ? &*catalog : nullptr;
            ctx.dataset = dataset ? &*dataset : nullptr;
            if (const auto g = cfg.path("kboundary.glossary"); g && fs::exists(*g)) ctx.glossary = kboundary::load_glossary(*g);
            auto lp = pipeline::make_logprob_provider(cfg, ctx);
            auto emb = pipeline::make_embedding_provider(cfg);
            auto gen = pipeline::make_generation_provider(cfg, "generation", ctx);
            providers::ProviderServer server(lp.get(), emb.get(), gen.get());
            int bound = stub_port;
            if (stub_port == 0) bound = server.bind("127.0.0.1");
            else if (!server.bind("127.0.0.1", stub_port)) throw ValidationError("cannot bind port " + std::to_string(stub_port));
            g_stop = [&] { server.stop(); };
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cout << "http://127.0.0.1:" << bound << std::endl;
            server.serve();
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return pipeline::exit_code_for(e);
    }
}
