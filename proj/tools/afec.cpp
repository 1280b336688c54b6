// afec: curation pipeline and retrieval chatbot command line.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "afec/clustering.hpp"
#include "afec/corpus.hpp"
#include "afec/embedding.hpp"
#include "afec/errors.hpp"
#include "afec/kgraph.hpp"
#include "afec/labeling.hpp"
#include "afec/metrics.hpp"
#include "afec/pipeline.hpp"
#include "afec/retrieval.hpp"
#include "afec/service.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace afec;

namespace {

void print_stages(const std::vector<StageCount>& stages) {
    for (const auto& s : stages)
        std::fprintf(stderr, "%-24s in %8zu  rejected %8zu  out %8zu\n", s.stage.c_str(), s.input, s.rejected,
                     s.output);
}

std::unique_ptr<Encoder> encoder_for(const KnowledgeGraph& graph, const std::string& spec) {
    const auto& binding = graph.manifest().encoder;
    return make_encoder(spec.empty() ? binding.name : spec, binding.dimension);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AFEC curation pipeline and AFEC-Talk retrieval chatbot"};
    app.require_subcommand(1);
    std::size_t workers = 0;
    app.add_option("--workers", workers, "Worker threads (0 = all cores)");

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "Pair submissions with their direct replies");
    InputConfig ingest_cfg;
    fs::path ingest_out;
    ingest_cmd->add_option("--submissions", ingest_cfg.submissions, "Submission archive")->required();
    ingest_cmd->add_option("--comments", ingest_cfg.comments, "Comment archive")->required();
    ingest_cmd->add_option("--from", ingest_cfg.from, "Window start (date, datetime or unix seconds)");
    ingest_cmd->add_option("--to", ingest_cfg.to, "Window end, inclusive");
    ingest_cmd->add_option("--source", ingest_cfg.default_source, "Origin tag for records without one");
    ingest_cmd->add_option("--out", ingest_out, "Pairs (thread) file")->required();
    ingest_cmd->callback([&] {
        auto r = ingest(ingest_cfg);
        write_threads(ingest_out, r.threads);
        print_stages(r.stages);
    });

    // curate
    auto* curate_cmd = app.add_subcommand("curate", "Apply cleaning, summarization and the root-verb filter");
    fs::path curate_pairs, curate_out, curate_report;
    CurateConfig curate_cfg;
    curate_cmd->add_option("--pairs", curate_pairs, "Pairs file from ingest")->required();
    curate_cmd->add_option("--out", curate_out, "Utterances file")->required();
    curate_cmd->add_option("--report", curate_report, "Rejects file");
    curate_cmd->add_option("--analyzer", curate_cfg.analyzer, "baseline | external:<command>");
    curate_cmd->add_option("--max-tokens", curate_cfg.max_tokens, "Length guard");
    curate_cmd->add_flag("--listener-root-filter", curate_cfg.listener_root_filter,
                         "Also require a verbal root on replies");
    curate_cmd->callback([&] {
        auto analyzer = make_analyzer(curate_cfg.analyzer);
        auto r = curate(read_threads(curate_pairs), curate_cfg, *analyzer, workers);
        write_utterances(curate_out, r.utterances);
        if (!curate_report.empty()) write_rejects(curate_report, r.rejects);
        print_stages(r.stages);
    });

    // embed
    auto* embed_cmd = app.add_subcommand("embed", "Encode utterances into a vector cache");
    fs::path embed_in, embed_out;
    EmbedConfig embed_cfg;
    embed_cmd->add_option("--in", embed_in, "Utterances file")->required();
    embed_cmd->add_option("--encoder", embed_cfg.encoder, "baseline | external:<command>");
    embed_cmd->add_option("--dimension", embed_cfg.dimension, "Vector dimension");
    embed_cmd->add_option("--out", embed_out, "Vector cache")->required();
    embed_cmd->callback([&] {
        auto encoder = make_encoder(embed_cfg.encoder, embed_cfg.dimension);
        auto m = embed_utterances(read_utterances(embed_in), *encoder);
        write_vector_cache(embed_out, encoder->binding(), m);
        std::fprintf(stderr, "encoded %zu utterances with %s\n", m.size(), describe(encoder->binding()).c_str());
    });

    // cluster
    auto* cluster_cmd = app.add_subcommand("cluster", "Group similar utterances of one role");
    fs::path cluster_vectors, cluster_out;
    std::string cluster_role_name, cluster_mode = "fast";
    double cluster_threshold = -1.0;
    std::size_t cluster_min = 1;
    std::uint64_t cluster_seed = 0;
    cluster_cmd->add_option("--vectors", cluster_vectors, "Vector cache")->required();
    cluster_cmd->add_option("--role", cluster_role_name, "speaker | listener")->required();
    cluster_cmd->add_option("--threshold", cluster_threshold, "Cosine threshold (default by role)");
    cluster_cmd->add_option("--mode", cluster_mode, "fast | two_phase");
    cluster_cmd->add_option("--min-community-size", cluster_min, "Smallest kept community");
    cluster_cmd->add_option("--seed", cluster_seed, "Recorded seed");
    cluster_cmd->add_option("--out", cluster_out, "Clusters file")->required();
    cluster_cmd->callback([&] {
        const Role role = parse_role(cluster_role_name);
        const double t = cluster_threshold > 0 ? cluster_threshold
                                               : (role == Role::Speaker ? kSpeakerThreshold : kListenerThreshold);
        auto cache = read_vector_cache(cluster_vectors);
        auto clusters =
            cluster_role(cache.vectors, role, t, parse_cluster_mode(cluster_mode), cluster_min, cluster_seed, workers);
        write_clusters(cluster_out, clusters);
        std::fprintf(stderr, "%zu clusters\n", clusters.size());
    });

    // graph build | stats
    auto* graph_cmd = app.add_subcommand("graph", "Build or inspect the knowledge graph");
    graph_cmd->require_subcommand(1);
    auto* build_cmd = graph_cmd->add_subcommand("build", "Assemble nodes and edges");
    fs::path b_speakers, b_listeners, b_pairs, b_utterances, b_vectors, b_out;
    build_cmd->add_option("--speaker-clusters", b_speakers, "Speaker clusters file")->required();
    build_cmd->add_option("--listener-clusters", b_listeners, "Listener clusters file")->required();
    build_cmd->add_option("--pairs", b_pairs, "Pairs file from ingest")->required();
    build_cmd->add_option("--utterances", b_utterances, "Utterances file from curate")->required();
    build_cmd->add_option("--vectors", b_vectors, "Vector cache from embed")->required();
    build_cmd->add_option("--out", b_out, "Graph directory")->required();
    build_cmd->callback([&] {
        auto threads = read_threads(b_pairs);
        auto cache = read_vector_cache(b_vectors);
        GraphManifest m;
        m.encoder = cache.encoder;
        for (const auto& t : threads) {
            m.build_timestamp = std::max(m.build_timestamp, t.submission.created_utc);
            for (const auto& c : t.comments) m.build_timestamp = std::max(m.build_timestamp, c.created_utc);
        }
        BuildStats bs;
        auto g = build_graph(read_clusters(b_speakers), read_clusters(b_listeners), read_utterances(b_utterances),
                             utterance_pairs(threads), cache.vectors, m, &bs);
        g.manifest().stages.push_back({"link", bs.pairs, bs.dropped, bs.linked});
        save_graph(g, b_out);
        std::cout << format_stats(graph_stats(g));
    });
    auto* stats_cmd = graph_cmd->add_subcommand("stats", "Node and edge counts, degree histograms");
    fs::path stats_dir;
    bool stats_json = false;
    stats_cmd->add_option("dir", stats_dir, "Graph directory")->required();
    stats_cmd->add_flag("--json", stats_json, "Print JSON");
    stats_cmd->callback([&] {
        auto s = graph_stats(load_graph(stats_dir));
        if (stats_json)
            std::cout << stats_to_json(s).dump(2) << '\n';
        else
            std::cout << format_stats(s);
    });

    // label
    auto* label_cmd = app.add_subcommand("label", "Classify every node into the 41-label taxonomy");
    fs::path label_dir;
    std::string label_classifier = "baseline";
    double label_gamma = kDefaultDecay;
    bool label_dist = false;
    label_cmd->add_option("dir", label_dir, "Graph directory")->required();
    label_cmd->add_option("--classifier", label_classifier, "baseline | lexicon:<path> | external:<command>");
    label_cmd->add_option("--gamma", label_gamma, "Context decay factor");
    label_cmd->add_flag("--distribution", label_dist, "Print label distributions");
    label_cmd->callback([&] {
        auto g = load_graph(label_dir);
        auto classifier = make_classifier(label_classifier);
        label_graph(g, *classifier, {label_gamma, workers});
        save_graph(g, label_dir);
        if (label_dist) {
            std::cout << format_distribution(label_distribution(g, Role::Speaker));
            std::cout << format_distribution(label_distribution(g, Role::Listener));
        }
    });

    // chat
    auto* chat_cmd = app.add_subcommand("chat", "Read utterances from stdin, print replies");
    fs::path chat_graph;
    std::string chat_strategy = "rand", chat_encoder, chat_classifier = "baseline";
    std::uint64_t chat_seed = 0;
    ChatConfig chat_cfg;
    chat_cmd->add_option("--graph", chat_graph, "Graph directory")->required();
    chat_cmd->add_option("--strategy", chat_strategy, "rand | hd | follow | intent");
    chat_cmd->add_option("--seed", chat_seed, "Reply selection seed");
    chat_cmd->add_option("--encoder", chat_encoder, "Override the manifest encoder");
    chat_cmd->add_option("--classifier", chat_classifier, "Input classifier");
    chat_cmd->add_flag("--use-node-label", chat_cfg.use_node_label, "Follow the matched node's label");
    chat_cmd->add_flag("--sample-member", chat_cfg.sample_member, "Reply with a random member utterance");
    chat_cmd->callback([&] {
        auto g = load_graph(chat_graph);
        auto encoder = encoder_for(g, chat_encoder);
        auto classifier = make_classifier(chat_classifier);
        auto index = build_index(g, *encoder);
        const Strategy strategy = parse_strategy(chat_strategy);
        chat_cfg.workers = workers;
        std::string line;
        while (std::getline(std::cin, line)) {
            if (trim(line).empty()) continue;
            try {
                auto reply = chat(index, g, *encoder, classifier.get(), line, strategy, chat_seed, chat_cfg);
                std::cout << reply_to_json(reply, g).dump() << std::endl;
            } catch (const NoReplyError& e) {
                std::cout << json{{"error", e.what()}}.dump() << std::endl;
            }
        }
    });

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Score replies on the held-out split");
    fs::path eval_graph, eval_out, eval_replies, eval_items_out;
    std::string eval_split = "fraction=0.1", eval_strategy = "rand", eval_encoder, eval_classifier = "baseline";
    std::uint64_t eval_seed = 0;
    eval_cmd->add_option("--graph", eval_graph, "Graph directory")->required();
    eval_cmd->add_option("--split", eval_split, "fraction=<f>,seed=<n>,reserved=<tag>|<tag>");
    eval_cmd->add_option("--strategy", eval_strategy, "rand | hd | follow | intent");
    eval_cmd->add_option("--seed", eval_seed, "Reply selection seed (item i uses seed + i)");
    eval_cmd->add_option("--replies", eval_replies, "Score these replies (one per line) instead of AFEC-Talk");
    eval_cmd->add_option("--items-out", eval_items_out, "Write the test items as JSON lines");
    eval_cmd->add_option("--encoder", eval_encoder, "Override the manifest encoder");
    eval_cmd->add_option("--classifier", eval_classifier, "Input classifier");
    eval_cmd->add_option("--out", eval_out, "Report file")->required();
    eval_cmd->callback([&] {
        auto g = load_graph(eval_graph);
        const Split split = make_split(g, parse_split_spec(eval_split));
        auto items = test_items(g, split);
        if (!eval_items_out.empty()) {
            std::ofstream out(eval_items_out);
            for (const auto& it : items)
                out << json{{"speaker_id", it.speaker_id}, {"speaker_text", it.speaker_text},
                            {"references", it.references}}
                           .dump()
                    << '\n';
        }
        std::vector<std::string> replies;
        if (!eval_replies.empty()) {
            std::ifstream in(eval_replies);
            if (!in) throw std::invalid_argument("cannot open " + eval_replies.string());
            for (std::string line; std::getline(in, line);) replies.push_back(line);
        } else {
            auto encoder = encoder_for(g, eval_encoder);
            auto classifier = make_classifier(eval_classifier);
            std::set<std::string> held_out;
            for (const auto& id : split.test) held_out.insert(id.value);
            auto index = build_index(g, *encoder, held_out);
            const Strategy strategy = parse_strategy(eval_strategy);
            for (std::size_t i = 0; i < items.size(); ++i) {
                try {
                    replies.push_back(
                        chat(index, g, *encoder, classifier.get(), items[i].speaker_text, strategy, eval_seed + i).text);
                } catch (const NoReplyError&) {
                    replies.emplace_back();  // scored as an empty reply
                }
            }
        }
        const auto report = evaluate(replies, items, workers);
        std::ofstream out(eval_out, std::ios::binary);
        out << format_report(report);
        std::cout << format_report(report);
    });

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "Serve the /v1 HTTP endpoints");
    fs::path serve_graph;
    std::string serve_host = "127.0.0.1";
    int serve_port = 8080;
    ServiceOptions serve_opts;
    serve_cmd->add_option("--graph", serve_graph, "Graph directory")->required();
    serve_cmd->add_option("--host", serve_host, "Bind address");
    serve_cmd->add_option("--port", serve_port, "Port");
    serve_cmd->add_option("--encoder", serve_opts.encoder, "Override the manifest encoder");
    serve_cmd->add_option("--classifier", serve_opts.classifier, "Input classifier");
    serve_cmd->add_option("--seed", serve_opts.default_seed, "Seed for requests without one");
    serve_cmd->add_flag("--use-node-label", serve_opts.chat.use_node_label, "Follow the matched node's label");
    serve_cmd->add_flag("--sample-member", serve_opts.chat.sample_member, "Reply with a random member utterance");
    serve_cmd->callback([&] {
        serve_opts.chat.workers = workers;
        auto service = Service::open(serve_graph, serve_opts);
        std::fprintf(stderr, "serving %zu speaker nodes on http://%s:%d/v1\n", service->index().size(),
                     serve_host.c_str(), serve_port);
        serve(*service, serve_host, serve_port);
    });

    // pipeline
    auto* pipeline_cmd = app.add_subcommand("pipeline", "Run every curation stage from one config file");
    fs::path pipeline_config;
    bool pipeline_digest = false;
    pipeline_cmd->add_option("--config", pipeline_config, "INI config")->required();
    pipeline_cmd->add_flag("--digest", pipeline_digest, "Print the graph directory digest");
    pipeline_cmd->callback([&] {
        auto cfg = load_config(pipeline_config);
        if (workers) cfg.workers = workers;
        auto r = run_pipeline(cfg);
        print_stages(r.stages);
        std::cout << format_stats(r.stats);
        if (pipeline_digest) std::cout << "digest " << directory_digest(r.graph_dir) << '\n';
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const PipelineError& e) {
        std::fprintf(stderr, "afec: stage %s failed: %s\n", e.stage().c_str(), e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "afec: %s\n", e.what());
        return 1;
    }
    return 0;
}
