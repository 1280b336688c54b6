#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "afec/embedding.hpp"
#include "afec/kgraph.hpp"
#include "afec/labeling.hpp"
#include "afec/retrieval.hpp"

namespace afec {

struct ServiceOptions {
    std::string encoder;  // empty = the encoder named in the graph manifest
    std::string classifier = "baseline";
    ChatConfig chat;
    std::uint64_t default_seed = 0;
};

/// Loaded graph, its index and the models needed to answer requests.
/// Immutable after open(), so handlers may run concurrently.
class Service {
public:
    /// Throws LoadError / IndexError with a diagnostic when the graph cannot be served.
    static std::unique_ptr<Service> open(const std::filesystem::path& graph_dir, const ServiceOptions& options = {});
    Service(KnowledgeGraph graph, std::unique_ptr<Encoder> encoder, std::unique_ptr<EmotionClassifier> classifier,
            ServiceOptions options);

    const KnowledgeGraph& graph() const noexcept { return graph_; }
    const RetrievalIndex& index() const noexcept { return index_; }
    const Encoder& encoder() const noexcept { return *encoder_; }
    const EmotionClassifier* classifier() const noexcept { return classifier_.get(); }
    const ServiceOptions& options() const noexcept { return options_; }

private:
    KnowledgeGraph graph_;
    std::unique_ptr<Encoder> encoder_;
    std::unique_ptr<EmotionClassifier> classifier_;
    ServiceOptions options_;
    RetrievalIndex index_;
};

/// Status code and JSON body of one request.
struct HttpResult {
    int status = 200;
    nlohmann::json body;
};

// Handlers behind the /v1 routes. Errors come back as {"error": ...} with a 4xx status.
HttpResult handle_chat(const Service& service, std::string_view request_body);          // POST /v1/chat
HttpResult handle_node(const Service& service, std::string_view id);                    // GET /v1/nodes/{id}
HttpResult handle_neighbors(const Service& service, std::string_view id);               // GET /v1/nodes/{id}/neighbors
HttpResult handle_search(const Service& service, std::string_view q, std::string_view k);  // GET /v1/search
HttpResult handle_stats(const Service& service);                                        // GET /v1/stats
HttpResult handle_labels();                                                             // GET /v1/labels

nlohmann::json reply_to_json(const Reply& reply, const KnowledgeGraph& graph);

/// The /v1 routes on an HTTP listener. `service` must outlive it.
class HttpServer {
public:
    explicit HttpServer(const Service& service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Port 0 picks a free one. Returns the bound port.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    void run();
    void stop();
    bool running() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Blocks serving the /v1 routes until the process is stopped.
void serve(const Service& service, const std::string& host, int port);

}  // namespace afec
