#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "soc/model.hpp"
#include "soc/rank.hpp"

// JSON-over-HTTP scoring and ranking service. The loaded model, vocabulary
// and comment store are immutable once the server starts, so concurrent
// requests need no locking and identical requests return identical bodies.

namespace soc {

struct ServeContext {
    ModelWeights<float> weights;
    Vocabulary vocab;
    std::vector<CommentRecord> store;  // may be empty
};

namespace detail {

inline void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, nlohmann::json{{"error", message}});
}

}  // namespace detail

inline nlohmann::json score_response(const ServeContext& ctx, const std::string& text) {
    const SentimentScore result = predict(text, ctx.weights, ctx.vocab);
    nlohmann::json body{{"score", result.score}, {"bucket", class_name(result.label)}};
    if (result.head == Head::softmax_pair) {
        body["probabilities"] = {{"negative", result.probs[kNegativeIndex]},
                                 {"positive", result.probs[kPositiveIndex]}};
    }
    return body;
}

inline nlohmann::json rank_response(const ServeContext& ctx, const Window& window) {
    CommentScorer model_scorer = [&ctx](const CommentRecord& rec) {
        return predict(rec.text, ctx.weights, ctx.vocab).score;
    };
    const auto entries = rank_tokens(ctx.store, window, stored_or(model_scorer));
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const RankEntry& e = entries[i];
        out.push_back({{"rank", i + 1},
                       {"token", e.token},
                       {"comments", e.comment_count},
                       {"weight", e.weight},
                       {"score_orig", e.score_orig},
                       {"score_adj", e.score_adj}});
    }
    return out;
}

inline void register_routes(httplib::Server& server, const ServeContext& ctx) {
    server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
        detail::send_json(res, 200, nlohmann::json{{"status", "ok"}});
    });

    server.Post("/score", [&ctx](const httplib::Request& req, httplib::Response& res) {
        nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object()) {
            detail::send_error(res, 400, "body must be a JSON object");
            return;
        }
        if (!body.contains("text") || !body["text"].is_string()) {
            detail::send_error(res, 400, "missing string field \"text\"");
            return;
        }
        detail::send_json(res, 200, score_response(ctx, body["text"].get<std::string>()));
    });

    server.Post("/rank", [&ctx](const httplib::Request& req, httplib::Response& res) {
        nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object()) {
            detail::send_error(res, 400, "body must be a JSON object");
            return;
        }
        if (!body.contains("from") || !body.contains("to") || !body["from"].is_string() ||
            !body["to"].is_string()) {
            detail::send_error(res, 400, "missing string fields \"from\" and \"to\"");
            return;
        }
        try {
            const Window window(Date::parse(body["from"].get<std::string>()),
                                Date::parse(body["to"].get<std::string>()));
            detail::send_json(res, 200, rank_response(ctx, window));
        } catch (const input_error& e) {
            detail::send_error(res, 400, e.what());
        }
    });
}

// Blocks until the server stops. A busy port or failed bind throws the base
// error type, which the CLI reports as an internal error (exit 2). The
// default httplib options include SO_REUSEPORT, which would let a second
// server bind an occupied port; restrict to SO_REUSEADDR so that case fails.
inline void run_server(const ServeContext& ctx, const std::string& host, int port) {
    httplib::Server server;
    server.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR,
                   reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    register_routes(server, ctx);
    if (!server.bind_to_port(host, port)) {
        throw error("cannot bind " + host + ":" + std::to_string(port));
    }
    if (!server.listen_after_bind()) {
        throw error("server terminated abnormally on " + host + ":" +
                    std::to_string(port));
    }
}

}  // namespace soc
