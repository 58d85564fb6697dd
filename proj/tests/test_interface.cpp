#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "model_test_util.hpp"
#include "soc/pipeline.hpp"
#include "soc/serve.hpp"

namespace {

namespace fs = std::filesystem;

struct CmdResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

const char* cli_bin() {
    const char* bin = std::getenv("SOC_CLI_BIN");
    REQUIRE(bin != nullptr);
    return bin;
}

fs::path scratch_dir() {
    const auto dir = fs::temp_directory_path() / "soc_iface_test";
    fs::create_directories(dir);
    return dir;
}

CmdResult run_cli(const std::string& args, const std::string& env_prefix = "") {
    const auto dir = scratch_dir();
    const auto out_path = dir / "stdout.txt";
    const auto err_path = dir / "stderr.txt";
    const std::string cmd = env_prefix + std::string(cli_bin()) + " " + args + " >" +
                            out_path.string() + " 2>" + err_path.string();
    const int status = std::system(cmd.c_str());
    CmdResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = read_file(out_path);
    result.err = read_file(err_path);
    return result;
}

// A zero-weight tanh model plus matching vocabulary, written to disk for the
// CLI to consume.
struct Fixture {
    fs::path vocab_path;
    fs::path checkpoint_path;
    soc::Vocabulary vocab;
};

Fixture make_zero_model_fixture() {
    Fixture fx;
    const auto dir = scratch_dir();
    const std::vector<std::vector<std::string>> corpus{{"good", "bad", "place", "is"}};
    fx.vocab = soc::Vocabulary::build(corpus, 1);
    fx.vocab_path = dir / "fixture_vocab.tsv";
    fx.vocab.save(fx.vocab_path.string());

    auto cfg = test_util::micro_config(soc::Head::tanh_score);
    soc::Rng rng(7);
    auto weights = soc::ModelWeights<float>::init(cfg, fx.vocab.size(), rng);
    for (auto& np : weights.named_params()) np.param->value.fill(0.0f);
    fx.checkpoint_path = dir / "fixture_zero.socm";
    soc::save_checkpoint(weights, fx.vocab.fingerprint(), 0, fx.checkpoint_path.string());
    return fx;
}

fs::path write_store(const std::string& name, const std::string& content) {
    const auto path = scratch_dir() / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("unknown flags exit 1 with usage on stderr") {
    const auto result = run_cli("--definitely-not-a-flag");
    CHECK(result.exit_code == 1);
    CHECK(result.err.find("Usage") != std::string::npos);
}

TEST_CASE("missing required options exit 1") {
    const auto result = run_cli("predict");
    CHECK(result.exit_code == 1);
    CHECK_FALSE(result.err.empty());
}

TEST_CASE("nonexistent input files exit 1") {
    const auto result = run_cli("train --data /no/such/file.csv --vocab /no/vocab "
                                "--checkpoint /tmp/x.socm");
    CHECK(result.exit_code == 1);
}

TEST_CASE("help exits 0") {
    CHECK(run_cli("--help").exit_code == 0);
    CHECK(run_cli("train --help").exit_code == 0);
}

TEST_CASE("predict on a zero-weight tanh model prints score 0 and neutral") {
    const auto fx = make_zero_model_fixture();
    const auto result = run_cli("predict --checkpoint " + fx.checkpoint_path.string() +
                                " --vocab " + fx.vocab_path.string() +
                                " --text \"this place is good.\"");
    REQUIRE(result.exit_code == 0);
    CHECK(result.out.find("score 0.000000") != std::string::npos);
    CHECK(result.out.find("bucket neutral") != std::string::npos);
}

TEST_CASE("predict with a mismatched vocabulary exits 1") {
    const auto fx = make_zero_model_fixture();
    const auto other_vocab = scratch_dir() / "other_vocab.tsv";
    const std::vector<std::vector<std::string>> corpus{{"entirely", "different"}};
    soc::Vocabulary::build(corpus, 1).save(other_vocab.string());
    const auto result = run_cli("predict --checkpoint " + fx.checkpoint_path.string() +
                                " --vocab " + other_vocab.string() + " --text hi");
    CHECK(result.exit_code == 1);
    CHECK(result.err.find("vocabulary") != std::string::npos);
}

TEST_CASE("rank subcommand emits the csv ranking") {
    const auto store = write_store("iface_store.jsonl",
        R"({"token": "eth", "date": "2018-11-05", "text": "up", "score": 0.8})" "\n"
        R"({"token": "eth", "date": "2018-11-06", "text": "up more", "score": 0.6})" "\n"
        R"({"token": "doge", "date": "2018-11-05", "text": "eh", "score": 0.1})" "\n");
    const auto result =
        run_cli("rank --store " + store.string() + " --from 2018-11-04 --to 2018-11-10");
    REQUIRE(result.exit_code == 0);
    CHECK(result.out.find("rank,token,M,W,score_orig,score_adj") == 0);
    CHECK(result.out.find("1,eth,2,1,0.7,0.7") != std::string::npos);
    CHECK(result.out.find("2,doge,1,0.5,0.1,0.05") != std::string::npos);
}

TEST_CASE("rank rejects a backwards window with exit 1") {
    const auto store = write_store("iface_store_empty.jsonl", "");
    const auto result =
        run_cli("rank --store " + store.string() + " --from 2018-11-10 --to 2018-11-04");
    CHECK(result.exit_code == 1);
}

TEST_CASE("training runs are reproducible and honor SOC_SEED") {
    const auto dir = scratch_dir();
    const auto data = dir / "train_tiny.csv";
    {
        std::ofstream out(data, std::ios::binary);
        soc::Rng rng(3);
        const char* pos[] = {"love", "great", "win", "happy"};
        const char* neg[] = {"hate", "awful", "lose", "sad"};
        for (int i = 0; i < 60; ++i) {
            const bool positive = i % 2 == 0;
            const char* const* bank = positive ? pos : neg;
            out << (positive ? 4 : 0) << "," << i << ",Mon,NO_QUERY,u,\""
                << bank[rng.below(4)] << " " << bank[rng.below(4)] << " day\"\n";
        }
    }
    const auto vocab = dir / "train_tiny_vocab.tsv";
    REQUIRE(run_cli("prepare --data " + data.string() + " --out-vocab " + vocab.string() +
                    " --out-embeddings " + (dir / "e.txt").string() + " --dim 8 --seed 5")
                .exit_code == 0);

    const std::string common = "train --data " + data.string() + " --vocab " +
                               vocab.string() +
                               " --head softmax --epochs 3 --batch-size 8 --eval-frac 0 "
                               "--embed-dim 8 --hidden 6 --dense-size 8 --conv-widths 2 "
                               "--conv-filters 3 --max-len 8 ";
    const auto log_a = dir / "log_a.csv";
    const auto log_b = dir / "log_b.csv";
    const auto log_c = dir / "log_c.csv";
    REQUIRE(run_cli(common + "--seed 7 --checkpoint " + (dir / "a.socm").string() +
                    " --log " + log_a.string())
                .exit_code == 0);
    REQUIRE(run_cli(common + "--seed 7 --checkpoint " + (dir / "b.socm").string() +
                    " --log " + log_b.string())
                .exit_code == 0);
    CHECK(read_file(log_a) == read_file(log_b));

    // Same seed through the environment instead of the flag.
    REQUIRE(run_cli(common + "--checkpoint " + (dir / "c.socm").string() + " --log " +
                        log_c.string(),
                    "SOC_SEED=7 ")
                .exit_code == 0);
    CHECK(read_file(log_a) == read_file(log_c));
}

TEST_CASE("config file supplies subcommand options") {
    const auto fx = make_zero_model_fixture();
    const auto cfg_path = scratch_dir() / "soc.cfg";
    {
        std::ofstream out(cfg_path, std::ios::binary);
        out << "[predict]\n";
        out << "checkpoint=\"" << fx.checkpoint_path.string() << "\"\n";
        out << "vocab=\"" << fx.vocab_path.string() << "\"\n";
        out << "text=\"anything\"\n";
    }
    const auto result = run_cli("--config " + cfg_path.string() + " predict");
    REQUIRE(result.exit_code == 0);
    CHECK(result.out.find("bucket neutral") != std::string::npos);
}

TEST_CASE("eval subcommand reports metrics on a tsv file") {
    const auto fx = make_zero_model_fixture();
    const auto data = write_store("iface_eval.tsv", "good stuff\t1\nbad stuff\t0\n");
    const auto result = run_cli("eval --checkpoint " + fx.checkpoint_path.string() +
                                " --vocab " + fx.vocab_path.string() + " --data " +
                                data.string() + " --format tsv");
    REQUIRE(result.exit_code == 0);
    // Zero model scores 0, binarized positive: half of this set is right.
    CHECK(result.out.find("accuracy") != std::string::npos);
    CHECK(result.out.find("50.00%") != std::string::npos);
}

TEST_CASE("serving on a busy port exits 2") {
    const auto fx = make_zero_model_fixture();
    httplib::Server occupier;
    occupier.Get("/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("{}", "application/json");
    });
    const int port = occupier.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread worker([&occupier]() { occupier.listen_after_bind(); });
    occupier.wait_until_ready();

    const auto result = run_cli("serve --checkpoint " + fx.checkpoint_path.string() +
                                " --vocab " + fx.vocab_path.string() + " --port " +
                                std::to_string(port));
    CHECK(result.exit_code == 2);
    CHECK(result.err.find("cannot bind") != std::string::npos);

    occupier.stop();
    worker.join();
}

TEST_CASE("service endpoints behave per contract") {
    soc::ServeContext ctx;
    const std::vector<std::vector<std::string>> corpus{{"good", "bad"}};
    ctx.vocab = soc::Vocabulary::build(corpus, 1);
    auto cfg = test_util::micro_config(soc::Head::tanh_score);
    soc::Rng rng(9);
    ctx.weights = soc::ModelWeights<float>::init(cfg, ctx.vocab.size(), rng);
    for (auto& np : ctx.weights.named_params()) np.param->value.fill(0.0f);
    ctx.store.push_back({"eth", soc::Date::parse("2018-11-05"), "nice", 0.5});
    ctx.store.push_back({"eth", soc::Date::parse("2018-11-06"), "meh", 0.1});
    ctx.store.push_back({"doge", soc::Date::parse("2018-11-05"), "eh", -0.2});

    httplib::Server server;
    soc::register_routes(server, ctx);
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread worker([&server]() { server.listen_after_bind(); });
    server.wait_until_ready();
    httplib::Client client("127.0.0.1", port);

    SECTION("health") {
        const auto res = client.Get("/health");
        REQUIRE(res);
        CHECK(res->status == 200);
        CHECK(nlohmann::json::parse(res->body)["status"] == "ok");
    }

    SECTION("score on the zero model") {
        const auto res = client.Post("/score", R"({"text": "whatever"})", "application/json");
        REQUIRE(res);
        REQUIRE(res->status == 200);
        const auto body = nlohmann::json::parse(res->body);
        CHECK(body["score"] == 0.0);
        CHECK(body["bucket"] == "neutral");
    }

    SECTION("identical requests return identical bodies") {
        const auto a = client.Post("/score", R"({"text": "same input"})", "application/json");
        const auto b = client.Post("/score", R"({"text": "same input"})", "application/json");
        REQUIRE((a && b));
        CHECK(a->body == b->body);
    }

    SECTION("missing text field is a 400") {
        const auto res = client.Post("/score", R"({"wrong": 1})", "application/json");
        REQUIRE(res);
        CHECK(res->status == 400);
        CHECK(nlohmann::json::parse(res->body).contains("error"));
    }

    SECTION("malformed json is a 400") {
        const auto res = client.Post("/score", "{not json", "application/json");
        REQUIRE(res);
        CHECK(res->status == 400);
    }

    SECTION("rank over the store") {
        const auto res = client.Post("/rank", R"({"from": "2018-11-04", "to": "2018-11-10"})",
                                     "application/json");
        REQUIRE(res);
        REQUIRE(res->status == 200);
        const auto body = nlohmann::json::parse(res->body);
        REQUIRE(body.is_array());
        REQUIRE(body.size() == 2);
        CHECK(body[0]["token"] == "eth");
        CHECK(body[0]["weight"] == 1.0);
        CHECK(body[1]["token"] == "doge");
    }

    SECTION("rank with a bad window is a 400") {
        const auto res = client.Post("/rank", R"({"from": "2018-11-10", "to": "2018-11-04"})",
                                     "application/json");
        REQUIRE(res);
        CHECK(res->status == 400);
    }

    SECTION("rank over an empty window is an empty list") {
        const auto res = client.Post("/rank", R"({"from": "2001-01-01", "to": "2001-01-02"})",
                                     "application/json");
        REQUIRE(res);
        CHECK(res->status == 200);
        const auto body = nlohmann::json::parse(res->body);
        CHECK(body.is_array());
        // Tokens exist in the store but have zero comments in this window.
        for (const auto& entry : body) CHECK(entry["comments"] == 0);
    }

    server.stop();
    worker.join();
}
