// soc: sentiment scoring and token ranking from the command line.
//
// Subcommands: prepare (vocabulary + embeddings), train, eval, predict,
// rank, serve. Exit codes: 0 success, 1 input error, 2 internal error.

#include <cstdint>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "soc/data.hpp"
#include "soc/eval.hpp"
#include "soc/model.hpp"
#include "soc/pipeline.hpp"
#include "soc/rank.hpp"
#include "soc/serve.hpp"
#include "soc/textprep.hpp"

namespace {

soc::Head parse_head(const std::string& name) {
    if (name == "tanh") return soc::Head::tanh_score;
    if (name == "softmax") return soc::Head::softmax_pair;
    throw soc::input_error("unknown head: " + name + " (expected tanh or softmax)");
}

struct PrepareOpts {
    std::string data;
    std::string format = "s140";
    std::string glove;
    std::string out_vocab;
    std::string out_embeddings;
    int dim = 100;
    int min_count = 1;
    std::uint64_t seed = 42;
};

int run_prepare(const PrepareOpts& opts) {
    const soc::LoadResult loaded = soc::load_dataset(opts.data, opts.format);
    std::vector<std::vector<std::string>> corpus;
    corpus.reserve(loaded.examples.size());
    for (const auto& ex : loaded.examples) corpus.push_back(soc::tokenize(ex.text));
    const soc::Vocabulary vocab = soc::Vocabulary::build(corpus, opts.min_count);
    vocab.save(opts.out_vocab);

    soc::Rng rng(opts.seed);
    const auto dim = static_cast<std::size_t>(opts.dim);
    soc::EmbeddingTable<float> table =
        opts.glove.empty() ? soc::init_embeddings<float>(vocab, dim, rng)
                           : soc::load_glove<float>(opts.glove, dim, vocab, rng);
    soc::save_embeddings(table, vocab, opts.out_embeddings);

    std::cout << "rows accepted " << loaded.summary.accepted << ", dropped "
              << loaded.summary.dropped << "\n";
    std::cout << "vocabulary size " << vocab.size() << " -> " << opts.out_vocab << "\n";
    std::cout << "embeddings " << vocab.size() << "x" << opts.dim << " -> "
              << opts.out_embeddings << "\n";
    return 0;
}

struct TrainOpts {
    std::string data;
    std::string format = "s140";
    std::string head = "softmax";
    std::string vocab;
    std::string embeddings;
    std::string checkpoint;
    std::string log;
    std::string precision = "f32";
    double eval_fraction = 0.1;
    soc::ModelConfig model;
    soc::TrainConfig train;
};

template <typename Real>
int run_train(const TrainOpts& opts) {
    const soc::Vocabulary vocab = soc::Vocabulary::load(opts.vocab);
    const soc::LoadResult loaded = soc::load_dataset(opts.data, opts.format);
    const soc::Head head = parse_head(opts.head);

    soc::ModelConfig mcfg = opts.model;
    mcfg.head = head;
    mcfg.validate();

    auto all = soc::make_training_set(loaded.examples, vocab, head,
                                      static_cast<std::size_t>(mcfg.max_len));
    if (all.empty()) throw soc::input_error("no usable training rows in " + opts.data);
    std::vector<soc::TrainingExample> train_set, eval_set;
    soc::split_train_eval(std::move(all), opts.eval_fraction, opts.train.seed, train_set,
                          eval_set);

    soc::Rng rng(opts.train.seed);
    std::optional<soc::EmbeddingTable<Real>> pretrained;
    if (!opts.embeddings.empty()) {
        pretrained = soc::load_glove<Real>(opts.embeddings,
                                           static_cast<std::size_t>(mcfg.embed_dim), vocab, rng);
    }
    soc::ModelWeights<Real> weights = soc::ModelWeights<Real>::init(
        mcfg, vocab.size(), rng, pretrained ? &*pretrained : nullptr);

    std::cout << "training " << train_set.size() << " examples, eval " << eval_set.size()
              << ", vocab " << vocab.size() << "\n";
    std::cout << std::setprecision(17);
    auto report = [](const soc::EpochLog& entry) {
        std::cout << "epoch " << entry.epoch << " loss " << entry.train_loss
                  << " eval_acc " << entry.eval_accuracy << std::endl;
    };
    soc::TrainResult<Real> result =
        soc::train(weights, train_set, eval_set, opts.train, report);
    std::cout << "best epoch " << result.best_epoch << " eval_acc " << result.best_accuracy
              << "\n";

    soc::save_checkpoint(result.best, vocab.fingerprint(), result.steps, opts.checkpoint);
    std::cout << "checkpoint -> " << opts.checkpoint << "\n";
    if (!opts.log.empty()) {
        soc::write_text_file(opts.log, soc::metric_log_csv(result.log));
        std::cout << "metric log -> " << opts.log << "\n";
    }
    return 0;
}

std::pair<soc::ModelWeights<float>, soc::Vocabulary> load_model(
    const std::string& checkpoint_path, const std::string& vocab_path) {
    soc::Vocabulary vocab = soc::Vocabulary::load(vocab_path);
    auto [weights, meta] = soc::load_checkpoint<float>(checkpoint_path);
    if (meta.vocab_hash != vocab.fingerprint()) {
        throw soc::input_error("vocabulary file " + vocab_path +
                               " does not match the checkpoint's vocabulary");
    }
    if (weights.vocab_size != vocab.size()) {
        throw soc::input_error("vocabulary size mismatch against checkpoint");
    }
    return {std::move(weights), std::move(vocab)};
}

struct EvalOpts {
    std::string checkpoint;
    std::string vocab;
    std::string data;
    std::string format = "tsv";
    std::string report;
};

int run_eval(const EvalOpts& opts) {
    auto [weights, vocab] = load_model(opts.checkpoint, opts.vocab);
    const soc::LoadResult loaded = soc::load_dataset(opts.data, opts.format);
    const auto items = soc::make_training_set(loaded.examples, vocab, weights.config.head,
                                              static_cast<std::size_t>(weights.config.max_len));
    if (items.empty()) throw soc::input_error("no usable rows in " + opts.data);

    const bool ternary = weights.config.head == soc::Head::tanh_score &&
                         soc::detail::is_ternary(items);
    soc::ModelWorkspace<float> ws(weights.config);
    std::vector<soc::SentimentClass> predictions, gold;
    predictions.reserve(items.size());
    gold.reserve(items.size());
    for (const auto& item : items) {
        soc::forward_example(weights, item.seq.indices.data(), ws);
        predictions.push_back(
            soc::detail::predicted_class(weights.config.head, ws.output.data(), ternary));
        gold.push_back(soc::detail::gold_class(weights.config.head, item, ternary));
    }
    const soc::MetricsReport report = soc::metrics(predictions, gold);
    std::cout << report.to_table();
    if (!opts.report.empty()) {
        soc::write_text_file(opts.report, report.to_csv());
    }
    return 0;
}

struct PredictOpts {
    std::string checkpoint;
    std::string vocab;
    std::string text;
};

int run_predict(const PredictOpts& opts) {
    auto [weights, vocab] = load_model(opts.checkpoint, opts.vocab);
    const soc::SentimentScore result = soc::predict(opts.text, weights, vocab);
    std::cout << std::setprecision(6) << std::fixed;
    std::cout << "score " << result.score << "\n";
    if (result.head == soc::Head::softmax_pair) {
        std::cout << "p_negative " << result.probs[soc::kNegativeIndex] << "\n";
        std::cout << "p_positive " << result.probs[soc::kPositiveIndex] << "\n";
    }
    std::cout << "bucket " << soc::class_name(result.label) << "\n";
    return 0;
}

struct RankOpts {
    std::string store;
    std::string from;
    std::string to;
    std::string checkpoint;
    std::string vocab;
    std::string out;
};

int run_rank(const RankOpts& opts) {
    const auto store = soc::load_comment_store(opts.store);
    const soc::Window window(soc::Date::parse(opts.from), soc::Date::parse(opts.to));
    soc::CommentScorer model_scorer;
    std::optional<std::pair<soc::ModelWeights<float>, soc::Vocabulary>> model;
    if (!opts.checkpoint.empty()) {
        if (opts.vocab.empty()) {
            throw soc::input_error("--vocab is required when --checkpoint is given");
        }
        model = load_model(opts.checkpoint, opts.vocab);
        model_scorer = [&model](const soc::CommentRecord& rec) {
            return soc::predict(rec.text, model->first, model->second).score;
        };
    }
    const auto entries = soc::rank_tokens(store, window, soc::stored_or(model_scorer));
    const std::string csv = soc::rank_to_csv(entries);
    if (opts.out.empty()) {
        std::cout << csv;
    } else {
        soc::write_text_file(opts.out, csv);
    }
    return 0;
}

struct ServeOpts {
    std::string checkpoint;
    std::string vocab;
    std::string store;
    std::string host = "127.0.0.1";
    int port = 8080;
};

int run_serve(const ServeOpts& opts) {
    soc::ServeContext ctx;
    auto [weights, vocab] = load_model(opts.checkpoint, opts.vocab);
    ctx.weights = std::move(weights);
    ctx.vocab = std::move(vocab);
    if (!opts.store.empty()) ctx.store = soc::load_comment_store(opts.store);
    std::cout << "listening on " << opts.host << ":" << opts.port << std::endl;
    soc::run_server(ctx, opts.host, opts.port);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"soc: LSTM+CNN sentiment scoring and adjusted-score token ranking"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value configuration file");

    PrepareOpts prepare;
    auto* prepare_cmd = app.add_subcommand("prepare", "build vocabulary and embeddings");
    prepare_cmd->add_option("--data", prepare.data, "training corpus")
        ->required()
        ->check(CLI::ExistingFile);
    prepare_cmd->add_option("--format", prepare.format, "s140|tsv|amazon");
    prepare_cmd->add_option("--glove", prepare.glove, "pre-trained embedding text file")
        ->check(CLI::ExistingFile);
    prepare_cmd->add_option("--dim", prepare.dim, "embedding dimension")
        ->check(CLI::PositiveNumber);
    prepare_cmd->add_option("--min-count", prepare.min_count, "vocabulary frequency floor")
        ->check(CLI::PositiveNumber);
    prepare_cmd->add_option("--out-vocab", prepare.out_vocab, "vocabulary output path")
        ->required();
    prepare_cmd->add_option("--out-embeddings", prepare.out_embeddings,
                            "embedding table output path")
        ->required();
    prepare_cmd->add_option("--seed", prepare.seed, "rng seed")->envname("SOC_SEED");

    TrainOpts train;
    auto* train_cmd = app.add_subcommand("train", "train a model");
    train_cmd->add_option("--data", train.data, "training corpus")
        ->required()
        ->check(CLI::ExistingFile);
    train_cmd->add_option("--format", train.format, "s140|tsv|amazon");
    train_cmd->add_option("--head", train.head, "tanh|softmax");
    train_cmd->add_option("--vocab", train.vocab, "vocabulary file")
        ->required()
        ->check(CLI::ExistingFile);
    train_cmd->add_option("--embeddings", train.embeddings, "embedding table text file")
        ->check(CLI::ExistingFile);
    train_cmd->add_option("--checkpoint", train.checkpoint, "checkpoint output path")
        ->required();
    train_cmd->add_option("--log", train.log, "per-epoch metric CSV output path");
    train_cmd->add_option("--precision", train.precision, "f32|f64")
        ->check(CLI::IsMember({"f32", "f64"}));
    train_cmd->add_option("--eval-frac", train.eval_fraction, "held-out fraction")
        ->check(CLI::Range(0.0, 0.999));
    train_cmd->add_option("--epochs", train.train.max_epochs, "epoch budget")
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--batch-size", train.train.batch_size, "minibatch size")
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--lr", train.train.lr, "Adam learning rate");
    train_cmd->add_option("--seed", train.train.seed, "rng seed")->envname("SOC_SEED");
    train_cmd->add_option("--embed-dim", train.model.embed_dim, "embedding dimension");
    train_cmd->add_option("--hidden", train.model.lstm_hidden, "LSTM hidden units");
    train_cmd->add_option("--dense-size", train.model.dense_size, "dense layer width");
    train_cmd->add_option("--dense-layers", train.model.dense_layers, "dense layer count");
    train_cmd->add_option("--conv-widths", train.model.conv_widths, "conv kernel widths");
    train_cmd->add_option("--conv-filters", train.model.conv_filters, "filters per width");
    train_cmd->add_option("--max-len", train.model.max_len, "max sequence length");
    train_cmd->add_flag("--freeze-embeddings", [&train](std::int64_t) {
        train.model.embeddings_trainable = false;
    }, "do not fine-tune embeddings");

    EvalOpts eval;
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    eval_cmd->add_option("--checkpoint", eval.checkpoint, "model checkpoint")
        ->required()
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--vocab", eval.vocab, "vocabulary file")
        ->required()
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--data", eval.data, "evaluation dataset")
        ->required()
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--format", eval.format, "s140|tsv|amazon");
    eval_cmd->add_option("--report", eval.report, "metrics CSV output path");

    PredictOpts predict;
    auto* predict_cmd = app.add_subcommand("predict", "score one text");
    predict_cmd->add_option("--checkpoint", predict.checkpoint, "model checkpoint")
        ->required()
        ->check(CLI::ExistingFile);
    predict_cmd->add_option("--vocab", predict.vocab, "vocabulary file")
        ->required()
        ->check(CLI::ExistingFile);
    predict_cmd->add_option("--text", predict.text, "text to score")->required();

    RankOpts rank;
    auto* rank_cmd = app.add_subcommand("rank", "rank tokens over a time window");
    rank_cmd->add_option("--store", rank.store, "comment store (JSON lines)")
        ->required()
        ->check(CLI::ExistingFile);
    rank_cmd->add_option("--from", rank.from, "window start (YYYY-MM-DD)")->required();
    rank_cmd->add_option("--to", rank.to, "window end (YYYY-MM-DD)")->required();
    rank_cmd->add_option("--checkpoint", rank.checkpoint, "model for unscored comments")
        ->check(CLI::ExistingFile);
    rank_cmd->add_option("--vocab", rank.vocab, "vocabulary file")
        ->check(CLI::ExistingFile);
    rank_cmd->add_option("--out", rank.out, "CSV output path (default stdout)");

    ServeOpts serve;
    auto* serve_cmd = app.add_subcommand("serve", "run the JSON scoring service");
    serve_cmd->add_option("--checkpoint", serve.checkpoint, "model checkpoint")
        ->required()
        ->check(CLI::ExistingFile);
    serve_cmd->add_option("--vocab", serve.vocab, "vocabulary file")
        ->required()
        ->check(CLI::ExistingFile);
    serve_cmd->add_option("--store", serve.store, "comment store for /rank")
        ->check(CLI::ExistingFile);
    serve_cmd->add_option("--host", serve.host, "bind address");
    serve_cmd->add_option("--port", serve.port, "bind port")->check(CLI::Range(1, 65535));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << std::flush;
        return 1;
    }

    try {
        if (prepare_cmd->parsed()) return run_prepare(prepare);
        if (train_cmd->parsed()) {
            return train.precision == "f64" ? run_train<double>(train)
                                            : run_train<float>(train);
        }
        if (eval_cmd->parsed()) return run_eval(eval);
        if (predict_cmd->parsed()) return run_predict(predict);
        if (rank_cmd->parsed()) return run_rank(rank);
        if (serve_cmd->parsed()) return run_serve(serve);
    } catch (const soc::input_error& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    } catch (const soc::format_error& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    } catch (const soc::io_error& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    } catch (const soc::config_error& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << std::endl;
        return 2;
    }
    return 0;
}
